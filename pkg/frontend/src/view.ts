// Pure view model: every field is a fold over received wire messages.
// No game rules live here; the server's snapshots are the only truth.

import type {
  EpisodeEndMsg, Phase, PolicyDoc, ProposalDoc, ServerMessage, StateDoc,
} from "./wire";

export type Connection = "connecting" | "open" | "closed";

export type TranscriptEntry =
  | { kind: "instruction"; id: number; tick: number; text: string;
      channel: string }
  | { kind: "proposal"; tick: number; proposal: ProposalDoc;
      latencyMs: number }
  | { kind: "decision"; tick: number; proposalId: number; decision: string;
      by: string; revisionAfter: number }
  | { kind: "note"; tick: number; message: string };

interface HeldProposal {
  tick: number;
  proposal: ProposalDoc;
  latencyMs: number;
}

export interface ViewModel {
  connection: Connection;
  lastSeq: number | null;
  seqGap: boolean;
  snapshotTick: number | null;
  tick: number;
  phase: Phase | null;
  policy: PolicyDoc | null;
  state: StateDoc | null;
  transcript: TranscriptEntry[];
  pending: ProposalDoc | null;
  held: HeldProposal[];
  frameText: string | null;
  outcome: EpisodeEndMsg["payload"] | null;
  toasts: string[];
  metrics: { instructions: number; revisions: number } | null;
}

const MAX_TOASTS = 5;

export function initialView(): ViewModel {
  return {
    connection: "connecting",
    lastSeq: null,
    seqGap: false,
    snapshotTick: null,
    tick: 0,
    phase: null,
    policy: null,
    state: null,
    transcript: [],
    pending: null,
    held: [],
    frameText: null,
    outcome: null,
    toasts: [],
    metrics: null,
  };
}

/** Socket lifecycle; "open" arms the view for a fresh snapshot-first resync. */
export function connectionChanged(view: ViewModel,
                                  connection: Connection): ViewModel {
  if (connection === "open") {
    return { ...view, connection, lastSeq: null, seqGap: false,
             snapshotTick: null };
  }
  return { ...view, connection };
}

export function canAct(view: ViewModel): boolean {
  return view.connection === "open" && view.phase !== "ended"
    && view.outcome === null;
}

function instructionSeen(view: ViewModel, instructionId: number): boolean {
  return view.transcript.some(
    (entry) => entry.kind === "instruction" && entry.id === instructionId);
}

function proposalInstructionId(proposal: ProposalDoc): number {
  return proposal.in_reply_to ?? proposal.id;
}

function withToast(view: ViewModel, message: string): ViewModel {
  return { ...view, toasts: [...view.toasts, message].slice(-MAX_TOASTS) };
}

function surfaceProposal(view: ViewModel, held: HeldProposal): ViewModel {
  return {
    ...view,
    transcript: [...view.transcript, {
      kind: "proposal", tick: held.tick, proposal: held.proposal,
      latencyMs: held.latencyMs,
    }],
    pending: held.proposal,
  };
}

/** Release any held proposals whose instruction has since arrived. */
function releaseHeld(view: ViewModel): ViewModel {
  let next = view;
  for (const held of view.held) {
    if (instructionSeen(next, proposalInstructionId(held.proposal))) {
      next = surfaceProposal(
        { ...next, held: next.held.filter((h) => h !== held) }, held);
    }
  }
  return next;
}

export function reduce(view: ViewModel, msg: ServerMessage): ViewModel {
  let next: ViewModel = { ...view };
  if (view.lastSeq !== null) {
    if (msg.seq <= view.lastSeq) return view; // duplicate or out of order
    if (msg.seq > view.lastSeq + 1) next.seqGap = true;
  }
  next.lastSeq = msg.seq;

  switch (msg.type) {
    case "state_update": {
      const { tick, phase, policy, state } = msg.payload;
      next.tick = tick;
      next.phase = phase;
      next.policy = policy;
      next.state = state;
      if (next.snapshotTick === null) next.snapshotTick = tick;
      return next;
    }
    case "frame_summary":
      next.frameText = msg.payload.frame.text;
      return next;
    case "chat_in":
      next.transcript = [...next.transcript, {
        kind: "instruction", id: msg.payload.id, tick: msg.payload.tick,
        text: msg.payload.text, channel: msg.payload.channel,
      }];
      return releaseHeld(next);
    case "proposal": {
      const held: HeldProposal = {
        tick: msg.payload.tick,
        proposal: msg.payload.proposal,
        latencyMs: msg.payload.advisor_latency_ms,
      };
      // A card never renders ahead of its instruction in the transcript.
      if (!instructionSeen(next, proposalInstructionId(held.proposal))) {
        next.held = [...next.held, held];
        return next;
      }
      return surfaceProposal(next, held);
    }
    case "decision": {
      const { tick, proposal_id, decision, by, revision_after } = msg.payload;
      next.transcript = [...next.transcript, {
        kind: "decision", tick, proposalId: proposal_id, decision, by,
        revisionAfter: revision_after,
      }];
      if (next.pending && next.pending.id === proposal_id) next.pending = null;
      next.held = next.held.filter((h) => h.proposal.id !== proposal_id);
      return next;
    }
    case "manual_action":
      next.transcript = [...next.transcript, {
        kind: "note", tick: msg.payload.tick,
        message: `manual: ${msg.payload.commands.length} command(s)`,
      }];
      return next;
    case "episode_end":
      next.outcome = msg.payload;
      next.phase = "ended";
      next.pending = null;
      return next;
    case "error":
      next = withToast(next, msg.payload.message);
      next.transcript = [...next.transcript, {
        kind: "note", tick: next.tick,
        message: `error: ${msg.payload.message}`,
      }];
      return next;
    case "metrics":
      next.metrics = {
        instructions: msg.payload.instructions ?? 0,
        revisions: msg.payload.revisions ?? 0,
      };
      return next;
  }
}
