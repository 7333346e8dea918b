// Shared builders for wire messages and small state snapshots used across
// the suites. Seq numbers auto-increment so tests read top to bottom.

import type {
  ChatInMsg, DecisionMsg, EpisodeEndMsg, ErrorMsg, FrameSummaryMsg,
  ManualActionMsg, MetricsMsg, Phase, PolicyDoc, ProposalDoc, ProposalMsg,
  StateDoc, StateUpdateMsg,
} from "../src/wire";

export const SESSION = "test-session";

let seqCounter = 0;

export function resetSeq(value = 0): void {
  seqCounter = value;
}

export function nextSeq(): number {
  return ++seqCounter;
}

export function samplePolicy(revision = 0,
                             policyId = "balanced_macro"): PolicyDoc {
  return {
    policy_id: policyId,
    revision,
    modulators: {
      composition_weights: { Air: 0, Melee: 1, Ranged: 1 },
      attack_supply_threshold: 24,
      worker_target_per_base: 12,
      max_bases: 2,
      build_turrets: false,
    },
  };
}

/** 8x8 arena: viewer base in the northwest, enemy base southeast. */
export function sampleState(tick = 0): StateDoc {
  return {
    width: 8,
    height: 8,
    tick,
    tick_limit: 1000,
    terminal: null,
    factions: [
      {
        id: 0, minerals: 50, gas: 0, supply_used: 4, supply_cap: 15,
        units: [
          { id: 2, kind: "Worker", pos: [1, 2], hp: 40, tags: ["ground"],
            order: { type: "idle" } },
          { id: 3, kind: "Worker", pos: [2, 1], hp: 40, tags: ["ground"],
            order: { type: "idle" } },
          { id: 4, kind: "Worker", pos: [2, 2], hp: 40, tags: ["ground"],
            order: { type: "idle" } },
          { id: 5, kind: "Melee", pos: [3, 3], hp: 60, tags: ["ground"],
            order: { type: "idle" } },
        ],
        buildings: [
          { id: 1, kind: "Base", pos: [1, 1], hp: 500, queue: [] },
        ],
      },
      {
        id: 1, minerals: 50, gas: 0, supply_used: 2, supply_cap: 15,
        units: [
          { id: 12, kind: "Melee", pos: [5, 5], hp: 60, tags: ["ground"],
            order: { type: "idle" } },
        ],
        buildings: [
          { id: 11, kind: "Base", pos: [6, 6], hp: 500, queue: [] },
        ],
      },
    ],
    nodes: [
      { index: 0, pos: [0, 1], kind: "mineral", amount_milli: 1500000 },
      { index: 1, pos: [7, 6], kind: "gas", amount_milli: 800000 },
    ],
  };
}

export function stateUpdate(opts: {
  tick?: number; phase?: Phase; policy?: PolicyDoc; state?: StateDoc;
  seq?: number;
} = {}): StateUpdateMsg {
  const tick = opts.tick ?? 0;
  return {
    type: "state_update",
    session_id: SESSION,
    seq: opts.seq ?? nextSeq(),
    payload: {
      tick,
      phase: opts.phase ?? "running",
      policy: opts.policy ?? samplePolicy(),
      state: opts.state ?? sampleState(tick),
    },
  };
}

export function chatIn(id: number, text: string, tick = 0,
                       channel: "chat" | "transcript" = "chat"): ChatInMsg {
  return {
    type: "chat_in", session_id: SESSION, seq: nextSeq(),
    payload: { id, tick, text, channel },
  };
}

export function sampleProposal(id: number,
                               overrides: Partial<ProposalDoc> = {}): ProposalDoc {
  return {
    id,
    basis: "air_dominance",
    deltas: {},
    rationale: "air units counter their ground mix",
    source_backend: "scripted",
    in_reply_to: id,
    ...overrides,
  };
}

export function proposalMsg(proposal: ProposalDoc, tick = 0): ProposalMsg {
  return {
    type: "proposal", session_id: SESSION, seq: nextSeq(),
    payload: { tick, proposal, advisor_latency_ms: 1.5 },
  };
}

export function decisionMsg(proposalId: number,
                            decision: "approve" | "reject" | "superseded",
                            revisionAfter: number, tick = 0,
                            by = "human"): DecisionMsg {
  return {
    type: "decision", session_id: SESSION, seq: nextSeq(),
    payload: { tick, proposal_id: proposalId, decision, by,
               revision_after: revisionAfter },
  };
}

export function frameSummaryMsg(tick: number, text: string): FrameSummaryMsg {
  return {
    type: "frame_summary", session_id: SESSION, seq: nextSeq(),
    payload: { tick, frame: { tick, text, structured: { minerals: 50 } } },
  };
}

export function manualActionMsg(tick: number,
                                commands: Record<string, unknown>[]): ManualActionMsg {
  return {
    type: "manual_action", session_id: SESSION, seq: nextSeq(),
    payload: { tick, commands },
  };
}

export function episodeEndMsg(tick: number,
                              outcome: "win" | "loss" | "draw"): EpisodeEndMsg {
  return {
    type: "episode_end", session_id: SESSION, seq: nextSeq(),
    payload: { tick, outcome, final_hash: "00".repeat(8) },
  };
}

export function errorMsg(message: string): ErrorMsg {
  return {
    type: "error", session_id: SESSION, seq: nextSeq(),
    payload: { message, source: "service" },
  };
}

export function metricsMsg(tick: number, instructions: number,
                           revisions: number): MetricsMsg {
  return {
    type: "metrics", session_id: SESSION, seq: nextSeq(),
    payload: { tick, instructions, revisions },
  };
}
