// Wire protocol for the session channel at /session/<id>/ws.
// Mirrors the server's published JSON schema; the client speaks nothing else.

export type Cell = [number, number];

export interface UnitDoc {
  id: number;
  kind: string;
  pos: Cell;
  hp: number;
  tags: string[];
  order: { type: string };
}

export interface BuildingDoc {
  id: number;
  kind: string;
  pos: Cell;
  hp: number;
  queue: string[];
}

export interface NodeDoc {
  index: number;
  pos: Cell;
  kind: string;
  amount_milli: number;
}

export interface FactionDoc {
  id: number;
  minerals: number;
  gas: number;
  supply_used: number;
  supply_cap: number;
  units: UnitDoc[];
  buildings: BuildingDoc[];
}

export interface StateDoc {
  width: number;
  height: number;
  tick: number;
  tick_limit: number;
  terminal: string | null;
  factions: FactionDoc[];
  nodes: NodeDoc[];
}

export interface PolicyDoc {
  policy_id: string;
  revision: number;
  modulators: Record<string, unknown>;
}

export type Phase = "awaiting_initial_instruction" | "running" | "ended";

export interface ProposalDoc {
  id: number;
  basis: string;
  deltas: Record<string, unknown>;
  rationale: string;
  source_backend: "scripted" | "http";
  in_reply_to?: number | null;
}

interface Envelope<T extends string, P> {
  type: T;
  session_id: string;
  seq: number;
  payload: P;
}

export type StateUpdateMsg = Envelope<"state_update", {
  tick: number;
  phase: Phase;
  policy: PolicyDoc;
  state: StateDoc;
}>;
export type FrameSummaryMsg = Envelope<"frame_summary", {
  tick: number;
  frame: { tick: number; text: string; structured: Record<string, number> };
}>;
export type ChatInMsg = Envelope<"chat_in", {
  id: number;
  tick: number;
  text: string;
  channel: "chat" | "transcript";
}>;
export type ProposalMsg = Envelope<"proposal", {
  tick: number;
  proposal: ProposalDoc;
  advisor_latency_ms: number;
}>;
export type DecisionMsg = Envelope<"decision", {
  tick: number;
  proposal_id: number;
  decision: "approve" | "reject" | "superseded";
  by: string;
  revision_after: number;
}>;
export type ManualActionMsg = Envelope<"manual_action", {
  tick: number;
  commands: Record<string, unknown>[];
}>;
export type EpisodeEndMsg = Envelope<"episode_end", {
  tick: number;
  outcome: "win" | "loss" | "draw";
  final_hash: string;
}>;
export type ErrorMsg = Envelope<"error", {
  message: string;
  source?: string;
  instruction_id?: number;
}>;
export type MetricsMsg = Envelope<"metrics", {
  tick: number;
  instructions?: number;
  revisions?: number;
}>;

export type ServerMessage =
  | StateUpdateMsg
  | FrameSummaryMsg
  | ChatInMsg
  | ProposalMsg
  | DecisionMsg
  | ManualActionMsg
  | EpisodeEndMsg
  | ErrorMsg
  | MetricsMsg;

const SERVER_TYPES = new Set<string>([
  "state_update", "frame_summary", "chat_in", "proposal", "decision",
  "manual_action", "episode_end", "error", "metrics",
]);

/** Parse one socket frame; null for anything off-protocol. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const msg = doc as Record<string, unknown>;
  if (typeof msg.type !== "string" || !SERVER_TYPES.has(msg.type)) return null;
  if (typeof msg.session_id !== "string") return null;
  if (typeof msg.seq !== "number" || !Number.isInteger(msg.seq)) return null;
  if (typeof msg.payload !== "object" || msg.payload === null) return null;
  return msg as unknown as ServerMessage;
}

// Client -> server frames share one thin shape: {type, payload}.

export interface ClientFrame {
  type: "chat_in" | "decision" | "manual_action";
  payload: Record<string, unknown>;
}

export function chatFrame(text: string,
                          channel: "chat" | "transcript" = "chat"): ClientFrame {
  return { type: "chat_in", payload: { text, channel } };
}

export function decisionFrame(proposalId: number,
                              decision: "approve" | "reject"): ClientFrame {
  return { type: "decision", payload: { proposal_id: proposalId, decision } };
}

export function moveFrame(unitIds: number[], cell: Cell): ClientFrame {
  return {
    type: "manual_action",
    payload: {
      commands: unitIds.map((id) =>
        ({ type: "move", unit: id, cell: [cell[0], cell[1]] })),
    },
  };
}

export function attackFrame(unitIds: number[], cell: Cell): ClientFrame {
  return {
    type: "manual_action",
    payload: {
      commands: unitIds.map((id) =>
        ({ type: "attack", unit: id, cell: [cell[0], cell[1]] })),
    },
  };
}
