/** Payload types of the decision-service JSON protocol (version 1). */

export type SessionStatus = "computing" | "awaiting_decision" | "finished" | "aborted";

export interface CustomerPayload {
  id: number;
  x: number;
  y: number;
  kind: "mandatory" | "dynamic" | "start_depot" | "end_depot";
  request_time: number;
}

export interface InstancePayload {
  name: string;
  n: number;
  start_depot: number;
  end_depot: number;
  customers: CustomerPayload[];
}

export interface MemberPayload {
  index: number; // 1-based, population sorted ascending by f1
  f1: number;
  f2: number;
  dominated: boolean;
  tours: number[][];
}

export interface DecisionPayload {
  era: number;
  t: number;
  upper_bound_f2: number;
  mu: number;
  members: MemberPayload[];
  realized_prefixes: number[][];
  prefix_irreversible: boolean;
  strategy_ghosts: Record<string, number>;
}

export interface HistoryEntry {
  era: number;
  t: number;
  front: { f1: number; f2: number }[];
  chosen_index: number;
  chosen_plan: number[][];
  chosen_objectives: { f1: number; f2: number };
  upper_bound_f2: number;
  fixed_count: number;
  rng_state_digest: string;
}

export interface SessionState {
  protocol_version: number;
  session_id: string;
  status: SessionStatus;
  instance: InstancePayload;
  config: Record<string, unknown>;
  n_eras: number;
  history: HistoryEntry[];
  error: string | null;
  decision?: DecisionPayload;
}

export interface SessionSummary {
  id: string;
  status: SessionStatus;
  instance: string;
  era: number;
  n_eras: number;
}

export interface DecideAck {
  session_id: string;
  era: number;
  accepted_index: number;
}
