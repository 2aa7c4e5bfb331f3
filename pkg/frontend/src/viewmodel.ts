/** Pure payload-to-view transformations.
 *
 * Every number in these view models is copied verbatim from a service
 * payload; the cockpit never computes objective values, bounds, or strategy
 * indices on its own. Screen geometry (pixel scaling) is handled by the
 * renderers, never displayed as text.
 */

import type { DecisionPayload, HistoryEntry, SessionState } from "./types.js";

export interface FrontPoint {
  index: number;
  f1: number;
  f2: number;
  dominated: boolean;
  selected: boolean;
  ghosts: string[]; // strategy labels whose pick is this index, e.g. "0.5"
}

export interface FrontView {
  era: number;
  t: number;
  mu: number;
  upperBound: number;
  points: FrontPoint[];
}

export function buildFrontView(decision: DecisionPayload, selectedIndex: number | null): FrontView {
  const ghostsByIndex = new Map<number, string[]>();
  for (const [label, index] of Object.entries(decision.strategy_ghosts)) {
    const list = ghostsByIndex.get(index) ?? [];
    list.push(label);
    ghostsByIndex.set(index, list);
  }
  return {
    era: decision.era,
    t: decision.t,
    mu: decision.mu,
    upperBound: decision.upper_bound_f2,
    points: decision.members.map((m) => ({
      index: m.index,
      f1: m.f1,
      f2: m.f2,
      dominated: m.dominated,
      selected: m.index === selectedIndex,
      ghosts: ghostsByIndex.get(m.index) ?? [],
    })),
  };
}

export interface TourNode {
  id: number;
  x: number;
  y: number;
  realized: boolean;
}

export interface VehicleTourView {
  vehicle: number;
  nodes: TourNode[]; // start depot, customers, end depot
  realizedEdges: number; // leading edge count drawn bold (irreversible)
}

export interface MapView {
  vehicles: VehicleTourView[];
  customers: { id: number; x: number; y: number; kind: string; requested: boolean }[];
  startDepot: { x: number; y: number };
  endDepot: { x: number; y: number };
}

/** Tour geometry of one candidate; realized prefix edges are flagged bold. */
export function buildMapView(state: SessionState, candidateIndex: number): MapView {
  const decision = state.decision;
  if (!decision) {
    throw new Error("no pending decision in state");
  }
  const member = decision.members.find((m) => m.index === candidateIndex);
  if (!member) {
    throw new Error(`candidate ${candidateIndex} not in population`);
  }
  const coord = new Map(state.instance.customers.map((c) => [c.id, c]));
  const start = coord.get(state.instance.start_depot)!;
  const end = coord.get(state.instance.end_depot)!;
  const vehicles = member.tours.map((tour, v) => {
    const prefix = decision.realized_prefixes[v] ?? [];
    const nodes: TourNode[] = [
      { id: start.id, x: start.x, y: start.y, realized: prefix.length > 0 },
    ];
    tour.forEach((id, i) => {
      const c = coord.get(id)!;
      nodes.push({ id, x: c.x, y: c.y, realized: i < prefix.length });
    });
    nodes.push({ id: end.id, x: end.x, y: end.y, realized: false });
    return { vehicle: v + 1, nodes, realizedEdges: prefix.length };
  });
  return {
    vehicles,
    customers: state.instance.customers
      .filter((c) => c.kind === "mandatory" || c.kind === "dynamic")
      .map((c) => ({
        id: c.id,
        x: c.x,
        y: c.y,
        kind: c.kind,
        requested: c.kind === "mandatory" || c.request_time <= decision.t,
      })),
    startDepot: { x: start.x, y: start.y },
    endDepot: { x: end.x, y: end.y },
  };
}

export interface HistoryView {
  era: number;
  f1: number;
  f2: number;
  upperBound: number;
  chosenIndex: number;
}

export function buildHistoryView(history: HistoryEntry[]): HistoryView[] {
  return history.map((h) => ({
    era: h.era,
    f1: h.chosen_objectives.f1,
    f2: h.chosen_objectives.f2,
    upperBound: h.upper_bound_f2,
    chosenIndex: h.chosen_index,
  }));
}

/** Collect every numeric leaf of a JSON-like value (provenance checks). */
export function numericLeaves(value: unknown, out: number[] = []): number[] {
  if (typeof value === "number") {
    out.push(value);
  } else if (Array.isArray(value)) {
    for (const v of value) numericLeaves(v, out);
  } else if (value && typeof value === "object") {
    for (const v of Object.values(value)) numericLeaves(v, out);
  }
  return out;
}
