"""Solution encoding and bi-objective fitness.

An individual is three vectors over the N-2 plain customers: a vehicle
assignment, an activation bit per customer, and a permutation of all customer
ids. Vehicle v's tour is the permutation filtered to customers that are active
and assigned to v. Objectives: f1 = the maximum vehicle completion time
(start depot through the tour to the end depot), f2 = the number of dynamic
customers that have requested service by the current time but are not active.

Vector entry i-1 belongs to customer id i; vehicles are numbered 1..n_v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ContractViolation, DomainError
from .instance import Instance


@dataclass(slots=True)
class Individual:
    vehicle: list[int]
    active: list[int]
    perm: list[int]
    objectives: tuple[float, int] | None = None

    def copy(self) -> "Individual":
        return Individual(list(self.vehicle), list(self.active), list(self.perm))

    def validate(self, n_customers: int, n_v: int) -> None:
        if sorted(self.perm) != list(range(1, n_customers + 1)):
            raise ContractViolation("perm is not a permutation of 1..N-2")
        if len(self.vehicle) != n_customers or len(self.active) != n_customers:
            raise ContractViolation("vector length mismatch")
        if any(not 1 <= v <= n_v for v in self.vehicle):
            raise ContractViolation("vehicle entry out of range")


@dataclass(slots=True)
class TourPlan:
    """Per-vehicle ordered customer-id lists; depots are implicit."""

    tours: list[list[int]]

    @property
    def n_vehicles(self) -> int:
        return len(self.tours)

    def customers(self) -> set[int]:
        return {c for tour in self.tours for c in tour}


@dataclass(slots=True)
class RealizedPrefix:
    """The irreversible leading part of each vehicle's tour at some time t."""

    prefixes: list[list[int]]
    fixed_set: frozenset[int]
    vehicle_of: dict[int, int]
    last_node: list[int]
    elapsed: list[float]

    @classmethod
    def empty(cls, n_v: int, inst: Instance) -> "RealizedPrefix":
        return cls(
            prefixes=[[] for _ in range(n_v)],
            fixed_set=frozenset(),
            vehicle_of={},
            last_node=[inst.start_depot] * n_v,
            elapsed=[0.0] * n_v,
        )


def decode(ind: Individual, inst: Instance, n_v: int) -> TourPlan:
    """Split the active part of the permutation into per-vehicle tours."""
    tours: list[list[int]] = [[] for _ in range(n_v)]
    active = ind.active
    vehicle = ind.vehicle
    for c in ind.perm:
        if active[c - 1]:
            tours[vehicle[c - 1] - 1].append(c)
    return TourPlan(tours)


def tour_length(
    tour: list[int],
    inst: Instance,
    start_from: int | None = None,
    start_time: float = 0.0,
    honor_release: bool = False,
) -> float:
    """Completion time of one open tour, ending at the end depot.

    The clock starts at `start_time` at `start_from`; each leg adds its travel
    time, and with `honor_release` the vehicle additionally waits at a customer
    until its request time. An empty tour started at the start depot costs 0
    (the vehicle never leaves).
    """
    start = inst.start_depot if start_from is None else start_from
    if not tour and start == inst.start_depot:
        return 0.0
    dist = inst._dist
    n = inst.n
    req = inst.request_time
    clock = start_time
    node = start
    for c in tour:
        if not 1 <= c <= n:
            raise DomainError(f"unknown customer id {c}")
        clock += dist[node][c]
        if honor_release and req[c] > clock:
            clock = req[c]
        node = c
    return clock + dist[node][inst.end_depot]


def evaluate(
    ind: Individual,
    inst: Instance,
    n_v: int,
    prefix: RealizedPrefix | None = None,
    t: float = math.inf,
    honor_release: bool = False,
) -> tuple[float, int]:
    """Compute (f1, f2) and cache the result on the individual.

    The realized part of each tour contributes its already-elapsed time; the
    remainder is costed from the vehicle's last realized node. f2 counts
    dynamic customers with request_time <= t that are inactive (pass t=inf for
    the clairvoyant reading where every dynamic customer counts).
    """
    if prefix is None:
        prefix = RealizedPrefix.empty(n_v, inst)
    plan = decode(ind, inst, n_v)
    dist = inst._dist
    req = inst.request_time
    end = inst.end_depot
    f1 = 0.0
    for v in range(n_v):
        tour = plan.tours[v]
        pre = prefix.prefixes[v]
        k = len(pre)
        if tour[:k] != pre:
            raise ContractViolation(
                f"vehicle {v + 1}: decoded tour does not embed its realized prefix"
            )
        if not tour:
            continue  # idle vehicle, contributes 0
        clock = prefix.elapsed[v]
        node = prefix.last_node[v]
        for c in tour[k:]:
            clock += dist[node][c]
            if honor_release and req[c] > clock:
                clock = req[c]
            node = c
        clock += dist[node][end]
        if clock > f1:
            f1 = clock
    active = ind.active
    f2 = 0
    for c in inst.dynamic_ids:
        if req[c] <= t and not active[c - 1]:
            f2 += 1
    ind.objectives = (f1, f2)
    return ind.objectives


def extract_prefix(
    plan: TourPlan | None,
    inst: Instance,
    t: float,
    honor_release: bool = False,
) -> RealizedPrefix:
    """Walk each tour from the start depot at time 0 and cut it at time t.

    The prefix is the maximal leading subsequence whose arrival times are <= t.
    """
    if plan is None:
        return RealizedPrefix.empty(0, inst)
    dist = inst._dist
    req = inst.request_time
    prefixes: list[list[int]] = []
    vehicle_of: dict[int, int] = {}
    last_node: list[int] = []
    elapsed: list[float] = []
    for v, tour in enumerate(plan.tours):
        clock = 0.0
        node = inst.start_depot
        pre: list[int] = []
        for c in tour:
            arrive = clock + dist[node][c]
            if honor_release and req[c] > arrive:
                arrive = req[c]
            if arrive > t:
                break
            clock = arrive
            node = c
            pre.append(c)
            vehicle_of[c] = v + 1
        prefixes.append(pre)
        last_node.append(node)
        elapsed.append(clock)
    return RealizedPrefix(
        prefixes=prefixes,
        fixed_set=frozenset(vehicle_of),
        last_node=last_node,
        elapsed=elapsed,
        vehicle_of=vehicle_of,
    )


def is_feasible(
    ind: Individual,
    inst: Instance,
    n_v: int,
    prefix: RealizedPrefix,
    t: float,
) -> bool:
    """Check the four feasibility clauses against a realized prefix at time t:
    prefix customers active on their fixed vehicles, prefix order embedded in
    the permutation, no dynamic customer active before it requested, and all
    mandatory customers active."""
    req = inst.request_time
    for c in inst.mandatory_ids:
        if not ind.active[c - 1]:
            return False
    for c in inst.dynamic_ids:
        if ind.active[c - 1] and req[c] > t:
            return False
    for c, v in prefix.vehicle_of.items():
        if not ind.active[c - 1] or ind.vehicle[c - 1] != v:
            return False
    plan = decode(ind, inst, n_v)
    for v in range(n_v):
        pre = prefix.prefixes[v]
        if plan.tours[v][: len(pre)] != pre:
            return False
    return True
