"""Variation operators and survival selection for the era planner.

Initialization builds the first population from scratch or repairs the
previous era's population around the newly realized tour prefixes. Mutation
touches only customers that have requested service and are not yet driven, so
feasibility is closed under all operators. Survival selection is the classic
rank-then-crowding scheme over the merged parent+offspring population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .genotype import Individual, RealizedPrefix
from .instance import Instance


@dataclass(frozen=True)
class EvoParams:
    mu: int = 100
    p_swap: float = 0.6
    n_swap: int = 10
    evals_per_era: int = 65_000
    ls_schedule: frozenset[int] | None = None  # None: first, half-time, last

    def __post_init__(self) -> None:
        if self.mu < 2:
            raise ValueError("mu must be >= 2")
        if self.n_swap < 1:
            raise ValueError("n_swap must be >= 1")
        if self.evals_per_era < self.mu:
            raise ValueError("evals_per_era must be >= mu")
        if not 0.0 <= self.p_swap <= 1.0:
            raise ValueError("p_swap must lie in [0, 1]")


@dataclass(frozen=True)
class EraContext:
    """Time slice of a run: what is visible, new, fixed, and still free.

    `available_dynamic` is the set of requested-but-not-driven dynamic
    customers; `available_all` additionally includes free mandatory customers.
    Both are sorted tuples so operator RNG draws are reproducible.
    """

    t: float
    n_v: int
    prefix: RealizedPrefix
    requested: frozenset[int]
    new_requests: frozenset[int]
    available_dynamic: tuple[int, ...]
    available_all: tuple[int, ...]


def _build_context(
    inst: Instance,
    t: float,
    n_v: int,
    prefix: RealizedPrefix,
    requested: frozenset[int],
    new: frozenset[int],
) -> EraContext:
    fixed = prefix.fixed_set
    d_av = tuple(sorted(requested - fixed))
    c_av = tuple(sorted((set(inst.mandatory_ids) | requested) - fixed))
    return EraContext(
        t=t,
        n_v=n_v,
        prefix=prefix,
        requested=requested,
        new_requests=new,
        available_dynamic=d_av,
        available_all=c_av,
    )


def make_context(
    inst: Instance,
    t: float,
    prefix: RealizedPrefix,
    prev_t: float | None = None,
) -> EraContext:
    """Era context at onset time t; new requests arrived in (prev_t, t]."""
    requested = frozenset(inst.requested_dynamic_by(t))
    if prev_t is None:
        new = requested
    else:
        new = requested - frozenset(inst.requested_dynamic_by(prev_t))
    return _build_context(inst, t, len(prefix.prefixes), prefix, requested, new)


def make_clairvoyant_context(inst: Instance, n_v: int) -> EraContext:
    """All dynamic customers visible from the start, nothing realized."""
    all_dyn = frozenset(inst.dynamic_ids)
    return _build_context(
        inst, math.inf, n_v, RealizedPrefix.empty(n_v, inst), all_dyn, all_dyn
    )


def mutation_rates(ctx: EraContext) -> tuple[float, float]:
    """Per-customer activation-flip and vehicle-change probabilities.

    Chosen so that in expectation one (de)activation and one reassignment
    happen per offspring; zero when the respective candidate set is empty.
    """
    n_d = len(ctx.available_dynamic)
    n_c = len(ctx.available_all)
    return (1.0 / n_d if n_d else 0.0, 1.0 / n_c if n_c else 0.0)


def initialize(
    mu: int,
    ctx: EraContext,
    template: list[Individual],
    inst: Instance,
    n_v: int,
    rng: np.random.Generator,
) -> list[Individual]:
    """Build the era's starting population.

    First era (no template): random vehicle per customer, mandatory customers
    active, dynamic inactive, random permutation. Later eras: repair each
    template member around the realized prefixes, then activate each customer
    that requested within the last era with probability 1/2.
    """
    n_c = inst.n_customers
    if not template:
        pop = []
        for _ in range(mu):
            vehicle = (rng.integers(1, n_v + 1, n_c)).tolist()
            active = [0] * n_c
            for c in inst.mandatory_ids:
                active[c - 1] = 1
            perm = (rng.permutation(n_c) + 1).tolist()
            # repair is a no-op in the first era (nothing realized yet) but
            # keeps the feasibility guarantee when starting mid-run
            pop.append(repair(Individual(vehicle, active, perm), ctx))
        return pop

    if len(template) != mu:
        raise ContractViolation(f"template size {len(template)} != mu {mu}")
    new_requests = sorted(ctx.new_requests)
    pop = []
    for parent in template:
        x = repair(parent, ctx)
        if new_requests:
            draws = rng.random(len(new_requests))
            for c, r in zip(new_requests, draws):
                if r < 0.5:
                    x.active[c - 1] = 1
        pop.append(x)
    return pop


def repair(parent: Individual, ctx: EraContext) -> Individual:
    """Make one template individual feasible for the era's realized prefixes.

    Driven customers are activated and pinned to their vehicle, and the driven
    subsequences are moved to the front of the permutation (grouped by
    vehicle, driven order kept). Keeping every fixed customer ahead of every
    free one means later swap mutations cannot break prefix order.
    """
    x = parent.copy()
    for c, v in ctx.prefix.vehicle_of.items():
        x.active[c - 1] = 1
        x.vehicle[c - 1] = v
    fixed = ctx.prefix.fixed_set
    if fixed:
        head = [c for pre in ctx.prefix.prefixes for c in pre]
        x.perm = head + [c for c in x.perm if c not in fixed]
    return x


def mutate(
    ind: Individual,
    ctx: EraContext,
    p_swap: float,
    n_swap: int,
    n_v: int,
    rng: np.random.Generator,
) -> Individual:
    """Offspring copy with activation flips, vehicle changes, and swaps.

    Only customers that have requested and are not yet driven are touched;
    the realized prefixes stay intact by construction.
    """
    x = ind.copy()
    d_av = ctx.available_dynamic
    c_av = ctx.available_all
    p_a, p_v = mutation_rates(ctx)

    if d_av:
        draws = rng.random(len(d_av))
        for c, r in zip(d_av, draws):
            if r < p_a:
                x.active[c - 1] ^= 1

    if c_av and n_v > 1:
        draws = rng.random(len(c_av))
        for c, r in zip(c_av, draws):
            if r < p_v:
                # uniform among the other n_v - 1 vehicles
                step = int(rng.integers(1, n_v))
                x.vehicle[c - 1] = (x.vehicle[c - 1] - 1 + step) % n_v + 1

    if len(c_av) >= 2 and rng.random() <= p_swap:
        pos = {c: i for i, c in enumerate(x.perm)}
        m = len(c_av)
        for _ in range(n_swap):
            i = int(rng.integers(m))
            j = int(rng.integers(m - 1))
            if j >= i:
                j += 1
            a, b = c_av[i], c_av[j]
            pa, pb = pos[a], pos[b]
            x.perm[pa], x.perm[pb] = b, a
            pos[a], pos[b] = pb, pa
    return x


# -- non-dominated sorting and survival selection ----------------------------


def nds_sort(points: list[tuple[float, float]]) -> tuple[list[list[int]], list[int]]:
    """Fast non-dominated sort (minimization); returns (fronts, ranks).

    Domination: not worse in any objective, strictly better in at least one.
    Equal points share a rank; front membership keeps input order.
    """
    n = len(points)
    if n == 0:
        return [], []
    f = np.asarray(points, dtype=float)
    # dom[i, j] = i dominates j
    le = (f[:, None, :] <= f[None, :, :]).all(axis=2)
    lt = (f[:, None, :] < f[None, :, :]).any(axis=2)
    dom = le & lt
    n_dominators = dom.sum(axis=0)
    ranks = np.full(n, -1, dtype=int)
    fronts: list[list[int]] = []
    remaining = n_dominators.copy()
    assigned = np.zeros(n, dtype=bool)
    r = 0
    while not assigned.all():
        current = np.where(~assigned & (remaining == 0))[0]
        if current.size == 0:  # cannot happen on finite inputs
            raise ContractViolation("non-dominated sort failed to make progress")
        fronts.append(current.tolist())
        ranks[current] = r
        assigned[current] = True
        remaining = remaining - dom[current].sum(axis=0)
        r += 1
    return fronts, ranks.tolist()


def crowding_distance(points: list[tuple[float, float]], front: list[int]) -> list[float]:
    """Crowding distance of each front member (aligned with `front`)."""
    m = len(front)
    if m == 0:
        return []
    dist = [0.0] * m
    for obj in range(2):
        order = sorted(range(m), key=lambda i: points[front[i]][obj])
        lo = points[front[order[0]]][obj]
        hi = points[front[order[-1]]][obj]
        dist[order[0]] = dist[order[-1]] = math.inf
        if hi == lo:
            continue
        span = hi - lo
        for k in range(1, m - 1):
            gap = points[front[order[k + 1]]][obj] - points[front[order[k - 1]]][obj]
            dist[order[k]] += gap / span
    return dist


def select(union: list[Individual], mu: int) -> list[Individual]:
    """Environmental selection: fill by rank, split the boundary by crowding.

    All individuals must carry cached objectives. Deterministic: the boundary
    tie-break is descending crowding distance, then input index.
    """
    if len(union) <= mu:
        return list(union)
    points = []
    for x in union:
        if x.objectives is None:
            raise ContractViolation("select requires evaluated individuals")
        points.append(x.objectives)
    fronts, _ = nds_sort(points)
    chosen: list[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= mu:
            chosen.extend(front)
            if len(chosen) == mu:
                break
            continue
        crowd = crowding_distance(points, front)
        order = sorted(range(len(front)), key=lambda i: (-crowd[i], front[i]))
        chosen.extend(front[i] for i in order[: mu - len(chosen)])
        break
    return [union[i] for i in chosen]
