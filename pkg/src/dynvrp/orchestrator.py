"""Era loop, decision-maker policies, and the clairvoyant baseline.

A dynamic run advances through fixed-length eras. At each era onset the
realized prefixes are cut from the previously chosen plan, the previous
population is repaired around them, an inner evolutionary loop spends the era
budget (mutation every generation, path improvement at the first, middle and
last generation), and a decision maker picks exactly one member of the final
population. That plan is driven until the next onset.

The clairvoyant baseline runs the same machinery for a single era with every
dynamic customer visible from the start and release-time waiting enabled.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .evolution import (
    EraContext,
    EvoParams,
    initialize,
    make_clairvoyant_context,
    make_context,
    mutate,
    nds_sort,
    select,
)
from .genotype import (
    Individual,
    RealizedPrefix,
    TourPlan,
    decode,
    evaluate,
    extract_prefix,
    is_feasible,
)
from .instance import Instance
from .localsearch import LsParams, local_search


@dataclass(frozen=True)
class AutoD:
    """Automated decision policy: sort the final population ascending by f1
    and pick the ceil(d * mu)-th member; larger d serves more customers."""

    d: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.d <= 1.0:
            raise ConfigurationError("d must lie in [0, 1]")


class Interactive:
    """Marker policy: decisions come from the caller-supplied callback."""


@dataclass(frozen=True)
class RunConfig:
    n_vehicles: int = 1
    n_eras: int = 7
    delta: float | str = "auto"
    dm_policy: AutoD | Interactive = field(default_factory=AutoD)
    evo: EvoParams = field(default_factory=EvoParams)
    ls: LsParams = field(default_factory=LsParams)
    seed: int = 0
    honor_release: bool = False

    def __post_init__(self) -> None:
        if self.n_vehicles < 1:
            raise ConfigurationError("n_vehicles must be >= 1")
        if self.n_eras < 1:
            raise ConfigurationError("n_eras must be >= 1")
        if isinstance(self.delta, str) and self.delta != "auto":
            raise ConfigurationError("delta must be a number or 'auto'")


@dataclass
class FrontApproximation:
    """Final population of one era, sorted ascending by (f1, f2, index).

    `nd_mask[i]` flags whether member i is non-dominated within the
    population; `points` is the deduplicated non-dominated objective front.
    """

    population: list[Individual]
    objectives: list[tuple[float, int]]
    nd_mask: list[bool]

    @property
    def points(self) -> list[tuple[float, int]]:
        seen = set()
        out = []
        for obj, nd in zip(self.objectives, self.nd_mask):
            if nd and obj not in seen:
                seen.add(obj)
                out.append(obj)
        return out

    @classmethod
    def from_population(cls, population: list[Individual]) -> "FrontApproximation":
        order = sorted(
            range(len(population)),
            key=lambda i: (population[i].objectives[0], population[i].objectives[1], i),
        )
        pop = [population[i] for i in order]
        objs = [x.objectives for x in pop]
        _, ranks = nds_sort(objs)
        return cls(pop, objs, [r == 0 for r in ranks])


@dataclass
class EraRecord:
    era_index: int
    t: float
    front: FrontApproximation
    chosen_index: int  # 1-based into the sorted population
    chosen_plan: TourPlan
    chosen_objectives: tuple[float, int]
    upper_bound_f2: int
    fixed_count: int
    rng_digest: str

    def to_json_obj(self, run_id: str = "") -> dict:
        return {
            "run_id": run_id,
            "era": self.era_index,
            "t": self.t,
            "front": [{"f1": p[0], "f2": p[1]} for p in self.front.points],
            "chosen_index": self.chosen_index,
            "chosen_plan": [list(tour) for tour in self.chosen_plan.tours],
            "chosen_objectives": {
                "f1": self.chosen_objectives[0],
                "f2": self.chosen_objectives[1],
            },
            "upper_bound_f2": self.upper_bound_f2,
            "fixed_count": self.fixed_count,
            "rng_state_digest": self.rng_digest,
        }


DecisionCallback = Callable[["DecisionPrompt"], int]


@dataclass
class DecisionPrompt:
    """Everything a decision maker sees before choosing one solution."""

    era_index: int
    t: float
    front: FrontApproximation
    upper_bound_f2: int
    prefix: RealizedPrefix
    inst: Instance
    n_vehicles: int

    @property
    def mu(self) -> int:
        return len(self.front.population)

    def plan_of(self, index: int) -> TourPlan:
        """Decoded tour plan of the index-th (1-based) sorted member."""
        return decode(self.front.population[index - 1], self.inst, self.n_vehicles)


def era_length(inst: Instance, n_eras: int) -> int:
    """Era length: ceiling of the latest request time over the era count."""
    if inst.n_dynamic == 0:
        raise ConfigurationError(
            "instance has no dynamic customers; an explicit era length is required"
        )
    return math.ceil(max(inst.request_time[c] for c in inst.dynamic_ids) / n_eras)


def auto_pick(d: float, mu: int) -> int:
    """1-based index selected by the d-strategy on an f1-sorted population."""
    return max(1, math.ceil(d * mu))


def plan_generations(budget: int, mu: int, explicit: frozenset[int] | None) -> tuple[int, frozenset[int]]:
    """Number of offspring generations and the improvement schedule.

    Every generation costs mu evaluations; a scheduled improvement generation
    costs mu more (re-evaluation). The initial population costs mu. The
    largest generation count fitting the budget wins.
    """
    slots = budget // mu - 1  # generations-worth of evals after initialization
    if explicit is not None:
        g = max(0, slots - len(explicit))
        return g, frozenset(i for i in explicit if 1 <= i <= g)
    g = max(0, slots)
    while g > 0:
        sched = _default_schedule(g)
        if g + len(sched) <= slots:
            return g, sched
        g -= 1
    return 0, frozenset()


def _default_schedule(g: int) -> frozenset[int]:
    return frozenset({1, math.ceil(g / 2), g})


def _run_era_optimizer(
    population: list[Individual],
    ctx: EraContext,
    inst: Instance,
    cfg: RunConfig,
    rng: np.random.Generator,
) -> tuple[list[Individual], int]:
    """Inner loop for one era; returns (final population, evaluations used)."""
    evo = cfg.evo
    n_v = cfg.n_vehicles
    for x in population:
        evaluate(x, inst, n_v, ctx.prefix, ctx.t, cfg.honor_release)
    used = len(population)
    n_gens, schedule = plan_generations(evo.evals_per_era, evo.mu, evo.ls_schedule)
    for g in range(1, n_gens + 1):
        offspring = [
            mutate(x, ctx, evo.p_swap, evo.n_swap, n_v, rng) for x in population
        ]
        for q in offspring:
            evaluate(q, inst, n_v, ctx.prefix, ctx.t, cfg.honor_release)
        used += len(offspring)
        if g in schedule:
            offspring = [local_search(q, ctx, inst, n_v, cfg.ls) for q in offspring]
            for q in offspring:
                evaluate(q, inst, n_v, ctx.prefix, ctx.t, cfg.honor_release)
            used += len(offspring)
        population = select(population + offspring, evo.mu)
    return population, used


def _rng_digest(rng: np.random.Generator) -> str:
    state = json.dumps(rng.bit_generator.state, sort_keys=True, default=str)
    return hashlib.sha256(state.encode()).hexdigest()[:16]


def run_dynamic(
    inst: Instance,
    cfg: RunConfig,
    dm: DecisionCallback | None = None,
) -> list[EraRecord]:
    """Execute the full era loop and return one record per era.

    With an AutoD policy no callback is needed; with Interactive the callback
    is consulted once per era and must return a 1-based index into the
    f1-sorted final population (invalid interactive answers are re-prompted).
    """
    if isinstance(cfg.dm_policy, Interactive) and dm is None:
        raise ConfigurationError("interactive policy requires a decision callback")
    delta = era_length(inst, cfg.n_eras) if cfg.delta == "auto" else float(cfg.delta)
    rng = np.random.default_rng(cfg.seed)
    n_v = cfg.n_vehicles
    dynamic_set = frozenset(inst.dynamic_ids)

    t = 0.0
    population: list[Individual] = []
    plan: TourPlan | None = None
    records: list[EraRecord] = []
    for era in range(1, cfg.n_eras + 1):
        prefix = (
            extract_prefix(plan, inst, t, cfg.honor_release)
            if plan is not None
            else RealizedPrefix.empty(n_v, inst)
        )
        ctx = make_context(inst, t, prefix, prev_t=t - delta if era > 1 else None)
        population = initialize(cfg.evo.mu, ctx, population, inst, n_v, rng)
        for x in population:
            if not is_feasible(x, inst, n_v, prefix, t):
                raise ContractViolation(f"era {era}: initialization broke feasibility")
        population, _ = _run_era_optimizer(population, ctx, inst, cfg, rng)

        front = FrontApproximation.from_population(population)
        upper_bound = len(dynamic_set) - len(dynamic_set & prefix.fixed_set)
        prompt = DecisionPrompt(
            era_index=era,
            t=t,
            front=front,
            upper_bound_f2=upper_bound,
            prefix=prefix,
            inst=inst,
            n_vehicles=n_v,
        )
        k = _decide(cfg, prompt, dm)
        chosen = front.population[k - 1]
        plan = decode(chosen, inst, n_v)
        records.append(
            EraRecord(
                era_index=era,
                t=t,
                front=front,
                chosen_index=k,
                chosen_plan=plan,
                chosen_objectives=chosen.objectives,
                upper_bound_f2=upper_bound,
                fixed_count=len(prefix.fixed_set),
                rng_digest=_rng_digest(rng),
            )
        )
        population = front.population  # next era's template, in sorted order
        t += delta
    return records


def _decide(cfg: RunConfig, prompt: DecisionPrompt, dm: DecisionCallback | None) -> int:
    mu = prompt.mu
    if isinstance(cfg.dm_policy, AutoD):
        if dm is None:
            return auto_pick(cfg.dm_policy.d, mu)
        k = dm(prompt)
        if not 1 <= k <= mu:
            raise ContractViolation(f"decision index {k} outside 1..{mu}")
        return k
    while True:
        k = dm(prompt)
        if 1 <= k <= mu:
            return k


def run_clairvoyant(inst: Instance, cfg: RunConfig, budget: int) -> FrontApproximation:
    """Single-era baseline with full request knowledge and release waiting."""
    rng = np.random.default_rng(cfg.seed)
    n_v = cfg.n_vehicles
    ctx = make_clairvoyant_context(inst, n_v)
    clair_cfg = replace(
        cfg,
        honor_release=True,
        evo=replace(cfg.evo, evals_per_era=budget),
    )
    population = initialize(cfg.evo.mu, ctx, [], inst, n_v, rng)
    population, _ = _run_era_optimizer(population, ctx, inst, clair_cfg, rng)
    return FrontApproximation.from_population(population)
