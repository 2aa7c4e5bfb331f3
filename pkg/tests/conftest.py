"""Shared fixtures: a small hand-laid instance matching the canonical encoding
example, plus helpers to build random feasible era setups."""

from __future__ import annotations

import math

import numpy as np
import pytest

from dynvrp.evolution import EraContext, make_context
from dynvrp.genotype import Individual, TourPlan, decode, extract_prefix
from dynvrp.instance import Customer, Instance, Kind


@pytest.fixture
def grid_instance() -> Instance:
    """8-node layout: customers 1..6 on a grid, depots 7 (start) and 8 (end).

    M = {1, 5, 6}, D = {2, 3, 4}; by t = 150 customers 3 and 4 have requested
    while 2 has not.
    """
    return Instance(
        "grid8",
        (
            Customer(1, 0.0, 2.0, Kind.MANDATORY),
            Customer(2, 1.0, 2.0, Kind.DYNAMIC, 900.0),
            Customer(3, 2.0, 2.0, Kind.DYNAMIC, 40.0),
            Customer(4, 0.0, 1.0, Kind.DYNAMIC, 60.0),
            Customer(5, 1.0, 1.0, Kind.MANDATORY),
            Customer(6, 2.0, 1.0, Kind.MANDATORY),
            Customer(7, 0.0, 0.0, Kind.START_DEPOT),
            Customer(8, 2.0, 0.0, Kind.END_DEPOT),
        ),
    )


@pytest.fixture
def grid_individual() -> Individual:
    return Individual(
        vehicle=[1, 2, 1, 1, 1, 2],
        active=[1, 0, 1, 0, 1, 1],
        perm=[4, 1, 6, 5, 3, 2],
    )


@pytest.fixture
def grid_context(grid_instance, grid_individual) -> EraContext:
    """Era context at t=150 where vehicle 1 has driven (1, 5) and vehicle 2 (6)."""
    plan = decode(grid_individual, grid_instance, 2)
    t_cut = arrival_time(plan.tours[0][:2], grid_instance) + 0.01
    prefix = extract_prefix(plan, grid_instance, t_cut)
    assert prefix.prefixes == [[1, 5], [6]]
    return make_context(grid_instance, 150.0, prefix)


def arrival_time(tour: list[int], inst: Instance) -> float:
    clock = 0.0
    node = inst.start_depot
    for c in tour:
        clock += inst.dist(node, c)
        node = c
    return clock


def random_instance(
    rng: np.random.Generator,
    n_total: int = 12,
    dynamic_ratio: float = 0.5,
    horizon: float = 100.0,
    box: float = 100.0,
) -> Instance:
    """Direct random instance without the generator (independent of it)."""
    n_dynamic = int(dynamic_ratio * n_total + 0.5)
    dyn = set(rng.choice(n_total, size=n_dynamic, replace=False).tolist())
    customers = []
    for i in range(n_total):
        x, y = rng.uniform(0, box, 2)
        if i in dyn:
            customers.append(
                Customer(i + 1, float(x), float(y), Kind.DYNAMIC, float(rng.uniform(1e-6, horizon)))
            )
        else:
            customers.append(Customer(i + 1, float(x), float(y), Kind.MANDATORY))
    sx, sy = rng.uniform(0, box, 2)
    ex, ey = rng.uniform(0, box, 2)
    customers.append(Customer(n_total + 1, float(sx), float(sy), Kind.START_DEPOT))
    customers.append(Customer(n_total + 2, float(ex), float(ey), Kind.END_DEPOT))
    return Instance(f"rand{rng.integers(1 << 30)}", tuple(customers))


def random_feasible_individual(
    rng: np.random.Generator, inst: Instance, n_v: int, t: float
) -> Individual:
    """Feasible-by-construction individual for an empty prefix at time t."""
    n_c = inst.n_customers
    vehicle = rng.integers(1, n_v + 1, n_c).tolist()
    active = [0] * n_c
    for c in inst.mandatory_ids:
        active[c - 1] = 1
    for c in inst.requested_dynamic_by(t):
        if rng.random() < 0.5:
            active[c - 1] = 1
    perm = (rng.permutation(n_c) + 1).tolist()
    return Individual(vehicle, active, perm)


def random_era_setup(
    rng: np.random.Generator,
    n_total: int = 12,
    n_v: int | None = None,
    t: float | None = None,
):
    """Random (instance, context, feasible individual) triple.

    The realized prefixes are cut from a feasible plan that was 'driven' for a
    random amount of time, mirroring how prefixes arise in a real run.
    """
    inst = random_instance(rng, n_total=n_total)
    n_v = n_v or int(rng.integers(1, 4))
    t_plan = float(rng.uniform(0, 100.0))
    planner = random_feasible_individual(rng, inst, n_v, t_plan)
    plan = decode(planner, inst, n_v)
    t = t if t is not None else float(rng.uniform(0, 250.0))
    prefix = extract_prefix(plan, inst, t)
    ctx = make_context(inst, max(t, t_plan), prefix, prev_t=t_plan if t > t_plan else None)
    ind = repair_like(planner, ctx)
    return inst, ctx, ind


def repair_like(parent: Individual, ctx: EraContext) -> Individual:
    from dynvrp.evolution import repair

    return repair(parent, ctx)
