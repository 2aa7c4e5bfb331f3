"""Per-vehicle open-path improvement with a fixed realized prefix.

Each vehicle's free active customers form a fixed-endpoints shortest
Hamiltonian path problem anchored at the vehicle's last realized node (or the
start depot) and the end depot. The default backend runs first-improvement
2-opt plus segment relocation (Or-opt, lengths 1-3) on the open path. An
external round-trip solver can be plugged in through a matrix-file exchange;
`hpp_to_tsp_matrix` provides the path-to-round-trip reduction for it.

Activation and vehicle assignment are never touched here: the search only
reorders each vehicle's free customers, so f2 is unchanged and no vehicle's
completion time can increase.
"""

from __future__ import annotations

import logging
import math
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .errors import ContractViolation
from .evolution import EraContext
from .genotype import Individual, decode
from .instance import Instance

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HppTask:
    """One vehicle's path problem: free nodes between two anchors.

    `submatrix[i][j]` is the distance between local indices where 0 is the
    start anchor, 1..k the free nodes in `nodes` order, and k+1 the end anchor.
    """

    nodes: tuple[int, ...]
    start_anchor: int
    end_anchor: int
    submatrix: tuple[tuple[float, ...], ...]

    @classmethod
    def build(
        cls, nodes: list[int], start_anchor: int, end_anchor: int, inst: Instance
    ) -> "HppTask":
        if start_anchor in nodes or end_anchor in nodes:
            raise ContractViolation("anchors must not appear among free nodes")
        local = [start_anchor, *nodes, end_anchor]
        dist = inst._dist
        sub = tuple(tuple(dist[a][b] for b in local) for a in local)
        return cls(tuple(nodes), start_anchor, end_anchor, sub)

    def path_cost(self, order: list[int]) -> float:
        """Cost of start_anchor -> order -> end_anchor; `order` holds local
        free-node indices 1..k."""
        sub = self.submatrix
        node = 0
        cost = 0.0
        for i in order:
            cost += sub[node][i]
            node = i
        return cost + sub[node][len(self.nodes) + 1]


@dataclass(frozen=True)
class ExternalSolver:
    """External round-trip solver hook: path, timeout, matrix scale."""

    executable: str
    timeout_s: float = 10.0
    scale: float = 1000.0


@dataclass(frozen=True)
class LsParams:
    # move budget = clamp(factor * k^3, floor, cap); a full descent to a local
    # optimum needs about k^3 / 2 move evaluations
    budget_factor: float = 2.0
    budget_floor: int = 400
    budget_cap: int = 20_000
    solver: ExternalSolver | None = None


def hpp_to_tsp_matrix(task: HppTask) -> list[list[float]]:
    """Round-trip cost matrix whose optimum is the anchored-path optimum.

    A junction node (last index) is linked at zero cost to both anchors and at
    a prohibitive cost Omega to every free node. Every round trip visits the
    junction once between the two anchors, so the optimal round trip is an
    optimal start->...->end path plus two zero arcs; dropping the junction
    recovers the path. Omega strictly exceeds the sum of all real entries, so
    no optimal round trip ever uses a forbidden arc. The matrix is symmetric.
    """
    k = len(task.nodes)
    m = k + 2
    omega = sum(sum(row) for row in task.submatrix) + 1.0
    out = [[0.0] * (m + 1) for _ in range(m + 1)]
    for i in range(m):
        for j in range(m):
            out[i][j] = task.submatrix[i][j]
    for i in range(m + 1):
        out[i][m] = out[m][i] = omega
    out[0][m] = out[m][0] = 0.0  # junction <-> start anchor
    out[k + 1][m] = out[m][k + 1] = 0.0  # junction <-> end anchor
    out[m][m] = 0.0
    return out


# -- internal backend ---------------------------------------------------------


def _two_opt_pass(order: list[int], task: HppTask, budget: list[int]) -> bool:
    """One first-improvement 2-opt sweep over the open path; True if improved."""
    sub = task.submatrix
    end = len(task.nodes) + 1
    n = len(order)
    ext = [0, *order, end]
    for i in range(n - 1):
        a = ext[i]
        b = ext[i + 1]
        for j in range(i + 1, n):
            if budget[0] <= 0:
                return False
            budget[0] -= 1
            c = ext[j + 1]
            d = ext[j + 2]
            delta = sub[a][ext[j + 1]] + sub[b][d] - sub[a][b] - sub[c][d]
            if delta < -1e-12:
                order[i : j + 1] = reversed(order[i : j + 1])
                return True
    return False


def _or_opt_pass(order: list[int], task: HppTask, budget: list[int]) -> bool:
    """Relocate a segment of length 1-3 elsewhere in the path; first
    improvement."""
    sub = task.submatrix
    end = len(task.nodes) + 1
    n = len(order)
    ext = [0, *order, end]
    for seg in (1, 2, 3):
        if seg > n - 1:
            break
        for i in range(n - seg + 1):
            a = ext[i]
            b = ext[i + 1]
            c = ext[i + seg]
            d = ext[i + seg + 1]
            removal = sub[a][d] - sub[a][b] - sub[c][d]
            rest_ext = [0, *order[:i], *order[i + seg :], end]
            for j in range(n - seg + 1):
                if j == i:
                    continue
                if budget[0] <= 0:
                    return False
                budget[0] -= 1
                p = rest_ext[j]
                q = rest_ext[j + 1]
                delta = removal + sub[p][b] + sub[q][c] - sub[p][q]
                if delta < -1e-12:
                    segment = order[i : i + seg]
                    del order[i : i + seg]
                    order[j:j] = segment
                    return True
    return False


def _descend(task: HppTask, order: list[int], budget_box: list[int]) -> list[int]:
    out = list(order)
    improved = True
    while improved and budget_box[0] > 0:
        improved = _two_opt_pass(out, task, budget_box)
        if not improved and budget_box[0] > 0:
            improved = _or_opt_pass(out, task, budget_box)
    return out


def _nearest_neighbor_order(task: HppTask) -> list[int]:
    sub = task.submatrix
    left = set(range(1, len(task.nodes) + 1))
    node = 0
    out: list[int] = []
    while left:
        nxt = min(left, key=lambda i: sub[node][i])
        out.append(nxt)
        left.discard(nxt)
        node = nxt
    return out


def _improve_internal(task: HppTask, order: list[int], budget: int) -> list[int]:
    budget_box = [budget]
    best = _descend(task, order, budget_box)
    # second start from a greedy construction; kept only when strictly better
    # so a local optimum stays a fixed point
    if budget_box[0] > 0:
        alt = _descend(task, _nearest_neighbor_order(task), budget_box)
        if task.path_cost(alt) < task.path_cost(best) - 1e-12:
            return alt
    return best


# -- external backend ---------------------------------------------------------


def _write_solver_matrix(matrix: list[list[float]], path: Path, scale: float) -> None:
    m = len(matrix)
    lines = [str(m)]
    for row in matrix:
        lines.append(" ".join(str(int(round(v * scale))) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _parse_solver_tour(path: Path, m: int) -> list[int]:
    for line in path.read_text().splitlines():
        fields = line.split()
        if not fields:
            continue
        tour = [int(f) for f in fields]
        if sorted(tour) != list(range(m)):
            raise ValueError(f"solver tour is not a permutation of 0..{m - 1}")
        return tour
    raise ValueError("solver produced no tour line")


def _improve_external(task: HppTask, order: list[int], solver: ExternalSolver) -> list[int]:
    matrix = hpp_to_tsp_matrix(task)
    m = len(matrix)
    k = len(task.nodes)
    with tempfile.TemporaryDirectory(prefix="hpp-solver-") as tmp:
        matrix_file = Path(tmp) / "matrix.txt"
        tour_file = Path(tmp) / "tour.txt"
        _write_solver_matrix(matrix, matrix_file, solver.scale)
        subprocess.run(
            [solver.executable, str(matrix_file), str(tour_file)],
            check=True,
            timeout=solver.timeout_s,
            capture_output=True,
        )
        tour = _parse_solver_tour(tour_file, m)
    # rotate to the junction (index m-1), then read off the anchored path
    j = tour.index(m - 1)
    rot = tour[j + 1 :] + tour[:j]
    if rot and rot[0] == k + 1:  # end anchor first: reverse direction
        rot.reverse()
    if not rot or rot[0] != 0 or rot[-1] != k + 1:
        raise ValueError("solver tour does not traverse junction between anchors")
    return rot[1:-1]


def improve_path(
    task: HppTask,
    initial_order: list[int],
    budget: int | None = None,
    params: LsParams | None = None,
) -> list[int]:
    """Improved ordering of `task.nodes` (local indices 1..k).

    Never returns a costlier order than the input. Falls back to the internal
    backend when the external solver fails for any reason.
    """
    params = params or LsParams()
    k = len(task.nodes)
    if k <= 1:
        return list(initial_order)
    if budget is None:
        budget = int(min(max(params.budget_factor * k**3, params.budget_floor), params.budget_cap))
    if params.solver is not None:
        try:
            candidate = _improve_external(task, list(initial_order), params.solver)
            if task.path_cost(candidate) <= task.path_cost(list(initial_order)):
                return candidate
            log.warning("external solver returned a worse path; using internal backend")
        except Exception as e:  # noqa: BLE001 - optimization must not abort a run
            log.warning("external solver failed (%s); using internal backend", e)
    return _improve_internal(task, list(initial_order), budget)


def local_search(
    ind: Individual,
    ctx: EraContext,
    inst: Instance,
    n_v: int,
    params: LsParams | None = None,
) -> Individual:
    """Shorten each vehicle's free path; activation/assignment stay fixed.

    The improved per-vehicle order is written back into the permutation slots
    the vehicle's free customers already occupy, so prefix order and the
    relative order of other vehicles' customers are untouched.
    """
    params = params or LsParams()
    plan = decode(ind, inst, n_v)
    out = ind.copy()
    pos_of = {c: i for i, c in enumerate(out.perm)}
    for v in range(n_v):
        pre = ctx.prefix.prefixes[v]
        free = plan.tours[v][len(pre) :]
        if len(free) <= 1:
            continue
        task = HppTask.build(free, ctx.prefix.last_node[v], inst.end_depot, inst)
        order = improve_path(task, list(range(1, len(free) + 1)), params=params)
        slots = sorted(pos_of[c] for c in free)
        for slot, local_idx in zip(slots, order):
            out.perm[slot] = free[local_idx - 1]
    return out
