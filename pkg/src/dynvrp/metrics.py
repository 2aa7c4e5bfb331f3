"""Front-quality metrics and the comparison protocols built on them.

All metrics minimize both objectives. The dominated hypervolume is computed
with an exact sweep; the two comparison protocols differ in how the common
reference point is chosen (truncating fronts at the smallest achievable
unserved-count bound versus pooling every front of a problem).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import ConfigurationError

Point = tuple[float, float]


@dataclass
class Front:
    """Objective points of one run plus provenance for reporting.

    `f2_bound` carries the run's final-era upper bound on unserved dynamic
    customers (dynamic runs only); the chopped comparison needs it.
    """

    points: list[Point]
    provenance: str = ""
    f2_bound: int | None = None


def nondominated(points: list[Point]) -> list[Point]:
    """Deduplicated non-dominated subset, sorted ascending by f1."""
    uniq = sorted(set(points))
    out: list[Point] = []
    best_f2 = math.inf
    for p in uniq:
        if p[1] < best_f2:
            out.append(p)
            best_f2 = p[1]
    return out


def hypervolume_2d(front: Front | list[Point], ref_point: Point) -> float:
    """Exact dominated area between a front and a reference point.

    Points that do not weakly dominate the reference contribute nothing and
    are dropped with a warning; an empty front yields 0.
    """
    points = front.points if isinstance(front, Front) else front
    kept = []
    dropped = 0
    for p in points:
        if p[0] <= ref_point[0] and p[1] <= ref_point[1] and p != tuple(ref_point):
            kept.append(p)
        else:
            dropped += 1
    if dropped:
        warnings.warn(
            f"hypervolume: {dropped} point(s) do not dominate the reference "
            f"point {ref_point} and were dropped",
            stacklevel=2,
        )
    if not kept:
        return 0.0
    area = 0.0
    prev_f2 = ref_point[1]
    for f1, f2 in nondominated(kept):
        area += (ref_point[0] - f1) * (prev_f2 - f2)
        prev_f2 = f2
    return area


@dataclass
class HvRow:
    algorithm: str
    provenance: str
    hv: float
    hv_indicator: float
    empty_after_filter: bool = False


@dataclass
class HvComparison:
    f2_cut: int | None
    ref_point: Point
    union_hv: float
    rows: list[HvRow] = field(default_factory=list)


def chopped_hv_comparison(
    dynamic_runs: list[Front],
    clairvoyant_runs: list[Front],
    margin: Point = (1.0, 1.0),
    classical: bool = False,
) -> HvComparison:
    """Hypervolume samples for both algorithms against one shared reference.

    Default protocol: (1) take the smallest final-era unserved upper bound
    across the dynamic runs, (2) drop all points above it from every front and
    build the reference point from the filtered union plus a margin, (3) score
    each run against that reference. `classical=True` skips the truncation and
    pools everything for the reference (per-problem comparison mode).

    Returns raw dominated hypervolume (higher is better) together with the
    indicator form union_hv - hv (lower is better).
    """
    if not dynamic_runs or (not clairvoyant_runs and not classical):
        raise ConfigurationError("need at least one run of each algorithm")
    cut: int | None = None
    if not classical:
        bounds = [f.f2_bound for f in dynamic_runs]
        if any(b is None for b in bounds):
            raise ConfigurationError("dynamic runs need f2_bound for the chopped protocol")
        cut = min(bounds)

    def filtered(front: Front) -> list[Point]:
        if cut is None:
            return list(front.points)
        return [p for p in front.points if p[1] <= cut]

    union: list[Point] = []
    for f in [*dynamic_runs, *clairvoyant_runs]:
        union.extend(filtered(f))
    if not union:
        raise ConfigurationError("no points remain after truncation")
    ref = (
        max(p[0] for p in union) + margin[0],
        max(p[1] for p in union) + margin[1],
    )
    union_hv = hypervolume_2d(nondominated(union), ref)

    comparison = HvComparison(f2_cut=cut, ref_point=ref, union_hv=union_hv)
    for name, runs in (("dynamic", dynamic_runs), ("clairvoyant", clairvoyant_runs)):
        for f in runs:
            pts = filtered(f)
            hv = hypervolume_2d(pts, ref) if pts else 0.0
            comparison.rows.append(
                HvRow(
                    algorithm=name,
                    provenance=f.provenance,
                    hv=hv,
                    hv_indicator=union_hv - hv,
                    empty_after_filter=not pts,
                )
            )
    return comparison


def f1_gap(dynamic_front: Front, reference_front: Front) -> tuple[list[tuple[int, float]], int]:
    """Tour-length gap to the best reference solution serving the same count.

    For each point of the dynamic front with an exact counterpart level in the
    reference front, emit (f2 level, f1 - best reference f1 at that level);
    negative values mean the dynamic run found the shorter tour. Points with
    no matching level are skipped; the skip count is returned alongside.
    """
    best_ref: dict[float, float] = {}
    for f1, f2 in reference_front.points:
        if f2 not in best_ref or f1 < best_ref[f2]:
            best_ref[f2] = f1
    out: list[tuple[int, float]] = []
    skipped = 0
    for f1, f2 in dynamic_front.points:
        if f2 in best_ref:
            out.append((int(f2), f1 - best_ref[f2]))
        else:
            skipped += 1
    return out, skipped


# -- rank-sum significance test ------------------------------------------------


def rank_sum_test(sample_a: list[float], sample_b: list[float]) -> tuple[float, float]:
    """Two-sided Mann-Whitney U test; returns (U of the first sample, p).

    Uses the exact U distribution for small tie-free samples
    (len(a) * len(b) <= 400) and the tie-corrected normal approximation
    otherwise. Completely tied data yields p = 1.
    """
    if not sample_a or not sample_b:
        raise ConfigurationError("both samples must be nonempty")
    n_a, n_b = len(sample_a), len(sample_b)
    pooled = [(v, 0) for v in sample_a] + [(v, 1) for v in sample_b]
    pooled.sort(key=lambda x: x[0])
    # midranks
    ranks = [0.0] * len(pooled)
    i = 0
    tie_term = 0.0
    while i < len(pooled):
        j = i
        while j < len(pooled) and pooled[j][0] == pooled[i][0]:
            j += 1
        mid = (i + j + 1) / 2.0  # average of 1-based ranks i+1..j
        for k in range(i, j):
            ranks[k] = mid
        size = j - i
        tie_term += size**3 - size
        i = j
    r_a = sum(r for r, (_, who) in zip(ranks, pooled) if who == 0)
    u_a = r_a - n_a * (n_a + 1) / 2.0
    has_ties = tie_term > 0

    if set(sample_a) == set(sample_b) and len(set(sample_a)) == 1:
        return u_a, 1.0

    if not has_ties and n_a * n_b <= 400:
        p = _exact_two_sided_p(int(round(u_a)), n_a, n_b)
        return u_a, p

    n = n_a + n_b
    mean = n_a * n_b / 2.0
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return u_a, 1.0
    # continuity-corrected z toward the mean
    z = (u_a - mean - 0.5 * _sign(u_a - mean)) / math.sqrt(var)
    p = 2.0 * _normal_sf(abs(z))
    return u_a, min(1.0, p)


def _sign(x: float) -> float:
    return (x > 0) - (x < 0)


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _exact_two_sided_p(u: int, n_a: int, n_b: int) -> float:
    """Exact null distribution of U by the standard counting recurrence."""
    counts = _u_counts(n_a, n_b)
    total = sum(counts)
    u_alt = n_a * n_b - u
    lo = min(u, u_alt)
    p = 2.0 * sum(counts[: lo + 1]) / total
    return min(1.0, p)


def _u_counts(n_a: int, n_b: int) -> list[int]:
    # N(u | m, n) = N(u - n | m - 1, n) + N(u | m, n - 1): the largest pooled
    # value is either an 'a' (beating all n b's) or a 'b'.
    max_u = n_a * n_b
    prev = [[1 if u == 0 else 0 for u in range(max_u + 1)] for _ in range(n_a + 1)]
    for n in range(1, n_b + 1):
        cur = [[0] * (max_u + 1) for _ in range(n_a + 1)]
        cur[0] = [1 if u == 0 else 0 for u in range(max_u + 1)]
        for m in range(1, n_a + 1):
            row = cur[m]
            left = cur[m - 1]
            up = prev[m]
            for u in range(max_u + 1):
                row[u] = (left[u - n] if u >= n else 0) + up[u]
        prev = cur
    return prev[n_a]
