"""Problem instances: data model, benchmark generator, JSON file I/O.

An instance is a set of customer locations in the Euclidean plane with two
depots. Customers are either mandatory (known at t=0, must be served) or
dynamic (request service at some time r > 0, serving optional). Travel time
equals Euclidean distance (unit speed).

Id convention: customers carry ids 1..N where N-1 is the start depot and N
the end depot; the N-2 plain customers use ids 1..N-2.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ParseError, ValidationError


class Kind(str, Enum):
    MANDATORY = "mandatory"
    DYNAMIC = "dynamic"
    START_DEPOT = "start_depot"
    END_DEPOT = "end_depot"


@dataclass(frozen=True)
class Customer:
    id: int
    x: float
    y: float
    kind: Kind
    request_time: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError(f"customer {self.id}: non-finite coordinates")
        if self.kind is Kind.DYNAMIC:
            if not self.request_time > 0:
                raise ValidationError(
                    f"customer {self.id}: dynamic customer needs request_time > 0"
                )
        elif self.request_time != 0:
            raise ValidationError(
                f"customer {self.id}: kind {self.kind.value} must have request_time 0"
            )


@dataclass
class Instance:
    """Immutable-by-convention instance; derived structures are cached."""

    name: str
    customers: tuple[Customer, ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        self.customers = tuple(self.customers)
        n = len(self.customers)
        if n < 4:
            raise ValidationError("instance needs at least 2 customers and 2 depots")
        ids = [c.id for c in self.customers]
        if ids != list(range(1, n + 1)):
            raise ValidationError("customer ids must be exactly 1..N in order")
        kinds = [c.kind for c in self.customers]
        if kinds.count(Kind.START_DEPOT) != 1 or kinds.count(Kind.END_DEPOT) != 1:
            raise ValidationError("instance needs exactly one start and one end depot")
        if kinds[n - 2] is not Kind.START_DEPOT or kinds[n - 1] is not Kind.END_DEPOT:
            raise ValidationError("depots must be the last two customers (ids N-1, N)")

    # -- structure ---------------------------------------------------------

    @property
    def n(self) -> int:
        """Total number of locations, depots included."""
        return len(self.customers)

    @property
    def n_customers(self) -> int:
        """Number of plain (non-depot) customers, N-2."""
        return len(self.customers) - 2

    @property
    def start_depot(self) -> int:
        return self.n - 1

    @property
    def end_depot(self) -> int:
        return self.n

    @cached_property
    def mandatory_ids(self) -> tuple[int, ...]:
        return tuple(c.id for c in self.customers if c.kind is Kind.MANDATORY)

    @cached_property
    def dynamic_ids(self) -> tuple[int, ...]:
        return tuple(c.id for c in self.customers if c.kind is Kind.DYNAMIC)

    @property
    def n_mandatory(self) -> int:
        return len(self.mandatory_ids)

    @property
    def n_dynamic(self) -> int:
        return len(self.dynamic_ids)

    @cached_property
    def request_time(self) -> tuple[float, ...]:
        """Request time indexed by id (entry 0 unused)."""
        return (0.0,) + tuple(c.request_time for c in self.customers)

    @cached_property
    def distance(self) -> np.ndarray:
        """Dense N x N Euclidean distance matrix (row/col i is id i+1)."""
        pts = np.array([(c.x, c.y) for c in self.customers], dtype=float)
        diff = pts[:, None, :] - pts[None, :, :]
        return np.sqrt((diff * diff).sum(axis=2))

    @cached_property
    def _dist(self) -> list[list[float]]:
        # id-indexed nested lists (row 0 padding); plain-list lookups are the
        # hot path of fitness evaluation.
        n = self.n
        rows: list[list[float]] = [[0.0] * (n + 1)]
        mat = self.distance
        for i in range(n):
            rows.append([0.0] + [float(v) for v in mat[i]])
        return rows

    def dist(self, a: int, b: int) -> float:
        """Distance between two locations by id."""
        return self._dist[a][b]

    def requested_dynamic_by(self, t: float) -> tuple[int, ...]:
        """Ids of dynamic customers with request_time <= t, ascending by id."""
        times, ids = self._dynamic_by_time
        k = bisect.bisect_right(times, t)
        return tuple(sorted(ids[:k]))

    @cached_property
    def _dynamic_by_time(self) -> tuple[list[float], list[int]]:
        order = sorted(self.dynamic_ids, key=lambda i: (self.request_time[i], i))
        return [self.request_time[i] for i in order], order

    @cached_property
    def coords(self) -> dict[int, tuple[float, float]]:
        return {c.id: (c.x, c.y) for c in self.customers}


@dataclass(frozen=True)
class GeneratorConfig:
    n_total: int
    topology: str = "uniform"  # "uniform" | "clustered"
    n_clusters: int = 0
    dynamic_ratio: float = 0.5
    request_horizon: float = 1000.0
    seed: int = 0
    bounding_box: float = 1000.0

    def __post_init__(self) -> None:
        if self.n_total < 4:
            raise ConfigurationError("n_total must be >= 4")
        if self.topology not in ("uniform", "clustered"):
            raise ConfigurationError(f"unknown topology {self.topology!r}")
        if self.topology == "clustered":
            if self.n_clusters < 1:
                raise ConfigurationError("clustered topology needs n_clusters >= 1")
            if self.n_clusters > self.n_total:
                raise ConfigurationError("more clusters than customers")
        if not 0.0 <= self.dynamic_ratio <= 1.0:
            raise ConfigurationError("dynamic_ratio must lie in [0, 1]")
        if self.request_horizon <= 0:
            raise ConfigurationError("request_horizon must be positive")
        if self.bounding_box <= 0:
            raise ConfigurationError("bounding_box must be positive")


_MAX_REJECTION_DRAWS = 10_000


def _lhs_centers(n: int, box: float, rng: np.random.Generator) -> np.ndarray:
    # One stratum per cluster per axis; random permutation pairs the axes.
    xs = (np.arange(n) + rng.random(n)) * (box / n)
    ys = (np.arange(n) + rng.random(n)) * (box / n)
    return np.column_stack([xs[rng.permutation(n)], ys[rng.permutation(n)]])


def _cluster_points(
    centers: np.ndarray, sizes: list[int], box: float, rng: np.random.Generator
) -> np.ndarray:
    # Isotropic Gaussian around each center, resampled until the point lies in
    # the box and is strictly nearer to its own center than to any other
    # (cluster segregation).
    sigma = box / (4.0 * len(centers))
    out = []
    for j, size in enumerate(sizes):
        own = centers[j]
        for _ in range(size):
            for _attempt in range(_MAX_REJECTION_DRAWS):
                p = own + rng.normal(0.0, sigma, 2)
                if not (0.0 <= p[0] <= box and 0.0 <= p[1] <= box):
                    continue
                d2 = ((centers - p) ** 2).sum(axis=1)
                others = np.delete(d2, j)
                if others.size == 0 or d2[j] < others.min():
                    out.append(p)
                    break
            else:
                raise ConfigurationError(
                    "cluster sampling failed to segregate; centers too close"
                )
    return np.array(out)


def generate_instance(cfg: GeneratorConfig) -> Instance:
    """Generate a benchmark instance; bit-for-bit reproducible per seed."""
    rng = np.random.default_rng(cfg.seed)
    n, box = cfg.n_total, cfg.bounding_box

    if cfg.topology == "uniform":
        pts = rng.uniform(0.0, box, (n, 2))
    else:
        centers = _lhs_centers(cfg.n_clusters, box, rng)
        base, resid = divmod(n, cfg.n_clusters)
        sizes = [base + (1 if j < resid else 0) for j in range(cfg.n_clusters)]
        pts = _cluster_points(centers, sizes, box, rng)

    depots = rng.uniform(0.0, box, (2, 2))

    n_dynamic = int(cfg.dynamic_ratio * n + 0.5)
    dynamic_idx = set(rng.choice(n, size=n_dynamic, replace=False).tolist())
    # request times uniform on (0, horizon]
    req = cfg.request_horizon * (1.0 - rng.random(n_dynamic))

    customers = []
    k = 0
    for i in range(n):
        if i in dynamic_idx:
            customers.append(
                Customer(i + 1, float(pts[i, 0]), float(pts[i, 1]), Kind.DYNAMIC, float(req[k]))
            )
            k += 1
        else:
            customers.append(
                Customer(i + 1, float(pts[i, 0]), float(pts[i, 1]), Kind.MANDATORY)
            )
    customers.append(Customer(n + 1, float(depots[0, 0]), float(depots[0, 1]), Kind.START_DEPOT))
    customers.append(Customer(n + 2, float(depots[1, 0]), float(depots[1, 1]), Kind.END_DEPOT))

    name = _default_name(cfg)
    meta = {
        "generator": {
            "n_total": cfg.n_total,
            "topology": cfg.topology,
            "n_clusters": cfg.n_clusters,
            "dynamic_ratio": cfg.dynamic_ratio,
            "request_horizon": cfg.request_horizon,
            "seed": cfg.seed,
            "bounding_box": cfg.bounding_box,
        }
    }
    return Instance(name=name, customers=tuple(customers), meta=meta)


def _default_name(cfg: GeneratorConfig) -> str:
    topo = "uniform" if cfg.topology == "uniform" else f"clustered{cfg.n_clusters}"
    pct = int(round(cfg.dynamic_ratio * 100))
    return f"{topo}-n{cfg.n_total}-dyn{pct}-s{cfg.seed}"


# -- file I/O ---------------------------------------------------------------


def save_instance(inst: Instance, path: str | Path) -> None:
    """Write the JSON document; the distance matrix is never serialized."""
    doc = {
        "name": inst.name,
        "n": inst.n,
        "customers": [
            {
                "id": c.id,
                "x": c.x,
                "y": c.y,
                "kind": c.kind.value,
                "request_time": c.request_time,
            }
            for c in inst.customers
        ],
    }
    if inst.meta:
        doc["meta"] = inst.meta
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_instance(path: str | Path) -> Instance:
    """Parse and validate an instance file; raises ParseError/ValidationError."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    for key in ("name", "n", "customers"):
        if key not in doc:
            raise ParseError(f"{path}: missing field {key!r}")
    raw = doc["customers"]
    if not isinstance(raw, list) or len(raw) != doc["n"]:
        raise ValidationError(
            f"{path}: field 'n' ({doc['n']}) does not match customer count ({len(raw)})"
        )
    customers = []
    for pos, entry in enumerate(raw):
        try:
            kind = Kind(entry["kind"])
            customers.append(
                Customer(
                    id=int(entry["id"]),
                    x=float(entry["x"]),
                    y=float(entry["y"]),
                    kind=kind,
                    request_time=float(entry.get("request_time", 0.0)),
                )
            )
        except (KeyError, TypeError) as e:
            raise ParseError(f"{path}: customer #{pos}: missing/invalid field {e}") from e
        except ValueError as e:
            if isinstance(e, ValidationError):
                raise
            raise ParseError(f"{path}: customer #{pos}: {e}") from e
    return Instance(name=str(doc["name"]), customers=tuple(customers), meta=doc.get("meta", {}))
