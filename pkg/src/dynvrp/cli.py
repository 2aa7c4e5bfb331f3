"""Command-line entry point: generate instances, run experiments, aggregate
metrics, serve the decision service.

All randomness flows from one seeding scheme: every experiment cell derives
its seed by hashing the base seed with the cell coordinates (instance name,
vehicle count, strategy, replication) under a versioned scheme tag, so reruns
and partial reruns reproduce byte-identical results. Timestamps never enter
the deterministic outputs; they live in a separate meta file.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .evolution import EvoParams
from .instance import GeneratorConfig, Instance, generate_instance, load_instance, save_instance
from .metrics import Front, chopped_hv_comparison, f1_gap, rank_sum_test
from .orchestrator import AutoD, RunConfig, run_clairvoyant, run_dynamic

SEED_SCHEME = "dynvrp-seeds-v1"

CORPUS_CLUSTER_COUNTS = (2, 3, 5, 10)


def cell_seed(seed_base: int, *coords) -> int:
    """Stable per-cell seed: sha256 over the scheme tag, base, coordinates."""
    text = "|".join([SEED_SCHEME, str(seed_base), *map(str, coords)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


@dataclass
class ExperimentSpec:
    instances: list[str]
    vehicle_counts: list[int] = field(default_factory=lambda: [1])
    d_values: list[float] = field(default_factory=lambda: [0.5])
    replications: int = 1
    clairvoyant_budget: int = 200_000
    clairvoyant_replications: int = 1
    output_dir: str = "results"
    seed_base: int = 1
    n_eras: int = 7
    delta: float | str = "auto"
    mu: int = 100
    evals_per_era: int = 65_000
    p_swap: float = 0.6
    n_swap: int = 10

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        missing = [p for p in self.instances if not Path(p).exists()]
        if missing:
            raise ConfigurationError(f"instance files not found: {missing}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentSpec":
        obj = json.loads(Path(path).read_text())
        return cls(**obj)

    def evo(self) -> EvoParams:
        return EvoParams(
            mu=self.mu,
            p_swap=self.p_swap,
            n_swap=self.n_swap,
            evals_per_era=self.evals_per_era,
        )


# -- generate ----------------------------------------------------------------


def _parse_topology(text: str) -> tuple[str, int]:
    if text == "uniform":
        return "uniform", 0
    if text.startswith("clustered:"):
        return "clustered", int(text.split(":", 1)[1])
    raise argparse.ArgumentTypeError(
        f"topology must be 'uniform' or 'clustered:<k>', got {text!r}"
    )


def cmd_generate(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    if args.corpus:
        configs = _corpus_configs(args.n, args.seed, args.horizon, args.box)
    else:
        topology, n_clusters = args.topology
        configs = [
            GeneratorConfig(
                n_total=args.n,
                topology=topology,
                n_clusters=n_clusters,
                dynamic_ratio=args.dynamic,
                request_horizon=args.horizon,
                seed=args.seed,
                bounding_box=args.box,
            )
        ]
    for cfg in configs:
        inst = generate_instance(cfg)
        path = out_dir / f"{inst.name}.json"
        save_instance(inst, path)
        manifest.append(
            {"file": path.name, "n": inst.n, "dynamic": inst.n_dynamic, "mandatory": inst.n_mandatory}
        )
    print(json.dumps({"generated": manifest}, indent=1))
    return 0


def _corpus_configs(n_total: int, seed_base: int, horizon: float, box: float) -> list[GeneratorConfig]:
    """Benchmark corpus layout: 10 uniform + 10 per cluster count, half at each
    dynamic ratio."""
    configs = []
    topologies: list[tuple[str, int]] = [("uniform", 0)]
    topologies += [("clustered", k) for k in CORPUS_CLUSTER_COUNTS]
    for topology, n_clusters in topologies:
        for i in range(10):
            ratio = 0.5 if i < 5 else 0.75
            configs.append(
                GeneratorConfig(
                    n_total=n_total,
                    topology=topology,
                    n_clusters=n_clusters,
                    dynamic_ratio=ratio,
                    request_horizon=horizon,
                    seed=cell_seed(seed_base, "corpus", topology, n_clusters, i),
                    bounding_box=box,
                )
            )
    return configs


# -- run -----------------------------------------------------------------------


@dataclass
class CellResult:
    kind: str  # "dynamic" | "clairvoyant"
    instance: str
    n_vehicles: int
    d: float | None
    replication: int
    seed: int
    log_file: str | None
    front: list[tuple[float, int]]
    f2_bound: int | None
    final_choice: tuple[float, int] | None
    error: str | None = None


def _run_dynamic_cell(job: tuple) -> CellResult:
    inst_path, n_v, d, rep, spec_dict = job
    spec = ExperimentSpec(**spec_dict)
    inst = load_instance(inst_path)
    seed = cell_seed(spec.seed_base, inst.name, "dynamic", n_v, d, rep)
    run_id = f"{inst.name}_v{n_v}_d{d}_r{rep}"
    cfg = RunConfig(
        n_vehicles=n_v,
        n_eras=spec.n_eras,
        delta=spec.delta,
        dm_policy=AutoD(d),
        evo=spec.evo(),
        seed=seed,
    )
    try:
        records = run_dynamic(inst, cfg)
    except Exception as e:  # noqa: BLE001 - cell failures must not kill the batch
        return CellResult(
            "dynamic", inst.name, n_v, d, rep, seed, None, [], None, None, f"{e}"
        )
    log_dir = Path(spec.output_dir) / "runs"
    log_dir.mkdir(parents=True, exist_ok=True)
    log_path = log_dir / f"{run_id}.jsonl"
    tmp = log_path.with_suffix(".jsonl.tmp")
    with tmp.open("w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json_obj(run_id)) + "\n")
    tmp.replace(log_path)
    final = records[-1]
    return CellResult(
        kind="dynamic",
        instance=inst.name,
        n_vehicles=n_v,
        d=d,
        replication=rep,
        seed=seed,
        log_file=str(log_path),
        front=final.front.points,
        f2_bound=final.upper_bound_f2,
        final_choice=final.chosen_objectives,
    )


def _run_clairvoyant_cell(job: tuple) -> CellResult:
    inst_path, n_v, rep, spec_dict = job
    spec = ExperimentSpec(**spec_dict)
    inst = load_instance(inst_path)
    seed = cell_seed(spec.seed_base, inst.name, "clairvoyant", n_v, rep)
    cfg = RunConfig(
        n_vehicles=n_v,
        n_eras=1,
        delta=spec.delta if spec.delta != "auto" else 1.0,
        evo=spec.evo(),
        seed=seed,
    )
    try:
        front = run_clairvoyant(inst, cfg, spec.clairvoyant_budget)
    except Exception as e:  # noqa: BLE001
        return CellResult(
            "clairvoyant", inst.name, n_v, None, rep, seed, None, [], None, None, f"{e}"
        )
    out_dir = Path(spec.output_dir) / "clairvoyant"
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{inst.name}_v{n_v}_r{rep}.json"
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(
        json.dumps(
            {
                "instance": inst.name,
                "n_vehicles": n_v,
                "replication": rep,
                "front": [{"f1": p[0], "f2": p[1]} for p in front.points],
            },
            indent=1,
        )
    )
    tmp.replace(path)
    return CellResult(
        kind="clairvoyant",
        instance=inst.name,
        n_vehicles=n_v,
        d=None,
        replication=rep,
        seed=seed,
        log_file=str(path),
        front=front.points,
        f2_bound=None,
        final_choice=None,
    )


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> dict:
    """Execute the experiment matrix and write logs, CSVs, and a summary."""
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec_dict = {k: getattr(spec, k) for k in spec.__dataclass_fields__}

    dyn_jobs = [
        (path, n_v, d, rep, spec_dict)
        for path in spec.instances
        for n_v in spec.vehicle_counts
        for d in spec.d_values
        for rep in range(spec.replications)
    ]
    clair_jobs = [
        (path, n_v, rep, spec_dict)
        for path in spec.instances
        for n_v in spec.vehicle_counts
        for rep in range(spec.clairvoyant_replications)
    ]

    if workers is None:
        workers = int(os.environ.get("DYNVRP_WORKERS", "0")) or min(8, os.cpu_count() or 1)
    results: list[CellResult] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results.extend(pool.map(_run_dynamic_cell, dyn_jobs))
            results.extend(pool.map(_run_clairvoyant_cell, clair_jobs))
    else:
        results.extend(map(_run_dynamic_cell, dyn_jobs))
        results.extend(map(_run_clairvoyant_cell, clair_jobs))

    failures = [r for r in results if r.error]
    summary = aggregate_metrics(results, out)
    summary["seed_scheme"] = SEED_SCHEME
    summary["failed_cells"] = [
        {"instance": r.instance, "kind": r.kind, "n_vehicles": r.n_vehicles, "error": r.error}
        for r in failures
    ]
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    (out / "meta.json").write_text(
        json.dumps({"finished_at": time.strftime("%Y-%m-%dT%H:%M:%S"), "workers": workers})
    )
    if failures and len(failures) == len(results):
        raise RuntimeError("all experiment cells failed")
    return summary


def aggregate_metrics(results: list[CellResult], out: Path) -> dict:
    """Write hv.csv / f1_gap.csv / choices.csv; return the summary object."""
    ok = [r for r in results if not r.error]
    dynamic = [r for r in ok if r.kind == "dynamic"]
    clairvoyant = [r for r in ok if r.kind == "clairvoyant"]

    hv_rows = []
    gap_rows = []
    by_instance: dict[str, list[CellResult]] = {}
    for r in dynamic:
        by_instance.setdefault(r.instance, []).append(r)

    for inst_name, runs in sorted(by_instance.items()):
        clair = [c for c in clairvoyant if c.instance == inst_name]
        cells = sorted({(r.d, r.n_vehicles) for r in runs})
        for d, n_v in cells:
            cell_runs = [r for r in runs if r.d == d and r.n_vehicles == n_v]
            cell_clair = [c for c in clair if c.n_vehicles == n_v]
            if not cell_clair:
                continue
            dynamic_fronts = [
                Front(list(r.front), provenance=f"r{r.replication}", f2_bound=r.f2_bound)
                for r in cell_runs
            ]
            clairvoyant_fronts = [
                Front(list(c.front), provenance=f"r{c.replication}") for c in cell_clair
            ]
            comparison = chopped_hv_comparison(dynamic_fronts, clairvoyant_fronts)
            for row, src in zip(comparison.rows, cell_runs + cell_clair):
                hv_rows.append(
                    {
                        "instance": inst_name,
                        "algorithm": row.algorithm,
                        "n_vehicles": src.n_vehicles,
                        "d": "" if src.d is None else src.d,
                        "run": src.replication,
                        "hv": f"{row.hv:.6f}",
                        "indicator_hv": f"{row.hv_indicator:.6f}",
                    }
                )
        # tour-length gap of every dynamic run against the pooled clairvoyant front
        for r in runs:
            ref_points = [p for c in clair if c.n_vehicles == r.n_vehicles for p in c.front]
            if not ref_points:
                continue
            gaps, skipped = f1_gap(
                Front(list(r.front)), Front(ref_points)
            )
            for f2_level, delta_f1 in gaps:
                gap_rows.append(
                    {
                        "instance": inst_name,
                        "n_vehicles": r.n_vehicles,
                        "d": r.d,
                        "run": r.replication,
                        "f2_level": f2_level,
                        "delta_f1": f"{delta_f1:.6f}",
                        "skipped_points": skipped,
                    }
                )

    _write_csv(out / "hv.csv", hv_rows)
    _write_csv(out / "f1_gap.csv", gap_rows)
    _write_csv(
        out / "choices.csv",
        [
            {
                "instance": r.instance,
                "n_vehicles": r.n_vehicles,
                "d": r.d,
                "run": r.replication,
                "final_f1": f"{r.final_choice[0]:.6f}",
                "final_f2": r.final_choice[1],
            }
            for r in dynamic
            if r.final_choice
        ],
    )

    # rank-sum comparisons between vehicle counts on dynamic hv samples
    pvalues = []
    samples: dict[int, list[float]] = {}
    for row in hv_rows:
        if row["algorithm"] != "dynamic":
            continue
        samples.setdefault(int(row["n_vehicles"]), []).append(float(row["hv"]))
    counts = sorted(samples)
    for a, b in zip(counts, counts[1:]):
        if samples[a] and samples[b]:
            u, p = rank_sum_test(samples[a], samples[b])
            pvalues.append({"pair": f"{a}v{b}", "u": u, "p": p})
    _write_csv(
        out / "pvalues.csv",
        [{"pair": e["pair"], "u": f"{e['u']:.1f}", "p": f"{e['p']:.6g}"} for e in pvalues],
    )
    return {
        "cells": len(results),
        "dynamic_runs": len(dynamic),
        "clairvoyant_runs": len(clairvoyant),
        "rank_sum": pvalues,
    }


def _write_csv(path: Path, rows: list[dict]) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", newline="") as fh:
        if rows:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    tmp.replace(path)


def cmd_run(args: argparse.Namespace) -> int:
    if args.spec:
        spec = ExperimentSpec.from_file(args.spec)
    else:
        if not args.instances:
            print("error: either --spec or --instances is required", file=sys.stderr)
            return 2
        spec = ExperimentSpec(
            instances=args.instances,
            vehicle_counts=args.vehicles,
            d_values=args.d,
            replications=args.replications,
            clairvoyant_budget=args.clairvoyant_budget,
            output_dir=args.out,
            seed_base=args.seed_base,
            n_eras=args.eras,
            mu=args.mu,
            evals_per_era=args.evals,
        )
    summary = run_experiment(spec, workers=args.workers)
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    """Recompute metric CSVs from previously written run logs."""
    out = Path(args.out)
    runs_dir = out / "runs"
    clair_dir = out / "clairvoyant"
    if not runs_dir.exists():
        print(f"error: {runs_dir} does not exist", file=sys.stderr)
        return 2
    results = []
    for log in sorted(runs_dir.glob("*.jsonl")):
        lines = [json.loads(line) for line in log.read_text().splitlines() if line]
        final = lines[-1]
        name, rest = final["run_id"].split("_v", 1)
        n_v, rest = rest.split("_d", 1)
        d, rep = rest.split("_r", 1)
        results.append(
            CellResult(
                kind="dynamic",
                instance=name,
                n_vehicles=int(n_v),
                d=float(d),
                replication=int(rep),
                seed=0,
                log_file=str(log),
                front=[(p["f1"], p["f2"]) for p in final["front"]],
                f2_bound=final["upper_bound_f2"],
                final_choice=(
                    final["chosen_objectives"]["f1"],
                    final["chosen_objectives"]["f2"],
                ),
            )
        )
    if clair_dir.exists():
        for path in sorted(clair_dir.glob("*.json")):
            doc = json.loads(path.read_text())
            results.append(
                CellResult(
                    kind="clairvoyant",
                    instance=doc["instance"],
                    n_vehicles=doc["n_vehicles"],
                    d=None,
                    replication=doc["replication"],
                    seed=0,
                    log_file=str(path),
                    front=[(p["f1"], p["f2"]) for p in doc["front"]],
                    f2_bound=None,
                    final_choice=None,
                )
            )
    summary = aggregate_metrics(results, out)
    print(json.dumps(summary, indent=1, sort_keys=True))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .session import SessionManager, create_app

    manager = SessionManager(snapshot_dir=args.snapshots)
    app = create_app(manager, instance_dir=args.instances)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# -- argument parsing -----------------------------------------------------------


def _ratio(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"ratio must lie in [0, 1], got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynvrp",
        description="Dynamic multi-vehicle bi-objective routing experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate benchmark instances")
    g.add_argument("--n", type=int, default=98, help="customer count excluding depots")
    g.add_argument("--topology", type=_parse_topology, default=("uniform", 0))
    g.add_argument("--dynamic", type=_ratio, default=0.5)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--horizon", type=float, default=1000.0)
    g.add_argument("--box", type=float, default=1000.0)
    g.add_argument("--out", default="instances")
    g.add_argument("--corpus", action="store_true", help="emit the full 50-instance layout")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run an experiment matrix")
    r.add_argument("--spec", help="JSON experiment spec file")
    r.add_argument("--instances", nargs="*", help="instance files")
    r.add_argument("--vehicles", type=int, nargs="*", default=[1])
    r.add_argument("--d", type=_ratio, nargs="*", default=[0.5])
    r.add_argument("--replications", type=int, default=1)
    r.add_argument("--clairvoyant-budget", type=int, default=200_000)
    r.add_argument("--eras", type=int, default=7)
    r.add_argument("--mu", type=int, default=100)
    r.add_argument("--evals", type=int, default=65_000)
    r.add_argument("--seed-base", type=int, default=1)
    r.add_argument("--out", default="results")
    r.add_argument("--workers", type=int, default=None)
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("metrics", help="recompute metrics from run logs")
    m.add_argument("--out", default="results", help="experiment output directory")
    m.set_defaults(func=cmd_metrics)

    s = sub.add_parser("serve", help="start the interactive decision service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8711)
    s.add_argument("--instances", default=".", help="directory with instance files")
    s.add_argument("--snapshots", default=None, help="session snapshot directory")
    s.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as e:
        parser.error(str(e))  # exits with code 2
        return 2


if __name__ == "__main__":
    sys.exit(main())
