"""Experiment specs and the analysis + simulation pipeline behind the CLI."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import metrics
from .graph import GraphError, GraphSpec, NetworkGraph, from_json, generate, to_json, validate
from .honest import analyze_honest, at50_from_mr
from .propagation import MiningProfile, all_pairs_hop_distance
from .selfish import (
    DEFAULT_ALPHA_GRID,
    STRATEGIES,
    SelfishConfig,
    SelfishPoint,
    curve_from_points,
    expansion_sweep,
    pool_members,
    pool_share,
)
from .sim import SimOptions, simulate_honest, simulate_selfish

FULL_SLOTS = 10_000_000
DESK_SLOTS = 1_000_000
DESK_NODES = 100


class SpecError(ValueError):
    """Invalid experiment spec; ``problems`` lists one message per bad field."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass
class ExperimentSpec:
    graph: dict | str
    pi_total: float
    adversary: dict = field(default_factory=lambda: {"kind": "honest"})
    slots: int = FULL_SLOTS
    seeds: list[int] = field(default_factory=lambda: [1])
    outputs: str = "out"
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        problems = [f"unknown field {k!r}" for k in doc if k not in known]
        for req in ("graph", "pi_total"):
            if req not in doc:
                problems.append(f"{req}: required")
        if problems:
            raise SpecError(problems)
        spec = cls(**doc)
        spec.check()
        return spec

    def check(self) -> None:
        problems = []
        if isinstance(self.graph, dict):
            try:
                GraphSpec(**self.graph)
            except (TypeError, GraphError) as exc:
                problems.append(f"graph: {exc}")
        elif not isinstance(self.graph, str):
            problems.append("graph: must be a graph spec object or a path to a graph file")
        if not isinstance(self.pi_total, (int, float)) or not 0 < self.pi_total <= 0.5:
            problems.append("pi_total: must lie in (0, 0.5]")
        kind = self.adversary.get("kind")
        if kind not in ("honest", "selfish"):
            problems.append("adversary.kind: must be 'honest' or 'selfish'")
        if kind == "selfish":
            grid = self.adversary.get("alpha_grid", list(DEFAULT_ALPHA_GRID))
            if not grid or any(not 0 < a <= 0.5 for a in grid):
                problems.append("adversary.alpha_grid: values must lie in (0, 0.5]")
            if self.adversary.get("strategy", "descending_degree") not in STRATEGIES:
                problems.append(f"adversary.strategy: must be one of {STRATEGIES}")
        if not isinstance(self.slots, int) or self.slots < 1:
            problems.append("slots: must be a positive integer")
        if not self.seeds or any(not isinstance(s, int) or not 0 <= s < 2**64 for s in self.seeds):
            problems.append("seeds: need at least one 64-bit unsigned integer")
        try:
            SimOptions(**self.options)
        except (TypeError, ValueError) as exc:
            problems.append(f"options: {exc}")
        if problems:
            raise SpecError(problems)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def hash(self) -> str:
        doc = self.to_dict()
        doc.pop("outputs")
        return metrics.spec_hash(doc)


def load_spec(path: str | Path, overrides: dict | None = None) -> ExperimentSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError([f"spec file: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise SpecError(["spec file: top level must be a JSON object"])
    for k, v in (overrides or {}).items():
        if v is not None:
            doc[k] = v
    return ExperimentSpec.from_dict(doc)


def apply_desk(spec: ExperimentSpec) -> ExperimentSpec:
    """Shrink to the CI preset: 100 nodes, 10^6 slots."""
    graph = spec.graph
    if isinstance(graph, dict):
        graph = {**graph, "n": DESK_NODES}
    doc = {**spec.to_dict(), "graph": graph, "slots": DESK_SLOTS}
    return ExperimentSpec.from_dict(doc)


def resolve_graph(spec: ExperimentSpec) -> tuple[NetworkGraph, GraphSpec | None]:
    if isinstance(spec.graph, str):
        g, gspec = from_json(Path(spec.graph).read_text())
    else:
        gspec = GraphSpec(**spec.graph)
        g = generate(gspec)
    problems = validate(g)
    if problems:
        raise GraphError("unusable graph: " + "; ".join(problems))
    return g, gspec


def _map(fn: Callable, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def default_workers() -> int:
    return int(os.environ.get("FORKWATCH_WORKERS", "1"))


def _provenance(spec: ExperimentSpec) -> dict:
    return {"spec": spec.to_dict(), "spec_hash": spec.hash, "seeds": spec.seeds, "slots": spec.slots}


# ---------------------------------------------------------------- commands


def cmd_gen_graph(spec: ExperimentSpec) -> dict[str, str]:
    g, gspec = resolve_graph(spec)
    return {"graph.json": to_json(g, gspec) + "\n"}


def cmd_analyze(spec: ExperimentSpec) -> dict[str, str]:
    g, _ = resolve_graph(spec)
    mp = MiningProfile.uniform(g.n, spec.pi_total)
    doc = _provenance(spec)
    out = {}
    if spec.adversary["kind"] == "honest":
        rep = analyze_honest(g, mp)
        doc["analytic"] = rep.to_dict()
        out["nodes.csv"] = _stamp(spec) + metrics.node_table(
            g.degrees, mp.shares.tolist(), rep.expected_win.tolist(), rep.rmg_est.tolist()
        )
    else:
        curve = _sweep(g, mp, spec)
        doc["analytic"] = curve.to_dict()
        out["curve.csv"] = _stamp(spec) + metrics.curve_table(curve.to_dict()["points"])
    out["analysis.json"] = metrics.dumps(doc)
    return out


def _sweep(g, mp, spec):
    adv = spec.adversary
    return expansion_sweep(
        g,
        mp,
        adv.get("strategy", "descending_degree"),
        adv.get("alpha_grid", list(DEFAULT_ALPHA_GRID)),
        seed=adv.get("strategy_seed"),
    )


def _honest_job(g, rates, slots, seed, options):
    return simulate_honest(g, MiningProfile(rates), slots, seed, SimOptions(**options)).to_dict()


def _selfish_job(g, rates, members, alpha, slots, seed, options):
    sc = SelfishConfig(frozenset(members), alpha)
    return simulate_selfish(g, MiningProfile(rates), sc, slots, seed, SimOptions(**options)).to_dict()


def _sim_runs(spec: ExperimentSpec, g: NetworkGraph, mp: MiningProfile, workers: int) -> list[dict]:
    """One dict per (alpha, seed); key fields make the merge order explicit."""
    if spec.adversary["kind"] == "honest":
        jobs = [(g, mp.rates, spec.slots, s, spec.options) for s in spec.seeds]
        runs = _map(_honest_job, jobs, workers)
        return [{"alpha": None, "seed": s, "report": r} for s, r in zip(spec.seeds, runs)]
    adv = spec.adversary
    keys, jobs = [], []
    for a in sorted(adv.get("alpha_grid", list(DEFAULT_ALPHA_GRID))):
        members = sorted(pool_members(g, adv.get("strategy", "descending_degree"), a, adv.get("strategy_seed")))
        share = pool_share(mp, members)
        for s in spec.seeds:
            keys.append((share, s))
            jobs.append((g, mp.rates, members, share, spec.slots, s, spec.options))
    runs = _map(_selfish_job, jobs, workers)
    return [{"alpha": a, "seed": s, "report": r} for (a, s), r in zip(keys, runs)]


def cmd_simulate(spec: ExperimentSpec, workers: int = 1) -> dict[str, str]:
    g, _ = resolve_graph(spec)
    mp = MiningProfile.uniform(g.n, spec.pi_total)
    runs = _sim_runs(spec, g, mp, workers)
    doc = _provenance(spec)
    doc["simulated"] = runs
    return {"simulation.json": metrics.dumps(doc)}


def _mean_se(values: list[float]) -> tuple[float, float | None]:
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return float(arr.mean()), None
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def cmd_experiment(spec: ExperimentSpec, workers: int = 1) -> dict[str, str]:
    g, _ = resolve_graph(spec)
    mp = MiningProfile.uniform(g.n, spec.pi_total)
    runs = _sim_runs(spec, g, mp, workers)
    doc = _provenance(spec)
    doc["simulated"] = runs
    out: dict[str, str] = {}
    if spec.adversary["kind"] == "honest":
        rep = analyze_honest(g, mp, all_pairs_hop_distance(g))
        mr_runs = np.array([r["report"]["per_node_mr"] for r in runs])
        mr_sim = mr_runs.mean(axis=0)
        shares = mp.shares
        rmg_sim = (mr_sim - shares) / shares
        fr_sim, fr_se = _mean_se([r["report"]["fork_rate_sim"] for r in runs])
        doc["analytic"] = rep.to_dict()
        doc["comparison"] = {
            "fr_ana": rep.fork_rate,
            "fr_sim": fr_sim,
            "fr_sim_se": fr_se,
            "at50_ana": rep.at50,
            "at50_sim": at50_from_mr(mr_sim, shares),
            "rmse": metrics.rmse(rep.rmg_est, rmg_sim),
            "mr_sim": mr_sim.tolist(),
            "mr_sim_se": (mr_runs.std(axis=0, ddof=1) / math.sqrt(len(runs))).tolist()
            if len(runs) > 1
            else None,
            "rmg_sim": rmg_sim.tolist(),
            "rmg_histogram_ana": metrics.rmg_histogram(rep.rmg_est),
            "rmg_histogram_sim": metrics.rmg_histogram(rmg_sim),
        }
        out["nodes.csv"] = _stamp(spec) + metrics.node_table(
            g.degrees,
            shares.tolist(),
            rep.expected_win.tolist(),
            rep.rmg_est.tolist(),
            mr_sim.tolist(),
            rmg_sim.tolist(),
        )
    else:
        curve = _sweep(g, mp, spec)
        by_alpha: dict[float, list[dict]] = {}
        for r in runs:
            by_alpha.setdefault(r["alpha"], []).append(r["report"])
        sim_points = []
        curve_rows = []
        for p in curve.points:
            reps = by_alpha[p.alpha]
            gammas = [r["gamma_sim"] for r in reps if r["gamma_sim"] is not None]
            share, _ = _mean_se([r["per_node_mr"][r["pool"]] for r in reps])
            gamma_sim = float(np.mean(gammas)) if gammas else None
            rmg_sim = (share - p.alpha) / p.alpha
            sim_points.append(SelfishPoint(p.alpha, gamma_sim or 0.0, share, rmg_sim, p.members))
            curve_rows.append({**vars(p), "gamma_sim": gamma_sim, "rmg_sim": rmg_sim})
        sim_curve = curve_from_points(sim_points, curve.strategy)
        doc["analytic"] = curve.to_dict()
        doc["comparison"] = {
            "prth_ana": curve.prth,
            "prth_sim": sim_curve.prth,
            "prth_sim_method": sim_curve.prth_method,
            "at50_ana": curve.at50,
            "at50_sim": sim_curve.at50,
            "at50_sim_method": sim_curve.at50_method,
            "prth_sim_grid": sim_curve.prth_grid,
            "at50_sim_grid": sim_curve.at50_grid,
            "rmse": metrics.rmse([p.rmg for p in curve.points], [p.rmg for p in sim_points]),
            "points": curve_rows,
        }
        out["curve.csv"] = _stamp(spec) + metrics.curve_table(curve_rows)
    out["experiment.json"] = metrics.dumps(doc)
    return out


def _stamp(spec: ExperimentSpec) -> str:
    return f"# spec_hash={spec.hash} seeds={' '.join(map(str, spec.seeds))} slots={spec.slots}\n"


def cmd_report(doc: dict, fmt: str) -> dict[str, str]:
    """Re-render a saved analysis/experiment document."""
    if fmt == "json":
        return {"report.json": metrics.dumps(doc)}
    analytic = doc.get("analytic", {})
    comparison = doc.get("comparison", {})
    stamp = f"# spec_hash={doc.get('spec_hash')} seeds={' '.join(map(str, doc.get('seeds', [])))}\n"
    if "points" in analytic:
        rows = comparison.get("points") or analytic["points"]
        if fmt == "csv":
            return {"curve.csv": stamp + metrics.curve_table(rows)}
        xs = [p["alpha"] for p in rows]
        series = {"rmg_ana": (xs, [p["rmg"] for p in rows])}
        if rows and rows[0].get("rmg_sim") is not None:
            series["rmg_sim"] = (xs, [p["rmg_sim"] for p in rows])
        series["gamma_ana"] = (xs, [p["gamma_sm"] for p in rows])
        return {"curve.svg": metrics.line_svg(series, "selfish pool RMG vs alpha")}
    rmg_ana = analytic.get("rmg_est", [])
    if fmt == "csv":
        n = len(rmg_ana)
        return {
            "nodes.csv": stamp
            + metrics.node_table(
                [None] * n,
                [None] * n,
                analytic.get("expected_win", [None] * n),
                rmg_ana,
                comparison.get("mr_sim"),
                comparison.get("rmg_sim"),
            )
        }
    out = {}
    counts, edges = metrics.rmg_histogram([x for x in rmg_ana if x is not None])
    out["rmg_ana.svg"] = metrics.histogram_svg(counts, edges, "RMG (analysis)")
    if comparison.get("rmg_sim"):
        counts, edges = metrics.rmg_histogram(comparison["rmg_sim"])
        out["rmg_sim.svg"] = metrics.histogram_svg(counts, edges, "RMG (simulation)")
    return out


def write_outputs(outdir: str | Path, files: dict[str, str]) -> list[Path]:
    """Write all files atomically; content is fully computed before any write."""
    return [metrics.write_atomic(Path(outdir) / name, text) for name, text in files.items()]


def load_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text())
