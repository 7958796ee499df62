"""Reproducible experiment runners: configs, run records, CSV/JSON artifacts."""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field, replace
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import analytic
from .cap import CapDecomposition
from .ecbp import McHistogram, mc_component_size_distribution
from .graph import sample_ecer
from .localweak import ecbp_ball_counts, ecer_ball_counts, restricted_tv
from .params import LambdaVector

VERSION = "0.1.0"

KINDS = ("ecer-convergence", "ecbp-mc", "analytic-report",
         "local-weak-check", "near-critical")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    k: int = 2
    lam: tuple[float, ...] = (2.0, 2.0)
    n_list: tuple[int, ...] = (500, 1000, 2000, 4000)
    replicas: int = 30
    samples: int = 100_000
    seed: int = 0
    depth_cap: int = 40
    node_cap: int = 10**6
    ell_max: int = 5
    eps_grid: tuple[float, ...] = analytic.DEFAULT_EPS_GRID
    d: int = 1
    workers: int = 1
    out: str | None = None

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if len(self.lam) != self.k:
            raise ValueError("lambda length must equal k")
        if any(x <= 0 for x in self.lam):
            raise ValueError("lambda entries must be positive")
        if any(n <= 0 for n in self.n_list):
            raise ValueError("n values must be positive")
        if self.replicas < 1 or self.samples < 1 or self.ell_max < 1:
            raise ValueError("replicas, samples, ell_max must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")
        if self.d > 2:
            raise ValueError("ball depth d must be <= 2")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_flat_dict(self) -> dict[str, str]:
        return {
            "kind": self.kind,
            "k": str(self.k),
            "lambda": ",".join(repr(x) for x in self.lam),
            "n": ",".join(str(n) for n in self.n_list),
            "replicas": str(self.replicas),
            "samples": str(self.samples),
            "seed": str(self.seed),
            "depth_cap": str(self.depth_cap),
            "node_cap": str(self.node_cap),
            "ell_max": str(self.ell_max),
            "eps": ",".join(repr(e) for e in self.eps_grid),
            "d": str(self.d),
            "workers": str(self.workers),
        }

    def config_hash(self) -> str:
        # workers and output location do not affect results
        items = {key: val for key, val in self.to_flat_dict().items()
                 if key != "workers"}
        blob = "\n".join(f"{key}={val}" for key, val in sorted(items.items()))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat key=value lines; blank lines and #-comments ignored."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def config_from_mapping(items: dict[str, str]) -> ExperimentConfig:
    cfg = ExperimentConfig(kind=items.get("kind", ""))
    updates: dict = {}
    if "k" in items:
        updates["k"] = int(items["k"])
    if "lambda" in items:
        updates["lam"] = tuple(float(x) for x in items["lambda"].split(","))
    if "n" in items:
        updates["n_list"] = tuple(int(x) for x in items["n"].split(","))
    for key in ("replicas", "samples", "seed", "depth_cap", "node_cap",
                "ell_max", "d", "workers"):
        if key in items:
            updates[key] = int(items[key])
    if "eps" in items:
        updates["eps_grid"] = tuple(float(x) for x in items["eps"].split(","))
    if "out" in items:
        updates["out"] = items["out"]
    cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg


@dataclass
class RunRecord:
    config: ExperimentConfig
    results: dict
    elapsed_s: float
    version: str = VERSION
    csv_lines: list[str] = field(default_factory=list)
    csv_name: str = "results.csv"
    checks_passed: bool = True

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_flat_dict(),
            "config_hash": self.config.config_hash(),
            "version": self.version,
            "elapsed_s": self.elapsed_s,
            "checks_passed": self.checks_passed,
            "results": self.results,
        }

    def write(self, out_dir: str | Path | None = None) -> Path:
        base = Path(out_dir or self.config.out or ".")
        run_dir = base / f"{self.config.kind}-{self.config.config_hash()}"
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "record.json").write_text(
            json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n")
        if self.csv_lines:
            (run_dir / self.csv_name).write_text("\n".join(self.csv_lines) + "\n")
        return run_dir


def _replica_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(count)


def _parallel_map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with get_context("spawn").Pool(workers) as pool:
        return pool.map(fn, tasks)


# ---------------------------------------------------------------------------
# ECER convergence
# ---------------------------------------------------------------------------

def _convergence_task(args):
    lam, n, rep, seed_seq, ell_max = args
    rng = np.random.default_rng(seed_seq)
    g = sample_ecer(n, n, LambdaVector(lam), rng)
    dec = CapDecomposition.from_graph(g)
    f_ells = [float(dec.component_size_density(ell))
              for ell in range(1, ell_max + 1)]
    return n, rep, f_ells, float(dec.max_fraction)


def run_ecer_convergence(cfg: ExperimentConfig) -> RunRecord:
    cfg.validate()
    start = time.perf_counter()
    lam = LambdaVector(cfg.lam)
    target_f_inf = analytic.f_infinity_inclusion_exclusion(lam)
    if cfg.k == 2:
        targets = [analytic.two_color_f_ell(lam[0], lam[1], ell)
                   for ell in range(1, cfg.ell_max + 1)]
    else:
        targets = [math.nan] * cfg.ell_max

    seeds = _replica_seeds(cfg.seed, len(cfg.n_list) * cfg.replicas)
    tasks = []
    pos = 0
    for n in cfg.n_list:
        for rep in range(cfg.replicas):
            tasks.append((tuple(lam), n, rep, seeds[pos], cfg.ell_max))
            pos += 1
    rows = _parallel_map(_convergence_task, tasks, cfg.workers)

    csv_lines = ["# schema: caperc-convergence-v1",
                 "n,replica,ell,f_ell,target_f_ell,max_fraction,target_f_inf"]
    per_n_dev: dict[int, list[float]] = {n: [] for n in cfg.n_list}
    per_n_f1: dict[int, list[float]] = {n: [] for n in cfg.n_list}
    for n, rep, f_ells, max_frac in rows:
        per_n_dev[n].append(abs(max_frac - target_f_inf))
        per_n_f1[n].append(f_ells[0])
        for ell in range(1, cfg.ell_max + 1):
            csv_lines.append(
                f"{n},{rep},{ell},{f_ells[ell - 1]!r},{targets[ell - 1]!r},"
                f"{max_frac!r},{target_f_inf!r}")
    results = {
        "target_f_inf": target_f_inf,
        "target_f_ell": targets,
        "mean_abs_max_fraction_deviation": {
            str(n): sum(vals) / len(vals) for n, vals in per_n_dev.items()},
        "mean_f1": {str(n): sum(vals) / len(vals)
                    for n, vals in per_n_f1.items()},
    }
    return RunRecord(cfg, results, time.perf_counter() - start,
                     csv_lines=csv_lines, csv_name="convergence.csv")


# ---------------------------------------------------------------------------
# ECBP Monte Carlo
# ---------------------------------------------------------------------------

def _ecbp_task(args):
    lam, samples, seed_seq, ell_max, depth_cap, node_cap = args
    rng = np.random.default_rng(seed_seq)
    hist = mc_component_size_distribution(
        LambdaVector(lam), samples, ell_max, rng, depth_cap, node_cap)
    return hist.finite_counts, hist.censored_counts


def run_ecbp_mc(cfg: ExperimentConfig) -> RunRecord:
    cfg.validate()
    start = time.perf_counter()
    chunks = min(cfg.workers, cfg.samples) if cfg.workers > 1 else 1
    per_chunk = [cfg.samples // chunks] * chunks
    per_chunk[0] += cfg.samples - sum(per_chunk)
    seeds = _replica_seeds(cfg.seed, chunks)
    tasks = [
        (cfg.lam, per_chunk[i], seeds[i], cfg.ell_max,
         cfg.depth_cap, cfg.node_cap)
        for i in range(chunks)
    ]
    parts = _parallel_map(_ecbp_task, tasks, cfg.workers)
    finite: dict[int, int] = {}
    censored: dict[str, int] = {}
    for fin, cen in parts:
        for ell, c in fin.items():
            finite[ell] = finite.get(ell, 0) + c
        for reason, c in cen.items():
            censored[reason] = censored.get(reason, 0) + c
    hist = McHistogram(cfg.samples, finite, censored)
    results = {
        "lambda": list(cfg.lam),
        "samples": cfg.samples,
        "caps": {"depth_cap": cfg.depth_cap, "node_cap": cfg.node_cap},
        "seed": cfg.seed,
        "histogram": hist.to_json_dict()["histogram"],
        "frequencies": hist.dense(cfg.ell_max),
        "censored_mass": hist.censored_mass,
        "stderrs": [hist.stderr(ell) for ell in range(1, cfg.ell_max + 1)],
        "censored_stderr": hist.censored_stderr(),
    }
    record = RunRecord(cfg, results, time.perf_counter() - start)
    total = sum(finite.values()) + sum(censored.values())
    record.checks_passed = total == cfg.samples
    return record


# ---------------------------------------------------------------------------
# Analytic report
# ---------------------------------------------------------------------------

def _mask_name(mask: int, k: int) -> str:
    return "{" + ",".join(str(i) for i in range(k) if (mask >> i) & 1) + "}"


def run_analytic_report(cfg: ExperimentConfig) -> RunRecord:
    cfg.validate()
    start = time.perf_counter()
    lam = LambdaVector(cfg.lam)
    regime = analytic.classify_lambda(lam)
    table = analytic.solve_p_system(lam)
    phat = analytic.extended_type_distribution(lam, table)
    results: dict = {
        "lambda": list(cfg.lam),
        "regime": {
            "fully_supercritical": regime.fully_supercritical,
            "fully_critical_subcritical": regime.fully_critical_subcritical,
            "assumption_holds": regime.assumption_holds,
            "supercritical_indices": sorted(regime.supercritical_indices),
        },
        "theta_avoid": [analytic.survival_theta(lam.lambda_without(i))
                        for i in range(cfg.k)],
        "p_table": {_mask_name(m, cfg.k): table.p[m]
                    for m in sorted(table.p)},
        "p_table_relevant": table.relevant,
        "p_table_max_residual": table.max_residual,
        "phat": {format(g, f"0{cfg.k}b")[::-1]: v
                 for g, v in sorted(phat.items())},
        "f_inf_inclusion_exclusion": analytic.f_infinity_inclusion_exclusion(lam),
    }
    checks = table.max_residual <= 1e-10 and abs(sum(phat.values()) - 1.0) < 1e-9
    if regime.fully_supercritical and regime.assumption_holds:
        gf = analytic.f_infinity_generating_function(lam)
        results["f_inf_generating_function"] = gf
        checks = checks and abs(
            gf - results["f_inf_inclusion_exclusion"]) <= 1e-9
    if cfg.k == 2:
        results["f_ell"] = [analytic.two_color_f_ell(lam[0], lam[1], ell)
                            for ell in range(1, cfg.ell_max + 1)]
    record = RunRecord(cfg, results, time.perf_counter() - start)
    record.checks_passed = bool(checks)
    return record


# ---------------------------------------------------------------------------
# Local weak convergence check
# ---------------------------------------------------------------------------

def _local_weak_task(args):
    lam, n, seed_seq, d = args
    rng = np.random.default_rng(seed_seq)
    g = sample_ecer(n, n, LambdaVector(lam), rng)
    counts, out = ecer_ball_counts(g, d)
    return dict(counts), out


def run_local_weak_check(cfg: ExperimentConfig) -> RunRecord:
    cfg.validate()
    start = time.perf_counter()
    lam = LambdaVector(cfg.lam)
    n = cfg.n_list[-1]
    seeds = _replica_seeds(cfg.seed, cfg.replicas + 1)
    tasks = [(cfg.lam, n, seeds[i], cfg.d)
             for i in range(cfg.replicas)]
    parts = _parallel_map(_local_weak_task, tasks, cfg.workers)
    from collections import Counter
    ecer_counts: Counter = Counter()
    ecer_out = 0
    for counts, out in parts:
        ecer_counts.update(counts)
        ecer_out += out
    ecer_total = cfg.replicas * n
    rng = np.random.default_rng(seeds[-1])
    ecbp_counts, ecbp_out = ecbp_ball_counts(lam, cfg.d, cfg.samples, rng)
    tv = restricted_tv(ecer_counts, ecer_total, ecbp_counts, cfg.samples)
    from .localweak import ISOLATED_ROOT_KEY
    results = {
        "n": n,
        "d": cfg.d,
        "replicas": cfg.replicas,
        "ecbp_samples": cfg.samples,
        "restricted_tv": tv,
        "ecer_out_of_catalog": ecer_out / ecer_total,
        "ecbp_out_of_catalog": ecbp_out / cfg.samples,
        "ecer_isolated_root_freq":
            ecer_counts.get(ISOLATED_ROOT_KEY, 0) / ecer_total,
        "ecbp_isolated_root_freq":
            ecbp_counts.get(ISOLATED_ROOT_KEY, 0) / cfg.samples,
        "isolated_root_target": math.exp(-lam.lambda_uc),
        "catalog_size": len(set(ecer_counts) | set(ecbp_counts)),
    }
    record = RunRecord(cfg, results, time.perf_counter() - start)
    record.checks_passed = (
        ecer_counts.total() / ecer_total <= 1.0 + 1e-12
        and ecbp_counts.total() / cfg.samples <= 1.0 + 1e-12)
    return record


# ---------------------------------------------------------------------------
# Near-critical constant
# ---------------------------------------------------------------------------

def run_near_critical(cfg: ExperimentConfig) -> RunRecord:
    cfg.validate()
    start = time.perf_counter()
    estimate, diag = analytic.near_critical_constant(cfg.k, cfg.eps_grid)
    results = {
        "k": cfg.k,
        "estimate": estimate,
        "eps_grid": list(diag.eps_grid),
        "ratios": list(diag.ratios),
        "pair_extrapolants": list(diag.pair_extrapolants),
        "monotone": diag.monotone,
    }
    record = RunRecord(cfg, results, time.perf_counter() - start)
    record.checks_passed = diag.monotone
    return record


RUNNERS = {
    "ecer-convergence": run_ecer_convergence,
    "ecbp-mc": run_ecbp_mc,
    "analytic-report": run_analytic_report,
    "local-weak-check": run_local_weak_check,
    "near-critical": run_near_critical,
}
