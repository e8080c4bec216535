"""Monte-Carlo experiment harness: estimator comparisons on locality grids
and solver convergence traces, with deterministic seeding and CSV output."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .dc import dc_overlap
from .estimators import (MleProblem, NonexistenceError, SolverConfig, loss,
                         solve_mle, spectral_estimate)
from .graphs import GraphError, GridSpec, generate_grid, partition_grid
from .metrics import error_report, locality_bound
from .model import ComparisonData, make_scores, sample_comparisons

EXPERIMENTS = ("mle-vs-spectral", "mle-vs-dcoverlap", "convergence")
_SCORE_KIND_IDS = {"sine": 1, "linear": 2, "linear2d": 3}


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep definition for one experiment family.

    The sweep is the cartesian product of n_list x r_list x p_list x L_list
    x score_kinds; each point runs ``trials`` seeded trials.
    """

    experiment: str
    kind: str = "grid1d"
    n_list: tuple = (60, 120, 240)
    r_list: tuple = (10,)
    p_list: tuple = (0.8,)
    L_list: tuple = (100,)
    score_kinds: tuple = ("sine", "linear")
    trials: int = 20
    base_seed: int = 2024
    methods: tuple | None = None
    out_dir: str = "results"
    gap_tol_factor: float = 1e-6  # convergence experiment threshold

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")
        for name in ("n_list", "r_list", "p_list", "L_list", "score_kinds"):
            seq = tuple(getattr(self, name))
            if not seq:
                raise ValueError(f"{name} must be non-empty")
            object.__setattr__(self, name, seq)
        if self.methods is not None:
            object.__setattr__(self, "methods", tuple(self.methods))

    def resolved_methods(self) -> tuple:
        if self.methods is not None:
            return self.methods
        if self.experiment == "mle-vs-spectral":
            return ("mle", "spectral")
        if self.experiment == "mle-vs-dcoverlap":
            return ("mle", "dc-overlap")
        return ("precond-oracle", "precond-lg", "pgd", "cd", "gd-small", "gd-large")

    def to_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(asdict(self), f, indent=2)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as f:
            raw = json.load(f)
        return cls(**raw)


def default_config(experiment: str, **overrides) -> ExperimentConfig:
    """Desk-scale defaults for each experiment family."""
    if experiment == "mle-vs-spectral":
        base = ExperimentConfig(experiment=experiment, n_list=(60, 120, 240),
                                r_list=(10,), p_list=(0.8,), L_list=(100,),
                                score_kinds=("sine", "linear"), trials=20)
    elif experiment == "mle-vs-dcoverlap":
        base = ExperimentConfig(experiment=experiment, n_list=(256,),
                                r_list=(16,), p_list=(0.5,), L_list=(10, 30, 100),
                                score_kinds=("linear",), trials=20)
    elif experiment == "convergence":
        base = ExperimentConfig(experiment=experiment, n_list=(200,),
                                r_list=(10,), p_list=(0.8,), L_list=(100,),
                                score_kinds=("linear",), trials=5)
    else:
        raise ValueError(f"unknown experiment {experiment!r}")
    return replace(base, **overrides) if overrides else base


@dataclass
class TrialRecord:
    experiment: str
    kind: str
    n: int
    r: int
    p: float
    L: int
    score_kind: str
    trial: int
    seed: int
    method: str
    linf: float = math.nan
    max_pairwise: float = math.nan
    l2: float = math.nan
    pi_rel_err: float = math.nan
    iterations: int = -1
    seconds: float = 0.0
    failed: bool = False
    note: str = ""


_FIELDS = ("experiment", "kind", "n", "r", "p", "L", "score_kind", "trial",
           "seed", "method", "linf", "max_pairwise", "l2", "pi_rel_err",
           "iterations", "seconds", "failed", "note")


def records_to_csv(records: list[TrialRecord], path) -> None:
    with open(path, "w") as f:
        f.write(",".join(_FIELDS) + "\n")
        for rec in records:
            row = [str(getattr(rec, name)) for name in _FIELDS]
            f.write(",".join(row) + "\n")


def trial_seed(base_seed: int, trial: int) -> int:
    return base_seed ^ trial


def _trial_rng(config: ExperimentConfig, coords, trial: int) -> np.random.Generator:
    n, r, p, L, score_kind = coords
    seed = trial_seed(config.base_seed, trial)
    return np.random.default_rng(
        [seed, n, r, int(round(p * 10 ** 6)), L, _SCORE_KIND_IDS[score_kind]])


def small_step(kind: str, r: int, p: float, L: int) -> float:
    """Safe vanilla gradient step for locality grids: 1/(r p L) or 1/(r^2 p L)."""
    if kind == "grid1d":
        return 1.0 / (r * p * L)
    return 1.0 / (r * r * p * L)


def _build_instance(config: ExperimentConfig, coords, rng):
    n, r, p, L, score_kind = coords
    spec = GridSpec(kind=config.kind, n=n, r=r, p=p)
    graph = generate_grid(spec, L=L, rng=rng)
    if not graph.connected:
        raise GraphError("sampled grid came out disconnected")
    truth = make_scores(score_kind, n, r)
    data = sample_comparisons(graph, truth, rng)
    return spec, graph, truth, data


def iterations_to_gap(losses, loss_star: float, gap: float) -> int:
    """First trace index with loss - loss_star <= gap, or -1 if never."""
    for t, value in enumerate(losses):
        if math.isfinite(value) and value - loss_star <= gap:
            return t
    return -1


def _comparison_trial(config: ExperimentConfig, coords, trial: int) -> list[TrialRecord]:
    n, r, p, L, score_kind = coords
    base = dict(experiment=config.experiment, kind=config.kind, n=n, r=r, p=p,
                L=L, score_kind=score_kind, trial=trial,
                seed=trial_seed(config.base_seed, trial))
    rng = _trial_rng(config, coords, trial)
    records = []
    try:
        spec, graph, truth, data = _build_instance(config, coords, rng)
    except (GraphError, ValueError) as exc:
        for method in config.resolved_methods():
            records.append(TrialRecord(**base, method=method, failed=True,
                                       note=f"instance: {exc}"))
        return records
    problem = MleProblem(graph, data)
    for method in config.resolved_methods():
        start = time.perf_counter()
        rec = TrialRecord(**base, method=method)
        try:
            if method == "mle":
                scores, trace = solve_mle(problem, SolverConfig(method="precond_gd"))
                rec.iterations = len(trace.iterations) - 1
            elif method == "spectral":
                result = spectral_estimate(graph, data)
                scores = result.theta
                rec.iterations = result.iterations
                pi_star = np.exp(truth.values)
                pi_star /= pi_star.sum()
                rec.pi_rel_err = float(np.abs(result.pi - pi_star).max()
                                       / np.abs(pi_star).max())
                if result.underflow:
                    rec.failed = True
                    rec.note = "stationary distribution underflow"
                elif not result.converged:
                    rec.note = ("small stationary entries not resolved "
                                "within the iteration budget")
            elif method == "dc-overlap":
                partition, _ = partition_grid(graph, spec, "overlapping")
                scores, _, _ = dc_overlap(graph, data, partition)
            else:
                raise ValueError(f"unknown method {method!r} for {config.experiment}")
            report = error_report(scores, truth)
            rec.linf = report.linf
            rec.max_pairwise = report.max_pairwise
            rec.l2 = report.l2
        except (NonexistenceError, GraphError, ValueError, RuntimeError) as exc:
            rec.failed = True
            rec.note = str(exc)
        rec.seconds = time.perf_counter() - start
        records.append(rec)
    return records


def _convergence_trial(config: ExperimentConfig, coords, trial: int) -> list[TrialRecord]:
    n, r, p, L, score_kind = coords
    base = dict(experiment=config.experiment, kind=config.kind, n=n, r=r, p=p,
                L=L, score_kind=score_kind, trial=trial,
                seed=trial_seed(config.base_seed, trial))
    rng = _trial_rng(config, coords, trial)
    records = []
    try:
        spec, graph, truth, data = _build_instance(config, coords, rng)
        problem = MleProblem(graph, data)
        ref, _ = solve_mle(problem, SolverConfig(
            method="precond_gd", preconditioner="oracle_Lz", oracle_scores=truth,
            grad_tol_factor=1e-13, max_iter=5000))
    except (GraphError, ValueError, NonexistenceError) as exc:
        for method in config.resolved_methods():
            records.append(TrialRecord(**base, method=method, failed=True,
                                       note=f"instance: {exc}"))
        return records
    loss_star = loss(problem, ref.values)
    gap = config.gap_tol_factor * problem.total_samples
    eta_small = small_step(config.kind, r, p, L)

    def method_config(method: str) -> SolverConfig:
        if method == "precond-oracle":
            return SolverConfig(method="precond_gd", preconditioner="oracle_Lz",
                                oracle_scores=truth, reference=ref.values)
        if method == "precond-lg":
            return SolverConfig(method="precond_gd", preconditioner="quarter_LG",
                                reference=ref.values)
        if method == "pgd":
            partition, _ = partition_grid(graph, spec, "overlapping")
            return SolverConfig(method="pgd", partition=partition,
                                step_size=eta_small, reference=ref.values)
        if method == "cd":
            return SolverConfig(method="cd", max_iter=500, reference=ref.values)
        if method == "gd-small":
            return SolverConfig(method="gd", step_size=eta_small,
                                max_iter=50_000, reference=ref.values)
        if method == "gd-large":
            return SolverConfig(method="gd", step_size=5.0 * eta_small,
                                max_iter=2_000, reference=ref.values)
        raise ValueError(f"unknown method {method!r} for convergence")

    os.makedirs(config.out_dir, exist_ok=True)
    for method in config.resolved_methods():
        start = time.perf_counter()
        rec = TrialRecord(**base, method=method)
        try:
            scores, trace = solve_mle(problem, method_config(method))
            rec.iterations = iterations_to_gap(trace.losses, loss_star, gap)
            report = error_report(scores, truth)
            rec.linf = report.linf
            rec.max_pairwise = report.max_pairwise
            rec.l2 = report.l2
            if rec.iterations < 0:
                rec.note = "did not reach the loss-gap threshold"
            trace.to_csv(os.path.join(
                config.out_dir,
                f"trace_{method}_n{n}_trial{trial}.csv"))
        except (NonexistenceError, GraphError, ValueError, RuntimeError) as exc:
            rec.failed = True
            rec.note = str(exc)
        rec.seconds = time.perf_counter() - start
        records.append(rec)
    return records


def _trial_task(args) -> list[TrialRecord]:
    config, coords, trial = args
    if config.experiment == "convergence":
        return _convergence_trial(config, coords, trial)
    return _comparison_trial(config, coords, trial)


def _summarize(config: ExperimentConfig, records: list[TrialRecord]) -> list[dict]:
    groups: dict[tuple, list[TrialRecord]] = {}
    for rec in records:
        key = (rec.n, rec.r, rec.p, rec.L, rec.score_kind, rec.method)
        groups.setdefault(key, []).append(rec)
    rows = []
    for key in sorted(groups, key=str):
        recs = groups[key]
        n, r, p, L, score_kind, method = key
        ok = [rec for rec in recs if math.isfinite(rec.linf)]
        linf = np.array([rec.linf for rec in ok]) if ok else np.array([math.nan])
        iters = np.array([rec.iterations for rec in recs if rec.iterations >= 0])
        row = dict(n=n, r=r, p=p, L=L, score_kind=score_kind, method=method,
                   trials=len(recs), failures=sum(rec.failed for rec in recs),
                   mean_linf=float(np.mean(linf)), median_linf=float(np.median(linf)),
                   median_iterations=float(np.median(iters)) if len(iters) else math.nan)
        if config.experiment == "mle-vs-dcoverlap":
            row["theory_bound"] = locality_bound(config.kind, n, r, p, L)
        if config.experiment == "mle-vs-spectral" and method == "spectral":
            rel = [rec.pi_rel_err for rec in recs if math.isfinite(rec.pi_rel_err)]
            row["mean_pi_rel_err"] = float(np.mean(rel)) if rel else math.nan
        rows.append(row)
    return rows


def run_experiment(config: ExperimentConfig,
                   write_files: bool = True) -> tuple[list[TrialRecord], list[dict]]:
    """Run all sweep points x trials; emit records.csv and summary.csv.

    Worker count comes from the BTLRANK_WORKERS environment variable
    (default 1, sequential); parallel runs produce identical records because
    every trial derives its own RNG stream from (base seed XOR trial index).
    """
    tasks = []
    for n in config.n_list:
        for r in config.r_list:
            for p in config.p_list:
                for L in config.L_list:
                    for score_kind in config.score_kinds:
                        for trial in range(config.trials):
                            tasks.append((config, (n, r, p, L, score_kind), trial))
    workers = int(os.environ.get("BTLRANK_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_trial_task, tasks))
    else:
        chunks = [_trial_task(t) for t in tasks]
    records = [rec for chunk in chunks for rec in chunk]
    summary = _summarize(config, records)
    if write_files:
        os.makedirs(config.out_dir, exist_ok=True)
        records_to_csv(records, os.path.join(config.out_dir, "records.csv"))
        if summary:
            cols = sorted({k for row in summary for k in row},
                          key=lambda c: (c not in ("n", "r", "p", "L", "score_kind", "method"), c))
            with open(os.path.join(config.out_dir, "summary.csv"), "w") as f:
                f.write(",".join(cols) + "\n")
                for row in summary:
                    f.write(",".join(str(row.get(c, "")) for c in cols) + "\n")
        config.to_json(os.path.join(config.out_dir, "config.json"))
    return records, summary
