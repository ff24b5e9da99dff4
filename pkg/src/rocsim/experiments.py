"""Experiment harness: configuration, orchestration and artifact emission.

Three experiments:

* ``sphere-roc``: train bilinear similarities at several false-positive
  levels on the 3-cap sphere problem and emit held-out ROC curves.
* ``fast-rates``: regression of the 90%-quantile regret against sample
  size for a grid of margin exponents.
* ``mmc-subsample``: metric learning with full versus tuple-subsampled
  negative risk, reporting test objective/constraint and wall time.

Every (parameter, repetition) cell is a pure function of a seed derived
from the experiment seed and the cell coordinates, so results do not
depend on the worker count and re-runs are byte-identical (wall-clock
timings excepted).
"""
from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND, pair_same_label_upper
from .core import Bilinear, LabeledDataset, MahalanobisDistance
from .evaluation import RateFit, empirical_quantile, empirical_roc, fit_rate
from .exceptions import InvalidInputError
from .idx import read_idx
from .pca import pca_fit_transform
from .risk import (
    ToleranceConfig,
    negative_risk_complete,
    positive_risk_complete,
    tolerance_incomplete,
    tolerance_slow,
)
from .solvers import (
    MmcConfig,
    mmc_projected_gradient,
    positive_scatter,
    solve_bilinear_kkt,
    solve_threshold_scan,
    compute_P_N,
)
from .synth import (
    FastRatesParams,
    SphereParams,
    analytic_risks_threshold,
    optimal_roc,
    sample_fast_rates,
    sample_sphere,
)

EXPERIMENTS = ("sphere-roc", "fast-rates", "mmc-subsample")

DESIGN_NOTES = {
    "sphere_cap_density": "uniform with respect to surface measure",
    "sphere_evaluation": "fresh held-out sample of the training size",
    "empirical_constraint_tolerance": "empirical problems solved with zero slack",
    "quantile_convention": "lower empirical quantile (inverse cdf)",
    "rate_fit": "ordinary least squares of log quantile on log n",
    "mmc_defaults": "identity init rescaled to the constraint surface; "
    "backtracking halving on objective decrease",
    "repetition_seeds": "experiment seed XOR sha256 of the cell coordinates",
}


def stable_hash(*parts) -> int:
    """Deterministic 63-bit hash of the cell coordinates."""
    payload = json.dumps(parts, sort_keys=True).encode()
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)


def derive_seed(seed: int, *parts) -> int:
    return (int(seed) ^ stable_hash(*parts)) & (2**63 - 1)


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    output_dir: str
    options: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        errors = validate_config_dict(raw)
        if errors:
            raise InvalidInputError("; ".join(errors))
        name = raw["experiment"]
        return cls(
            experiment=name,
            seed=int(raw["seed"]),
            output_dir=raw.get("output_dir", "rocsim-output"),
            options=raw.get(_options_key(name), {}),
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))


def _options_key(experiment: str) -> str:
    return {"sphere-roc": "sphere", "fast-rates": "fast_rates", "mmc-subsample": "mmc"}[
        experiment
    ]


def _is_count(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v >= 1


def validate_config_dict(raw: dict) -> list[str]:
    """All problems found in a config dict; empty when valid."""
    errors = []
    if not isinstance(raw, dict):
        return ["config must be a JSON object"]
    name = raw.get("experiment")
    if name not in EXPERIMENTS:
        errors.append(f"experiment must be one of {EXPERIMENTS}, got {name!r}")
        return errors
    if not isinstance(raw.get("seed"), int) or isinstance(raw.get("seed"), bool):
        errors.append("seed must be an integer")
    block = raw.get(_options_key(name), {})
    if not isinstance(block, dict):
        errors.append(f"{_options_key(name)} block must be an object")
        return errors
    if name == "sphere-roc":
        if not _is_count(block.get("n", 600)):
            errors.append("sphere.n must be a count >= 1")
        alphas = block.get("alphas", [0.35, 0.5])
        if not alphas or any(not 0.0 < a < 1.0 for a in alphas):
            errors.append("sphere.alphas must be levels in (0, 1)")
    elif name == "fast-rates":
        if not 0.0 < block.get("alpha", 0.26) < 1.0:
            errors.append("fast_rates.alpha must lie in (0, 1)")
        if not 0.0 < block.get("m", 0.35) < 0.5:
            errors.append("fast_rates.m must lie in (0, 1/2)")
        a_list = block.get("a_list", [0.1, 0.9])
        if not a_list or any(not 0.0 < a < 1.0 for a in a_list):
            errors.append("fast_rates.a_list entries must lie in (0, 1)")
        n_list = block.get("n_list", [64, 128, 256, 512])
        if not n_list or any(not _is_count(n) for n in n_list):
            errors.append("fast_rates.n_list entries must be counts >= 1")
        if not _is_count(block.get("repetitions", 200)):
            errors.append("fast_rates.repetitions must be a count >= 1")
    elif name == "mmc-subsample":
        n_list = block.get("n_list", [2000])
        if not n_list or any(not _is_count(n) for n in n_list):
            errors.append("mmc.n_list entries must be counts >= 1")
        fractions = block.get("b_fractions", [0.15])
        if any(not 0.0 < f <= 1.0 for f in fractions):
            errors.append("mmc.b_fractions must lie in (0, 1]")
        if not _is_count(block.get("runs_per_cell", 5)):
            errors.append("mmc.runs_per_cell must be a count >= 1")
        source = block.get("source", "synthetic")
        if source != "synthetic" and not (
            isinstance(source, dict) and "images" in source and "labels" in source
        ):
            errors.append(
                "mmc.source must be 'synthetic' or {'images': path, 'labels': path}"
            )
    return errors


# ---------------------------------------------------------------------------
# small shared helpers


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2)
        handle.write("\n")


def dataset_to_csv(dataset: LabeledDataset, path) -> None:
    """Feature columns x0..x{d-1} followed by the integer label column."""
    header = [f"x{j}" for j in range(dataset.dim)] + ["label"]
    rows = [
        tuple(dataset.features[i]) + (int(dataset.labels[i]),)
        for i in range(dataset.n)
    ]
    _write_csv(Path(path), header, rows)


def dataset_from_csv(path) -> LabeledDataset:
    with open(path, "r", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = list(reader)
    d = len(header) - 1
    features = np.array([[float(v) for v in row[:d]] for row in rows])
    labels = np.array([int(row[d]) for row in rows], dtype=np.int64)
    return LabeledDataset(features, labels)


def pairwise_bilinear_scores(X: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Flat upper-triangle bilinear scores (i < j, lexicographic)."""
    G = X @ A
    n = X.shape[0]
    out = np.empty(n * (n - 1) // 2)
    pos = 0
    for i in range(n - 1):
        seg = 0.5 * (1.0 + G[i] @ X[i + 1 :].T)
        out[pos : pos + seg.shape[0]] = seg
        pos += seg.shape[0]
    return out


def _map_cells(worker, cells, workers: int):
    if workers <= 1:
        return [worker(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, cells))


# ---------------------------------------------------------------------------
# sphere-roc


def _run_sphere(config: ExperimentConfig, out: Path, workers: int) -> dict:
    opts = config.options
    n = opts.get("n", 600)
    alphas = sorted(opts.get("alphas", [0.35, 0.5]))
    params = SphereParams()
    train = sample_sphere(params, n, derive_seed(config.seed, "sphere", "train"))
    test = sample_sphere(params, n, derive_seed(config.seed, "sphere", "test"))
    P, N = compute_P_N(train)

    test_same = pair_same_label_upper(test.labels).astype(bool)
    z = np.where(test_same, 1, -1)
    curve_rows = []
    solution_rows = []
    curves = {}
    for alpha in alphas:
        sol = solve_bilinear_kkt(P, N, alpha)
        model = Bilinear(sol.A)
        r_plus = positive_risk_complete(train, model).value
        r_minus = negative_risk_complete(train, model).value
        scores = pairwise_bilinear_scores(test.features, sol.A)
        curve = empirical_roc(scores, z)
        curves[alpha] = {"curve": curve, "solution": sol, "train_r_minus": r_minus}
        solution_rows.append(
            (alpha, sol.case_tag, sol.lam, sol.gamma, r_plus, r_minus)
        )
        for f, t in zip(curve.fpr, curve.tpr):
            curve_rows.append((alpha, float(f), float(t)))

    _write_csv(out / "roc_curves.csv", ["alpha", "fpr", "tpr"], curve_rows)
    _write_csv(
        out / "solutions.csv",
        ["alpha", "case_tag", "lambda", "gamma", "train_r_plus", "train_r_minus"],
        solution_rows,
    )
    kappa_hat = float(np.sum((train.class_counts / train.n) ** 2))
    tol_cfg = ToleranceConfig(
        vc_dim=train.dim**2,
        kappa=min(kappa_hat, 1.0 - kappa_hat),
        delta=0.05,
    )
    metadata = {
        "tolerances": {"slow": {str(n): tolerance_slow(n, tol_cfg)}},
        "vc_dim": train.dim**2,
        "n_train": n,
        "n_test": n,
        "alphas": alphas,
    }
    return {"curves": curves, "metadata_extra": metadata}


# ---------------------------------------------------------------------------
# fast-rates


def _fast_rates_cell(args):
    """All sample sizes for one (margin exponent, repetition) cell."""
    (alpha, m, a, n_list, seed) = args
    params = FastRatesParams(alpha=alpha, m=m, a=a)
    roc_star, _ = optimal_roc(alpha, params)
    n_max = max(n_list)
    data = sample_fast_rates(params, n_max, seed)
    rows = []
    for n in sorted(n_list):
        subset = data.subset(np.arange(n))
        result = solve_threshold_scan(subset, alpha)
        true_r_plus, true_r_minus = analytic_risks_threshold(result.threshold, params)
        rows.append(
            {
                "a": a,
                "n": n,
                "threshold": result.threshold,
                "regret": roc_star - true_r_plus,
                "true_r_minus": true_r_minus,
                "feasible_true": bool(true_r_minus <= alpha),
                "degenerate": result.degenerate,
            }
        )
    return rows


def _run_fast_rates(config: ExperimentConfig, out: Path, workers: int) -> dict:
    opts = config.options
    alpha = opts.get("alpha", 0.26)
    m = opts.get("m", 0.35)
    a_list = sorted(opts.get("a_list", [0.1, 0.9]))
    n_list = sorted(opts.get("n_list", [64, 128, 256, 512]))
    repetitions = opts.get("repetitions", 200)

    cells = []
    coords = []
    for a in a_list:
        for rep in range(repetitions):
            seed = derive_seed(config.seed, "fast-rates", a, max(n_list), rep)
            cells.append((alpha, m, a, tuple(n_list), seed))
            coords.append((a, rep))
    results = _map_cells(_fast_rates_cell, cells, workers)

    detail = []
    for (a, rep), rows in sorted(zip(coords, results), key=lambda kv: kv[0]):
        for row in rows:
            record = dict(row)
            record["repetition"] = rep
            detail.append(record)

    regret_rows = [
        (rec["a"], rec["n"], rec["repetition"], rec["regret"]) for rec in detail
    ]
    regret_rows.sort(key=lambda r: (r[0], r[1], r[2]))
    _write_csv(out / "regrets.csv", ["a", "n", "repetition", "regret"], regret_rows)

    fits: dict[float, RateFit] = {}
    exponent_rows = []
    skipped = []
    for a in a_list:
        quantiles = []
        for n in n_list:
            regrets = [
                rec["regret"] for rec in detail if rec["a"] == a and rec["n"] == n
            ]
            quantiles.append(empirical_quantile(regrets, 0.9))
        if min(quantiles) <= 0.0:
            # the log-log fit needs positive quantiles; happens only for
            # tiny repetition counts
            skipped.append(a)
            continue
        fits[a] = fit_rate(n_list, quantiles)
        exponent_rows.append((a, fits[a].exponent, fits[a].intercept, fits[a].r_squared))
    _write_csv(
        out / "exponents.csv", ["a", "exponent", "intercept", "r2"], exponent_rows
    )

    tol_cfg = ToleranceConfig(vc_dim=1, kappa=0.49, delta=0.05)
    metadata = {
        "tolerances": {
            "slow": {str(n): tolerance_slow(n, tol_cfg) for n in n_list}
        },
        "vc_dim": 1,
        "alpha": alpha,
        "m": m,
        "plateau_heights": {str(a): FastRatesParams(alpha, m, a).C for a in a_list},
        "repetitions": repetitions,
        "skipped_rate_fits": skipped,
    }
    return {"detail": detail, "fits": fits, "metadata_extra": metadata}


# ---------------------------------------------------------------------------
# mmc-subsample


def make_mixture_means(classes: int, dim: int, separation: float, seed: int) -> np.ndarray:
    """Class means: random directions scaled to the requested separation."""
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=(classes, dim))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    return separation * raw


def sample_mixture(
    means: np.ndarray, spread: float, n: int, seed: int
) -> LabeledDataset:
    """Equal-weight Gaussian mixture sample with one component per class."""
    rng = np.random.default_rng(seed)
    classes = means.shape[0]
    labels = rng.integers(1, classes + 1, size=n)
    noise = rng.normal(scale=spread, size=(n, means.shape[1]))
    return LabeledDataset(means[labels - 1] + noise, labels)


def _load_idx_features(source: dict, pca_target: float, seed: int):
    images = read_idx(source["images"]).astype(np.float64)
    labels = read_idx(source["labels"]).astype(np.int64) + 1
    flat = images.reshape(images.shape[0], -1) / 255.0
    _, reduced = pca_fit_transform(flat, pca_target)
    rng = np.random.default_rng(seed)
    order = rng.permutation(flat.shape[0])
    return reduced[order], labels[order]


def _mmc_cell(args):
    (means, spread, source_arrays, n, run, budgets, solver_opts, seed) = args
    if source_arrays is None:
        train = sample_mixture(means, spread, n, derive_seed(seed, "train", n, run))
        test = sample_mixture(means, spread, n, derive_seed(seed, "test", n, run))
    else:
        features, labels = source_arrays
        rng = np.random.default_rng(derive_seed(seed, "split", n, run))
        order = rng.permutation(features.shape[0])
        train_rows, test_rows = order[:n], order[n : 2 * n]
        train = LabeledDataset(features[train_rows], labels[train_rows])
        test = LabeledDataset(features[test_rows], labels[test_rows])

    test_scatter = positive_scatter(test)
    rows = []
    for budget in budgets:
        cfg = MmcConfig(
            step_size=solver_opts.get("step_size", 1e-2),
            max_iters=solver_opts.get("max_iters", 300),
            tol=solver_opts.get("tol", 1e-6),
            tuple_budget=None if budget == "full" else budget,
            seed=derive_seed(seed, "subsample", n, run, str(budget)),
        )
        started = time.perf_counter()
        result = mmc_projected_gradient(train, cfg)
        elapsed = time.perf_counter() - started
        model = MahalanobisDistance(result.A)
        test_objective = negative_risk_complete(test, model).value
        test_constraint = float(np.sum(result.A * test_scatter))
        rows.append(
            {
                "n": n,
                "B": budget,
                "run": run,
                "test_objective": test_objective,
                "test_constraint": test_constraint,
                "wall_time_s": elapsed,
                "train_objective": result.objective,
                "converged": result.converged,
                "iterations": result.n_iterations,
                "pairs_per_iteration": result.pairs_per_iteration,
            }
        )
    return rows


def _run_mmc(config: ExperimentConfig, out: Path, workers: int) -> dict:
    opts = config.options
    n_list = sorted(opts.get("n_list", [2000]))
    fractions = opts.get("b_fractions", [0.15])
    include_full = opts.get("include_full", True)
    runs_per_cell = opts.get("runs_per_cell", 5)
    solver_opts = opts.get("solver", {})
    source = opts.get("source", "synthetic")

    if source == "synthetic":
        synth_opts = opts.get("synthetic", {})
        classes = synth_opts.get("classes", 5)
        dim = synth_opts.get("dim", 10)
        separation = synth_opts.get("separation", 2.0)
        spread = synth_opts.get("spread", 1.0)
        means = make_mixture_means(
            classes, dim, separation, derive_seed(config.seed, "mixture-means")
        )
        source_arrays = None
    else:
        means = None
        spread = None
        source_arrays = _load_idx_features(
            source,
            opts.get("pca_target", 0.9),
            derive_seed(config.seed, "idx-shuffle"),
        )

    cells = []
    for n in n_list:
        budgets = []
        if include_full:
            budgets.append("full")
        budgets.extend(max(1, round(f * n)) for f in fractions)
        for run in range(runs_per_cell):
            cells.append(
                (means, spread, source_arrays, n, run, tuple(budgets), solver_opts, config.seed)
            )
    results = _map_cells(_mmc_cell, cells, workers)

    rows = [row for cell_rows in results for row in cell_rows]
    rows.sort(key=lambda r: (r["n"], str(r["B"]), r["run"]))
    _write_csv(
        out / "results.csv",
        ["n", "B", "run", "test_objective", "test_constraint", "wall_time_s"],
        [
            (r["n"], r["B"], r["run"], r["test_objective"], r["test_constraint"], r["wall_time_s"])
            for r in rows
        ],
    )

    dim = means.shape[1] if means is not None else source_arrays[0].shape[1]
    tol_cfg = ToleranceConfig(vc_dim=dim**2, kappa=0.15, delta=0.05)
    tolerances = {"slow": {}, "incomplete": {}}
    for n in n_list:
        tolerances["slow"][str(n)] = tolerance_slow(n, tol_cfg)
        classes = means.shape[0] if means is not None else int(source_arrays[1].max())
        balanced = np.full(classes, max(1, n // classes))
        for f in fractions:
            budget = max(1, round(f * n))
            tolerances["incomplete"][f"{n}:{budget}"] = tolerance_incomplete(
                balanced, budget, tol_cfg
            )
    metadata = {
        "tolerances": tolerances,
        "vc_dim": dim**2,
        "runs_per_cell": runs_per_cell,
        "run_variation": "data split and subsample seed both vary between runs",
    }
    return {"rows": rows, "metadata_extra": metadata}


# ---------------------------------------------------------------------------
# entry point


def run_experiment(config: ExperimentConfig, workers: int = 1) -> dict:
    """Run one experiment, write its artifacts and return them in memory."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    if config.experiment == "sphere-roc":
        bundle = _run_sphere(config, out, workers)
    elif config.experiment == "fast-rates":
        bundle = _run_fast_rates(config, out, workers)
    elif config.experiment == "mmc-subsample":
        bundle = _run_mmc(config, out, workers)
    else:
        raise InvalidInputError(f"unknown experiment {config.experiment!r}")
    metadata = {
        "experiment": config.experiment,
        "seed": config.seed,
        "options": config.options,
        "design_notes": DESIGN_NOTES,
        "backend": BACKEND,
        "version": __version__,
    }
    metadata.update(bundle.pop("metadata_extra", {}))
    _write_json(out / "metadata.json", metadata)
    bundle["metadata"] = metadata
    bundle["output_dir"] = str(out)
    bundle["wall_time_s"] = time.perf_counter() - started
    return bundle
