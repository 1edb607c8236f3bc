"""End-to-end orchestration: data generation, noise injection, estimation
dispatch, and benchmark sweeps with machine-readable reports.

Every emitted dataset and report row carries the seed and a hash of the
config that produced it; exact reference entropies are recomputed from the
state generators at report time, never cached across configs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from ._backend import BACKEND_NAME
from .baselines import chebyshev_extrapolate, least_squares_poly
from .config import default_conformal_params, default_workers
from .conformal import ConformalParams
from .dataset import RenyiDataset, save_dataset
from .errors import ConfigError
from .estimator import estimate_noiseless, estimate_noisy
from .quantum import (
    DensityMatrix,
    PureState,
    XYEvolver,
    exact_renyi_table,
    partial_trace,
    random_density_matrix,
    tfim_ground_state,
    von_neumann_entropy,
)
from .shadows import batch_shadows, jackknife, sample_shadows

SCENARIOS = ("tfim_ground", "xy_quench", "random_state")
METHODS = ("sac", "chebyshev", "lsq")

CSV_COLUMNS = [
    "scenario", "n", "L", "t_ms", "k_max", "method", "noise_fraction",
    "n_samples", "exact_svn", "estimate", "spread", "err_value", "err_kind",
    "flags", "seed", "config_hash",
]


@dataclass
class BenchmarkConfig:
    """Knobs for the generation and benchmark commands.

    Desk-scale defaults: sizes, experiment counts, and grouping are smaller
    than full production sweeps and are recorded in the report metadata so
    results are never conflated with larger-scale numbers.
    """

    scenario: str = "random_state"
    n: int = 8
    subsystem_size: int = 4
    subsystem_sizes: list[int] | None = None  # optional L sweep (xy_quench)
    times_ms: list[float] = field(default_factory=lambda: [0.0, 2.0, 5.0])
    k_max: int = 6
    # physics parameters
    tfim_J: float = 1.0
    tfim_h: float = 0.5
    xy_J: float = 420.0
    xy_B: float = 4200.0
    xy_exponent: float = 1.2
    dims: list[int] = field(default_factory=lambda: [4, 8, 16, 32])
    # conformal / solver
    epsilon: float | None = None
    eta: float | None = None
    chi2_0: float | None = None
    lsq_degree: int = 2
    # shadow protocol
    n_unitaries: int = 500
    n_shots: int = 150
    n_batches: int = 12
    # experiment grouping
    n_experiments: int = 100
    group_size: int = 10
    group_mean_covariance: bool = True
    # synthetic noise
    noise_fraction: float = 0.1
    n_realizations: int = 200
    # sweep / infrastructure
    k_sweep_min: int = 3
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    workers: int | None = None
    seed: int = 7

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
        if self.k_max < 3:
            raise ConfigError("k_max must be >= 3")
        if not 1 <= self.subsystem_size <= min(self.n, 6):
            raise ConfigError("subsystem size must be within [1, min(n, 6)]")
        for L in self.subsystem_sizes or []:
            if not 1 <= L <= min(self.n, 6):
                raise ConfigError("every swept subsystem size must be within [1, min(n, 6)]")
        if self.scenario == "xy_quench" and self.n_batches < self.k_max + 1:
            raise ConfigError("need n_batches >= k_max + 1 for jackknife resampling")
        if self.noise_fraction < 0:
            raise ConfigError("noise fraction must be >= 0")

    @classmethod
    def from_file(cls, path: str | Path, overrides: dict[str, Any] | None = None):
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        doc.update(overrides or {})
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:12]

    def conformal_params(self) -> ConformalParams:
        if self.epsilon is None and self.eta is None:
            return default_conformal_params()
        base = default_conformal_params()
        return ConformalParams(
            epsilon=self.epsilon if self.epsilon is not None else base.epsilon,
            eta=self.eta if self.eta is not None else base.eta,
        )


@dataclass
class ResultRow:
    """One benchmark cell, ready for CSV serialization."""

    scenario: str
    n: int
    L: int
    t_ms: float | None
    k_max: int
    method: str
    noise_fraction: float
    n_samples: int
    exact_svn: float
    estimate: float
    spread: float
    err_value: float
    err_kind: str  # "percent" or "absolute"
    flags: str
    seed: int
    config_hash: str

    def to_csv_dict(self) -> dict[str, str]:
        out = {}
        for key in CSV_COLUMNS:
            val = getattr(self, key)
            if isinstance(val, float):
                out[key] = format(val + 0.0, ".12g")
            elif val is None:
                out[key] = ""
            else:
                out[key] = str(val)
        return out


def error_cell(estimate: float, exact: float) -> tuple[float, str]:
    """Error percentage, or absolute error (flagged) when exact is ~ 0."""
    if abs(exact) < 1e-9:
        return abs(estimate - exact), "absolute"
    return 100.0 * abs(estimate - exact) / abs(exact), "percent"


# ---------------------------------------------------------------------------
# state builders


def _build_state(config: BenchmarkConfig, t_ms: float | None = None):
    """Exact subsystem density matrix for the configured scenario."""
    L = config.subsystem_size
    sites = list(range(L))
    if config.scenario == "tfim_ground":
        result = tfim_ground_state(config.n, config.tfim_J, config.tfim_h)
        return partial_trace(result.state, sites), result.state
    if config.scenario == "xy_quench":
        evolver = XYEvolver(config.n, config.xy_J, config.xy_B, config.xy_exponent)
        state = evolver.state_at((t_ms or 0.0) * 1e-3)
        return partial_trace(state, sites), state
    raise ConfigError(f"scenario {config.scenario} has no single-state builder")


def exact_dataset(
    rho: DensityMatrix, k_max: int, metadata: dict[str, Any] | None = None
) -> RenyiDataset:
    orders = list(range(2, k_max + 1))
    table = exact_renyi_table(rho, orders)
    return RenyiDataset(
        orders=tuple(orders),
        values=np.array([table[k] for k in orders]),
        covariance=None,
        metadata=metadata or {},
    )


def shadow_experiment_dataset(
    state: PureState,
    subsystem: list[int],
    config: BenchmarkConfig,
    seed: int,
    metadata: dict[str, Any],
) -> RenyiDataset:
    """One full shadow experiment: sample, batch, jackknife."""
    shadows = sample_shadows(
        state, subsystem, config.n_unitaries, config.n_shots, seed=seed
    )
    batch_set = batch_shadows(shadows, config.n_batches)
    dataset = jackknife(batch_set, config.k_max)
    dataset.metadata.update(metadata)
    dataset.metadata["seed"] = seed
    return dataset


# ---------------------------------------------------------------------------
# commands


def cmd_generate(config: BenchmarkConfig, out_dir: str | Path) -> list[Path]:
    """Emit per-experiment Renyi datasets plus exact reference entropies."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config.config_hash()
    written: list[Path] = []
    seeds = np.random.SeedSequence(config.seed).spawn(max(config.n_experiments, 1))

    def write(ds: RenyiDataset, name: str):
        path = out / name
        save_dataset(ds, path)
        written.append(path)

    if config.scenario == "random_state":
        rng = np.random.default_rng(config.seed)
        exact_ref = {}
        for i in range(config.n_experiments):
            dim = int(rng.choice(config.dims))
            rank = int(rng.integers(2, dim + 1))
            state_seed = int(rng.integers(0, 2**31))
            rho = random_density_matrix(dim, rank, seed=state_seed)
            meta = {
                "scenario": config.scenario, "config_hash": chash,
                "seed": state_seed, "dim": dim, "rank": rank,
            }
            ds = exact_dataset(rho, config.k_max, metadata=meta)
            write(ds, f"renyi_{i:04d}.json")
            exact_ref[f"renyi_{i:04d}"] = {
                "svn_exact": von_neumann_entropy(rho), "dim": dim, "rank": rank,
            }
        ref = {"scenario": config.scenario, "config": config.to_dict(),
               "config_hash": chash, "states": exact_ref}
        (out / "exact.json").write_text(json.dumps(ref, indent=2, sort_keys=True))
        written.append(out / "exact.json")
        return written

    times = config.times_ms if config.scenario == "xy_quench" else [None]
    exact_ref: dict[str, Any] = {}
    for t_ms in times:
        rho, state = _build_state(config, t_ms)
        tag = "" if t_ms is None else f"_t{t_ms:g}ms"
        orders = list(range(2, config.k_max + 1))
        exact_ref[f"state{tag}"] = {
            "svn_exact": von_neumann_entropy(rho),
            "renyi_exact": {str(k): v for k, v in exact_renyi_table(rho, orders).items()},
            "t_ms": t_ms,
        }
        for i in range(config.n_experiments):
            meta = {"scenario": config.scenario, "config_hash": chash, "t_ms": t_ms}
            ds = shadow_experiment_dataset(
                state, list(range(config.subsystem_size)), config,
                seed=int(seeds[i].generate_state(1)[0]), metadata=meta,
            )
            write(ds, f"renyi{tag}_{i:04d}.json")
    ref = {"scenario": config.scenario, "config": config.to_dict(),
           "config_hash": chash, "states": exact_ref}
    (out / "exact.json").write_text(json.dumps(ref, indent=2, sort_keys=True))
    written.append(out / "exact.json")
    return written


def add_noise(
    dataset: RenyiDataset, fraction: float, n_realizations: int, seed: int
) -> list[RenyiDataset]:
    """Independent Gaussian perturbations with std = fraction * S_k per order.

    Each realization carries the matching diagonal covariance.
    """
    if fraction < 0:
        raise ValueError("noise fraction must be >= 0")
    rng = np.random.default_rng(seed)
    sigmas = fraction * dataset.values
    out = []
    for r in range(n_realizations):
        values = dataset.values + sigmas * rng.standard_normal(len(dataset.orders))
        cov = np.diag(sigmas**2)
        meta = dict(dataset.metadata)
        meta.update({"noise_fraction": fraction, "realization": r, "noise_seed": seed})
        out.append(
            RenyiDataset(orders=dataset.orders, values=values, covariance=cov, metadata=meta)
        )
    return out


def cmd_add_noise(
    dataset: RenyiDataset, fraction: float, n_realizations: int, seed: int,
    out_dir: str | Path,
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for r, noisy in enumerate(add_noise(dataset, fraction, n_realizations, seed)):
        path = out / f"noisy_{r:04d}.json"
        save_dataset(noisy, path)
        paths.append(path)
    return paths


def run_estimate(
    dataset: RenyiDataset,
    method: str,
    params: ConformalParams | None = None,
    chi2_0: float | None = None,
    lsq_degree: int = 2,
) -> tuple[float, dict[str, Any]]:
    """Single estimate with diagnostics; the SAC path auto-selects noisy
    vs noiseless by covariance presence."""
    if method == "sac":
        if dataset.has_noise_model():
            est = estimate_noisy(dataset, params=params, chi2_0=chi2_0)
        else:
            est = estimate_noiseless(dataset, params=params)
        diag = {
            "delta2_min": est.delta2_min,
            "lambda": est.solver.lam,
            "y0": est.solver.y0,
            "chi2_achieved": est.solver.chi2_achieved,
            "iterations": est.solver.iterations,
            "flags": list(est.flags),
        }
        return est.alpha_min, diag
    if method == "chebyshev":
        base = chebyshev_extrapolate(dataset)
        return base.value, {"degree": base.degree, "flags": []}
    if method == "lsq":
        base = least_squares_poly(dataset, degree=lsq_degree)
        return base.value, {"degree": base.degree, "flags": []}
    raise ConfigError(f"unknown method {method!r}; choose from {METHODS}")


def cmd_estimate(
    dataset: RenyiDataset,
    method: str,
    params: ConformalParams | None = None,
    chi2_0: float | None = None,
    lsq_degree: int = 2,
) -> dict[str, Any]:
    value, diag = run_estimate(dataset, method, params, chi2_0, lsq_degree)
    return {
        "method": method,
        "estimate_bits": value,
        "orders": list(dataset.orders),
        "values_bits": dataset.values.tolist(),
        "diagnostics": diag,
        "metadata": dataset.metadata,
    }


def group_datasets(
    datasets: list[RenyiDataset], group_size: int, mean_covariance: bool = True
) -> list[RenyiDataset]:
    """Group experiments and summarize each group by mean and covariance.

    Orders are intersected across group members (noise can drop orders per
    experiment). ``mean_covariance`` divides the sample covariance by the
    group size so it describes the group mean rather than a single set.
    """
    if group_size < 2:
        raise ValueError("group size must be >= 2")
    n_groups = len(datasets) // group_size
    if n_groups < 1:
        raise ValueError("not enough datasets for one group")
    grouped = []
    for g in range(n_groups):
        members = datasets[g * group_size : (g + 1) * group_size]
        common = set(members[0].orders)
        for ds in members[1:]:
            common &= set(ds.orders)
        orders = sorted(common)
        if len(orders) < 2 or orders[0] != 2:
            raise ValueError(f"group {g} has too few common orders: {orders}")
        stack = np.array(
            [[ds.values[ds.orders.index(k)] for k in orders] for ds in members]
        )
        cov = np.cov(stack, rowvar=False, ddof=1)
        if mean_covariance:
            cov = cov / group_size
        grouped.append(
            RenyiDataset(
                orders=tuple(orders),
                values=stack.mean(axis=0),
                covariance=cov,
                metadata={"group": g, "group_size": group_size,
                          "mean_covariance": mean_covariance},
            )
        )
    return grouped


# ---------------------------------------------------------------------------
# benchmark sweeps


def _truncate(dataset: RenyiDataset, k_max: int) -> RenyiDataset:
    keep = [i for i, k in enumerate(dataset.orders) if k <= k_max]
    cov = dataset.covariance
    if cov is not None:
        cov = cov[np.ix_(keep, keep)]
    return RenyiDataset(
        orders=tuple(dataset.orders[i] for i in keep),
        values=dataset.values[keep],
        covariance=cov,
        metadata=dict(dataset.metadata),
    )


def _run_cells(cells: list[Callable[[], list[ResultRow]]], workers: int) -> list[ResultRow]:
    if workers <= 1:
        results = [cell() for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: c(), cells))
    return [row for rows in results for row in rows]


def cmd_benchmark(config: BenchmarkConfig) -> tuple[str, dict[str, Any]]:
    """Run the configured sweep; returns (csv_text, json_sidecar).

    Cells are pure functions of (config, seed) and may run concurrently;
    rows are sorted before writing so output is order-independent and
    byte-identical for identical config + seed.
    """
    workers = config.workers if config.workers is not None else default_workers()
    if config.scenario == "random_state":
        rows = _benchmark_random_state(config, workers)
    elif config.scenario == "tfim_ground":
        rows = _benchmark_exact_state_sweep(config, workers)
    elif config.scenario == "xy_quench":
        if config.group_size > config.n_experiments:
            raise ConfigError("group size cannot exceed the number of experiments")
        rows = _benchmark_quench(config, workers)
    else:  # pragma: no cover - guarded by config validation
        raise ConfigError(f"unknown scenario {config.scenario}")

    rows.sort(key=lambda r: (r.scenario, r.L, r.t_ms if r.t_ms is not None else -1.0,
                             r.k_max, r.method, r.noise_fraction, r.seed))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.to_csv_dict())
    sidecar = {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "backend": BACKEND_NAME,
        "package_version": __version__,
        "n_rows": len(rows),
        "notes": "desk-scale benchmark; sizes and counts are below full-scale protocols",
    }
    return buf.getvalue(), sidecar


def _sweep_lsq_degree(config: BenchmarkConfig, k_max: int) -> int:
    """Clamp the configured degree to what a truncated sweep cell allows."""
    return max(1, min(config.lsq_degree, k_max - 2))


def _estimate_rows_for_dataset(
    config: BenchmarkConfig, dataset: RenyiDataset, exact_svn: float,
    k_max: int, noise_fraction: float, seed: int, t_ms: float | None,
    n_samples: int = 1,
) -> list[ResultRow]:
    params = config.conformal_params()
    rows = []
    for method in config.methods:
        value, diag = run_estimate(
            dataset, method, params=params, chi2_0=config.chi2_0,
            lsq_degree=_sweep_lsq_degree(config, dataset.k_max),
        )
        err, kind = error_cell(value, exact_svn)
        rows.append(ResultRow(
            scenario=config.scenario, n=config.n, L=config.subsystem_size,
            t_ms=t_ms, k_max=k_max, method=method, noise_fraction=noise_fraction,
            n_samples=n_samples, exact_svn=exact_svn, estimate=value, spread=0.0,
            err_value=err, err_kind=kind, flags=";".join(diag.get("flags", [])),
            seed=seed, config_hash=config.config_hash(),
        ))
    return rows


def _benchmark_random_state(config: BenchmarkConfig, workers: int) -> list[ResultRow]:
    """Noiseless accuracy corpus: one row per (state, method)."""
    rng = np.random.default_rng(config.seed)
    cells = []
    for i in range(config.n_experiments):
        dim = int(rng.choice(config.dims))
        rank = int(rng.integers(2, dim + 1))
        state_seed = int(rng.integers(0, 2**31))

        def cell(dim=dim, rank=rank, state_seed=state_seed):
            rho = random_density_matrix(dim, rank, seed=state_seed)
            exact = von_neumann_entropy(rho)
            ds = exact_dataset(rho, config.k_max)
            return _estimate_rows_for_dataset(
                config, ds, exact, config.k_max, 0.0, state_seed, None
            )

        cells.append(cell)
    return _run_cells(cells, workers)


def _benchmark_exact_state_sweep(config: BenchmarkConfig, workers: int) -> list[ResultRow]:
    """k_max sweep on one exact state, noiseless and noise-averaged cells."""
    rho, _ = _build_state(config)
    exact = von_neumann_entropy(rho)
    base = exact_dataset(rho, config.k_max)
    chash = config.config_hash()
    cells = []
    for k_hi in range(config.k_sweep_min, config.k_max + 1):
        truncated = _truncate(base, k_hi)

        def noiseless_cell(truncated=truncated, k_hi=k_hi):
            return _estimate_rows_for_dataset(
                config, truncated, exact, k_hi, 0.0, config.seed, None
            )

        cells.append(noiseless_cell)
        if config.noise_fraction > 0 and config.n_realizations > 0:

            def noisy_cell(truncated=truncated, k_hi=k_hi):
                params = config.conformal_params()
                noisy_sets = add_noise(
                    truncated, config.noise_fraction, config.n_realizations,
                    seed=config.seed + 100_000 * k_hi,
                )
                rows = []
                for method in config.methods:
                    errs, vals, flagged = [], [], 0
                    for ds in noisy_sets:
                        try:
                            value, diag = run_estimate(
                                ds, method, params=params, chi2_0=config.chi2_0,
                                lsq_degree=_sweep_lsq_degree(config, ds.k_max),
                            )
                        except Exception:
                            flagged += 1
                            continue
                        err, _ = error_cell(value, exact)
                        errs.append(err)
                        vals.append(value)
                    flags = f"failures:{flagged}" if flagged else ""
                    rows.append(ResultRow(
                        scenario=config.scenario, n=config.n, L=config.subsystem_size,
                        t_ms=None, k_max=k_hi, method=method,
                        noise_fraction=config.noise_fraction,
                        n_samples=len(errs), exact_svn=exact,
                        estimate=float(np.mean(vals)), spread=float(np.std(vals)),
                        err_value=float(np.mean(errs)), err_kind="percent",
                        flags=flags, seed=config.seed, config_hash=chash,
                    ))
                return rows

            cells.append(noisy_cell)
    return _run_cells(cells, workers)


def _benchmark_quench(config: BenchmarkConfig, workers: int) -> list[ResultRow]:
    """Shadow pipeline sweep over quench times (and optionally subsystem
    sizes) with the grouping protocol: per cell, the grouped estimates'
    mean and spread against the exact entropy."""
    evolver = XYEvolver(config.n, config.xy_J, config.xy_B, config.xy_exponent)
    sizes = config.subsystem_sizes or [config.subsystem_size]
    chash = config.config_hash()
    seeds = np.random.SeedSequence(config.seed).spawn(
        len(sizes) * len(config.times_ms) * config.n_experiments
    )
    cells = []
    for cell_index, (L, t_ms) in enumerate(
        (L, t) for L in sizes for t in config.times_ms
    ):

        def cell(cell_index=cell_index, L=L, t_ms=t_ms):
            params = config.conformal_params()
            subsystem = list(range(L))
            state = evolver.state_at(t_ms * 1e-3)
            rho = partial_trace(state, subsystem)
            exact = von_neumann_entropy(rho)
            datasets = []
            for i in range(config.n_experiments):
                seed = int(
                    seeds[cell_index * config.n_experiments + i].generate_state(1)[0]
                )
                datasets.append(shadow_experiment_dataset(
                    state, subsystem, config, seed=seed,
                    metadata={"scenario": config.scenario, "t_ms": t_ms,
                              "config_hash": chash},
                ))
            grouped = group_datasets(
                datasets, config.group_size, config.group_mean_covariance
            )
            rows = []
            for method in config.methods:
                vals = []
                flagged = 0
                for ds in grouped:
                    try:
                        value, _ = run_estimate(
                            ds, method, params=params, chi2_0=config.chi2_0,
                            lsq_degree=config.lsq_degree,
                        )
                        vals.append(value)
                    except Exception:
                        flagged += 1
                mean = float(np.mean(vals))
                spread = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
                err, kind = error_cell(mean, exact)
                rows.append(ResultRow(
                    scenario=config.scenario, n=config.n, L=L,
                    t_ms=t_ms, k_max=config.k_max, method=method, noise_fraction=0.0,
                    n_samples=len(vals), exact_svn=exact, estimate=mean,
                    spread=spread, err_value=err, err_kind=kind,
                    flags=f"failures:{flagged}" if flagged else "",
                    seed=config.seed, config_hash=chash,
                ))
            return rows

        cells.append(cell)
    return _run_cells(cells, workers)


def write_benchmark(config: BenchmarkConfig, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_text, sidecar = cmd_benchmark(config)
    csv_path = out / "benchmark.csv"
    json_path = out / "benchmark_config.json"
    csv_path.write_text(csv_text)
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return csv_path, json_path
