"""Rolling-window minimum-variance backtests and experiment drivers.

The backtest steps through the panel every dt_out days: estimate a
covariance on the trailing dt_in days for every estimator, solve for GMV
weights, hold them for dt_out days, charge an L1 turnover cost against the
drifted previous allocation at each rebalance. Estimators that fail on a
window (singular sample covariance, degenerate bootstrap replica) leave
missing cells instead of aborting the run.

Work units (rebalance windows, experiment repetitions) are independent;
results are gathered in fixed task order, so output is bit-identical at
any parallelism degree.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bahc import BootstrapPlan, kbahc_correlation_profile, kbahc_covariance_profile
from .errors import ConfigError, EmptyUniverseError, NumericError
from .estimators import (
    CVSpec,
    EqualWeightSpec,
    EstimatorSpec,
    KBahcSpec,
    cv_eigenvalue_shrinkage,
    estimate_covariance,
)
from .gmv import Weights, gmv_long_only, gmv_long_short
from .linalg import EigenSystem, eigendecompose, sample_covariance, to_correlation
from .metrics import (
    TRADING_DAYS_PER_YEAR,
    MetricRow,
    concentration,
    gross_leverage,
    ipr,
    realized_volatility,
    sharpe_ratio,
    shuffled_null_panel,
    turnover_gamma,
)
from .metrics import yearly_dense_rank
from .panel import ReturnPanel, WindowSpec, slice_window, universe_at

__all__ = [
    "BacktestConfig",
    "WindowRecord",
    "BacktestReport",
    "run_backtest",
    "drift_weights",
    "apply_costs",
    "ExperimentConfig",
    "ExperimentResult",
    "random_experiment",
    "SpectraResult",
    "spectra_experiment",
    "save_metrics_csv",
    "save_rank_csv",
    "save_wealth_csv",
    "save_weights_csv",
    "save_experiment_csv",
    "save_kstar_csv",
    "save_spectra_csv",
    "save_ipr_ecdf_csv",
]

_ANNUAL = math.sqrt(TRADING_DAYS_PER_YEAR)


@dataclass(frozen=True)
class BacktestConfig:
    """Rolling backtest settings. EQ is appended to the estimator list when
    absent; it is the only estimator with no covariance step."""

    dt_in: int
    dt_out: int = 21
    cost_bps: float = 2.0
    long_only: bool = False
    estimators: tuple[EstimatorSpec, ...] = ()
    start: str | None = None
    end: str | None = None
    threads: int = 1

    def __post_init__(self):
        if self.dt_in < 2:
            raise ConfigError(f"dt_in must be >= 2, got {self.dt_in}")
        if self.dt_out < 1:
            raise ConfigError(f"dt_out must be >= 1, got {self.dt_out}")
        if not self.cost_bps >= 0.0:
            raise ConfigError(f"cost_bps must be >= 0, got {self.cost_bps}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        specs = tuple(self.estimators)
        if not any(isinstance(s, EqualWeightSpec) for s in specs):
            specs = specs + (EqualWeightSpec(),)
        labels = [s.label for s in specs]
        if len(set(labels)) != len(labels):
            dupes = sorted({x for x in labels if labels.count(x) > 1})
            raise ConfigError(f"duplicate estimator labels {dupes}")
        object.__setattr__(self, "estimators", specs)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.estimators)


@dataclass(frozen=True)
class WindowRecord:
    """Everything that happened at one rebalance: the universe, and per
    estimator the weights (None = failed), gross and net daily returns over
    the holding period, and the turnover cost charged."""

    t_end: int
    date: str
    universe: tuple[str, ...] | None
    weights: dict[str, Weights | None]
    gross: dict[str, np.ndarray | None]
    cost: dict[str, float]
    net: dict[str, np.ndarray | None]


@dataclass(frozen=True)
class BacktestReport:
    config: BacktestConfig
    records: tuple[WindowRecord, ...]
    metrics: tuple[MetricRow, ...]
    years: tuple[int, ...]
    yearly_sharpe: dict[str, tuple[float, ...]]
    mean_rank: dict[str, float]
    wealth_dates: tuple[str, ...]
    wealth: dict[str, np.ndarray]


def drift_weights(prev: Weights, returns_block: np.ndarray) -> Weights | None:
    """Previous allocation carried to the rebalance instant: each weight
    grows by its asset's compounded return, then the vector is renormalized.
    Returns None when the book's value crosses zero (accounting restarts)."""
    growth = np.prod(1.0 + np.asarray(returns_block, dtype=np.float64), axis=1)
    v = prev.values * growth
    total = v.sum()
    if abs(total) < 1e-12:
        return None
    return Weights(v / total, assets=prev.assets)


def apply_costs(prev_w: Weights | None, new_w: Weights, cost_bps: float) -> float:
    """Turnover cost fraction (cost_bps / 1e4) * sum |new - prev|.

    ``prev_w`` is the drifted previous allocation; pass None for the initial
    build, which is free. Snapshots are aligned on the union of asset ids,
    absent assets at weight 0, so liquidated positions are charged too.
    """
    if cost_bps < 0:
        raise ConfigError(f"cost_bps must be >= 0, got {cost_bps}")
    if prev_w is None:
        return 0.0
    if prev_w.assets is None or new_w.assets is None:
        if prev_w.values.size != new_w.values.size:
            raise ValueError("unlabeled weight vectors must have equal length")
        l1 = float(np.abs(new_w.values - prev_w.values).sum())
    else:
        union = sorted(set(prev_w.assets) | set(new_w.assets))
        pa = dict(zip(prev_w.assets, prev_w.values))
        na = dict(zip(new_w.assets, new_w.values))
        l1 = float(sum(abs(na.get(a, 0.0) - pa.get(a, 0.0)) for a in union))
    return cost_bps / 1e4 * l1


def _span_indices(panel: ReturnPanel, start: str | None, end: str | None) -> tuple[int, int]:
    dates = panel.dates
    i0 = 0
    i1 = len(dates)
    if start is not None:
        i0 = int(np.searchsorted(np.array(dates), start, side="left"))
    if end is not None:
        i1 = int(np.searchsorted(np.array(dates), end, side="right"))
    if i1 - i0 < 1:
        raise ConfigError(f"date range [{start}, {end}] selects no panel dates")
    return i0, i1


# Worker-process state for the two pools, set once per worker by the
# initializers below instead of pickling the panel into every task.
_BT_STATE: tuple[ReturnPanel, BacktestConfig] | None = None
_EXP_STATE: tuple[ReturnPanel, "ExperimentConfig"] | None = None


def _init_backtest_worker(panel: ReturnPanel, cfg: BacktestConfig) -> None:
    global _BT_STATE
    _BT_STATE = (panel, cfg)


def _solve_window(panel: ReturnPanel, cfg: BacktestConfig, t_end: int):
    """Phase-1 work unit: universe, covariance estimates, GMV weights."""
    w = WindowSpec(t_end, cfg.dt_in, cfg.dt_out)
    try:
        uni = universe_at(panel, w)
    except EmptyUniverseError:
        return t_end, None, {}
    r_in, _ = slice_window(panel, w, uni)
    ids = tuple(panel.assets[i] for i in uni)
    n = len(ids)

    groups: dict[tuple[int, int], list[int]] = {}
    for spec in cfg.estimators:
        if isinstance(spec, KBahcSpec):
            groups.setdefault((spec.m, spec.base_seed), []).append(spec.k)
    profiles: dict[tuple[int, int], dict | None] = {}

    weights: dict[str, Weights | None] = {}
    for spec in cfg.estimators:
        if isinstance(spec, EqualWeightSpec):
            weights[spec.label] = Weights(np.full(n, 1.0 / n), assets=ids)
            continue
        if isinstance(spec, KBahcSpec):
            key = (spec.m, spec.base_seed)
            if key not in profiles:
                try:
                    # one bootstrap pass shared by every order in the group
                    profiles[key] = kbahc_covariance_profile(
                        r_in, groups[key], spec.plan, labels=ids
                    )
                except NumericError:
                    profiles[key] = None
            prof = profiles[key]
            if prof is None:
                weights[spec.label] = None
                continue
            sigma = prof[spec.k]
        else:
            try:
                sigma = estimate_covariance(spec, r_in, labels=ids)
            except NumericError:
                weights[spec.label] = None
                continue
        try:
            solved = gmv_long_only(sigma) if cfg.long_only else gmv_long_short(sigma)
        except NumericError:
            weights[spec.label] = None
            continue
        weights[spec.label] = solved
    return t_end, ids, weights


def _backtest_window_task(t_end: int):
    panel, cfg = _BT_STATE
    return _solve_window(panel, cfg, t_end)


def _run_tasks(task_fn, args, initializer, initargs, threads: int, inline_fn):
    """Ordered map over work units, inline when threads == 1."""
    args = list(args)
    if threads == 1:
        return [inline_fn(a) for a in args]
    chunk = max(1, len(args) // (threads * 4))
    with ProcessPoolExecutor(
        max_workers=threads, initializer=initializer, initargs=initargs
    ) as pool:
        return list(pool.map(task_fn, args, chunksize=chunk))


def run_backtest(panel: ReturnPanel, cfg: BacktestConfig) -> BacktestReport:
    """Full rolling backtest; see the module docstring for the schedule."""
    i0, i1 = _span_indices(panel, cfg.start, cfg.end)
    span = i1 - i0
    n_reb = (span - cfg.dt_in) // cfg.dt_out
    if n_reb < 1:
        raise ConfigError(
            f"panel span of {span} days cannot fit dt_in={cfg.dt_in} plus dt_out={cfg.dt_out}"
        )
    t_ends = [i0 + cfg.dt_in + h * cfg.dt_out for h in range(n_reb)]

    solves = _run_tasks(
        _backtest_window_task,
        t_ends,
        _init_backtest_worker,
        (panel, cfg),
        cfg.threads,
        lambda te: _solve_window(panel, cfg, te),
    )

    row_of = {a: i for i, a in enumerate(panel.assets)}
    labels = cfg.labels
    records: list[WindowRecord] = []
    prev_w: dict[str, Weights | None] = {lab: None for lab in labels}
    prev_te: dict[str, int | None] = {lab: None for lab in labels}

    for t_end, ids, wmap in solves:
        rec_w: dict[str, Weights | None] = {}
        rec_gross: dict[str, np.ndarray | None] = {}
        rec_cost: dict[str, float] = {}
        rec_net: dict[str, np.ndarray | None] = {}
        for lab in labels:
            wt = wmap.get(lab)
            rec_w[lab] = wt
            if wt is None:
                rec_gross[lab] = None
                rec_net[lab] = None
                rec_cost[lab] = 0.0
                prev_w[lab] = None
                prev_te[lab] = None
                continue
            rows = [row_of[a] for a in wt.assets]
            r_out = panel.values[rows, t_end : t_end + cfg.dt_out]
            gross = wt.values @ r_out
            drifted = None
            pw = prev_w[lab]
            if pw is not None and prev_te[lab] == t_end - cfg.dt_out:
                prev_rows = [row_of[a] for a in pw.assets]
                drift_block = panel.values[prev_rows, t_end - cfg.dt_out : t_end]
                drifted = drift_weights(pw, drift_block)
            cost = apply_costs(drifted, wt, cfg.cost_bps)
            net = gross.copy()
            net[0] -= cost
            rec_gross[lab] = gross
            rec_net[lab] = net
            rec_cost[lab] = cost
            prev_w[lab] = wt
            prev_te[lab] = t_end
        records.append(
            WindowRecord(t_end, panel.dates[t_end], ids, rec_w, rec_gross, rec_cost, rec_net)
        )

    metrics, years, yearly_sr, mean_rank = _aggregate(panel, cfg, records)
    wealth_dates, wealth = _wealth_series(panel, cfg, records)
    return BacktestReport(
        cfg,
        tuple(records),
        metrics,
        years,
        yearly_sr,
        mean_rank,
        wealth_dates,
        wealth,
    )


def _aggregate(panel: ReturnPanel, cfg: BacktestConfig, records):
    labels = cfg.labels
    rows: list[MetricRow] = []
    all_years = sorted(
        {int(panel.dates[rec.t_end + j][:4]) for rec in records for j in range(cfg.dt_out)}
    )
    yearly_sr: dict[str, tuple[float, ...]] = {}
    for lab in labels:
        nets = [rec.net[lab] for rec in records if rec.net[lab] is not None]
        weights = [rec.weights[lab] for rec in records if rec.weights[lab] is not None]
        n_success = len(nets)

        vol = sr = math.nan
        if nets:
            net_all = np.concatenate(nets)
            if net_all.size >= 2:
                vol = realized_volatility(net_all)
                sr = sharpe_ratio(net_all)

        n_eff = n_90 = lev = math.nan
        if weights:
            conc = [concentration(w) for w in weights]
            n_eff = float(np.mean([c[0] for c in conc]))
            n_90 = float(np.mean([c[1] for c in conc]))
            lev = float(np.mean([gross_leverage(w) for w in weights]))

        dists = []
        for a, b in zip(records, records[1:]):
            if a.weights[lab] is not None and b.weights[lab] is not None:
                dists.append(turnover_gamma([a.weights[lab], b.weights[lab]]))
        gamma = float(np.mean(dists)) if dists else math.nan

        rows.append(MetricRow(cfg.dt_in, lab, vol, sr, n_eff, n_90, lev, gamma, n_success))

        by_year: dict[int, list[np.ndarray]] = {}
        for rec in records:
            net = rec.net[lab]
            if net is None:
                continue
            for j in range(cfg.dt_out):
                y = int(panel.dates[rec.t_end + j][:4])
                by_year.setdefault(y, []).append(net[j])
        series = []
        for y in all_years:
            obs = np.array(by_year.get(y, []))
            series.append(sharpe_ratio(obs) if obs.size >= 2 else math.nan)
        yearly_sr[lab] = tuple(series)

    ranks = yearly_dense_rank({lab: list(v) for lab, v in yearly_sr.items()}) if all_years else {}
    return tuple(rows), tuple(all_years), yearly_sr, ranks


def _wealth_series(panel: ReturnPanel, cfg: BacktestConfig, records):
    dates: list[str] = []
    for rec in records:
        dates.extend(panel.dates[rec.t_end : rec.t_end + cfg.dt_out])
    wealth: dict[str, np.ndarray] = {}
    for lab in cfg.labels:
        path = np.empty(len(dates))
        level = 1.0
        pos = 0
        for rec in records:
            net = rec.net[lab]
            for j in range(cfg.dt_out):
                if net is not None:
                    level *= 1.0 + net[j]
                # a missing window holds wealth flat (no position)
                path[pos] = level
                pos += 1
        wealth[lab] = path
    return tuple(dates), wealth


# ---------------------------------------------------------------------------
# Random-window experiment: median realized risk and optimal filter order.


@dataclass(frozen=True)
class ExperimentConfig:
    """Randomized evaluation: per repetition draw a window end uniformly,
    draw a fixed-size asset subset from that window's universe, and score
    every estimator's GMV portfolio on the next dt_out days."""

    dt_ins: tuple[int, ...]
    reps: int = 200
    seed: int = 0
    ks: tuple[int, ...] = (1, 2, 3, 4, 7, 11, 18, 30)
    m: int = 100
    subset_size: int = 100
    dt_out: int = 21
    include_eq: bool = False
    include_sample: bool = True
    include_cv: bool = True
    cv_folds: int = 10
    long_only: bool = False
    threads: int = 1
    max_redraws: int = 100
    n_resamples: int = 1000

    def __post_init__(self):
        dt_ins = tuple(int(d) for d in self.dt_ins)
        if not dt_ins or any(d < 2 for d in dt_ins):
            raise ConfigError(f"dt_ins must be >= 2, got {dt_ins}")
        if len(set(dt_ins)) != len(dt_ins):
            raise ConfigError(f"duplicate dt_in values in {dt_ins}")
        ks = tuple(sorted(set(int(k) for k in self.ks)))
        if not ks or ks[0] < 1:
            raise ConfigError(f"filter orders must be >= 1, got {self.ks}")
        for name in ("reps", "m", "subset_size", "dt_out", "threads", "max_redraws", "n_resamples"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        object.__setattr__(self, "dt_ins", dt_ins)
        object.__setattr__(self, "ks", ks)

    @property
    def labels(self) -> tuple[str, ...]:
        out = []
        if self.include_eq:
            out.append("EQ")
        if self.include_sample:
            out.append("Sample")
        if self.include_cv:
            out.append("CV")
        out.extend(f"{k}-BAHC" for k in self.ks)
        return tuple(out)


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    risks: dict[int, dict[str, np.ndarray]]
    medians: dict[int, dict[str, float]]
    argmin_k: dict[int, float]
    kstar_mean: dict[int, float]
    kstar_sd: dict[int, float]
    skipped: dict[int, int]


def _init_experiment_worker(panel: ReturnPanel, ecfg: "ExperimentConfig") -> None:
    global _EXP_STATE
    _EXP_STATE = (panel, ecfg)


def _solve_rep(panel: ReturnPanel, ecfg: ExperimentConfig, di: int, rep: int):
    dt_in = ecfg.dt_ins[di]
    rng = np.random.default_rng(np.random.SeedSequence(entropy=ecfg.seed, spawn_key=(di, rep)))
    lo, hi = dt_in, panel.n_dates - ecfg.dt_out
    chosen = None
    for _ in range(ecfg.max_redraws):
        t_end = int(rng.integers(lo, hi + 1))
        w = WindowSpec(t_end, dt_in, ecfg.dt_out)
        try:
            uni = universe_at(panel, w)
        except EmptyUniverseError:
            continue
        if len(uni) >= ecfg.subset_size:
            chosen = (w, uni)
            break
    if chosen is None:
        return di, rep, None
    w, uni = chosen
    subset = np.sort(rng.choice(np.asarray(uni, dtype=np.intp), ecfg.subset_size, replace=False))
    r_in, r_out = slice_window(panel, w, subset)
    base_seed = int(rng.integers(0, 2**63 - 1))

    def risk_of(sigma) -> float:
        wt = gmv_long_only(sigma) if ecfg.long_only else gmv_long_short(sigma)
        return float((wt.values @ r_out).std() * _ANNUAL)

    risks: dict[str, float] = {}
    if ecfg.include_eq:
        eq = np.full(ecfg.subset_size, 1.0 / ecfg.subset_size)
        risks["EQ"] = float((eq @ r_out).std() * _ANNUAL)
    if ecfg.include_sample:
        try:
            risks["Sample"] = risk_of(sample_covariance(r_in))
        except NumericError:
            risks["Sample"] = math.nan
    if ecfg.include_cv:
        try:
            risks["CV"] = risk_of(cv_eigenvalue_shrinkage(r_in, folds=ecfg.cv_folds))
        except NumericError:
            risks["CV"] = math.nan
    try:
        prof = kbahc_covariance_profile(
            r_in, ecfg.ks, BootstrapPlan(m=ecfg.m, base_seed=base_seed)
        )
    except NumericError:
        prof = None
    for k in ecfg.ks:
        lab = f"{k}-BAHC"
        if prof is None:
            risks[lab] = math.nan
            continue
        try:
            risks[lab] = risk_of(prof[k])
        except NumericError:
            risks[lab] = math.nan
    return di, rep, risks


def _experiment_rep_task(args):
    di, rep = args
    panel, ecfg = _EXP_STATE
    return _solve_rep(panel, ecfg, di, rep)


def random_experiment(panel: ReturnPanel, ecfg: ExperimentConfig) -> ExperimentResult:
    """Monte-Carlo risk comparison over random windows and asset subsets.

    Per (dt_in, estimator) the aggregate is the median annualized realized
    risk across repetitions; the optimal order k* is the per-repetition
    argmin over the k grid, averaged, with a bootstrap-resampled standard
    deviation. Repetitions that cannot seat a full subset after bounded
    redraws are skipped and counted.
    """
    for dt_in in ecfg.dt_ins:
        if panel.n_dates < dt_in + ecfg.dt_out:
            raise ConfigError(
                f"panel has {panel.n_dates} dates, too short for dt_in={dt_in} "
                f"plus dt_out={ecfg.dt_out}"
            )
    tasks = [(di, rep) for di in range(len(ecfg.dt_ins)) for rep in range(ecfg.reps)]
    solves = _run_tasks(
        _experiment_rep_task,
        tasks,
        _init_experiment_worker,
        (panel, ecfg),
        ecfg.threads,
        lambda a: _solve_rep(panel, ecfg, *a),
    )

    labels = ecfg.labels
    risks = {
        dt_in: {lab: np.full(ecfg.reps, np.nan) for lab in labels} for dt_in in ecfg.dt_ins
    }
    skipped = {dt_in: 0 for dt_in in ecfg.dt_ins}
    for di, rep, row in solves:
        dt_in = ecfg.dt_ins[di]
        if row is None:
            skipped[dt_in] += 1
            continue
        for lab in labels:
            risks[dt_in][lab][rep] = row[lab]

    medians: dict[int, dict[str, float]] = {}
    argmin_k: dict[int, float] = {}
    kstar_mean: dict[int, float] = {}
    kstar_sd: dict[int, float] = {}
    for di, dt_in in enumerate(ecfg.dt_ins):
        med = {}
        for lab in labels:
            col = risks[dt_in][lab]
            finite = col[np.isfinite(col)]
            med[lab] = float(np.median(finite)) if finite.size else math.nan
        medians[dt_in] = med

        k_meds = np.array([med[f"{k}-BAHC"] for k in ecfg.ks])
        if np.isfinite(k_meds).any():
            argmin_k[dt_in] = float(ecfg.ks[int(np.nanargmin(k_meds))])
        else:
            argmin_k[dt_in] = math.nan

        k_table = np.stack([risks[dt_in][f"{k}-BAHC"] for k in ecfg.ks])
        kstars = []
        for rep in range(ecfg.reps):
            col = k_table[:, rep]
            finite = np.isfinite(col)
            if not finite.any():
                continue
            masked = np.where(finite, col, np.inf)
            kstars.append(ecfg.ks[int(np.argmin(masked))])
        if kstars:
            arr = np.array(kstars, dtype=np.float64)
            kstar_mean[dt_in] = float(arr.mean())
            boot = np.random.default_rng(
                np.random.SeedSequence(entropy=ecfg.seed, spawn_key=(di, ecfg.reps))
            )
            means = [
                arr[boot.integers(0, arr.size, arr.size)].mean()
                for _ in range(ecfg.n_resamples)
            ]
            kstar_sd[dt_in] = float(np.std(means))
        else:
            kstar_mean[dt_in] = math.nan
            kstar_sd[dt_in] = math.nan
    return ExperimentResult(ecfg, risks, medians, argmin_k, kstar_mean, kstar_sd, skipped)


# ---------------------------------------------------------------------------
# Spectrum experiment: eigenvalue / localization pairs per estimator.


@dataclass(frozen=True)
class SpectraResult:
    """Per estimator label: eigenvalues (descending) of the cleaned
    correlation matrix and the participation ratio of each eigenvector."""

    labels: tuple[str, ...]
    eigenvalues: dict[str, np.ndarray]
    iprs: dict[str, np.ndarray]


def _spectrum_pairs(sym) -> tuple[np.ndarray, np.ndarray]:
    system: EigenSystem = eigendecompose(sym)
    return system.eigenvalues.copy(), ipr(system)


def spectra_experiment(
    panel: ReturnPanel,
    w: WindowSpec,
    ks=(1, 2, 3, 4, 7, 11, 18, 30),
    m: int = 100,
    base_seed: int = 0,
    null_seed: int = 0,
) -> SpectraResult:
    """Correlation spectra of Sample, each filter order, and a per-asset
    shuffled null on one calibration window."""
    uni = universe_at(panel, w)
    r_in, _ = slice_window(panel, w, uni)
    ks = tuple(sorted(set(int(k) for k in ks)))
    if not ks or ks[0] < 1:
        raise ConfigError(f"filter orders must be >= 1, got {ks}")

    eigenvalues: dict[str, np.ndarray] = {}
    iprs: dict[str, np.ndarray] = {}
    labels: list[str] = []

    def add(label: str, sym) -> None:
        vals, prs = _spectrum_pairs(sym)
        labels.append(label)
        eigenvalues[label] = vals
        iprs[label] = prs

    add("Sample", to_correlation(sample_covariance(r_in)))
    prof = kbahc_correlation_profile(r_in, ks, BootstrapPlan(m=m, base_seed=base_seed))
    for k in ks:
        add(f"{k}-BAHC", prof[k])
    add("Null", to_correlation(sample_covariance(shuffled_null_panel(r_in, null_seed))))
    return SpectraResult(tuple(labels), eigenvalues, iprs)


# ---------------------------------------------------------------------------
# CSV export. Floats are written with repr (bit-exact round trip); every
# non-finite value becomes an empty cell.


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if not math.isfinite(x):
        return ""
    return repr(x)


def _write_csv(path, header, rows) -> None:
    path = Path(path)
    lines = [",".join(header)]
    lines.extend(",".join(str(c) for c in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def save_metrics_csv(rows, path) -> None:
    """One row per (dt_in, estimator); the Sharpe column is labeled
    'SR (moment)' because it is the plain moment estimator."""
    out = [
        (
            row.dt_in,
            row.estimator,
            _fmt(row.realized_vol),
            _fmt(row.sharpe),
            _fmt(row.n_eff),
            _fmt(row.n_90),
            _fmt(row.gross_leverage),
            _fmt(row.gamma),
            row.n_windows,
        )
        for row in rows
    ]
    _write_csv(
        path,
        (
            "dt_in",
            "estimator",
            "realized_vol",
            "SR (moment)",
            "n_eff",
            "n_90",
            "gross_leverage",
            "gamma",
            "n_windows",
        ),
        out,
    )


def save_rank_csv(report: BacktestReport, path) -> None:
    """Per-year SR (moment) per estimator plus the mean dense rank."""
    header = ("estimator",) + tuple(str(y) for y in report.years) + ("mean_rank",)
    rows = []
    for lab in report.config.labels:
        cells = [lab]
        cells.extend(_fmt(v) for v in report.yearly_sharpe[lab])
        cells.append(_fmt(report.mean_rank.get(lab)))
        rows.append(tuple(cells))
    _write_csv(path, header, rows)


def save_wealth_csv(report: BacktestReport, path) -> None:
    rows = []
    for lab in report.config.labels:
        path_vals = report.wealth[lab]
        for d, v in zip(report.wealth_dates, path_vals):
            rows.append((d, lab, _fmt(v)))
    _write_csv(path, ("date", "estimator", "wealth"), rows)


def save_weights_csv(report: BacktestReport, path) -> None:
    rows = []
    for rec in report.records:
        for lab in report.config.labels:
            wt = rec.weights[lab]
            if wt is None:
                continue
            for a, v in zip(wt.assets, wt.values):
                rows.append((rec.date, lab, a, _fmt(v)))
    _write_csv(path, ("date", "estimator", "asset", "weight"), rows)


def save_experiment_csv(result: ExperimentResult, path) -> None:
    rows = []
    for dt_in in result.config.dt_ins:
        for lab in result.config.labels:
            col = result.risks[dt_in][lab]
            rows.append(
                (
                    dt_in,
                    lab,
                    _fmt(result.medians[dt_in][lab]),
                    int(np.isfinite(col).sum()),
                )
            )
    _write_csv(path, ("dt_in", "estimator", "median_risk", "valid_reps"), rows)


def save_kstar_csv(result: ExperimentResult, path) -> None:
    rows = [
        (
            dt_in,
            _fmt(result.argmin_k[dt_in]),
            _fmt(result.kstar_mean[dt_in]),
            _fmt(result.kstar_sd[dt_in]),
            result.config.reps - result.skipped[dt_in],
            result.skipped[dt_in],
        )
        for dt_in in result.config.dt_ins
    ]
    _write_csv(
        path,
        ("dt_in", "argmin_k_of_median", "kstar_mean", "kstar_sd", "used_reps", "skipped_reps"),
        rows,
    )


def save_spectra_csv(result: SpectraResult, path) -> None:
    rows = []
    for lab in result.labels:
        for v, p in zip(result.eigenvalues[lab], result.iprs[lab]):
            rows.append((lab, _fmt(v), _fmt(p)))
    _write_csv(path, ("estimator", "eigenvalue", "ipr"), rows)


def save_ipr_ecdf_csv(result: SpectraResult, path) -> None:
    rows = []
    for lab in result.labels:
        vals = np.sort(result.iprs[lab])
        n = vals.size
        for i, v in enumerate(vals):
            rows.append((lab, _fmt(v), _fmt((i + 1) / n)))
    _write_csv(path, ("estimator", "ipr", "cdf"), rows)
