"""Command-line entry point: clean | backtest | experiment | spectra.

Configuration comes from an optional JSON file (--config) overridden by
explicit flags; the fully resolved configuration, seed included, is echoed
to <out>/config.json so any run can be reproduced byte-identically.

Exit codes: 0 all outputs written, 2 configuration error, 3 data error,
4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .backtest import (
    BacktestConfig,
    ExperimentConfig,
    random_experiment,
    run_backtest,
    save_experiment_csv,
    save_ipr_ecdf_csv,
    save_kstar_csv,
    save_metrics_csv,
    save_rank_csv,
    save_spectra_csv,
    save_wealth_csv,
    save_weights_csv,
    spectra_experiment,
)
from .errors import ConfigError, DataError, KbahcError, NumericError
from .estimators import EqualWeightSpec, estimate_covariance, parse_estimators
from .linalg import SymmetricMatrix, save_matrix_csv
from .panel import WindowSpec, load_panel

_GRID_DEFAULT = [1, 2, 3, 4, 7, 11, 18, 30]

_COMMON = {
    "input": None,
    "input_kind": "returns",
    "m": 100,
    "seed": 0,
    "dt_out": 21,
    "estimators": ["eq", "sample", "cv", "kbahc"],
    "out": "kbahc_out",
    "threads": 1,
    "cv_folds": 10,
}

_DEFAULTS = {
    "clean": {**_COMMON, "k": [1], "dt_in": None, "estimators": ["kbahc"]},
    "backtest": {
        **_COMMON,
        "k": list(_GRID_DEFAULT),
        "dt_in": [252],
        "cost_bps": 2.0,
        "long_only": False,
        "start": None,
        "end": None,
    },
    "experiment": {
        **_COMMON,
        "k": list(_GRID_DEFAULT),
        "dt_in": [60, 120, 250, 500],
        "long_only": False,
        "reps": 200,
        "subset_size": 100,
    },
    "spectra": {**_COMMON, "k": list(_GRID_DEFAULT), "dt_in": [252], "dt_out": 1, "t_end": None},
}


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty integer list")
    return vals


def _str_list(text: str) -> list[str]:
    vals = [x.strip() for x in text.split(",") if x.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kbahc",
        description="Covariance cleaning by bootstrap-averaged hierarchical filtering, "
        "with minimum-variance backtests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--input", help="panel CSV (date column + one column per asset)")
        p.add_argument("--input-kind", choices=("prices", "returns"), dest="input_kind")
        p.add_argument("--k", type=_int_list, help="filter orders, comma-separated")
        p.add_argument("--m", type=int, help="bootstrap replicas per estimate")
        p.add_argument("--seed", type=int, help="base random seed")
        p.add_argument("--dt-in", type=_int_list, dest="dt_in", help="calibration lengths, days")
        p.add_argument("--dt-out", type=int, dest="dt_out", help="holding period, days")
        p.add_argument("--estimators", type=_str_list, help="subset of eq,sample,cv,kbahc")
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, help="parallel workers (results identical)")

    p_clean = sub.add_parser("clean", help="estimate one covariance matrix and write it")
    common(p_clean)

    p_bt = sub.add_parser("backtest", help="rolling GMV backtest with costs")
    common(p_bt)
    p_bt.add_argument("--cost-bps", type=float, dest="cost_bps")
    p_bt.add_argument("--long-only", action="store_true", default=None, dest="long_only")
    p_bt.add_argument("--start", help="first panel date to use, ISO")
    p_bt.add_argument("--end", help="last panel date to use, ISO")

    p_exp = sub.add_parser("experiment", help="random-window realized-risk comparison")
    common(p_exp)
    p_exp.add_argument("--long-only", action="store_true", default=None, dest="long_only")
    p_exp.add_argument("--reps", type=int)
    p_exp.add_argument("--subset-size", type=int, dest="subset_size")

    p_sp = sub.add_parser("spectra", help="eigenvalue / localization tables per estimator")
    common(p_sp)
    p_sp.add_argument("--t-end", dest="t_end", help="window end, ISO date or date index")
    return parser


def _load_config_file(path: str, allowed) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown config keys {unknown}; allowed: {sorted(allowed)}")
    return raw


def resolve_config(args: argparse.Namespace) -> dict:
    defaults = _DEFAULTS[args.command]
    resolved = dict(defaults)
    if args.config:
        resolved.update(_load_config_file(args.config, defaults))
    for key in defaults:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            resolved[key] = cli_val
    resolved["command"] = args.command
    if resolved.get("input") is None:
        raise ConfigError("no input panel; pass --input or set 'input' in the config")
    for key in ("k", "dt_in"):
        if isinstance(resolved.get(key), int):
            resolved[key] = [resolved[key]]
    return resolved


def _echo_config(cfg: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _panel(cfg: dict):
    return load_panel(cfg["input"], kind=cfg["input_kind"])


def _estimator_specs(cfg: dict):
    return parse_estimators(
        cfg["estimators"],
        ks=tuple(cfg["k"]),
        m=int(cfg["m"]),
        base_seed=int(cfg["seed"]),
        cv_folds=int(cfg["cv_folds"]),
    )


def cmd_clean(cfg: dict) -> int:
    panel = _panel(cfg)
    specs = [s for s in _estimator_specs(cfg) if not isinstance(s, EqualWeightSpec)]
    if len(specs) != 1:
        raise ConfigError(
            "clean needs exactly one covariance estimator; "
            f"got {[s.label for s in specs]} (narrow --estimators or --k)"
        )
    dt_in = cfg["dt_in"]
    t = panel.n_dates if dt_in is None else int(dt_in[0])
    if not 2 <= t <= panel.n_dates:
        raise ConfigError(f"dt_in must lie in [2, {panel.n_dates}], got {t}")
    block = panel.available[:, panel.n_dates - t :]
    uni = np.nonzero(block.all(axis=1))[0]
    if uni.size == 0:
        raise DataError(f"no asset has full availability over the last {t} dates")
    ids = tuple(panel.assets[i] for i in uni)
    r_in = panel.values[uni, panel.n_dates - t :]
    sigma: SymmetricMatrix = estimate_covariance(specs[0], r_in, labels=ids)
    out = Path(cfg["out"])
    _echo_config(cfg, out)
    save_matrix_csv(sigma, out / "cleaned.csv")
    print(f"wrote {out / 'cleaned.csv'} ({specs[0].label}, {len(ids)} assets, {t} days)")
    return 0


def cmd_backtest(cfg: dict) -> int:
    panel = _panel(cfg)
    specs = _estimator_specs(cfg)
    out = Path(cfg["out"])
    _echo_config(cfg, out)
    all_rows = []
    for dt_in in cfg["dt_in"]:
        bt_cfg = BacktestConfig(
            dt_in=int(dt_in),
            dt_out=int(cfg["dt_out"]),
            cost_bps=float(cfg["cost_bps"]),
            long_only=bool(cfg["long_only"]),
            estimators=specs,
            start=cfg["start"],
            end=cfg["end"],
            threads=int(cfg["threads"]),
        )
        report = run_backtest(panel, bt_cfg)
        all_rows.extend(report.metrics)
        save_rank_csv(report, out / f"rank_dt{dt_in}.csv")
        save_wealth_csv(report, out / f"wealth_dt{dt_in}.csv")
        save_weights_csv(report, out / f"weights_dt{dt_in}.csv")
    save_metrics_csv(all_rows, out / "metrics.csv")
    print(f"wrote {out}/metrics.csv and per-dt_in rank/wealth/weights files")
    return 0


def cmd_experiment(cfg: dict) -> int:
    panel = _panel(cfg)
    names = [n.strip().lower() for n in cfg["estimators"]]
    bad = sorted(set(names) - {"eq", "sample", "cv", "kbahc"})
    if bad:
        raise ConfigError(f"unknown estimator names {bad}")
    if "kbahc" not in names:
        raise ConfigError("the experiment compares filter orders; 'kbahc' must be included")
    ecfg = ExperimentConfig(
        dt_ins=tuple(int(d) for d in cfg["dt_in"]),
        reps=int(cfg["reps"]),
        seed=int(cfg["seed"]),
        ks=tuple(cfg["k"]),
        m=int(cfg["m"]),
        subset_size=int(cfg["subset_size"]),
        dt_out=int(cfg["dt_out"]),
        include_eq="eq" in names,
        include_sample="sample" in names,
        include_cv="cv" in names,
        cv_folds=int(cfg["cv_folds"]),
        long_only=bool(cfg["long_only"]),
        threads=int(cfg["threads"]),
    )
    result = random_experiment(panel, ecfg)
    out = Path(cfg["out"])
    _echo_config(cfg, out)
    save_experiment_csv(result, out / "risk_medians.csv")
    save_kstar_csv(result, out / "kstar.csv")
    print(f"wrote {out}/risk_medians.csv and {out}/kstar.csv")
    return 0


def cmd_spectra(cfg: dict) -> int:
    panel = _panel(cfg)
    if len(cfg["dt_in"]) != 1:
        raise ConfigError(f"spectra uses a single dt_in, got {cfg['dt_in']}")
    dt_in = int(cfg["dt_in"][0])
    dt_out = int(cfg["dt_out"])
    raw_te = cfg["t_end"]
    if raw_te is None:
        t_end = panel.n_dates - dt_out
    else:
        try:
            t_end = int(raw_te)
        except (TypeError, ValueError):
            try:
                t_end = panel.dates.index(str(raw_te))
            except ValueError:
                raise ConfigError(f"t_end {raw_te!r} is not a panel date") from None
    w = WindowSpec(t_end=t_end, dt_in=dt_in, dt_out=dt_out)
    result = spectra_experiment(
        panel,
        w,
        ks=tuple(cfg["k"]),
        m=int(cfg["m"]),
        base_seed=int(cfg["seed"]),
        null_seed=int(cfg["seed"]),
    )
    out = Path(cfg["out"])
    _echo_config(cfg, out)
    save_spectra_csv(result, out / "spectra.csv")
    save_ipr_ecdf_csv(result, out / "ipr_ecdf.csv")
    print(f"wrote {out}/spectra.csv and {out}/ipr_ecdf.csv")
    return 0


_COMMANDS = {
    "clean": cmd_clean,
    "backtest": cmd_backtest,
    "experiment": cmd_experiment,
    "spectra": cmd_spectra,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except KbahcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
