"""Dated return panels: CSV ingest, windowed views, availability filtering.

File format: CSV, UTF-8, one header row. The first column holds ISO-8601
dates, the remaining columns one asset each. Empty cells mark missing
observations. A prices file is converted to close-to-close simple returns
``r_t = p_t / p_{t-1} - 1`` on load, dropping the first date; a return is
available only when both surrounding prices are.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyUniverseError, MissingDataError, ParseError

__all__ = [
    "ReturnPanel",
    "WindowSpec",
    "load_panel",
    "save_panel",
    "universe_at",
    "slice_window",
]


@dataclass(frozen=True)
class ReturnPanel:
    """Immutable n_assets x n_dates matrix of daily returns with a mask of
    valid observations. Unavailable cells hold NaN."""

    dates: tuple[str, ...]
    assets: tuple[str, ...]
    values: np.ndarray
    available: np.ndarray

    def __post_init__(self):
        dates = tuple(str(d) for d in self.dates)
        assets = tuple(str(a) for a in self.assets)
        vals = np.array(self.values, dtype=np.float64)
        mask = np.array(self.available, dtype=bool)
        if vals.shape != (len(assets), len(dates)):
            raise ValueError(
                f"values shape {vals.shape} does not match "
                f"{len(assets)} assets x {len(dates)} dates"
            )
        if mask.shape != vals.shape:
            raise ValueError("availability mask shape must match values")
        if len(set(assets)) != len(assets):
            raise ValueError("asset identifiers must be unique")
        parsed = [date.fromisoformat(d) for d in dates]
        for prev, cur in zip(parsed, parsed[1:]):
            if cur <= prev:
                raise ValueError(f"dates must be strictly increasing, got {prev} then {cur}")
        if mask.any() and not np.isfinite(vals[mask]).all():
            raise ValueError("available entries must be finite")
        vals[~mask] = np.nan
        vals.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "assets", assets)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "available", mask)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def n_dates(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class WindowSpec:
    """Calibration window [t_end - dt_in, t_end) and test window
    [t_end, t_end + dt_out), both as date-index ranges."""

    t_end: int
    dt_in: int
    dt_out: int

    def __post_init__(self):
        if self.dt_in < 2:
            raise ConfigError(f"dt_in must be >= 2, got {self.dt_in}")
        if self.dt_out < 1:
            raise ConfigError(f"dt_out must be >= 1, got {self.dt_out}")

    def check_fits(self, panel: ReturnPanel) -> None:
        if self.t_end - self.dt_in < 0 or self.t_end + self.dt_out > panel.n_dates:
            raise ConfigError(
                f"window [{self.t_end - self.dt_in}, {self.t_end + self.dt_out}) "
                f"does not fit a panel with {panel.n_dates} dates"
            )


def _parse_cell(text: str, row: int, column: str) -> float:
    cell = text.strip()
    if cell == "":
        return np.nan
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(
            f"row {row}, column {column!r}: could not parse {cell!r} as a number"
        ) from None
    if not np.isfinite(value):
        raise ParseError(
            f"row {row}, column {column!r}: non-finite value {cell!r} "
            "(use an empty cell for missing data)"
        )
    return value


def load_panel(path, kind: str = "returns") -> ReturnPanel:
    """Read a wide CSV of prices or returns into a ReturnPanel.

    ``kind`` is "prices" or "returns". Row numbers in error messages are
    1-based and count the header.
    """
    if kind not in ("prices", "returns"):
        raise ConfigError(f"kind must be 'prices' or 'returns', got {kind!r}")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    rows = list(csv.reader(text.splitlines()))
    if not rows or len(rows[0]) < 2:
        raise ParseError(f"{path}: expected a header row with a date column and at least one asset")
    assets = tuple(c.strip() for c in rows[0][1:])
    if len(set(assets)) != len(assets):
        dupes = sorted({a for a in assets if assets.count(a) > 1})
        raise ParseError(f"{path}: duplicate asset columns {dupes}")
    if any(a == "" for a in assets):
        raise ParseError(f"{path}: blank asset id in header")
    dates: list[str] = []
    data: list[list[float]] = []
    prev: date | None = None
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(assets) + 1:
            raise ParseError(
                f"row {i}: expected {len(assets) + 1} cells, got {len(row)}"
            )
        raw = row[0].strip()
        try:
            d = date.fromisoformat(raw)
        except ValueError:
            raise ParseError(f"row {i}, column 'date': invalid ISO date {raw!r}") from None
        if prev is not None and d <= prev:
            kind_ = "duplicate" if d == prev else "out-of-order"
            raise ParseError(f"row {i}: {kind_} date {raw}")
        prev = d
        dates.append(d.isoformat())
        data.append([_parse_cell(c, i, assets[j]) for j, c in enumerate(row[1:])])
    if not dates:
        raise ParseError(f"{path}: no data rows")
    values = np.array(data, dtype=np.float64).T  # assets x dates

    if kind == "prices":
        if len(dates) < 2:
            raise ParseError(f"{path}: need at least 2 dates to compute returns from prices")
        with np.errstate(invalid="ignore"):
            if np.nanmin(values, initial=np.inf) <= 0.0:
                i, j = np.argwhere(values <= 0.0)[0]
                raise ParseError(
                    f"non-positive price for {assets[i]} on {dates[j]}"
                )
        returns = values[:, 1:] / values[:, :-1] - 1.0
        mask = np.isfinite(values[:, 1:]) & np.isfinite(values[:, :-1])
        return ReturnPanel(tuple(dates[1:]), assets, returns, mask)
    return ReturnPanel(tuple(dates), assets, values, np.isfinite(values))


def save_panel(panel: ReturnPanel, path) -> None:
    """Write a returns panel in the load_panel format. Finite values are
    written with repr so a reload is bit-identical; missing cells are empty."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("date",) + panel.assets)
        for j, d in enumerate(panel.dates):
            row = [d]
            for i in range(panel.n_assets):
                row.append(repr(float(panel.values[i, j])) if panel.available[i, j] else "")
            writer.writerow(row)


def universe_at(panel: ReturnPanel, w: WindowSpec) -> list[int]:
    """Indices of assets observed on every date of both windows."""
    w.check_fits(panel)
    block = panel.available[:, w.t_end - w.dt_in : w.t_end + w.dt_out]
    idx = np.nonzero(block.all(axis=1))[0]
    if idx.size == 0:
        raise EmptyUniverseError(
            f"no asset has full availability over [{panel.dates[w.t_end - w.dt_in]}, "
            f"{panel.dates[w.t_end + w.dt_out - 1]}]"
        )
    return [int(i) for i in idx]


def slice_window(
    panel: ReturnPanel, w: WindowSpec, assets
) -> tuple[np.ndarray, np.ndarray]:
    """Dense (in_sample, out_sample) return blocks for the given asset
    indices, in the order given. Any masked entry in the block is an error;
    pick assets with universe_at first."""
    w.check_fits(panel)
    idx = np.asarray(list(assets), dtype=np.intp)
    if idx.size == 0:
        raise EmptyUniverseError("empty asset selection")
    if idx.min() < 0 or idx.max() >= panel.n_assets:
        raise ConfigError(f"asset index out of range 0..{panel.n_assets - 1}")
    block_mask = panel.available[idx, w.t_end - w.dt_in : w.t_end + w.dt_out]
    if not block_mask.all():
        i, j = np.argwhere(~block_mask)[0]
        raise MissingDataError(
            f"asset {panel.assets[idx[i]]} has no observation on "
            f"{panel.dates[w.t_end - w.dt_in + j]}; restrict to universe_at"
        )
    r_in = panel.values[idx, w.t_end - w.dt_in : w.t_end].copy()
    r_out = panel.values[idx, w.t_end : w.t_end + w.dt_out].copy()
    return r_in, r_out
