"""Parameter grids, a deterministic process-pool sweep engine and map cell evaluators.

Every cell is evaluated from the rendered base config plus ``SECTION.KEY=VALUE``
overrides, i.e. exactly as if the config file had been edited for that cell.
"""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Any, Callable, Sequence

import numpy as np

from . import floquet
from .params import TWO_PI_MHZ, ConfigError, load_config
from .simulate import analysis_start, fmt17, integrate_feedback, integrate_prescribed, lockin

KINDS = ("analytic", "hierarchy", "coupled")
QUANTITIES = ("modulation", "gamma_eff")

COLUMNS = {
    "modulation": ("delta_rho", "alpha_rad", "delta_max_mhz"),
    "gamma_eff": ("delta_c_mhz", "gamma_eff_per_s", "abs_gamma_eff_per_s", "gamma_over_omega_m"),
}


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class Axis:
    key: str  # SECTION.KEY with unit suffix, e.g. "mirror.omega_m_mhz"
    start: float
    stop: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.count < 2:
            raise ValueError(f"axis {self.key}: count must be >= 2, got {self.count}")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"axis {self.key}: scale must be 'linear' or 'log'")
        if self.scale == "log" and not (self.start > 0 and self.stop > 0):
            raise ValueError(f"axis {self.key}: log axis needs positive bounds")
        if self.key.count(".") != 1:
            raise ValueError(f"axis key '{self.key}' must be SECTION.KEY")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    @classmethod
    def parse(cls, text: str) -> "Axis":
        """KEY:START:STOP:COUNT[:log]"""
        parts = text.split(":")
        if len(parts) not in (4, 5):
            raise ValueError(f"axis '{text}': expected KEY:START:STOP:COUNT[:log]")
        scale = parts[4] if len(parts) == 5 else "linear"
        try:
            return cls(parts[0], float(parts[1]), float(parts[2]), int(parts[3]), scale)
        except ValueError as exc:
            raise ValueError(f"axis '{text}': {exc}") from None


@dataclass(frozen=True)
class SweepGrid:
    axes: tuple[Axis, ...]
    kind: str = "analytic"
    quantity: str = "modulation"
    # Gamma_eff maps are evaluated at delta_c = sign * delta_max(omega_m)
    detuning_sign: int = 1

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise ValueError(f"a sweep grid has 1 or 2 axes, got {len(self.axes)}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.quantity not in QUANTITIES:
            raise ValueError(f"quantity must be one of {QUANTITIES}")
        if self.detuning_sign not in (1, -1):
            raise ValueError("detuning_sign must be +1 or -1")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.count for a in self.axes)

    def points(self) -> list[tuple[tuple[int, ...], tuple[float, ...]]]:
        """Row-major (first axis outermost) list of (indices, values)."""
        vals = [a.values() for a in self.axes]
        out = []
        for idx in itertools.product(*(range(a.count) for a in self.axes)):
            out.append((idx, tuple(float(v[i]) for v, i in zip(vals, idx))))
        return out


# ---------------------------------------------------------------------------
# engine
# ---------------------------------------------------------------------------

def _run_chunk(evaluator: Callable, chunk: Sequence[tuple[int, Any]]):
    out = []
    for n, point in chunk:
        try:
            out.append((n, True, evaluator(point)))
        except Exception as exc:  # reported with the cell by the parent
            out.append((n, False, f"{type(exc).__name__}: {exc}"))
            break
    return out


def sweep_engine(points: Sequence[Any], evaluator: Callable, jobs: int = 1,
                 label: Callable[[Any], str] = repr) -> list:
    """Evaluate ``evaluator(point)`` for every point; results come back in input order.

    With ``jobs > 1`` the points are split into contiguous chunks evaluated in
    worker processes; the evaluator must be picklable and pure. The first
    failing point (in input order) aborts the sweep with a :class:`SweepError`
    that names it.
    """
    points = list(points)
    if not points:
        raise SweepError("empty grid: nothing to evaluate")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    indexed = list(enumerate(points))
    if jobs == 1:
        results = _run_chunk(evaluator, indexed)
    else:
        n_chunks = min(len(points), 4 * jobs)
        bounds = np.linspace(0, len(points), n_chunks + 1).round().astype(int)
        chunks = [indexed[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        results = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_chunk, evaluator, c) for c in chunks]
            for chunk, fut in zip(chunks, futures):
                try:
                    results.extend(fut.result())
                except Exception as exc:
                    first, last = chunk[0][0], chunk[-1][0]
                    raise SweepError(f"worker failed while evaluating cells {first}..{last} "
                                     f"(first: {label(chunk[0][1])}): {type(exc).__name__}: {exc}") from exc
    for n, ok, value in results:
        if not ok:
            raise SweepError(f"evaluation failed at cell {n} ({label(points[n])}): {value}")
    if len(results) != len(points):
        raise SweepError("sweep ended early without reporting an error")
    return [value for _, _, value in results]


# ---------------------------------------------------------------------------
# map cells
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellSpec:
    base_text: str
    keys: tuple[str, ...]
    quantity: str
    kind: str
    detuning_sign: int = 1


def cell_overrides(keys: Sequence[str], values: Sequence[float]) -> list[str]:
    return [f"{k}={float(v)!r}" for k, v in zip(keys, values)]


def is_pole(config) -> bool:
    """omega_m = Omega_c / 2 exactly, where delta_max collapses to 0 and alpha is undefined."""
    return config.mirror.omega_m == 0.5 * config.atom.omega_c_rabi


def _modulation_cell(config, kind: str) -> tuple[float, float]:
    atom, w, drive = config.atom, config.mirror.omega_m, config.drive
    if kind == "analytic":
        s = atom.scaled()
        amp, phase = floquet.modulation_map(drive.eta, s["omega_p"], s["omega_c"], w / atom.gamma_p, s["delta_c"])
        return float(amp), float(phase)
    if kind == "hierarchy":
        res = floquet.modulation(floquet.solve_sideband_hierarchy(
            atom, drive.eta, w, order=config.run.truncation, mode=drive.mode))
        return res.amplitude, res.phase
    run = config.run
    t0 = analysis_start(atom, run.transient_gamma, run.settle_efolds)
    t1 = t0 + (run.lockin_periods + 1) * 2 * math.pi / w
    tr = integrate_prescribed(atom, drive, w, (0.0, t1), run.rtol, run.atol,
                              samples_per_period=run.samples_per_period)
    li = lockin(tr.t, tr.im_rho_ge, w, t0, run.lockin_periods)
    return li.amplitude, li.phase


def _gamma_cell(config, kind: str, sign: int) -> tuple[float, float]:
    from dataclasses import replace

    from .simulate import energy_per_period, fit_rate

    atom, mirror = config.atom, config.mirror
    dc = sign * floquet.delta_max(atom, mirror.omega_m)
    if kind in ("analytic", "hierarchy"):
        g = floquet.gamma_eff(atom, mirror, config.optics, dc, method=kind, order=config.run.truncation)
        return dc, g
    cfg = replace(config, atom=atom.with_detuning(dc))
    tr = integrate_feedback(cfg)
    mids, energy = energy_per_period(tr, mirror, config.run.transient_gamma / atom.gamma_p)
    return dc, fit_rate(mids, energy).rate


def evaluate_cell(spec: CellSpec, values: Sequence[float]) -> tuple[float, ...]:
    """Output columns (see COLUMNS) for one grid cell.

    At pole cells the delta_max ridge sits on a zero of the modulation, so the
    ridge column (modulation maps) or the whole cell (Gamma_eff maps) is NaN.
    A phase is NaN wherever the modulation amplitude vanishes identically.
    """
    config = load_config(spec.base_text, cell_overrides(spec.keys, values))
    pole = is_pole(config)
    try:
        if spec.quantity == "modulation":
            amp, phase = _modulation_cell(config, spec.kind)
            ridge = math.nan if pole else floquet.delta_max(config.atom, config.mirror.omega_m) / TWO_PI_MHZ
            return amp, (phase if amp > 0 else math.nan), ridge
        if pole:
            return (math.nan,) * len(COLUMNS[spec.quantity])
        dc, g = _gamma_cell(config, spec.kind, spec.detuning_sign)
        return dc / TWO_PI_MHZ, g, abs(g), g / config.mirror.omega_m
    except floquet.PoleError:
        return (math.nan,) * len(COLUMNS[spec.quantity])


@dataclass(frozen=True)
class MapResult:
    grid: SweepGrid
    points: list
    values: list[tuple[float, ...]]

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(a.key for a in self.grid.axes) + COLUMNS[self.grid.quantity]

    @property
    def nan_cells(self) -> int:
        return sum(1 for v in self.values if any(x != x for x in v))

    def array(self, column: str) -> np.ndarray:
        j = COLUMNS[self.grid.quantity].index(column)
        return np.array([v[j] for v in self.values]).reshape(self.grid.shape)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.columns)
        for (_, coords), vals in zip(self.points, self.values):
            w.writerow([fmt17(x) for x in (*coords, *vals)])


def run_map(base_text: str, grid: SweepGrid, jobs: int = 1) -> MapResult:
    keys = tuple(a.key for a in grid.axes)
    points = grid.points()
    # surface bad axis keys as config errors before any work is scheduled
    try:
        load_config(base_text, cell_overrides(keys, points[0][1]))
    except ConfigError as exc:
        raise ConfigError(f"sweep axis: {exc}") from None
    spec = CellSpec(base_text, keys, grid.quantity, grid.kind, grid.detuning_sign)

    def label(values):
        idx = next(i for i, v in points if v == values)
        return f"indices {idx}, " + ", ".join(f"{k}={v!r}" for k, v in zip(keys, values))

    values = sweep_engine([v for _, v in points], partial(evaluate_cell, spec), jobs, label=label)
    return MapResult(grid, points, values)
