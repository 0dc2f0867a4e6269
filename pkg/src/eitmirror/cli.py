"""Command-line front end.

    eitmirror [--config PATH] [--out DIR] [--override SECTION.KEY=VALUE ...]
              [--jobs N] [--gate AMP_REL,PHASE_RAD] {steady,sidebands,map,coupled,resonance}

Exit codes: 0 success, 1 invalid config or arguments, 2 numerical failure,
3 acceptance-gate failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import floquet
from .liouvillian import E, G, SteadyStateError, dressed_gaps, steady_state
from .params import (
    TWO_PI_MHZ, ConfigError, DEFAULT_CONFIG_TEXT, SimConfig, derive_quantities, load_config, render,
    validate,
)
from .simulate import (
    IntegrationError, analysis_start, energy_per_period, fit_rate, fmt17, integrate_feedback,
    integrate_prescribed, lockin, scaled_optics,
)
from .sweep import Axis, CellSpec, MapResult, SweepError, SweepGrid, evaluate_cell, run_map

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_GATE = 0, 1, 2, 3

DEFAULT_GATE = (0.02, 0.05)
# amplitudes below this count as "no modulation" when gating
ZERO_AMPLITUDE = 1e-8
TRANSPARENCY_TOL = 1e-10


class GateFailure(Exception):
    pass


@dataclass(frozen=True)
class MapPreset:
    overrides: tuple[str, ...]
    axes: tuple[Axis, ...]
    quantity: str
    cuts_mhz: tuple[float, ...] = ()


PRESETS = {
    # delta_rho and alpha over (omega_m, delta_c)
    "fig3": MapPreset(
        ("atom.omega_c_mhz=64.0", "drive.eta=0.08"),
        (Axis("mirror.omega_m_mhz", 10.0, 60.0, 101), Axis("atom.delta_c_mhz", -120.0, 120.0, 201)),
        "modulation",
        (21.3, 32.0, 48.0, 56.0),
    ),
    # Gamma_eff at delta_c = delta_max over (M, omega_m)
    "fig5a": MapPreset(
        ("atom.omega_c_mhz=64.0",),
        (Axis("mirror.mass_kg", 1e-21, 1e-17, 100, "log"), Axis("mirror.omega_m_mhz", 10.0, 100.0, 100)),
        "gamma_eff",
    ),
    # Gamma_eff at delta_c = delta_max over (Omega_p, Omega_c); Omega_p kept below 0.1 Gamma_p
    "fig5b": MapPreset(
        ("mirror.omega_m_mhz=20.0", "mirror.mass_kg=1e-20"),
        (Axis("atom.omega_p_mhz", 0.05, 0.6, 100), Axis("atom.omega_c_mhz", 10.0, 100.0, 100)),
        "gamma_eff",
    ),
}


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

class Report:
    def __init__(self, out: Path, name: str, quiet: bool = False):
        self.out, self.name, self.quiet = out, name, quiet
        self.lines: list[str] = []

    def __call__(self, line: str = "") -> None:
        self.lines.append(line)
        if not self.quiet:
            print(line)

    def save(self) -> Path:
        path = self.out / f"{self.name}_summary.txt"
        path.write_text("\n".join(self.lines) + "\n", encoding="utf-8")
        return path


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([x if isinstance(x, str) else fmt17(x) for x in row])


def dump_derived(config: SimConfig) -> str:
    """Resolved config plus derived quantities; identical for identical configs."""
    buf = io.StringIO()
    buf.write(render(config))
    if config.atom.omega_p_rabi > 0:
        d = derive_quantities(config)
        buf.write("\n[derived]\n")
        buf.write(f"optical_depth = {d.optical_depth!r}\n")
        buf.write(f"a_gain = {d.a_gain!r}\n")
        buf.write(f"f0_n = {d.f0!r}\n")
        buf.write(f"eta = {d.eta!r}\n")
        for k in sorted(d.scaled):
            buf.write(f"scaled_{k} = {d.scaled[k]!r}\n")
    return buf.getvalue()


def mhz(x: float) -> float:
    return x / TWO_PI_MHZ


def phase_error(a: float, b: float) -> float:
    return abs(floquet.wrap_phase(a - b))


def svg_heatmap(values: np.ndarray, path: Path, title: str = "") -> None:
    """Minimal diverging heatmap (first axis down, second across); NaN cells grey."""
    v = np.asarray(values, dtype=float)
    ny, nx = v.shape
    cell = max(2, 400 // max(nx, ny))
    finite = v[np.isfinite(v)]
    lim = float(np.max(np.abs(finite))) if finite.size else 1.0
    lim = lim or 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{nx * cell}" height="{ny * cell + 20}">',
             f'<text x="2" y="14" font-size="12">{title}</text>']
    for i in range(ny):
        for j in range(nx):
            x = v[i, j]
            if not math.isfinite(x):
                col = "#999999"
            else:
                s = max(-1.0, min(1.0, x / lim))
                hi, lo = 255, int(255 * (1 - abs(s)))
                col = f"#{hi:02x}{lo:02x}{lo:02x}" if s > 0 else f"#{lo:02x}{lo:02x}{hi:02x}"
            parts.append(f'<rect x="{j * cell}" y="{20 + i * cell}" width="{cell}" height="{cell}" fill="{col}"/>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_steady(config: SimConfig, out: Path, rep: Report) -> int:
    atom = config.atom
    note = ""
    try:
        rho = steady_state(atom)
    except SteadyStateError:
        if atom.omega_c_rabi != 0:
            raise
        # |s> decouples without the control field; report the driven g-e manifold
        rho = steady_state(atom, levels=("g", "e"))
        note = "control field off: two-level absorption (|s> decoupled)"
    two_level = steady_state(replace(atom, omega_c_rabi=0.0), levels=("g", "e"))
    coh = complex(rho[G, E])
    rep(f"steady state  Omega_p={mhz(atom.omega_p_rabi):.6g} Omega_c={mhz(atom.omega_c_rabi):.6g} "
        f"Delta_c={mhz(atom.delta_c):.6g} Gamma_p={mhz(atom.gamma_p):.6g} (MHz*2pi)")
    if note:
        rep(note)
    rep(f"populations gg={rho[0, 0].real:.10g} ss={rho[1, 1].real:.10g} ee={rho[2, 2].real:.10g}")
    rep(f"rho_ge = {coh.real:.10g} {coh.imag:+.10g}i")
    rep(f"two-level reference rho''_ge = {two_level[G, E].imag:.10g}")
    if two_level[G, E].imag != 0:
        rep(f"absorption relative to two-level = {coh.imag / two_level[G, E].imag:.6g}")
    transparent = abs(coh.imag) < TRANSPARENCY_TOL
    rep("perfect transparency (|rho''_ge| < 1e-10)" if transparent else "medium absorbs")
    rows = [(f"{i}{j}", rho[i, j].real, rho[i, j].imag) for i in range(3) for j in range(3)]
    if atom.omega_p_rabi > 0:
        d = derive_quantities(config)
        chi = d.a_gain * coh
        rep(f"k_p L chi = {chi.real:.10g} {chi.imag:+.10g}i  (optical depth {d.optical_depth:.6g})")
        rep(f"probe transmission W_p/W_p0 = {math.exp(-chi.imag):.10g}")
    if atom.omega_c_rabi > 0:
        spec = dressed_gaps(atom)
        rep("dressed gaps (MHz*2pi): " + ", ".join(f"{mhz(g):.6g}" for g in spec.gaps))
    write_csv(out / "steady.csv", ("element", "re", "im"), rows)
    return EXIT_OK


def _compare(name_a, a, name_b, b):
    amp_ref = max(abs(b.amplitude), 0.0)
    if amp_ref <= ZERO_AMPLITUDE and abs(a.amplitude) <= ZERO_AMPLITUDE:
        return name_a, name_b, 0.0, 0.0
    rel = abs(a.amplitude - b.amplitude) / amp_ref if amp_ref > 0 else math.inf
    return name_a, name_b, rel, phase_error(a.phase, b.phase)


def _brute_lockin(config: SimConfig, eta: float):
    atom, w, run = config.atom, config.mirror.omega_m, config.run
    drive = replace(config.drive, z0=eta / config.drive.k_c)
    t0 = analysis_start(atom, run.transient_gamma, run.settle_efolds)
    # one spare period so the window end is always covered by samples
    t1 = t0 + (run.lockin_periods + 1) * 2 * math.pi / w
    tr = integrate_prescribed(atom, drive, w, (0.0, t1), run.rtol, run.atol,
                              samples_per_period=run.samples_per_period, mirror=config.mirror)
    return tr, lockin(tr.t, tr.im_rho_ge, w, t0, run.lockin_periods)


def cmd_sidebands(config: SimConfig, out: Path, rep: Report, gate=DEFAULT_GATE,
                  eta_sweep: list[float] | None = None) -> int:
    atom, w, drive, run = config.atom, config.mirror.omega_m, config.drive, config.run
    eta = drive.eta
    trace, li = _brute_lockin(config, eta)
    trace.to_csv(out / "sidebands_trace.csv")
    hier = floquet.modulation(floquet.solve_sideband_hierarchy(atom, eta, w, order=run.truncation,
                                                               mode=drive.mode))
    ana = floquet.analytic_modulation(atom, eta, w)
    methods = {
        "brute_force": li,
        f"hierarchy_K{run.truncation}": hier,
        "analytic": ana,
    }
    rep(f"sideband response  eta={eta:.6g} omega_m={mhz(w):.6g} Delta_c={mhz(atom.delta_c):.6g} "
        f"mode={drive.mode}")
    rep(f"lock-in window starts at t = {li.window[0] * atom.gamma_p:.4g}/Gamma_p, {li.window[1]} periods")
    for name, m in methods.items():
        rep(f"  {name:14s} offset={m.offset:.10g} amplitude={m.amplitude:.10g} phase={m.phase:+.6f} rad")
    names = list(methods)
    comps = [_compare(names[0], li, names[1], hier), _compare(names[0], li, names[2], ana),
             _compare(names[1], hier, names[2], ana)]
    failed = False
    for a, b, rel, dph in comps:
        ok = rel <= gate[0] and dph <= gate[1]
        failed |= not ok
        rep(f"  {a} vs {b}: amplitude rel err {rel:.3e}, phase err {dph:.3e} rad  "
            f"[{'ok' if ok else 'FAIL'}]")
    write_csv(out / "sidebands.csv", ("method", "offset", "amplitude", "phase_rad"),
              [(n, m.offset, m.amplitude, m.phase) for n, m in methods.items()])
    write_csv(out / "sidebands_errors.csv", ("method_a", "method_b", "amp_rel_err", "phase_err_rad"), comps)

    if eta_sweep:
        rows = []
        for e in eta_sweep:
            _, l = _brute_lockin(config, e)
            h = floquet.modulation(floquet.solve_sideband_hierarchy(atom, e, w, order=run.truncation,
                                                                    mode=drive.mode))
            rows.append((e, l.amplitude, l.phase, h.amplitude, h.phase))
        arr = np.array(rows)
        fit = linear_fit(arr[:, 0], arr[:, 1])
        write_csv(out / "eta_sweep.csv", ("eta", "amp_brute", "phase_brute", "amp_hierarchy", "phase_hierarchy"),
                  rows)
        rep(f"eta sweep {', '.join(f'{e:g}' for e in eta_sweep)}: slope={fit[0]:.6g} "
            f"intercept={fit[1]:.3e} R^2={fit[2]:.8f}")
    if failed:
        raise GateFailure(f"sideband methods disagree beyond gate {gate[0]:g} rel / {gate[1]:g} rad")
    return EXIT_OK


def linear_fit(x, y) -> tuple[float, float, float]:
    """(slope, intercept, R^2) of an ordinary least-squares line."""
    from scipy.stats import linregress

    res = linregress(np.asarray(x, float), np.asarray(y, float))
    return float(res.slope), float(res.intercept), float(res.rvalue**2)


def cmd_coupled(config: SimConfig, out: Path, rep: Report, rate_tol: float = 0.1) -> int:
    atom, mirror, run = config.atom, config.mirror, config.run
    trace = integrate_feedback(config)
    trace.to_csv(out / "coupled_trace.csv")
    t_fit = run.transient_gamma / atom.gamma_p
    mids, energy = energy_per_period(trace, mirror, t_fit)
    fit = fit_rate(mids, energy)
    optics = config.optics
    if run.target_rate > 0:
        optics, _ = scaled_optics(config, run.target_rate)
    predicted = run.feedback_gain * floquet.gamma_eff(atom, mirror, optics)
    write_csv(out / "coupled_energy.csv", ("t_mid_s", "energy_j"), zip(mids, energy))
    noise = max(10.0 * fit.stderr, 1e-7 * mirror.omega_m)
    if fit.rate > noise:
        verdict = "damped"
    elif fit.rate < -noise:
        verdict = "amplified"
    else:
        verdict = "neutral"
    rep(f"coupled run  Delta_c={mhz(atom.delta_c):.6g} omega_m={mhz(mirror.omega_m):.6g} "
        f"M={mirror.mass:.6g} kg  {len(trace.t)} samples")
    rep(f"W_p0 = {trace.metadata['w_p0']:.6g} W (scale {trace.metadata['w_p0_scale']:.6g})")
    rep(f"fitted energy rate Gamma_fit = {fit.rate:.6g} 1/s (stderr {fit.stderr:.2e}, R^2 {fit.r_squared:.8f})")
    rep(f"predicted Gamma_eff = {predicted:.6g} 1/s  ({predicted / mirror.omega_m:.4g} omega_m)")
    rep(f"noise floor {noise:.3g} 1/s -> {verdict}")
    ok = True
    if predicted != 0 and verdict != "neutral":
        ratio = fit.rate / predicted
        ok = abs(ratio - 1.0) <= rate_tol
        rep(f"ratio Gamma_fit/Gamma_eff = {ratio:.6f}  [{'ok' if ok else 'FAIL'}]")
    elif predicted != 0 or verdict != "neutral":
        ok = False
        rep("prediction and fit disagree on whether the mirror is driven  [FAIL]")
    if not ok:
        raise GateFailure(f"coupled rate outside tolerance {rate_tol:g}")
    return EXIT_OK


def cmd_resonance(config: SimConfig, out: Path, rep: Report) -> int:
    atom, w = config.atom, config.mirror.omega_m
    spec = dressed_gaps(atom)
    dm = floquet.delta_max(atom, w)
    rows = [
        ("delta_max_formula_mhz", mhz(dm)),
        ("delta_max_approx_mhz", mhz(floquet.delta_max_approx(atom.omega_c_rabi, w))),
        ("delta_max_numeric_mhz", mhz(floquet.delta_max_numeric(atom, w))),
        ("dressed_resonance_mhz", mhz(floquet.dressed_resonance_detuning(atom, w))),
    ]
    rep(f"dressed states at Delta_c={mhz(atom.delta_c):.6g} (MHz*2pi)")
    for j, e in enumerate(spec.energies):
        tag = " (dark)" if j == spec.dark_index else ""
        rep(f"  E_{j} = {mhz(e):.8g}{tag}")
    rep("  gaps: " + ", ".join(f"{mhz(g):.8g}" for g in spec.gaps))
    rep(f"omega_m = {mhz(w):.6g}, Omega_c/2 = {mhz(atom.omega_c_rabi) / 2:.6g}")
    for k, v in rows:
        rep(f"  {k} = {v:.8g}")
    rows += [(f"energy_{j}_mhz", mhz(e)) for j, e in enumerate(spec.energies)]
    rows += [(f"gap_{j}_mhz", mhz(g)) for j, g in enumerate(spec.gaps)]
    write_csv(out / "resonance.csv", ("quantity", "value"), rows)
    return EXIT_OK


def crosscheck(result: MapResult, base_text: str, n: int = 10, seed: int = 0):
    """Re-evaluate n random finite cells with the hierarchy; rows of (cell, analytic, hierarchy, rel)."""
    col = "delta_rho" if result.grid.quantity == "modulation" else "gamma_eff_per_s"
    vals = result.array(col).ravel()
    finite = np.flatnonzero(np.isfinite(vals) & (vals != 0))
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(finite, size=min(n, finite.size), replace=False))
    keys = tuple(a.key for a in result.grid.axes)
    spec = CellSpec(base_text, keys, result.grid.quantity, "hierarchy", result.grid.detuning_sign)
    j = 0 if col == "delta_rho" else 1
    rows = []
    for p in picks:
        coords = result.points[p][1]
        h = evaluate_cell(spec, coords)[j]
        rows.append((int(p), *coords, float(vals[p]), h, abs(h - vals[p]) / abs(vals[p])))
    return rows


def cmd_map(config_text: str, overrides: list[str], out: Path, rep: Report, jobs: int,
            preset: str | None, axes: list[str], quantity: str, kind: str, sign: int,
            cuts: list[float] | None, n_check: int, seed: int, gate=DEFAULT_GATE, svg: bool = False) -> int:
    if preset:
        p = PRESETS[preset]
        all_overrides = list(p.overrides) + list(overrides)
        grid_axes = tuple(Axis.parse(a) for a in axes) if axes else p.axes
        quantity = p.quantity
        if cuts is None:
            cuts = list(p.cuts_mhz)
    else:
        all_overrides = list(overrides)
        if not axes:
            raise ConfigError("map needs --preset or at least one --axis")
        grid_axes = tuple(Axis.parse(a) for a in axes)
    config = load_config(config_text, all_overrides)
    base = render(config)
    grid = SweepGrid(grid_axes, kind=kind, quantity=quantity, detuning_sign=sign)
    result = run_map(base, grid, jobs)
    name = preset or "map"
    with open(out / f"{name}.csv", "w", newline="", encoding="utf-8") as fh:
        result.write_csv(fh)
    rep(f"map {name}: {' x '.join(str(a.count) for a in grid.axes)} cells, kind={kind}, "
        f"quantity={quantity}, jobs={jobs}")
    rep(f"NaN cells: {result.nan_cells}")
    main_col = "delta_rho" if quantity == "modulation" else "gamma_eff_per_s"
    if svg and len(grid.axes) == 2:
        svg_heatmap(result.array(main_col), out / f"{name}.svg", f"{name} {main_col}")

    if quantity == "modulation" and len(grid.axes) == 2 and grid.axes[1].key.startswith("atom.delta_c"):
        ridge_report(result, rep)
    if cuts:
        for c in cuts:
            write_cut(base, grid, c, out / f"{name}_cut_omega_m_{c:g}MHz.csv", jobs)
        rep("cuts at omega_m = " + ", ".join(f"{c:g}" for c in cuts) + " MHz*2pi")

    failed = False
    if n_check > 0 and kind == "analytic":
        rows = crosscheck(result, base, n_check, seed)
        keys = tuple(a.key for a in grid.axes)
        write_csv(out / f"{name}_crosscheck.csv", ("cell", *keys, "analytic", "hierarchy", "rel_err"), rows)
        worst = max(r[-1] for r in rows) if rows else 0.0
        failed = worst > gate[0]
        rep(f"cross-check {len(rows)} random cells (seed {seed}) analytic vs hierarchy: "
            f"max rel err {worst:.3e}  [{'FAIL' if failed else 'ok'}]")
    if failed:
        raise GateFailure("analytic and hierarchy maps disagree beyond the amplitude gate")
    return EXIT_OK


def ridge_report(result: MapResult, rep: Report) -> None:
    """Per-row argmax over |delta_c| compared with the closed-form ridge."""
    dcs = result.grid.axes[1].values()
    step = float(np.min(np.diff(dcs)))
    amp = result.array("delta_rho")
    ridge = result.array("delta_max_mhz")[:, 0]
    pos = dcs >= 0
    within = 0
    rows = 0
    for i in range(amp.shape[0]):
        if not np.isfinite(ridge[i]):
            continue
        row = np.where(np.isfinite(amp[i, pos]), amp[i, pos], -np.inf)
        peak = dcs[pos][int(np.argmax(row))]
        rows += 1
        within += abs(peak - abs(ridge[i])) <= step
    rep(f"ridge: argmax |Delta_c| within one grid step ({step:.4g} MHz) of |Delta_max| in {within}/{rows} rows")


def write_cut(base: str, grid: SweepGrid, omega_m_mhz: float, path: Path, jobs: int) -> None:
    dc_axis = next((a for a in grid.axes if a.key.startswith("atom.delta_c")),
                   Axis("atom.delta_c_mhz", -120.0, 120.0, 481))
    cut_base = render(load_config(base, [f"mirror.omega_m_mhz={float(omega_m_mhz)!r}"]))
    cols = {}
    for kind in ("analytic", "hierarchy"):
        cols[kind] = run_map(cut_base, SweepGrid((dc_axis,), kind=kind, quantity="modulation"), jobs)
    rows = []
    for (_, (dc,)), a, h in zip(cols["analytic"].points, cols["analytic"].values, cols["hierarchy"].values):
        rows.append((dc, a[0], a[1], h[0], h[1]))
    write_csv(path, ("delta_c_mhz", "delta_rho_analytic", "alpha_analytic", "delta_rho_hierarchy",
                     "alpha_hierarchy"), rows)


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _gate(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected AMP_REL,PHASE_RAD") from None
    if a < 0 or b < 0:
        raise argparse.ArgumentTypeError("gate values must be non-negative")
    return a, b


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    sup = argparse.SUPPRESS
    common.add_argument("--config", type=Path, default=sup, help="TOML config (default: built-in)")
    common.add_argument("--out", type=Path, default=sup, help="output directory (default: out)")
    common.add_argument("--override", action="append", default=sup, metavar="SECTION.KEY=VALUE")
    common.add_argument("--jobs", type=int, default=sup, help="worker processes for sweeps")
    common.add_argument("--gate", type=_gate, default=sup, metavar="AMP_REL,PHASE_RAD")
    common.add_argument("--quiet", action="store_true", default=sup)

    parser = _Parser(prog="eitmirror", description=__doc__.split("\n")[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("steady", parents=[common], help="steady state, susceptibility, dressed gaps")
    sp = sub.add_parser("sidebands", parents=[common], help="brute force vs hierarchy vs closed form")
    sp.add_argument("--eta-sweep", type=_floats, default=None, metavar="E1,E2,...")
    mp = sub.add_parser("map", parents=[common], help="parameter maps of the modulation or Gamma_eff")
    mp.add_argument("--preset", choices=sorted(PRESETS))
    mp.add_argument("--axis", action="append", default=[], metavar="KEY:START:STOP:COUNT[:log]")
    mp.add_argument("--quantity", choices=("modulation", "gamma_eff"), default="modulation")
    mp.add_argument("--kind", choices=("analytic", "hierarchy", "coupled"), default="analytic")
    mp.add_argument("--detuning-sign", type=int, choices=(1, -1), default=1,
                    help="Gamma_eff maps use Delta_c = sign * Delta_max")
    mp.add_argument("--cuts", type=_floats, default=None, metavar="MHZ,...")
    mp.add_argument("--check", type=int, default=10, help="random cells cross-checked against the hierarchy")
    mp.add_argument("--seed", type=int, default=0)
    mp.add_argument("--svg", action="store_true")
    cp = sub.add_parser("coupled", parents=[common], help="mirror + medium feedback run")
    cp.add_argument("--rate-tol", type=float, default=0.1)
    sub.add_parser("resonance", parents=[common], help="dressed-state gaps and Delta_max")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    opts = vars(args)
    out = Path(opts.get("out", "out"))
    overrides = list(opts.get("override", []))
    jobs = int(opts.get("jobs", 1))
    gate = opts.get("gate", DEFAULT_GATE)
    quiet = bool(opts.get("quiet", False))
    name = (args.preset or "map") if args.command == "map" else args.command
    rep = Report(out, name, quiet)
    try:
        if jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        text = opts["config"].read_text(encoding="utf-8") if "config" in opts else DEFAULT_CONFIG_TEXT
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "map":
            code = cmd_map(text, overrides, out, rep, jobs, args.preset, args.axis, args.quantity,
                           args.kind, args.detuning_sign, args.cuts, args.check, args.seed, gate, args.svg)
        else:
            config = load_config(text, overrides)
            for v in validate(config):
                rep(f"warning: {v.key}: {v.message}")
            (out / "derived.txt").write_text(dump_derived(config), encoding="utf-8")
            if args.command == "steady":
                code = cmd_steady(config, out, rep)
            elif args.command == "sidebands":
                code = cmd_sidebands(config, out, rep, gate, args.eta_sweep)
            elif args.command == "coupled":
                code = cmd_coupled(config, out, rep, args.rate_tol)
            else:
                code = cmd_resonance(config, out, rep)
    # LinAlgError is a ValueError, so the numerical clause must come first
    except (SteadyStateError, IntegrationError, SweepError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GateFailure as exc:
        rep(f"GATE FAILED: {exc}")
        rep.save()
        return EXIT_GATE
    rep.save()
    return code


if __name__ == "__main__":
    sys.exit(main())
