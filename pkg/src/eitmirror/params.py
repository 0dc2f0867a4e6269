"""Physical parameters, unit handling and the config document format.

Internal units are SI with angular frequencies in rad/s. Config files are
flat TOML documents with sections ``[atom]``, ``[mirror]``, ``[optics]``,
``[drive]`` and ``[run]``; every physical key carries a unit suffix, e.g.
``omega_m_mhz = 8.0`` means ``omega_m = 2*pi*8e6 rad/s``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from typing import Any

import tomli

C_LIGHT = 299_792_458.0
HBAR = 1.054_571_817e-34
TWO_PI_MHZ = 2.0 * math.pi * 1e6
RB87_D1_WAVELENGTH = 794.98e-9

LINEARIZED = "linearized"
EXACT = "exact-exponential"
DRIVE_MODES = (LINEARIZED, EXACT)

# ratio above which a "much smaller than" condition is reported as a warning
SOFT_RATIO = 0.1
LINEARIZED_ETA_WARN = 0.3


class ConfigError(ValueError):
    """Invalid config document or parameter set."""


@dataclass(frozen=True)
class AtomDriveParams:
    omega_p_rabi: float
    omega_c_rabi: float
    delta_c: float
    gamma_p: float
    # +1 gives drho/dt = +i[H, rho] + D[rho]; -1 the textbook -i[H, rho] convention
    commutator_sign: int = 1

    @property
    def eit_regime(self) -> bool:
        return self.omega_p_rabi < self.omega_c_rabi and self.omega_p_rabi < self.gamma_p

    def scaled(self) -> dict[str, float]:
        g = self.gamma_p
        return {
            "omega_p": self.omega_p_rabi / g,
            "omega_c": self.omega_c_rabi / g,
            "delta_c": self.delta_c / g,
        }

    def with_detuning(self, delta_c: float) -> "AtomDriveParams":
        return replace(self, delta_c=delta_c)


@dataclass(frozen=True)
class MirrorParams:
    mass: float
    omega_m: float
    # hook for clamping losses; zero (disabled) unless set explicitly
    intrinsic_damping: float = 0.0


@dataclass(frozen=True)
class OpticsParams:
    k_p: float
    k_c: float
    density: float
    length: float
    w_p0: float
    w_c: float


@dataclass(frozen=True)
class SidebandDrive:
    """Constant-amplitude mirror motion z0*cos(omega_m t) seen by the control beam.

    ``eta`` is always computed from ``z0`` and ``k_c`` so the two cannot
    drift apart.
    """

    z0: float
    k_c: float
    mode: str = LINEARIZED

    @property
    def eta(self) -> float:
        return self.k_c * self.z0

    @classmethod
    def from_eta(cls, eta: float, k_c: float, mode: str = LINEARIZED) -> "SidebandDrive":
        return cls(z0=eta / k_c, k_c=k_c, mode=mode)


@dataclass(frozen=True)
class RunParams:
    truncation: int = 1
    rtol: float = 1e-8
    atol: float = 1e-12
    transient_gamma: float = 5.0
    # analysis also waits this many e-folds of the slowest Liouvillian mode; 0 disables
    settle_efolds: float = 15.0
    lockin_periods: int = 10
    samples_per_period: int = 64
    feedback_periods: int = 400
    # |Gamma_eff| / omega_m to scale W_p0 to before a feedback run; 0 disables
    target_rate: float = 0.0
    feedback_gain: float = 1.0


@dataclass(frozen=True)
class SimConfig:
    atom: AtomDriveParams
    mirror: MirrorParams
    optics: OpticsParams
    drive: SidebandDrive
    run: RunParams = field(default_factory=RunParams)


@dataclass(frozen=True)
class DerivedParams:
    optical_depth: float
    a_gain: float
    f0: float
    eta: float
    scaled: dict[str, float]


@dataclass(frozen=True)
class Violation:
    severity: str  # "error" | "warning"
    key: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.key}: {self.message}"


# ---------------------------------------------------------------------------
# key grammar
# ---------------------------------------------------------------------------

_FREQ = {"mhz": TWO_PI_MHZ, "rad_s": 1.0}
_LENGTH = {"m": 1.0, "um": 1e-6, "nm": 1e-9}
_POWER = {"w": 1.0, "mw": 1e-3, "uw": 1e-6}
_PLAIN = {"": 1.0}

# section -> base key -> allowed unit suffixes (factor to SI)
_GRAMMAR: dict[str, dict[str, dict[str, float]]] = {
    "atom": {
        "omega_p": _FREQ,
        "omega_c": _FREQ,
        "delta_c": _FREQ,
        "gamma_p": _FREQ,
        "commutator_sign": _PLAIN,
    },
    "mirror": {
        "mass": {"kg": 1.0},
        "omega_m": _FREQ,
        "intrinsic_damping": _FREQ,
    },
    "optics": {
        "probe_wavelength": _LENGTH,
        "control_wavelength": _LENGTH,
        "density": {"per_m3": 1.0, "per_cm3": 1e6},
        "length": _LENGTH,
        "w_p0": _POWER,
        "w_c": _POWER,
    },
    "drive": {
        "z0": _LENGTH,
        "eta": _PLAIN,
        "mode": _PLAIN,
    },
    "run": {name: _PLAIN for name in (f.name for f in fields(RunParams))},
}

_REQUIRED = {
    "atom": ("omega_p", "omega_c", "delta_c", "gamma_p"),
    "mirror": ("mass", "omega_m"),
    "optics": ("density", "length", "w_p0", "w_c"),
    "drive": (),
    "run": (),
}

_STRING_KEYS = {("drive", "mode")}
_INT_KEYS = {("atom", "commutator_sign"), ("run", "truncation"), ("run", "lockin_periods"),
             ("run", "samples_per_period"), ("run", "feedback_periods")}

DEFAULT_ETA = 0.08

# keys that set the same quantity; an override of one replaces the others
_ALIASES = {("drive", "z0"): {"z0", "eta"}, ("drive", "eta"): {"z0", "eta"}}


def _split_key(section: str, key: str) -> tuple[str, str]:
    """Return (base, suffix) for a config key, or raise with a useful message."""
    grammar = _GRAMMAR[section]
    if key in grammar and "" in grammar[key]:
        return key, ""
    for base in sorted(grammar, key=len, reverse=True):
        if key.startswith(base + "_"):
            suffix = key[len(base) + 1:]
            if suffix not in grammar[base]:
                allowed = ", ".join(f"_{s}" if s else "(none)" for s in grammar[base])
                raise KeyError(f"unit suffix mismatch for '{base}': got _{suffix}, expected one of {allowed}")
            return base, suffix
        if key == base:
            allowed = ", ".join(f"_{s}" for s in grammar[base])
            raise KeyError(f"unit suffix mismatch for '{base}': missing suffix, expected one of {allowed}")
    raise KeyError("unknown key")


def _line_of(text: str, section: str | None, key: str | None = None) -> int | None:
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        m = re.fullmatch(r"\[\s*([A-Za-z0-9_.-]+)\s*\]", line)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return lineno
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*=", line):
            return lineno
    return None


def _where(text: str, section: str, key: str | None = None) -> str:
    path = f"{section}.{key}" if key else section
    line = _line_of(text, section, key)
    return f"{path} (line {line})" if line else path


class _Where:
    """Key location, resolved only when an error message is formatted."""

    def __init__(self, text: str, section: str, key: str):
        self.args = (text, section, key)

    def __str__(self) -> str:
        return _where(*self.args)

    def __format__(self, spec: str) -> str:
        return format(str(self), spec)


def _parse_override(item: str) -> tuple[str, str, Any]:
    if "=" not in item:
        raise ConfigError(f"override '{item}': expected KEY=VALUE")
    path, value = item.split("=", 1)
    path = path.strip()
    if path.count(".") != 1:
        raise ConfigError(f"override '{item}': key must be SECTION.KEY")
    section, key = path.split(".")
    try:
        parsed = tomli.loads(f"v = {value.strip()}")["v"]
    except tomli.TOMLDecodeError:
        # bare words such as mode=linearized
        parsed = value.strip()
    return section, key, parsed


def load_config(text: str, overrides: list[str] | tuple[str, ...] = ()) -> SimConfig:
    """Parse a config document into a validated :class:`SimConfig`.

    ``overrides`` are ``SECTION.KEY=VALUE`` strings applied on top of the
    document exactly as if the file had been edited.
    """
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from None

    for item in overrides:
        section, key, value = _parse_override(item)
        if section not in _GRAMMAR:
            raise ConfigError(f"override '{item}': unknown section [{section}]")
        table = doc.setdefault(section, {})
        # replace any existing spelling of the same base key
        try:
            base, _ = _split_key(section, key)
        except KeyError as exc:
            raise ConfigError(f"override {section}.{key}: {exc.args[0]}") from None
        slot = _ALIASES.get((section, base), {base})
        for existing in list(table):
            try:
                if _split_key(section, existing)[0] in slot:
                    del table[existing]
            except KeyError:
                pass
        table[key] = value

    values: dict[str, dict[str, Any]] = {s: {} for s in _GRAMMAR}
    for section, table in doc.items():
        if section not in _GRAMMAR:
            raise ConfigError(f"unknown section [{section}] at {_where(text, section)}")
        if not isinstance(table, dict):
            raise ConfigError(f"'{section}' must be a section, at {_where(text, section)}")
        for key, raw in table.items():
            where = _Where(text, section, key)
            try:
                base, suffix = _split_key(section, key)
            except KeyError as exc:
                raise ConfigError(f"{exc.args[0]}: {where}") from None
            if base in values[section]:
                raise ConfigError(f"duplicate value for '{base}': {where}")
            if (section, base) in _STRING_KEYS:
                if not isinstance(raw, str):
                    raise ConfigError(f"expected a string: {where}")
                values[section][base] = raw
                continue
            if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                raise ConfigError(f"non-numeric value {raw!r}: {where}")
            if (section, base) in _INT_KEYS:
                if float(raw) != int(raw):
                    raise ConfigError(f"expected an integer: {where}")
                values[section][base] = int(raw)
            else:
                values[section][base] = float(raw) * _GRAMMAR[section][base][suffix]

    for section, required in _REQUIRED.items():
        for base in required:
            if base not in values[section]:
                raise ConfigError(f"missing required key '{section}.{base}' ({_where(text, section) if section in doc else 'section absent'})")

    a, m, o, d, r = (values[s] for s in ("atom", "mirror", "optics", "drive", "run"))
    atom = AtomDriveParams(a["omega_p"], a["omega_c"], a["delta_c"], a["gamma_p"],
                           commutator_sign=a.get("commutator_sign", 1))
    mirror = MirrorParams(m["mass"], m["omega_m"], m.get("intrinsic_damping", 0.0))
    lam_p = o.get("probe_wavelength", RB87_D1_WAVELENGTH)
    lam_c = o.get("control_wavelength", lam_p)
    optics = OpticsParams(k_p=2.0 * math.pi / lam_p, k_c=2.0 * math.pi / lam_c,
                          density=o["density"], length=o["length"], w_p0=o["w_p0"], w_c=o["w_c"])
    mode = d.get("mode", LINEARIZED)
    if "z0" in d and "eta" in d:
        raise ConfigError(f"give either drive.z0 or drive.eta, not both: {_where(text, 'drive')}")
    if "z0" in d:
        drive = SidebandDrive(z0=d["z0"], k_c=optics.k_c, mode=mode)
    else:
        drive = SidebandDrive.from_eta(d.get("eta", DEFAULT_ETA), optics.k_c, mode=mode)
    run = RunParams(**r)
    config = SimConfig(atom, mirror, optics, drive, run)

    errors = [v for v in validate(config) if v.severity == "error"]
    if errors:
        raise ConfigError("; ".join(f"{v.key}: {v.message}" for v in errors))
    return config


def _fmt(x: float) -> str:
    return repr(float(x))


def _freq_entry(base: str, value: float) -> str:
    # MHz is friendlier, but only if it round-trips bit-exactly
    f = value / TWO_PI_MHZ
    for _ in range(4):
        if f * TWO_PI_MHZ == value:
            return f"{base}_mhz = {_fmt(f)}"
        f = math.nextafter(f, math.inf if f * TWO_PI_MHZ < value else -math.inf)
    return f"{base}_rad_s = {_fmt(value)}"


def _length_entry(base: str, k: float) -> str:
    # wavelengths are stored as wavenumbers; emit the wavelength that maps back exactly
    lam = 2.0 * math.pi / k
    for _ in range(4):
        if 2.0 * math.pi / lam == k:
            break
        lam = math.nextafter(lam, math.inf if 2.0 * math.pi / lam > k else -math.inf)
    return f"{base}_m = {_fmt(lam)}"


def render(config: SimConfig) -> str:
    """Serialize a config so that ``load_config(render(c)) == c``."""
    a, m, o, d, r = config.atom, config.mirror, config.optics, config.drive, config.run
    lines = [
        "[atom]",
        _freq_entry("omega_p", a.omega_p_rabi),
        _freq_entry("omega_c", a.omega_c_rabi),
        _freq_entry("delta_c", a.delta_c),
        _freq_entry("gamma_p", a.gamma_p),
        f"commutator_sign = {a.commutator_sign}",
        "",
        "[mirror]",
        f"mass_kg = {_fmt(m.mass)}",
        _freq_entry("omega_m", m.omega_m),
        _freq_entry("intrinsic_damping", m.intrinsic_damping),
        "",
        "[optics]",
        _length_entry("probe_wavelength", o.k_p),
        _length_entry("control_wavelength", o.k_c),
        f"density_per_m3 = {_fmt(o.density)}",
        f"length_m = {_fmt(o.length)}",
        f"w_p0_w = {_fmt(o.w_p0)}",
        f"w_c_w = {_fmt(o.w_c)}",
        "",
        "[drive]",
        f"z0_m = {_fmt(d.z0)}",
        f'mode = "{d.mode}"',
        "",
        "[run]",
    ]
    for f in fields(RunParams):
        v = getattr(r, f.name)
        lines.append(f"{f.name} = {v}" if isinstance(v, int) else f"{f.name} = {_fmt(v)}")
    return "\n".join(lines) + "\n"


def derive_quantities(config: SimConfig) -> DerivedParams:
    atom, optics = config.atom, config.optics
    if atom.omega_p_rabi == 0:
        raise ConfigError("A undefined at zero probe Rabi frequency")
    d = 6.0 * math.pi * optics.density * optics.length / optics.k_p**2
    scaled = atom.scaled()
    scaled["omega_m"] = config.mirror.omega_m / atom.gamma_p
    return DerivedParams(
        optical_depth=d,
        a_gain=d * atom.gamma_p / atom.omega_p_rabi,
        f0=2.0 * optics.w_p0 / C_LIGHT,
        eta=config.drive.eta,
        scaled=scaled,
    )


def validate(config: SimConfig) -> list[Violation]:
    """Hard invariant violations (``error``) and soft regime warnings."""
    out: list[Violation] = []

    def err(key: str, msg: str) -> None:
        out.append(Violation("error", key, msg))

    def warn(key: str, msg: str) -> None:
        out.append(Violation("warning", key, msg))

    a, m, o, d = config.atom, config.mirror, config.optics, config.drive
    if not a.gamma_p > 0:
        err("atom.gamma_p", "gamma_p must be positive")
    if not a.omega_p_rabi >= 0:
        err("atom.omega_p", "omega_p must be non-negative")
    if not a.omega_c_rabi >= 0:
        err("atom.omega_c", "omega_c must be non-negative")
    if not math.isfinite(a.delta_c):
        err("atom.delta_c", "delta_c must be finite")
    if a.commutator_sign not in (1, -1):
        err("atom.commutator_sign", "commutator_sign must be +1 or -1")
    if not m.mass > 0:
        err("mirror.mass", "mass must be positive")
    if not m.omega_m > 0:
        err("mirror.omega_m", "omega_m must be positive")
    if not m.intrinsic_damping >= 0:
        err("mirror.intrinsic_damping", "intrinsic_damping must be non-negative")
    for name in ("k_p", "k_c", "density", "length", "w_p0", "w_c"):
        if not getattr(o, name) > 0:
            err(f"optics.{name}", f"{name} must be positive")
    if d.mode not in DRIVE_MODES:
        err("drive.mode", f"mode must be one of {', '.join(DRIVE_MODES)}")
    if not d.z0 >= 0:
        err("drive.z0", "z0 must be non-negative")
    r = config.run
    if not 1 <= r.truncation <= 4:
        err("run.truncation", "truncation order must be between 1 and 4")
    if not (r.rtol > 0 and r.atol > 0):
        err("run.rtol", "tolerances must be positive")
    if r.samples_per_period < 8 or r.lockin_periods < 1 or r.feedback_periods < 2:
        err("run", "samples_per_period >= 8, lockin_periods >= 1, feedback_periods >= 2 required")
    if out:
        return out

    if a.omega_p_rabi > SOFT_RATIO * a.omega_c_rabi:
        warn("atom.omega_p", "EIT condition Ω_p ≪ Ω_c violated")
    if a.omega_p_rabi > SOFT_RATIO * a.gamma_p:
        warn("atom.omega_p", "weak-probe condition Ω_p ≪ Γ_p violated")
    if o.length * m.omega_m / C_LIGHT > SOFT_RATIO:
        warn("optics.length", "retardation condition L ≪ c/ω_m violated")
    if d.mode == LINEARIZED and d.eta > LINEARIZED_ETA_WARN:
        warn("drive.eta", f"linearized control factor used with eta = {d.eta:.3g} > {LINEARIZED_ETA_WARN}")
    return out


def default_config() -> SimConfig:
    """Fig.-2 drive parameters with the Rb-87 medium and powers quoted for the maps."""
    return load_config(DEFAULT_CONFIG_TEXT)


DEFAULT_CONFIG_TEXT = """\
[atom]
omega_p_mhz = 0.32
omega_c_mhz = 10.0
delta_c_mhz = 4.13
gamma_p_mhz = 6.1

[mirror]
mass_kg = 1e-20
omega_m_mhz = 8.0

[optics]
probe_wavelength_m = 794.98e-9
density_per_cm3 = 3.5e12
length_um = 242.0
w_p0_uw = 2.6e-2
w_c_mw = 3.2

[drive]
eta = 0.08
"""
