import math

import pytest
from hypothesis import given, settings, strategies as st

from eitmirror.params import (
    EXACT, LINEARIZED, ConfigError, DEFAULT_CONFIG_TEXT, SidebandDrive, TWO_PI_MHZ, default_config,
    derive_quantities, load_config, render, validate,
)


def test_units_are_converted_to_si(fig2):
    assert fig2.atom.omega_c_rabi == pytest.approx(2 * math.pi * 10e6, rel=1e-15)
    assert fig2.atom.gamma_p == pytest.approx(2 * math.pi * 6.1e6, rel=1e-15)
    assert fig2.mirror.omega_m == pytest.approx(2 * math.pi * 8e6, rel=1e-15)
    assert fig2.optics.density == pytest.approx(3.5e18)
    assert fig2.optics.length == pytest.approx(242e-6)
    assert fig2.optics.w_c == pytest.approx(3.2e-3)
    assert fig2.drive.eta == pytest.approx(0.08, rel=1e-14)


def test_derived_quantities_match_hand_values(fig2):
    # d = 6 pi N L / k_p^2 evaluated by hand for Rb-87 D1
    k_p = 2 * math.pi / 794.98e-9
    d = 6 * math.pi * 3.5e18 * 242e-6 / k_p**2
    der = derive_quantities(fig2)
    assert der.optical_depth == pytest.approx(d, rel=1e-12)
    assert der.optical_depth == pytest.approx(255.586, rel=1e-5)
    assert der.a_gain == pytest.approx(d * 6.1 / 0.32, rel=1e-12)
    assert der.f0 == pytest.approx(2 * 2.6e-8 / 299_792_458.0, rel=1e-12)
    assert der.scaled["omega_m"] == pytest.approx(8 / 6.1)


def test_zero_probe_makes_gain_undefined(make_config):
    cfg = make_config("atom.omega_p_mhz=0.0")
    with pytest.raises(ConfigError, match="A undefined at zero probe Rabi frequency"):
        derive_quantities(cfg)


def test_eta_and_z0_stay_consistent():
    d = SidebandDrive.from_eta(0.08, 2 * math.pi / 795e-9)
    assert d.eta == pytest.approx(0.08, rel=1e-15)
    assert d.z0 == pytest.approx(0.08 * 795e-9 / (2 * math.pi))


@pytest.mark.parametrize("text,pattern", [
    (DEFAULT_CONFIG_TEXT.replace("mass_kg = 1e-20", "mass_kg = -1e-20"), "mass must be positive"),
    (DEFAULT_CONFIG_TEXT.replace("mass_kg", "mass_g"), r"unit suffix mismatch .*mirror\.mass_g \(line 8\)"),
    (DEFAULT_CONFIG_TEXT.replace("omega_m_mhz = 8.0", "omega_m_mhz = \"fast\""),
     r"non-numeric value 'fast'.*mirror\.omega_m_mhz \(line 9\)"),
    (DEFAULT_CONFIG_TEXT.replace("omega_c_mhz = 10.0\n", ""), "missing required key 'atom.omega_c'"),
    (DEFAULT_CONFIG_TEXT + "\n[mirror2]\nx = 1\n", r"unknown section \[mirror2\]"),
    (DEFAULT_CONFIG_TEXT.replace("gamma_p_mhz = 6.1", "gamma_p_mhz = 6.1\ncolour = 3"),
     r"unknown key: atom\.colour \(line 6\)"),
    (DEFAULT_CONFIG_TEXT.replace("eta = 0.08", "eta = 0.08\nz0_nm = 10"), "either drive.z0 or drive.eta"),
    (DEFAULT_CONFIG_TEXT.replace("[drive]", "[drive]\nmode = \"cubic\""), "mode must be one of"),
], ids=["negative-mass", "suffix", "non-numeric", "missing", "section", "unknown-key", "z0-and-eta", "mode"])
def test_config_errors_name_the_key(text, pattern):
    with pytest.raises(ConfigError, match=pattern):
        load_config(text)


def test_soft_warnings():
    def messages(*overrides):
        return [v.message for v in validate(load_config(DEFAULT_CONFIG_TEXT, list(overrides)))]

    assert messages() == []
    assert "EIT condition Ω_p ≪ Ω_c violated" in messages("atom.omega_p_mhz=2.0")
    assert any("retardation" in m for m in messages("optics.length_m=1.0"))
    assert any("linearized" in m for m in messages("drive.eta=0.5"))
    assert not any("linearized" in m for m in messages("drive.eta=0.5", f"drive.mode=\"{EXACT}\""))


def test_override_equals_editing_the_file():
    edited = DEFAULT_CONFIG_TEXT.replace("omega_m_mhz = 8.0", "omega_m_mhz = 21.3")
    assert load_config(DEFAULT_CONFIG_TEXT, ["mirror.omega_m_mhz=21.3"]) == load_config(edited)
    # a different spelling of the same key replaces it
    cfg = load_config(DEFAULT_CONFIG_TEXT, [f"mirror.omega_m_rad_s={21.3 * TWO_PI_MHZ!r}"])
    assert cfg.mirror.omega_m == load_config(edited).mirror.omega_m


def test_override_syntax_errors():
    with pytest.raises(ConfigError, match="KEY=VALUE"):
        load_config(DEFAULT_CONFIG_TEXT, ["mirror.omega_m_mhz"])
    with pytest.raises(ConfigError, match="unknown section"):
        load_config(DEFAULT_CONFIG_TEXT, ["nowhere.x=1"])


def test_render_round_trip_default():
    cfg = default_config()
    assert load_config(render(cfg)) == cfg


positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(op=st.floats(0.01, 0.5), oc=positive, dc=st.floats(-100, 100), wm=positive,
       mass=st.floats(1e-22, 1e-15), eta=st.floats(0, 0.3))
def test_render_round_trip_is_bit_exact(op, oc, dc, wm, mass, eta):
    text = DEFAULT_CONFIG_TEXT
    cfg = load_config(text, [f"atom.omega_p_mhz={op!r}", f"atom.omega_c_mhz={oc!r}",
                             f"atom.delta_c_mhz={dc!r}", f"mirror.omega_m_mhz={wm!r}",
                             f"mirror.mass_kg={mass!r}", f"drive.eta={eta!r}"])
    assert load_config(render(cfg)) == cfg


def test_linearized_is_default_mode(fig2):
    assert fig2.drive.mode == LINEARIZED
