import math
from dataclasses import replace

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permdip.params import (
    Physical,
    RateModel,
    SystemParams,
    check_regime,
    derive_dressed,
    frames,
    spontaneous_rate,
)

omegas = st.floats(0.5, 500)
deltas = st.floats(-1000, 1000)


def test_resonant_dressing():
    f = derive_dressed(SystemParams(Omega=45, Delta=0, G=16, omega=100))
    assert f.theta == math.pi / 4
    assert f.Omega_bar == 45
    assert f.G_bar == 4
    assert f.Delta_bar == -5
    assert f.Gamma_minus == 0


def test_off_resonant_dressing_high_precision():
    mp.mp.dps = 40
    f = derive_dressed(SystemParams(Omega=45, Delta=38.7, G=16, omega=100))
    Ob = mp.sqrt(mp.mpf(45) ** 2 + (mp.mpf("38.7") / 2) ** 2)
    th = mp.atan2(90, mp.mpf("38.7")) / 2
    assert f.Omega_bar == pytest.approx(float(Ob), rel=1e-15)
    assert f.theta == pytest.approx(float(th), rel=1e-15)
    assert f.G_bar == pytest.approx(float(4 * mp.sin(2 * th)), rel=1e-14)
    assert f.Gamma_plus == pytest.approx(float(mp.sin(th) ** 4 + mp.cos(th) ** 4), rel=1e-14)
    assert f.Gamma_minus == pytest.approx(float(mp.sin(th) ** 4 - mp.cos(th) ** 4), rel=1e-13)


def test_zero_coupling_at_resonance():
    f = derive_dressed(SystemParams(Omega=45, Delta=0, G=0, omega=100))
    assert f.G_bar == 0 and f.Gamma_minus == 0


def test_zero_rabi_rejected():
    with pytest.raises(ValueError, match="Omega"):
        derive_dressed(SystemParams(Omega=0, Delta=1, G=1, omega=10))


@pytest.mark.parametrize("kw", [dict(omega=0), dict(N=0), dict(G=-1), dict(Omega=-1),
                                dict(gamma_ref=0), dict(Delta=math.inf)])
def test_params_validation(kw):
    base = dict(Omega=1, Delta=0, G=1, omega=1)
    base.update(kw)
    with pytest.raises(ValueError):
        SystemParams(**base)


def test_shifted_detuning():
    p = SystemParams(Omega=45, Delta=0, G=16, omega=100, shifted=True)
    assert derive_dressed(p).Delta_bar == pytest.approx(-5 + 16 / 200)


@settings(max_examples=200, deadline=None)
@given(omegas, deltas)
def test_dressing_identities(Omega, Delta):
    f = derive_dressed(SystemParams(Omega=Omega, Delta=Delta, G=1, omega=1))
    assert 0 < f.theta < math.pi / 2
    assert f.Omega_bar**2 == pytest.approx(Omega**2 + Delta**2 / 4, rel=1e-14)
    # tan(2 theta) Delta = 2 Omega, cross-multiplied so tiny Delta stays well conditioned
    scale = f.Omega_bar
    assert Delta * math.sin(2 * f.theta) == pytest.approx(2 * Omega * math.cos(2 * f.theta),
                                                          abs=1e-14 * scale)
    s, c = math.sin(f.theta), math.cos(f.theta)
    assert f.Gamma_minus == pytest.approx(s**4 - c**4, abs=1e-12)
    assert f.Gamma_plus > 0 and f.Gamma > 0
    g = derive_dressed(SystemParams(Omega=Omega, Delta=-Delta, G=1, omega=1))
    assert g.theta == pytest.approx(math.pi / 2 - f.theta, abs=1e-14)
    assert g.Omega_bar == f.Omega_bar


def test_theta_decreasing_in_detuning():
    th = [derive_dressed(SystemParams(Omega=45, Delta=d, G=0, omega=1)).theta
          for d in np.linspace(-500, 500, 2001)]
    assert np.all(np.diff(th) < 0)


def test_double_dressed_zero_dephasing_rate():
    # Delta = 0 gives theta = pi/4; Omega_bar = omega/2 gives Delta_bar = 0, phi = pi/4
    f, g = frames(SystemParams(Omega=50, Delta=0, G=16, omega=100))
    assert g.phi == pytest.approx(math.pi / 4)
    assert g.Gammaplus_bar == pytest.approx(3 / 8)
    assert g.Gammaminus_bar == pytest.approx(3 / 8)
    assert g.x == pytest.approx(1) and g.eta == pytest.approx(0, abs=1e-15)


def test_double_dressed_rates_hand_values():
    f, g = frames(SystemParams(Omega=50, Delta=0, G=16, omega=100))
    # cos 2phi = 0 kills the first term of Gamma0 but not the sideband term
    # sin^2 2phi (cos^4 theta + sin^4 theta)/4 = (1/4 + 1/4)/4
    assert g.Gamma0_bar == pytest.approx(1 / 8)
    assert g.Gamma_s == pytest.approx(4 / 8 + 3 / 4)


@settings(max_examples=100, deadline=None)
@given(st.floats(5, 100), st.floats(-200, 200), st.floats(0.5, 40), st.floats(10, 300))
def test_double_dressed_identities(Omega, Delta, G, omega):
    p = SystemParams(Omega=Omega, Delta=Delta, G=G, omega=omega)
    f, g = frames(p)
    assert g.G_R**2 == pytest.approx(f.Delta_bar**2 + f.G_bar**2, rel=1e-12)
    assert g.Gamma_s == pytest.approx(4 * g.Gamma0_bar + g.Gammaplus_bar + g.Gammaminus_bar)
    assert 0 < g.phi < math.pi / 2
    if f.Delta_bar != 0:
        assert f.G_bar / math.tan(2 * g.phi) == pytest.approx(f.Delta_bar, rel=1e-8, abs=1e-10)
    # equal rates: Gamma+ - Gamma- collapses to cos2phi cos2theta
    assert g.Gammaplus_bar - g.Gammaminus_bar == pytest.approx(g.cos2phi * f.cos2theta, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(5, 100), st.floats(-200, 200), st.floats(0.5, 40), st.floats(0.1, 20))
def test_detuning_flip_exchanges_rates(Omega, Delta, G, a):
    Ob = math.hypot(Omega, Delta / 2)
    if Ob - a <= 0:
        return
    p1 = SystemParams(Omega=Omega, Delta=Delta, G=G, omega=2 * (Ob - a))   # Delta_bar = +a
    p2 = SystemParams(Omega=Omega, Delta=Delta, G=G, omega=2 * (Ob + a))   # Delta_bar = -a
    _, g1 = frames(p1)
    _, g2 = frames(p2)
    assert g2.phi == pytest.approx(math.pi / 2 - g1.phi, abs=1e-12)
    assert g1.Gammaplus_bar == pytest.approx(g2.Gammaminus_bar, rel=1e-10)
    assert g1.Gammaminus_bar == pytest.approx(g2.Gammaplus_bar, rel=1e-10)


def test_vanishing_splitting_rejected():
    p = SystemParams(Omega=50, Delta=0, G=0, omega=100)
    with pytest.raises(ValueError, match="G_R"):
        frames(p)


def test_cubic_rates_need_physical_block():
    p = SystemParams(Omega=45, Delta=10, G=16, omega=100, rate_model=RateModel.CUBIC)
    with pytest.raises(ValueError, match="physical"):
        frames(p)


def test_cubic_rates_close_to_equal_for_optical_carrier():
    phys = Physical(d=1.0, omegaL=4.8e15)
    p = SystemParams(Omega=45, Delta=10, G=16, omega=100, rate_model="cubic", physical=phys)
    _, g = frames(p)
    _, ge = frames(replace(p, rate_model=RateModel.EQUAL))
    scale = spontaneous_rate(4.8e15, 1.0) / p.gamma_ref
    # offsets of a few hundred gamma are negligible against an optical carrier
    assert g.Gammaplus_bar == pytest.approx(scale * ge.Gammaplus_bar, rel=1e-6)
    assert g.Gamma_s == pytest.approx(4 * g.Gamma0_bar + g.Gammaplus_bar + g.Gammaminus_bar)


def test_spontaneous_rate_anchor():
    assert spontaneous_rate(4.8e15, 1.0) == pytest.approx(2.6e6, rel=0.05)


def test_spontaneous_rate_scaling():
    w = 3.1e15
    assert spontaneous_rate(2 * w, 1.0) / spontaneous_rate(w, 1.0) == pytest.approx(8, rel=1e-14)
    assert spontaneous_rate(w, 2.0) / spontaneous_rate(w, 1.0) == pytest.approx(4, rel=1e-14)


@pytest.mark.parametrize("w,d", [(0, 1), (-1, 1), (1e15, 0)])
def test_spontaneous_rate_preconditions(w, d):
    with pytest.raises(ValueError):
        spontaneous_rate(w, d)


def test_regime_fixture_figure1_resonance():
    # G_R = sqrt(25 + 16) ~ 6.4 < 10: only the double-dressed splitting condition binds
    v = check_regime(SystemParams(Omega=45, Delta=0, G=16, omega=100))
    assert [x.name for x in v] == ["G_R >> gamma(omega~)"]
    assert v[0].lhs == pytest.approx(math.sqrt(41))
    assert v[0].margin == pytest.approx(math.sqrt(41) - 10)


def test_regime_weak_drive():
    names = [v.name for v in check_regime(SystemParams(Omega=0.5, Delta=0, G=0, omega=100))]
    assert "Omega_bar >> gamma" in names


def test_regime_weak_threshold():
    assert check_regime(SystemParams(Omega=45, Delta=0, G=16, omega=100), K=1) == []


def test_regime_flags_strong_coupling_separately():
    names = [v.name for v in check_regime(SystemParams(Omega=5, Delta=0, G=30, omega=1000), K=1)]
    assert "Omega_bar > G" in names
    assert "omega >> G_bar" not in names


def test_regime_never_raises_at_zero_drive():
    assert check_regime(SystemParams(Omega=0, Delta=0, G=0, omega=1))
