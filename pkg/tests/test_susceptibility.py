import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permdip.double_dressed import collective_inversion
from permdip.params import Physical, SystemParams, frames
from permdip.susceptibility import (
    ExtractionError,
    Spectrum,
    chi_closed_form,
    default_grid,
    dielectric_prefactor,
    extract_dipole_difference,
    field_for_dipole_difference,
    fit_lorentzians,
    kramers_kronig_real,
    line_centers,
    local_extrema,
    refractive_index,
    spectrum,
    susceptibility_prefactor,
)

FIG3A = SystemParams(Omega=45, Delta=38.7, G=16, omega=100)
FIG3B = replace(FIG3A, Delta=-38.7)
GAMMA = 2.6e6


def with_field(p, d_diff=100.0):
    E2 = field_for_dipole_difference(d_diff, p.G, p.gamma_ref)
    return replace(p, physical=Physical(E2=E2))


def test_zero_inversion_gives_zero_spectrum():
    f, g = frames(FIG3A)
    s = chi_closed_form(f, g, 0.0, default_grid(100))
    assert not np.any(s.chi)


def test_line_centers_example():
    f, g = frames(FIG3A)
    g = replace(g, G_R=10.0)
    assert line_centers(g, 100.0).tolist() == [-120, -80, -20, 20, 80, 120]


def test_line_centers_degenerate_keeps_duplicates():
    f, g = frames(FIG3A)
    g = replace(g, G_R=25.0)
    c = line_centers(g, 100.0)
    assert len(c) == 6
    assert c.tolist() == [-150, -50, -50, 50, 50, 150]


def test_line_centers_need_splitting():
    f, g = frames(FIG3A)
    with pytest.raises(ValueError):
        line_centers(replace(g, G_R=0.0), 100.0)


def test_resolved_lines_are_extrema_of_absorption():
    p = replace(FIG3A, G=400)
    f, g = frames(p)
    assert g.G_R > 20 * g.Gamma_s
    s = spectrum(p, np.linspace(-400, 400, 80001))
    mx, mn = local_extrema(s.detunings, np.abs(s.chi.imag))
    peaks = np.array([x for x, _ in mx])
    for c in line_centers(g, p.omega):
        assert np.min(np.abs(peaks - c)) < 0.05 * g.Gamma_s


@pytest.mark.parametrize("p,sign", [(FIG3A, 1), (FIG3B, -1)])
def test_gain_absorption_pairing(p, sign):
    f, g = frames(p)
    a = p.omega + 2 * g.G_R
    s = spectrum(p, [-a, a])
    # Im chi > 0 is absorption; the outer upper sideband amplifies at Fig. 3a
    assert sign * s.chi.imag[1] < 0
    assert sign * s.chi.imag[0] > 0


def test_pairing_flips_with_inversion_sign():
    fa, ga = frames(FIG3A)
    fb, gb = frames(FIG3B)
    assert np.sign(collective_inversion(ga.x, 1)) == -np.sign(collective_inversion(gb.x, 1))


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3))
def test_linear_in_inversion(scale):
    f, g = frames(FIG3A)
    grid = np.linspace(-250, 250, 501)
    a = chi_closed_form(f, g, 0.2, grid).chi
    b = chi_closed_form(f, g, 0.2 * scale, grid).chi
    assert np.allclose(b, scale * a, rtol=1e-12, atol=1e-16)


def test_prefactor_scaling():
    ph = Physical(d=1.0, Nbar=1e17)
    a = susceptibility_prefactor(ph, GAMMA)
    assert susceptibility_prefactor(replace(ph, Nbar=2e17), GAMMA) == pytest.approx(2 * a)
    assert susceptibility_prefactor(replace(ph, d=2.0), GAMMA) == pytest.approx(4 * a)
    assert dielectric_prefactor(ph, GAMMA) == pytest.approx(4 * math.pi * a)
    with pytest.raises(ValueError):
        susceptibility_prefactor(Physical(d=1.0), GAMMA)


def test_spectrum_prefactor_attached():
    p = replace(FIG3A, physical=Physical(d=1.0, Nbar=1e17))
    s = spectrum(p, [0.0, 1.0])
    assert s.prefactor == pytest.approx(susceptibility_prefactor(p.physical, p.gamma_ref))
    assert spectrum(FIG3A, [0.0]).prefactor is None


def test_collective_mode_uses_per_emitter_inversion():
    p = replace(FIG3A, N=10)
    f, g = frames(p)
    s = spectrum(p, [7.0], collective=True)
    ref = chi_closed_form(f, g, collective_inversion(g.x, 10) / 10, [7.0])
    assert s.chi[0] == ref.chi[0]
    assert "collective" in s.meta["Rz_tilde_mode"]
    assert spectrum(p, [7.0]).meta["Rz_tilde_mode"] == "single"


def test_refractive_index_vacuum():
    assert refractive_index(0.0, 123.0) == 1.0


def test_refractive_index_monotone_in_prefactor():
    assert refractive_index(0.01, 200.0) > refractive_index(0.01, 100.0)


def test_refractive_index_breakdown():
    with pytest.raises(ValueError, match="breaks down"):
        refractive_index(-0.01, 200.0)
    with pytest.raises(ValueError):
        refractive_index(np.array([0.0, -1.0]), 1.0)


def test_refraction_exceeds_two_at_transparency():
    p = replace(FIG3B, physical=Physical(d=1.0, Nbar=1e17))
    s = spectrum(p)
    coeff = dielectric_prefactor(p.physical, p.gamma_ref)
    transparent = np.abs(s.chi.imag) < 0.05 * np.abs(s.chi.imag).max()
    ok = transparent & (1 + coeff * s.chi.real > 0)
    n = refractive_index(s.chi.real[ok], coeff)
    assert n.max() > 2
    assert abs(s.detunings[ok][np.argmax(n)]) < 10


@pytest.mark.parametrize("p", [FIG3A, FIG3B])
def test_kramers_kronig(p):
    f, g = frames(p)
    # span well over 20 Gamma_s beyond the outermost line
    grid = np.linspace(-2000, 2000, 40001)
    s = spectrum(p, grid)
    re = kramers_kronig_real(grid, s.chi.imag)
    inner = np.abs(grid) < 250
    err = np.abs(re - s.chi.real)[inner].max() / np.abs(s.chi.real).max()
    assert err < 0.02


def test_kramers_kronig_needs_uniform_grid():
    with pytest.raises(ValueError):
        kramers_kronig_real([0, 1, 3, 4], [0, 1, 1, 0])


@pytest.mark.parametrize("p", [FIG3A, FIG3B])
def test_sum_of_six_lorentzians(p):
    f, g = frames(p)
    s = spectrum(p)
    amps, resid = fit_lorentzians(s, line_centers(g, p.omega), g.Gamma_s)
    assert resid < 1e-6


def test_spectrum_validation():
    with pytest.raises(ValueError):
        Spectrum([0, 0, 1], [0, 0, 0])
    with pytest.raises(ValueError):
        Spectrum([0, 1], [0, np.nan])
    with pytest.raises(ValueError):
        Spectrum([0, 1, 2], [0, 1])


def test_local_extrema_parabolic_refinement():
    x = np.linspace(-1, 1, 21)
    mx, mn = local_extrema(x, -(x - 0.033) ** 2)
    assert len(mx) == 1 and not mn
    assert mx[0][0] == pytest.approx(0.033, abs=1e-12)


@pytest.mark.parametrize("p", [FIG3A, FIG3B])
def test_extraction_round_trip_default_target(p):
    p = with_field(p, 100.0)
    res = extract_dipole_difference(spectrum(p), p)
    assert res.d_diff_debye == pytest.approx(100.0, rel=0.05)
    assert res.S_measured == pytest.approx(4 * res.G_R)


def test_extraction_ignores_supplied_coupling():
    p = with_field(FIG3A, 100.0)
    spec = spectrum(p)
    a = extract_dipole_difference(spec, p)
    b = extract_dipole_difference(spec, replace(p, G=3.0))
    assert a == b


def test_extraction_with_shifted_detuning():
    p = with_field(replace(FIG3A, shifted=True), 100.0)
    res = extract_dipole_difference(spectrum(p), p)
    assert res.G == pytest.approx(16.0, rel=0.05)


def test_extraction_without_permanent_dipoles_fails():
    p = replace(FIG3A, G=0.0, physical=Physical(E2=1e-3))
    with pytest.raises(ExtractionError):
        extract_dipole_difference(spectrum(p), p)


def test_extraction_no_real_solution():
    p = with_field(FIG3A, 100.0)
    spec = spectrum(p)
    # claim a driving configuration whose |Delta_bar| exceeds the measured G_R
    wrong = replace(p, omega=60.0)
    with pytest.raises(ExtractionError, match="no real G_bar"):
        extract_dipole_difference(spec, wrong)


def test_extraction_rejects_coarse_grid():
    p = with_field(FIG3A, 100.0)
    spec = spectrum(p, np.linspace(-50, 50, 41))
    with pytest.raises(ExtractionError):
        extract_dipole_difference(spec, p)


def test_extraction_needs_field():
    with pytest.raises(ValueError):
        extract_dipole_difference(spectrum(FIG3A), FIG3A)
