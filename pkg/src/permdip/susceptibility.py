"""Weak-probe linear susceptibility around the strong-laser frequency.

chi is returned in units of Nbar d^2 / (hbar gamma_ref).  Probe detunings
Delta_p = nu - omega_L are in units of gamma_ref.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq
from scipy.signal import hilbert

from .double_dressed import collective_inversion
from .params import (
    DEBYE,
    HBAR_CGS,
    DoubleDressedFrame,
    DressedFrame,
    Physical,
    SystemParams,
    derive_dressed,
    frames,
)


class ExtractionError(ValueError):
    pass


@dataclass
class Spectrum:
    detunings: np.ndarray
    chi: np.ndarray
    prefactor: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.detunings = np.asarray(self.detunings, dtype=float)
        self.chi = np.asarray(self.chi, dtype=complex)
        if self.detunings.shape != self.chi.shape:
            raise ValueError("detunings and chi must have the same shape")
        if np.any(np.diff(self.detunings) <= 0):
            raise ValueError("probe grid must be strictly increasing")
        if not np.all(np.isfinite(self.chi)):
            raise ValueError("non-finite susceptibility values")


def _lorentzian(dp, shift, width):
    # (Gs + i u) / (Gs^2 + u^2) == 1 / (Gs - i u)
    return 1.0 / (width - 1j * (dp + shift))


def chi_closed_form(f: DressedFrame, g: DoubleDressedFrame, Rz_tilde: float, grid) -> Spectrum:
    dp = np.asarray(grid, dtype=float)
    Gs, gr2, w = g.Gamma_s, 2.0 * g.G_R, g.omega
    c2t, s2t, c2p, s2p = f.cos2theta, f.sin2theta, g.cos2phi, g.sin2phi
    cos4t, sin4t = (0.5 * (1 + c2t)) ** 2, (0.5 * (1 - c2t)) ** 2
    cos4p, sin4p = (0.5 * (1 + c2p)) ** 2, (0.5 * (1 - c2p)) ** 2

    centre = 0.25 * s2t**2 * s2p**2 * (_lorentzian(dp, gr2, Gs) - _lorentzian(dp, -gr2, Gs))
    upper = cos4t * (sin4p * _lorentzian(dp, gr2 - w, Gs) - cos4p * _lorentzian(dp, -gr2 - w, Gs))
    lower = sin4t * (cos4p * _lorentzian(dp, gr2 + w, Gs) - sin4p * _lorentzian(dp, -gr2 + w, Gs))
    chi = 1j * Rz_tilde * (centre + upper + lower)
    return Spectrum(dp, chi, meta={"Rz_tilde": Rz_tilde, "route": "closed-form"})


def line_centers(g: DoubleDressedFrame, omega: float) -> np.ndarray:
    """The six probe detunings at which chi has a resonance (duplicates kept)."""
    if g.G_R <= 0:
        raise ValueError("G_R must be > 0")
    a = 2.0 * g.G_R
    return np.sort(np.array([-a, a, omega - a, omega + a, -omega + a, -omega - a]))


def susceptibility_prefactor(physical: Physical, gamma_ref: float) -> float:
    """Nbar d^2 / (hbar gamma_ref), dimensionless in Gaussian units."""
    physical.require("Nbar", "d")
    return physical.Nbar * (physical.d * DEBYE) ** 2 / (HBAR_CGS * gamma_ref)


def dielectric_prefactor(physical: Physical, gamma_ref: float) -> float:
    """Coefficient of the dimensionless chi' in eps = 1 + 4 pi chi (Gaussian)."""
    return 4.0 * math.pi * susceptibility_prefactor(physical, gamma_ref)


def refractive_index(chi_real, prefactor):
    """n = sqrt(1 + prefactor * chi').  Raises where the radicand is not positive."""
    rad = 1.0 + prefactor * np.asarray(chi_real, dtype=float)
    if np.any(rad <= 0):
        raise ValueError("1 + prefactor*chi' <= 0: refractive-index approximation breaks down")
    n = np.sqrt(rad)
    return float(n) if n.ndim == 0 else n


def local_extrema(x, y):
    """Interior local maxima and minima with parabolic refinement.

    Returns two lists of (position, value) for maxima and minima.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mid = y[1:-1]
    is_max = (mid > y[:-2]) & (mid >= y[2:])
    is_min = (mid < y[:-2]) & (mid <= y[2:])
    out = []
    for mask in (is_max, is_min):
        found = []
        for i in np.flatnonzero(mask) + 1:
            y0, y1, y2 = y[i - 1], y[i], y[i + 1]
            curv = y0 - 2 * y1 + y2
            h = x[i + 1] - x[i]
            off = 0.5 * (y0 - y2) / curv if curv != 0 else 0.0
            found.append((x[i] + off * h, y1 - 0.25 * (y0 - y2) * off))
        out.append(found)
    return out[0], out[1]


def kramers_kronig_real(detunings, imag, pad: int = 16) -> np.ndarray:
    """Re chi reconstructed from Im chi on a uniform grid (causal response)."""
    dp = np.asarray(detunings, dtype=float)
    steps = np.diff(dp)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]) * len(dp):
        raise ValueError("Kramers-Kronig reconstruction needs a uniform grid")
    n = len(dp)
    return -np.imag(hilbert(np.asarray(imag, dtype=float), N=pad * n))[:n]


def fit_lorentzians(spec: Spectrum, centers, width: float):
    """Least-squares complex amplitudes of i/(width - i(dp - c)) at fixed centres.

    Returns (amplitudes, max residual divided by max |chi|).
    """
    dp = spec.detunings
    basis = np.stack([1j / (width - 1j * (dp - c)) for c in centers], axis=1)
    amps, *_ = np.linalg.lstsq(basis, spec.chi, rcond=None)
    resid = np.abs(basis @ amps - spec.chi).max() / np.abs(spec.chi).max()
    return amps, float(resid)


def default_grid(omega: float, points: int = 10001) -> np.ndarray:
    half = 2.5 * omega
    return np.linspace(-half, half, points)


def spectrum(p: SystemParams, grid=None, collective: bool = False) -> Spectrum:
    """Closed-form spectrum at p.

    By default the single-emitter <R~z> enters; with collective=True the
    per-emitter value <R~z>/N of p.N emitters is used instead.
    """
    f, g = frames(p)
    if collective:
        Rz = collective_inversion(g.x, p.N) / p.N
    else:
        Rz = collective_inversion(g.x, 1)
    spec = chi_closed_form(f, g, Rz, default_grid(p.omega) if grid is None else grid)
    spec.meta["Rz_tilde_mode"] = f"collective N={p.N}" if collective else "single"
    if p.physical is not None and p.physical.Nbar is not None and p.physical.d is not None:
        spec.prefactor = susceptibility_prefactor(p.physical, p.gamma_ref)
    return spec


@dataclass(frozen=True)
class Extraction:
    S_measured: float
    G_R: float
    G_bar: float
    G: float
    d_diff_debye: float


def extract_dipole_difference(spec: Spectrum, p: SystemParams) -> Extraction:
    """Recover |d22 - d11| from the max/min splitting of Im chi around Delta_p = 0.

    The splitting is 4 G_R.  Everything but the permanent-dipole coupling
    (Omega, Delta, omega, E2, gamma_ref) must be known; p.G is ignored.
    Only extrema with |Delta_p| < omega/2 are considered, which keeps the
    sidebands at +-omega out of the search.
    """
    if p.physical is None:
        raise ValueError("extraction needs a physical block with E2")
    p.physical.require("E2")
    f0 = derive_dressed(p)
    dp = spec.detunings
    step = float(np.max(np.diff(dp)))

    maxima, minima = local_extrema(dp, spec.chi.imag)
    window = 0.5 * p.omega
    cands = [(x, "max") for x, _ in maxima if abs(x) < window]
    cands += [(x, "min") for x, _ in minima if abs(x) < window]
    left = [c for c in cands if c[0] < 0]
    right = [c for c in cands if c[0] >= 0]
    if not left or not right:
        raise ExtractionError("fewer than two extrema of Im chi found around Delta_p = 0")
    lo = max(left, key=lambda c: c[0])
    hi = min(right, key=lambda c: c[0])
    if lo[1] == hi[1]:
        raise ExtractionError("extrema nearest Delta_p = 0 are not a maximum/minimum pair")
    S = hi[0] - lo[0]
    G_R = S / 4.0

    sin2t = f0.sin2theta
    if p.shifted:
        # Delta_bar depends on G_bar through the G_bar^2/(2 omega) term
        D0 = f0.Delta_bar - f0.G_bar**2 / (2 * p.omega)

        def resid(gb):
            return math.hypot(D0 + gb**2 / (2 * p.omega), gb) - G_R

        if resid(0.0) >= 0:
            raise ExtractionError("no real G_bar solution: S/4 <= |Delta_bar|")
        G_bar = brentq(resid, 0.0, G_R)
    else:
        D = f0.Delta_bar
        if G_R <= abs(D):
            raise ExtractionError("no real G_bar solution: S/4 <= |Delta_bar|")
        G_bar = math.sqrt(G_R**2 - D**2)

    G = 4.0 * G_bar / sin2t
    d_diff = HBAR_CGS * G * p.gamma_ref / p.physical.E2 / DEBYE
    out = Extraction(S_measured=S, G_R=G_R, G_bar=G_bar, G=G, d_diff_debye=d_diff)
    if step > 0.1 * _width_estimate(p, G):
        raise ExtractionError(f"grid step {step:.3g} too coarse for linewidth (need <= Gamma_s/10)")
    return out


def _width_estimate(p: SystemParams, G: float) -> float:
    try:
        return frames(replace(p, G=G))[1].Gamma_s
    except ValueError:
        return math.inf


def field_for_dipole_difference(d_diff_debye: float, G: float, gamma_ref: float) -> float:
    """E2 (statvolt/cm) that produces coupling G (units of gamma_ref) for a given |d22-d11|."""
    return HBAR_CGS * G * gamma_ref / (d_diff_debye * DEBYE)
