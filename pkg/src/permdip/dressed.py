"""Closed-form single-emitter steady state in the first dressed frame."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .params import DressedFrame, SystemParams, derive_dressed


@dataclass(frozen=True)
class SteadyState:
    Rz: float
    Rplus: complex
    Sz: float

    @property
    def Rminus(self) -> complex:
        return self.Rplus.conjugate()


def _lorentz_denominator(f: DressedFrame) -> float:
    return f.Gamma**2 + (2.0 * f.Delta_bar) ** 2


def steady_inversion_dressed(f: DressedFrame) -> float:
    """Dressed inversion <Rz> from the fixed point of the Bloch equations."""
    pump = (2.0 * f.G_bar) ** 2 * f.Gamma / _lorentz_denominator(f)
    return 2.0 * f.Gamma_minus / (2.0 * f.Gamma_plus + pump)


def steady_coherence(f: DressedFrame) -> complex:
    Rz = steady_inversion_dressed(f)
    return 1j * f.G_bar * Rz / complex(f.Gamma, -2.0 * f.Delta_bar)


def bare_inversion_via_coherence(f: DressedFrame) -> float:
    """<Sz> = cos2t <Rz>/2 - sin2t (<R+> + <R->)/2."""
    Rz = steady_inversion_dressed(f)
    Rp = steady_coherence(f)
    return 0.5 * f.cos2theta * Rz - f.sin2theta * Rp.real


def bare_inversion_single(f: DressedFrame) -> float:
    """Bare-state inversion <Sz> of one emitter (range [-1/2, 1/2]).

    Uses the combined closed form; :func:`bare_inversion_via_coherence` is the
    second route and the two agree to round-off.
    """
    Rz = steady_inversion_dressed(f)
    shape = 4.0 * f.Delta_bar * f.G_bar * f.sin2theta / _lorentz_denominator(f)
    return 0.5 * (f.cos2theta + shape) * Rz


def steady_state(f: DressedFrame) -> SteadyState:
    return SteadyState(
        Rz=steady_inversion_dressed(f),
        Rplus=steady_coherence(f),
        Sz=bare_inversion_single(f),
    )


def bloch_rhs(f: DressedFrame, Rz, Rplus):
    """Time derivatives (d<Rz>/dt, d<R+>/dt); works elementwise on arrays."""
    Rminus = np.conj(Rplus)
    dRz = -2j * f.G_bar * (Rminus - Rplus) - 2.0 * f.Gamma_plus * Rz + 2.0 * f.Gamma_minus
    dRplus = (2j * f.Delta_bar - f.Gamma) * Rplus + 1j * f.G_bar * Rz
    return np.real(dRz), dRplus


def rk4_bloch(f: DressedFrame, Rz0: float, Rplus0: complex, t: float, steps: int):
    """Fixed-step RK4 on the dressed Bloch equations; returns (Rz, R+) at t."""
    h = t / steps
    y = np.array([Rz0, Rplus0], dtype=complex)

    def rhs(y):
        a, b = bloch_rhs(f, y[0].real, y[1])
        return np.array([a, b], dtype=complex)

    for _ in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return y[0].real, y[1]


def detuning_grid(lo: float = -1.0, hi: float = 1.0, points: int = 801) -> np.ndarray:
    """Grid of Delta/(2 Omega) values."""
    if points < 2 or not lo < hi:
        raise ValueError("need lo < hi and at least 2 points")
    return np.linspace(lo, hi, points)


def inversion_sweep(base: SystemParams, ratios) -> list[SteadyState]:
    """Steady states along Delta = 2 Omega * ratio, other parameters fixed."""
    out = []
    for r in ratios:
        p = replace(base, Delta=2.0 * base.Omega * float(r))
        out.append(steady_state(derive_dressed(p)))
    return out

