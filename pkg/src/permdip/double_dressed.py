"""Double-dressed steady state: exponential Dicke populations and the
collective inversion, mapped back onto the bare-state inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DoubleDressedFrame, DressedFrame, SystemParams, frames

EPS_SWITCH = 1e-6
# Below this |x - 1| the closed form cancels too many digits; use the paired sum.
CLOSED_FORM_MIN = 1e-2
LOG_SPACE_LIMIT = 600.0


@dataclass(frozen=True)
class CollectiveState:
    Rz_tilde: float
    Sz_per_emitter: float
    x: float
    N: int


def _series(delta: float, N: int) -> float:
    # Taylor expansion of the collective inversion about x = 1
    c1 = -N * (N + 2) / 6
    c2 = N * (N + 2) / 12
    c3 = N * (N + 2) * (N**2 + 2 * N - 18) / 360
    c4 = -N * (N - 2) * (N + 2) * (N + 4) / 240
    return delta * (c1 + delta * (c2 + delta * (c3 + delta * c4)))


def _closed_form(delta: float, N: int, lnx: float | None = None) -> float:
    # ln x is passed in when x is so small that 1 + delta rounds to 0
    L = (N + 1) * (math.log1p(delta) if lnx is None else lnx)
    if L > LOG_SPACE_LIMIT:
        tail = (N + 1) * math.exp(-L) / -math.expm1(-L)
    else:
        tail = (N + 1) / math.expm1(L)
    return -N + 2.0 / delta - 2.0 * tail


def _paired_sum(delta: float, N: int) -> float:
    """Boltzmann average with level s paired against N - s; no cancellation."""
    lnx = math.log1p(delta)
    a = abs(lnx)
    s = np.arange((N + 1) // 2)
    k = N - 2 * s
    num = np.sum(k * np.exp(-a * s) * -np.expm1(-a * k))
    den = np.sum(np.exp(-a * np.arange(N + 1)))
    return -math.copysign(1.0, lnx) * num / den


def collective_inversion(x: float, N: int, eps_switch: float = EPS_SWITCH) -> float:
    """Steady collective double-dressed inversion <R~z> for N emitters.

    x is the ratio Gamma+_bar / Gamma-_bar.  Result lies in [-N, N]; it is
    +N as x -> 0 and -N as x -> inf.
    """
    if not (x > 0 and math.isfinite(x)):
        raise ValueError(f"rate ratio x must be positive and finite, got {x}")
    if N < 1:
        raise ValueError("N must be >= 1")
    delta = x - 1.0
    if delta == 0.0:
        return 0.0
    if abs(delta) < eps_switch and (N + 1) * abs(delta) < 1e-2:
        return _series(delta, N)
    if abs(delta) >= CLOSED_FORM_MIN:
        return _closed_form(delta, N, math.log(x))
    return _paired_sum(delta, N)


def dd_partition_state(eta: float, N: int) -> np.ndarray:
    """Populations p_s of Dicke levels s = 0..N (s excited) for rho ~ exp(-eta R~z)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    m = 2 * np.arange(N + 1) - N
    logw = -eta * m
    w = np.exp(logw - logw.max())
    return w / w.sum()


def dd_expectation(eta: float, N: int) -> float:
    p = dd_partition_state(eta, N)
    return float(np.dot(2 * np.arange(N + 1) - N, p))


def bare_inversion_collective(f: DressedFrame, g: DoubleDressedFrame, N: int,
                              per_emitter: bool = False) -> float:
    """<Sz> = cos[2(theta - phi)] <R~z> / 2, optionally divided by N."""
    c = f.cos2theta * g.cos2phi + f.sin2theta * g.sin2phi
    Sz = 0.5 * c * collective_inversion(g.x, N)
    return Sz / N if per_emitter else Sz


def collective_state(p: SystemParams, N: int | None = None) -> CollectiveState:
    f, g = frames(p)
    N = p.N if N is None else N
    Rz = collective_inversion(g.x, N)
    c = f.cos2theta * g.cos2phi + f.sin2theta * g.sin2phi
    return CollectiveState(Rz_tilde=Rz, Sz_per_emitter=0.5 * c * Rz / N, x=g.x, N=N)


def dd_offdiagonal_check(g: DoubleDressedFrame, N: int) -> float:
    """max |<R~+->| in the numerically solved collective steady state."""
    from . import oracle

    L = oracle.build_liouvillian_dicke(g, N)
    rho = oracle.steady_state(L)
    Jp = oracle.dicke_operators(N)[1]
    return float(abs(np.trace(Jp @ rho.data)))
