"""Input parameters, first and second dressing, and regime checks.

All frequencies and rates are stored in units of the reference spontaneous
rate ``gamma_ref`` (so the reference rate itself is 1).  Conversion to s^-1
only happens through :func:`spontaneous_rate` and the physical helpers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

# Gaussian (cgs) constants
HBAR_CGS = constants.hbar * 1e7  # erg s
C_CGS = constants.c * 1e2  # cm / s
DEBYE = 1e-18  # esu cm

GAMMA_GLOBULIN_OMEGA21 = 4.8e15  # s^-1
GAMMA_GLOBULIN_DIPOLE = 1.0  # Debye
GAMMA_GLOBULIN_RATE = 2.6e6  # s^-1
GAMMA_GLOBULIN_DIPOLE_DIFF = 100.0  # Debye


class RateModel(str, enum.Enum):
    EQUAL = "equal"
    CUBIC = "cubic"


@dataclass(frozen=True)
class Physical:
    """Optional physical-units layer.

    d is in Debye, omega21/omegaL are angular frequencies in s^-1, Nbar is a
    number density in cm^-3 and E2 the second-laser amplitude in statvolt/cm.
    """

    d: float | None = None
    omega21: float | None = None
    omegaL: float | None = None
    Nbar: float | None = None
    E2: float | None = None

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ValueError("physical block is missing: " + ", ".join(missing))


@dataclass(frozen=True)
class SystemParams:
    Omega: float
    Delta: float
    G: float
    omega: float
    N: int = 1
    gamma_ref: float = GAMMA_GLOBULIN_RATE
    rate_model: RateModel = RateModel.EQUAL
    physical: Physical | None = None
    # Keep the G_bar^2/(2 omega) correction in Delta_bar.
    shifted: bool = False

    def __post_init__(self):
        if not self.Omega >= 0:
            raise ValueError(f"Omega must be >= 0, got {self.Omega}")
        if not self.G >= 0:
            raise ValueError(f"G must be >= 0, got {self.G}")
        if not self.omega > 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be an integer >= 1, got {self.N}")
        if not self.gamma_ref > 0:
            raise ValueError(f"gamma_ref must be > 0, got {self.gamma_ref}")
        if not math.isfinite(self.Delta):
            raise ValueError("Delta must be finite")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "rate_model", RateModel(self.rate_model))


@dataclass(frozen=True)
class DressedFrame:
    theta: float
    Omega_bar: float
    G_bar: float
    Delta_bar: float
    Gamma_plus: float
    Gamma_minus: float
    Gamma: float
    # exact sin/cos of 2 theta, kept to avoid round-off at Delta = 0
    sin2theta: float = field(repr=False)
    cos2theta: float = field(repr=False)


@dataclass(frozen=True)
class DoubleDressedFrame:
    phi: float
    G_R: float
    Gamma0_bar: float
    Gammaplus_bar: float
    Gammaminus_bar: float
    x: float
    eta: float
    Gamma_s: float
    omega: float
    sin2phi: float = field(repr=False)
    cos2phi: float = field(repr=False)


def spontaneous_rate(omega_tilde, d):
    """Single-emitter spontaneous decay rate 2 d^2 w^3 / (3 hbar c^3).

    Parameters
    ----------
    omega_tilde : float or ndarray
        Angular transition frequency in s^-1.
    d : float
        Transition dipole in Debye.

    Returns
    -------
    Rate in s^-1 (Gaussian units throughout).
    """
    if d <= 0:
        raise ValueError(f"dipole must be > 0, got {d}")
    if np.any(np.asarray(omega_tilde) <= 0):
        raise ValueError("omega_tilde must be > 0")
    dd = d * DEBYE
    return 2.0 * dd**2 * omega_tilde**3 / (3.0 * HBAR_CGS * C_CGS**3)


def derive_dressed(p: SystemParams) -> DressedFrame:
    """First dressing by the strong laser.

    2 theta = atan2(2 Omega, Delta), so theta lies in (0, pi/2) and is
    continuous through resonance.
    """
    if p.Omega <= 0:
        raise ValueError("Omega must be > 0: dressing angle is undefined at Omega = 0")
    theta = 0.5 * math.atan2(2.0 * p.Omega, p.Delta)
    Omega_bar = math.hypot(p.Omega, 0.5 * p.Delta)
    sin2t = p.Omega / Omega_bar
    cos2t = 0.5 * p.Delta / Omega_bar
    G_bar = 0.25 * p.G * sin2t
    Delta_bar = Omega_bar - 0.5 * p.omega
    if p.shifted:
        Delta_bar += G_bar**2 / (2.0 * p.omega)
    # sin^4 + cos^4 = 1 - sin^2(2t)/2 ;  sin^4 - cos^4 = -cos(2t)
    Gamma_plus = 1.0 - 0.5 * sin2t**2
    Gamma_minus = -cos2t
    Gamma = Gamma_plus + sin2t**2
    return DressedFrame(
        theta=theta,
        Omega_bar=Omega_bar,
        G_bar=G_bar,
        Delta_bar=Delta_bar,
        Gamma_plus=Gamma_plus,
        Gamma_minus=Gamma_minus,
        Gamma=Gamma,
        sin2theta=sin2t,
        cos2theta=cos2t,
    )


def _rate_function(p: SystemParams):
    """gamma(.) as a function of the offset from omega_L, in units of gamma_ref."""
    if p.rate_model is RateModel.EQUAL:
        return lambda offset: 1.0
    if p.physical is None:
        raise ValueError("rate_model=cubic needs a physical block with d and omegaL")
    p.physical.require("d", "omegaL")
    wl, d = p.physical.omegaL, p.physical.d

    def rate(offset):
        return spontaneous_rate(wl + offset * p.gamma_ref, d) / p.gamma_ref

    return rate


def derive_double_dressed(f: DressedFrame, p: SystemParams) -> DoubleDressedFrame:
    G_R = math.hypot(f.Delta_bar, f.G_bar)
    if G_R == 0:
        raise ValueError("G_R = 0: second dressing angle is undefined (G_bar = Delta_bar = 0)")
    phi = 0.5 * math.atan2(f.G_bar, f.Delta_bar)
    s2p = f.G_bar / G_R
    c2p = f.Delta_bar / G_R
    c2t, s2t = f.cos2theta, f.sin2theta

    cos4t = (0.5 * (1 + c2t)) ** 2
    sin4t = (0.5 * (1 - c2t)) ** 2
    cos4p = (0.5 * (1 + c2p)) ** 2
    sin4p = (0.5 * (1 - c2p)) ** 2

    gam = _rate_function(p)
    w, gr2 = p.omega, 2.0 * G_R
    Gamma0 = (gam(0.0) * s2t**2 * c2p**2 / 4
              + s2p**2 * (gam(w) * cos4t + gam(-w) * sin4t) / 4)
    Gplus = (gam(gr2) * s2p**2 * s2t**2 / 4
             + gam(w + gr2) * cos4p * cos4t
             + gam(-w + gr2) * sin4t * sin4p)
    Gminus = (gam(-gr2) * s2p**2 * s2t**2 / 4
              + gam(w - gr2) * cos4t * sin4p
              + gam(-w - gr2) * sin4t * cos4p)
    if Gminus == 0:
        raise ValueError("Gammaminus_bar vanishes: rate ratio x = Gammaplus_bar/Gammaminus_bar undefined")
    x = Gplus / Gminus
    return DoubleDressedFrame(
        phi=phi,
        G_R=G_R,
        Gamma0_bar=Gamma0,
        Gammaplus_bar=Gplus,
        Gammaminus_bar=Gminus,
        x=x,
        eta=0.5 * math.log(x) if x > 0 else math.nan,
        Gamma_s=4 * Gamma0 + Gplus + Gminus,
        omega=p.omega,
        sin2phi=s2p,
        cos2phi=c2p,
    )


def frames(p: SystemParams) -> tuple[DressedFrame, DoubleDressedFrame]:
    f = derive_dressed(p)
    return f, derive_double_dressed(f, p)


@dataclass(frozen=True)
class Violation:
    name: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    def __str__(self):
        return f"{self.name}: {self.lhs:.4g} vs {self.rhs:.4g} (margin {self.margin:.4g})"


def check_regime(p: SystemParams, K: float = 10.0) -> list[Violation]:
    """List the validity inequalities that fail at these parameters.

    ">>" is read as ">= K times".  Never raises for physical inputs; a
    zero Rabi frequency just shows up as violations.
    """
    Omega_bar = math.hypot(p.Omega, 0.5 * p.Delta)
    sin2t = p.Omega / Omega_bar if Omega_bar > 0 else 0.0
    G_bar = 0.25 * p.G * sin2t
    Delta_bar = Omega_bar - 0.5 * p.omega
    if p.shifted:
        Delta_bar += G_bar**2 / (2.0 * p.omega)
    G_R = math.hypot(Delta_bar, G_bar)

    # dressed (gamma_0, gamma_pm) and double-dressed gamma(omega~) scales
    if p.rate_model is RateModel.CUBIC and p.physical is not None and p.physical.omegaL:
        gam = _rate_function(p)
        g_dressed = max(gam(0.0), gam(2 * Omega_bar), gam(-2 * Omega_bar))
        offsets = [s1 * p.omega + s2 * 2 * G_R for s1 in (-1, 0, 1) for s2 in (-1, 0, 1)]
        g_tilde = max(gam(o) for o in offsets)
    else:
        g_dressed = g_tilde = 1.0

    checks = [
        ("Omega_bar >> gamma", Omega_bar, K * 1.0),
        ("Omega_bar > G", Omega_bar, p.G),
        ("omega >> G_bar", p.omega, K * G_bar),
        ("Omega_bar >> gamma_0,pm", Omega_bar, K * g_dressed),
        ("omega >> gamma_0,pm", p.omega, K * g_dressed),
        ("G_R >> gamma(omega~)", G_R, K * g_tilde),
    ]
    out = []
    for name, lhs, rhs in checks:
        ok = lhs > rhs if name == "Omega_bar > G" else lhs >= rhs
        if not ok:
            out.append(Violation(name, lhs, rhs))
    return out
