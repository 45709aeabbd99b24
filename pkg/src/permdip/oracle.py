"""Brute-force Liouvillian checks of the closed-form results.

Density matrices are vectorised row-major, so that vec(A X B) equals
kron(A, B.T) @ vec(X).  Two-level bases are ordered (lower, upper); the
Dicke basis is ordered by the number s = 0..N of excited emitters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import DoubleDressedFrame, DressedFrame, SystemParams, _rate_function
from .susceptibility import Spectrum

N_MAX = 12


class DegenerateSteadyState(RuntimeError):
    pass


class PropagationError(RuntimeError):
    pass


class CapacityError(ValueError):
    pass


@dataclass
class Liouvillian:
    matrix: np.ndarray
    dim: int
    label: str
    meta: dict = field(default_factory=dict)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


@dataclass
class DensityMatrix:
    data: np.ndarray
    method: str = ""

    @property
    def hermiticity_error(self) -> float:
        return float(np.abs(self.data - self.data.conj().T).max())

    @property
    def trace_error(self) -> float:
        return float(abs(np.trace(self.data) - 1.0))

    @property
    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.data + self.data.conj().T)
        return float(np.linalg.eigvalsh(h).min())

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(op @ self.data))


# -- superoperator assembly ---------------------------------------------------

def _commutator_hamiltonian(H):
    eye = np.eye(H.shape[0])
    return -1j * (np.kron(H, eye) - np.kron(eye, H.T))


def _damping(rate, A, B):
    """Superoperator of  -rate [A, B rho] + H.c.  (rate real)."""
    eye = np.eye(A.shape[0])
    Ad, Bd = A.conj().T, B.conj().T
    term = np.kron(A @ B, eye) - np.kron(B, A.T)
    hc = np.kron(eye, (Bd @ Ad).T) - np.kron(Ad, Bd.T)
    return -rate * (term + hc)


def liouvillian(H, terms, label="") -> Liouvillian:
    """H plus a list of (rate, A, B) entries read as -rate[A, B rho] + H.c."""
    M = _commutator_hamiltonian(np.asarray(H, dtype=complex))
    for rate, A, B in terms:
        M = M + _damping(rate, np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))
    return Liouvillian(M, H.shape[0], label)


def qubit_operators():
    """(Rz, R+, R-) for a two-level system ordered (lower, upper)."""
    Rz = np.diag([-1.0, 1.0]).astype(complex)
    Rp = np.array([[0, 0], [1, 0]], dtype=complex)
    return Rz, Rp, Rp.T.copy()


def dicke_operators(N: int):
    """Collective (R~z, R~+, R~-) in the symmetric spin-N/2 representation."""
    s = np.arange(N + 1)
    Rz = np.diag(2.0 * s - N).astype(complex)
    amp = np.sqrt((s[:-1] + 1.0) * (N - s[:-1]))
    Rp = np.diag(amp, -1).astype(complex)
    return Rz, Rp, Rp.T.copy()


def build_liouvillian_single(f: DressedFrame) -> Liouvillian:
    """Dressed-frame generator for one emitter, all dressed rates equal to 1."""
    Rz, Rp, Rm = qubit_operators()
    th = f.theta
    H = f.Delta_bar * Rz - f.G_bar * (Rp + Rm)
    terms = [
        (np.sin(2 * th) ** 2 / 4, Rz, Rz),
        (np.cos(th) ** 4, Rp, Rm),
        (np.sin(th) ** 4, Rm, Rp),
    ]
    L = liouvillian(H, terms, "dressed, N=1")
    L.meta = {"theta": th, "Delta_bar": f.Delta_bar, "G_bar": f.G_bar}
    return L


def build_liouvillian_dicke(g: DoubleDressedFrame, N: int, n_max: int = N_MAX) -> Liouvillian:
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > n_max:
        raise CapacityError(f"N={N} exceeds the dense oracle capacity N_max={n_max} "
                            f"(superoperator dimension {(N + 1) ** 2})")
    Rz, Rp, Rm = dicke_operators(N)
    terms = [(g.Gamma0_bar, Rz, Rz), (g.Gammaplus_bar, Rp, Rm), (g.Gammaminus_bar, Rm, Rp)]
    L = liouvillian(g.G_R * Rz, terms, f"double dressed, N={N}")
    L.meta = {"N": N, "G_R": g.G_R, "x": g.x}
    return L


# -- solving ------------------------------------------------------------------

def _to_density(vec, dim) -> np.ndarray:
    rho = vec.reshape(dim, dim)
    rho = rho / np.trace(rho)
    return 0.5 * (rho + rho.conj().T)


def steady_state(L: Liouvillian, gap_tol: float = 1e-6, agree_tol: float = 1e-6) -> DensityMatrix:
    """Null vector of L, normalised to unit trace.

    Uniqueness is gated on the second-smallest singular value; when the gap
    is too small the state is also propagated for a long time from the
    maximally mixed state and the two answers must agree.
    """
    M = L.matrix
    norm = L.norm
    if norm == 0:
        raise DegenerateSteadyState("Liouvillian is zero: every state is stationary")
    _, s, vh = np.linalg.svd(M)
    rho_null = _to_density(vh[-1].conj(), L.dim)
    if s[-2] > gap_tol * norm:
        return DensityMatrix(rho_null, "null-space")

    mixed = np.eye(L.dim, dtype=complex) / L.dim
    slow = s[-2] if s[-2] > 0 else 1e-12 * norm
    t_long = min(200.0 / slow, 1e8 / norm)
    rho_prop = propagate(L, DensityMatrix(mixed), t_long).data
    if np.abs(rho_prop - rho_null).max() > agree_tol:
        raise DegenerateSteadyState(
            f"degenerate steady state: singular gap {s[-2]:.3g} and null-space/propagation "
            f"mismatch {np.abs(rho_prop - rho_null).max():.3g}")
    return DensityMatrix(rho_prop, "propagation")


def _rk4_step_matrix(M, h):
    A = h * M
    A2 = A @ A
    A3 = A2 @ A
    return np.eye(M.shape[0]) + A + A2 / 2 + A3 / 6 + A3 @ A / 24


def propagate(L: Liouvillian, rho0: DensityMatrix, t: float, h: float | None = None,
              checkpoints: int = 16, trace_tol: float = 1e-9,
              positivity_tol: float = 1e-8) -> DensityMatrix:
    """Fixed-step RK4 propagation to time t.

    The step is at most 0.01/||L||.  Because L is time independent one RK4
    step is a fixed matrix, applied by repeated squaring between checkpoints
    where trace drift and positivity are verified and the trace is reset to 1.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return DensityMatrix(rho0.data.copy(), "propagation")
    norm = L.norm
    h_max = 0.01 / norm if norm > 0 else t
    if h is None or h > h_max:
        h = h_max
    n = max(1, math.ceil(t / h))
    h = t / n
    P = _rk4_step_matrix(L.matrix, h)

    k = max(1, min(checkpoints, n))
    chunk, rest = divmod(n, k)
    Pc = np.linalg.matrix_power(P, chunk)
    v = rho0.data.reshape(-1).astype(complex)
    for i in range(k):
        v = Pc @ v
        if i == k - 1 and rest:
            v = np.linalg.matrix_power(P, rest) @ v
        rho = DensityMatrix(v.reshape(L.dim, L.dim))
        if rho.trace_error > trace_tol:
            raise PropagationError(f"trace drift {rho.trace_error:.3g} exceeds {trace_tol}")
        # drift is within budget: renormalise so round-off does not accumulate
        v = v / np.trace(rho.data)
        if rho.min_eigenvalue < -positivity_tol:
            raise PropagationError(
                f"positivity violated (min eigenvalue {rho.min_eigenvalue:.3g}); reduce the step")
    return DensityMatrix(v.reshape(L.dim, L.dim), "propagation")


# -- numerical dressing and the regression spectrum ---------------------------

@dataclass
class DressingNumerics:
    Omega_bar: float
    Delta_bar: float
    G_R: float
    V: np.ndarray  # bare -> first dressed basis (columns)
    W: np.ndarray  # first -> second dressed basis (columns)
    components: dict  # frame frequency -> S^- component in the double-dressed basis


def dress_numerically(p: SystemParams) -> DressingNumerics:
    """Diagonalise both dressings numerically, starting from the bare operators."""
    Sz = np.diag([-0.5, 0.5]).astype(complex)
    Sm = np.array([[0, 1], [0, 0]], dtype=complex)
    H_bare = p.Delta * Sz + p.Omega * (Sm + Sm.T)
    e, V = np.linalg.eigh(H_bare)
    Omega_bar = 0.5 * (e[1] - e[0])

    Sz_d = V.conj().T @ Sz @ V
    Sm_d = V.conj().T @ Sm @ V
    # permanent-dipole drive G Sz cos(omega t): only the dressed off-diagonal
    # part survives the rotating-wave approximation at omega, with weight 1/2
    coupling = 0.5 * p.G * (Sz_d - np.diag(np.diag(Sz_d)))
    Delta_bar = Omega_bar - 0.5 * p.omega
    if p.shifted:
        Delta_bar += abs(coupling[0, 1]) ** 2 / (2 * p.omega)
    H_d = Delta_bar * np.diag([-1.0, 1.0]) + coupling
    e2, W = np.linalg.eigh(H_d)
    G_R = 0.5 * (e2[1] - e2[0])

    # S^- in the dressed frame: diagonal part at omega_L, the |1><2| part
    # carries exp(-i omega t), the |2><1| part exp(+i omega t)
    parts = {
        0.0: np.diag(np.diag(Sm_d)),
        p.omega: np.array([[0, Sm_d[0, 1]], [0, 0]]),
        -p.omega: np.array([[0, 0], [Sm_d[1, 0], 0]]),
    }
    comps = {nu: W.conj().T @ X @ W for nu, X in parts.items()}
    return DressingNumerics(Omega_bar, Delta_bar, G_R, V, W, comps)


def secular_jumps(p: SystemParams, num: DressingNumerics | None = None):
    """Secular jump operators (rate, J) of the double-dressed emitter.

    Each S^- component is split by its Bohr frequency in the second dressed
    basis and weighted by gamma at the emitted frequency.
    """
    num = dress_numerically(p) if num is None else num
    gam = _rate_function(p)
    Rz, Rp, Rm = qubit_operators()
    gr2 = 2.0 * num.G_R
    jumps = []
    for nu, A in num.components.items():
        zpart = 0.5 * (A[1, 1] - A[0, 0])
        jumps.append(("0", gam(nu), zpart * Rz))
        jumps.append(("+", gam(nu + gr2), A[0, 1] * Rm))
        jumps.append(("-", gam(nu - gr2), A[1, 0] * Rp))
    return jumps


def secular_rates(p: SystemParams) -> dict:
    """Aggregated (Gamma0_bar, Gammaplus_bar, Gammaminus_bar) from the numerical decomposition."""
    out = {"0": 0.0, "+": 0.0, "-": 0.0}
    for kind, rate, J in secular_jumps(p):
        # J is a scalar times R~z, R~- or R~+, each with unit-modulus entries
        out[kind] += rate * np.abs(J).max() ** 2
    return {"Gamma0_bar": out["0"], "Gammaplus_bar": out["+"], "Gammaminus_bar": out["-"]}


def build_liouvillian_secular(p: SystemParams, num: DressingNumerics | None = None) -> Liouvillian:
    num = dress_numerically(p) if num is None else num
    Rz = qubit_operators()[0]
    terms = [(rate, J.conj().T, J) for _, rate, J in secular_jumps(p, num)]
    return liouvillian(num.G_R * Rz, terms, "double dressed (numerical), N=1")


def _laplace_modes(L: Liouvillian, rho, A):
    """Mode amplitudes c_m and rates lam_m with Tr(A e^{Lt}[A^dag, rho]) = sum c_m e^{lam_m t}."""
    lam, vecs = np.linalg.eig(L.matrix)
    X = A.conj().T @ rho - rho @ A.conj().T
    coeff = np.linalg.solve(vecs, X.reshape(-1))
    proj = A.T.reshape(-1) @ vecs  # Tr(A Y) = vec(A^T) . vec(Y)
    return proj * coeff, lam


def _finite_laplace(c, lam, dp, nu, T):
    z = lam[None, :] + 1j * (dp[:, None] - nu)
    small = np.abs(z) * T < 1e-8
    safe = np.where(small, 1.0, z)
    integral = np.where(small, T, np.expm1(safe * T) / safe)
    return integral @ c


def regression_spectrum(p: SystemParams, grid, T: float | None = None,
                        conv_tol: float = 1e-4) -> Spectrum:
    """chi from the two-time dipole commutator, evolved with the Liouvillian.

    Uses N = 1.  The Fourier integral is truncated at T (default 50 divided
    by the slowest nonzero relaxation rate) and evaluated exactly mode by
    mode; doubling T must not change the result by more than conv_tol of
    the peak.
    """
    dp = np.asarray(grid, dtype=float)
    num = dress_numerically(p)
    L = build_liouvillian_secular(p, num)
    rho = steady_state(L).data
    rates = -np.linalg.eigvals(L.matrix).real
    slow = rates[rates > 1e-9 * max(rates.max(), 1.0)].min()
    T = 50.0 / slow if T is None else T

    modes = {nu: _laplace_modes(L, rho, A) for nu, A in num.components.items()}

    def chi_at(Tc):
        total = np.zeros_like(dp, dtype=complex)
        for nu, (c, lam) in modes.items():
            total += _finite_laplace(c, lam, dp, nu, Tc)
        return 1j * total

    chi = chi_at(T)
    chi2 = chi_at(2 * T)
    peak = np.abs(chi2).max()
    if peak > 0 and np.abs(chi2 - chi).max() > conv_tol * peak:
        raise RuntimeError("regression spectrum not converged in the time cutoff")
    Rz = qubit_operators()[0]
    meta = {"route": "regression", "T": T, "Rz_tilde": float(np.trace(Rz @ rho).real)}
    return Spectrum(dp, chi, meta=meta)


# -- cross-checks used by `sim oracle-check` and the acceptance suite --------

def draw_regime_valid(rng, n: int, K: float = 10.0, max_tries: int = 100000) -> list[SystemParams]:
    """n random parameter sets that pass every regime check at factor K."""
    from .params import check_regime

    out = []
    for _ in range(max_tries):
        if len(out) == n:
            return out
        Omega = rng.uniform(20.0, 100.0)
        ratio = rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 1.0)
        p = SystemParams(Omega=Omega, Delta=2.0 * Omega * ratio, G=rng.uniform(2.0, 40.0),
                         omega=rng.uniform(50.0, 250.0))
        try:
            if not check_regime(p, K):
                out.append(p)
        except ValueError:
            continue
    raise RuntimeError(f"only {len(out)} of {n} regime-valid draws found")


def single_dressed_error(p: SystemParams) -> float:
    """Largest relative error of the closed-form <Rz>, <R+> against the Liouvillian."""
    from .dressed import steady_state as closed
    from .params import derive_dressed

    f = derive_dressed(p)
    rho = steady_state(build_liouvillian_single(f))
    Rz, Rp, _ = qubit_operators()
    ref = closed(f)
    e1 = abs(rho.expect(Rz).real - ref.Rz) / abs(ref.Rz)
    e2 = abs(rho.expect(Rp) - ref.Rplus) / abs(ref.Rplus)
    return float(max(e1, e2))


def collective_error(p: SystemParams, N: int) -> tuple[float, float]:
    """(relative error of <R~z>, largest off-diagonal |rho_ij|) for N emitters."""
    from .double_dressed import collective_inversion
    from .params import frames

    _, g = frames(p)
    rho = steady_state(build_liouvillian_dicke(g, N))
    Jz = dicke_operators(N)[0]
    ref = collective_inversion(g.x, N)
    err = abs(rho.expect(Jz).real - ref) / max(abs(ref), 1e-300)
    off = np.abs(rho.data - np.diag(np.diag(rho.data))).max()
    return float(err), float(off)


def figure3_params() -> list[SystemParams]:
    """The two probe-spectrum parameter sets (Delta/(2 Omega) = +-0.43)."""
    return [SystemParams(Omega=45.0, Delta=2.0 * 45.0 * r, G=16.0, omega=100.0) for r in (0.43, -0.43)]


def spectrum_error(p: SystemParams, points: int = 2001) -> float:
    """Peak-relative max deviation of the regression spectrum from the closed form."""
    from .susceptibility import default_grid, spectrum

    grid = default_grid(p.omega, points)
    ref = spectrum(p, grid)
    num = regression_spectrum(p, grid)
    return float(np.abs(num.chi - ref.chi).max() / np.abs(ref.chi).max())
