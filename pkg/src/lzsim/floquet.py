"""Floquet quasienergies, modes over one period, and operator Fourier components.

The one-period propagator is computed in the time domain.  Two backends:

  - "magnus4": fixed-step 4th-order Magnus (two-point Gauss), each step an
    exact matrix exponential, so every stored propagator is unitary to
    machine precision.  Fast (numba-compiled when available) and the
    default for sweeps.
  - "dop853": adaptive 8th-order Runge-Kutta (scipy) with local tolerance
    `tol`, followed by polar re-unitarization of the stored samples.
    Reference backend for cross-checks.
"""
from __future__ import annotations

import hashlib
import json
import math
import struct
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import schur

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


class IntegrationError(RuntimeError):
    """Propagation failed; message carries the worst time point."""


class TruncationWarning(UserWarning):
    """Fourier/k-sum truncation left non-negligible tail mass."""


# Gauss-Legendre nodes on [0, 1] for the 4th-order Magnus step
_GL_C1 = 0.5 - math.sqrt(3.0) / 6.0
_GL_C2 = 0.5 + math.sqrt(3.0) / 6.0


@dataclass(frozen=True)
class DriveHamiltonian:
    """H(t) = h0 + cos(omega * t) * h1 with period 2*pi/omega."""

    h0: np.ndarray
    h1: np.ndarray
    omega: float

    def __post_init__(self):
        h0 = np.ascontiguousarray(self.h0, dtype=complex)
        h1 = np.ascontiguousarray(self.h1, dtype=complex)
        if h0.shape != h1.shape or h0.ndim != 2 or h0.shape[0] != h0.shape[1]:
            raise ValueError("h0 and h1 must be square matrices of equal shape")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "h1", h1)

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def tau(self) -> float:
        return 2.0 * math.pi / self.omega

    def __call__(self, t):
        return self.h0 + math.cos(self.omega * t) * self.h1


@njit(cache=True)
def _expm_small(m):
    """exp(m) by scaling-and-squaring with an order-12 Taylor/Horner core."""
    d = m.shape[0]
    nrm = 0.0
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += abs(m[i, j])
        if s > nrm:
            nrm = s
    n_sq = 0
    while nrm > 0.5:
        nrm *= 0.5
        n_sq += 1
    a = m * (0.5 ** n_sq)
    eye = np.eye(d, dtype=np.complex128)
    res = eye + a / 12.0
    for order in range(11, 0, -1):
        res = eye + (a / order) @ res
    for _ in range(n_sq):
        res = res @ res
    return res


@njit(cache=True)
def _magnus4_product(h0, h1, comm, cos1, cos2, dt, c_comm, stride, out):
    """Accumulate U(t_j, 0) for the drive H(t) = h0 + cos(omega t) h1.

    One 4th-order Magnus step per dt; every stride-th propagator is stored
    in `out` (shape (n_samples+1, d, d), out[0] = identity).
    """
    n_steps = cos1.shape[0]
    d = h0.shape[0]
    u = np.eye(d, dtype=np.complex128)
    out[0] = u
    k = 1
    for j in range(n_steps):
        half_sum = 0.5 * (cos1[j] + cos2[j])
        dcs = cos2[j] - cos1[j]
        gen = (-1j * dt) * h0 + (-1j * dt * half_sum) * h1 + (c_comm * dcs) * comm
        u = _expm_small(gen) @ u
        if (j + 1) % stride == 0:
            out[k] = u
            k += 1
    return u


@dataclass(frozen=True)
class Propagation:
    """Propagators U(t_j, 0) on the uniform grid t_j = j*tau/n_t, j = 0..n_t."""

    us: np.ndarray
    tau: float
    method: str
    unitarity_defect: float

    @property
    def n_t(self) -> int:
        return self.us.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.us.shape[1]

    @property
    def monodromy(self) -> np.ndarray:
        return self.us[-1]

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.tau, self.us.shape[0])


def _unitarity_defect(u) -> float:
    d = u.shape[0]
    return float(np.abs(u.conj().T @ u - np.eye(d)).max())


def _ham_matrix(ham, t):
    """Evaluate a callable Hamiltonian, accepting Operator or array returns."""
    from .operators import as_matrix

    return as_matrix(ham(t))


def _propagate_magnus4(ham, tau, n_t, substeps):
    n_steps = n_t * substeps
    dt = tau / n_steps
    d = ham.dim if isinstance(ham, DriveHamiltonian) else _ham_matrix(ham, 0.0).shape[0]
    out = np.empty((n_t + 1, d, d), dtype=np.complex128)
    c_comm = math.sqrt(3.0) / 12.0 * dt * dt
    if isinstance(ham, DriveHamiltonian):
        steps = np.arange(n_steps)
        cos1 = np.cos(ham.omega * (steps + _GL_C1) * dt)
        cos2 = np.cos(ham.omega * (steps + _GL_C2) * dt)
        comm = ham.h0 @ ham.h1 - ham.h1 @ ham.h0
        _magnus4_product(ham.h0, ham.h1, comm, cos1, cos2, dt, c_comm, substeps, out)
    else:
        u = np.eye(d, dtype=np.complex128)
        out[0] = u
        k = 1
        for j in range(n_steps):
            a1 = _ham_matrix(ham, (j + _GL_C1) * dt)
            a2 = _ham_matrix(ham, (j + _GL_C2) * dt)
            gen = (-0.5j * dt) * (a1 + a2) + c_comm * (a1 @ a2 - a2 @ a1)
            u = _expm_small(gen) @ u
            if (j + 1) % substeps == 0:
                out[k] = u
                k += 1
    return out


def _propagate_dop853(ham, tau, n_t, tol):
    d = ham.dim if isinstance(ham, DriveHamiltonian) else _ham_matrix(ham, 0.0).shape[0]
    if isinstance(ham, DriveHamiltonian):
        h0, h1, omega = ham.h0, ham.h1, ham.omega

        def rhs(t, y):
            u = y.reshape(d, d)
            return (-1j * (h0 + math.cos(omega * t) * h1) @ u).ravel()
    else:

        def rhs(t, y):
            u = y.reshape(d, d)
            return (-1j * _ham_matrix(ham, t) @ u).ravel()

    y0 = np.eye(d, dtype=complex).ravel()
    times = np.linspace(0.0, tau, n_t + 1)
    sol = solve_ivp(rhs, (0.0, tau), y0, method="DOP853", t_eval=times,
                    rtol=tol, atol=tol)
    if not sol.success:
        worst = sol.t[-1] if sol.t.size else 0.0
        raise IntegrationError(
            f"adaptive propagation failed near t = {worst:.6g}: {sol.message}")
    us = sol.y.T.reshape(n_t + 1, d, d).astype(np.complex128)
    # polar re-unitarization of each stored sample
    w, _, vh = np.linalg.svd(us)
    return w @ vh


def propagate_period(ham, tau, tol: float = 1e-10, *, n_t: int = 1024,
                     method: str = "magnus4", substeps: int = 2) -> Propagation:
    """Solve i dU/dt = H(t) U over one period with U(0) = I.

    Returns the propagators at the n_t+1 uniform grid points including the
    monodromy U(tau, 0).  `ham` is a DriveHamiltonian (fast path) or any
    callable t -> matrix.
    """
    if not 0.0 < tol <= 1e-4:
        raise ValueError(f"tol must be in (0, 1e-4], got {tol}")
    if n_t < 2:
        raise ValueError(f"n_t must be >= 2, got {n_t}")
    if isinstance(ham, DriveHamiltonian) and abs(tau - ham.tau) > 1e-9 * ham.tau:
        raise ValueError(f"tau = {tau} does not match the drive period {ham.tau}")
    if method == "magnus4":
        if substeps < 1:
            raise ValueError("substeps must be >= 1")
        us = _propagate_magnus4(ham, tau, n_t, substeps)
    elif method == "dop853":
        us = _propagate_dop853(ham, tau, n_t, tol)
    else:
        raise ValueError(f"unknown propagation method {method!r}")
    defect = _unitarity_defect(us[-1])
    if not np.isfinite(us).all():
        raise IntegrationError("propagation produced non-finite entries")
    if defect > 10.0 * tol:
        raise IntegrationError(
            f"monodromy unitarity defect {defect:.3e} exceeds 10*tol = {10 * tol:.3e}")
    return Propagation(us=us, tau=tau, method=method, unitarity_defect=defect)


@dataclass(frozen=True)
class FloquetSolution:
    """Quasienergies folded to (-omega/2, omega/2] and mode samples over one period.

    mode_samples[j][:, alpha] = |alpha(t_j)> at t_j = j*tau/n_t, j = 0..n_t-1;
    the modes are tau-periodic so the j = n_t sample equals the j = 0 one.
    """

    quasienergies: np.ndarray
    monodromy: np.ndarray
    mode_samples: np.ndarray
    omega: float
    n_t: int
    degenerate_pairs: tuple
    unitarity_defect: float
    mode_defect: float

    @property
    def dim(self) -> int:
        return self.quasienergies.shape[0]

    @property
    def tau(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_t) * (self.tau / self.n_t)

    @property
    def modes0(self) -> np.ndarray:
        """Initial modes |alpha(0)> as columns."""
        return self.mode_samples[0]


def floquet_modes(prop: Propagation, omega: float,
                  degeneracy_tol: float = 1e-10) -> FloquetSolution:
    """Diagonalize the monodromy into Floquet modes and folded quasienergies.

    U(tau,0)|alpha(0)> = exp(-i eps_alpha tau)|alpha(0)>;
    |alpha(t_j)> = exp(+i eps_alpha t_j) U(t_j,0)|alpha(0)>.

    Quasienergies are folded to (-omega/2, omega/2] with branch-cut ties
    going to +omega/2; pairs closer than degeneracy_tol*omega are flagged.
    """
    tau = prop.tau
    # Schur of a (numerically) unitary matrix: T is diagonal to roundoff and
    # Q gives an orthonormal mode basis even across degeneracies.
    t_mat, q = schur(prop.monodromy, output="complex")
    mode_defect = float(np.abs(t_mat - np.diag(np.diag(t_mat))).max())
    lam = np.diag(t_mat)
    eps = -np.angle(lam) / tau
    half = omega / 2.0
    eps = np.where(eps <= -half, eps + omega, eps)
    eps = np.where(eps > half, eps - omega, eps)
    order = np.argsort(eps, kind="stable")
    eps = eps[order]
    modes_init = q[:, order]

    pairs = []
    for i in range(len(eps)):
        for j in range(i + 1, len(eps)):
            delta = abs(eps[i] - eps[j])
            delta = min(delta, omega - delta)  # distance on the folded circle
            if delta < degeneracy_tol * omega:
                pairs.append((i, j))

    phases = np.exp(1j * np.outer(prop.times[:-1], eps))
    samples = (prop.us[:-1] @ modes_init) * phases[:, None, :]
    return FloquetSolution(
        quasienergies=eps,
        monodromy=prop.monodromy,
        mode_samples=np.ascontiguousarray(samples),
        omega=omega,
        n_t=prop.n_t,
        degenerate_pairs=tuple(pairs),
        unitarity_defect=prop.unitarity_defect,
        mode_defect=mode_defect,
    )


def floquet_solution(drive: DriveHamiltonian, *, n_t: int = 1024,
                     tol: float = 1e-10, method: str = "magnus4",
                     substeps: int = 2,
                     degeneracy_tol: float = 1e-10) -> FloquetSolution:
    """One-stop propagation + mode extraction for a cosine drive."""
    prop = propagate_period(drive, drive.tau, tol, n_t=n_t, method=method,
                            substeps=substeps)
    return floquet_modes(prop, drive.omega, degeneracy_tol=degeneracy_tol)


@dataclass(frozen=True)
class FourierCoeffs:
    """Fourier components X_{alpha beta, k} of a coupling operator in the Floquet basis.

    coeffs has shape (D, D, 2*k_max+1) with the k axis running -k_max..k_max;
    X_{alpha beta, k} = (1/tau) Int_0^tau exp(-i k omega t) <alpha(t)|x|beta(t)> dt.
    """

    coeffs: np.ndarray
    k_max: int
    leakage_fraction: float
    symmetry_defect: float

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def at(self, alpha: int, beta: int, k: int) -> complex:
        return complex(self.coeffs[alpha, beta, k + self.k_max])


def fourier_coefficients(sol: FloquetSolution, x, k_max: int,
                         leakage_tol: float = 1e-6) -> FourierCoeffs:
    """Discrete Fourier transform of <alpha(t)|x|beta(t)> over the period grid."""
    from .operators import as_matrix

    if k_max > sol.n_t // 2 - 1:
        raise ValueError(f"k_max = {k_max} exceeds n_t/2 - 1 = {sol.n_t // 2 - 1}")
    xm = as_matrix(x)
    m = sol.mode_samples
    f = np.einsum("tia,ij,tjb->tab", m.conj(), xm, m, optimize=True)
    xk_full = np.fft.fft(f, axis=0) / sol.n_t

    total = float(np.sum(np.abs(xk_full) ** 2))
    # indices m > n_t/2 alias to negative k = m - n_t
    ks = np.fft.fftfreq(sol.n_t, d=1.0 / sol.n_t)
    tail_mask = np.abs(ks) > max(k_max - 2, 0)
    tail = float(np.sum(np.abs(xk_full[tail_mask]) ** 2))
    leakage = tail / total if total > 0 else 0.0
    if leakage > leakage_tol:
        warnings.warn(
            f"Fourier tail mass fraction {leakage:.3e} beyond |k| = {k_max - 2} "
            f"exceeds {leakage_tol:.1e}; increase k_max", TruncationWarning,
            stacklevel=2)

    stacked = np.concatenate([xk_full[sol.n_t - k_max:], xk_full[:k_max + 1]], axis=0)
    coeffs = np.ascontiguousarray(np.moveaxis(stacked, 0, -1))
    sym = float(np.abs(coeffs.transpose(1, 0, 2)[:, :, ::-1] - coeffs.conj()).max())
    return FourierCoeffs(coeffs=coeffs, k_max=k_max, leakage_fraction=leakage,
                         symmetry_defect=sym)


# --- binary cache -----------------------------------------------------------
#
# Layout (all little-endian): 8-byte magic "LZFLOQ01", then uint32 dim,
# uint32 n_t, float64 omega, float64 unitarity_defect, float64 mode_defect,
# followed by float64 payload: quasienergies (D), monodromy re/im
# interleaved (D*D*2), mode samples re/im interleaved (n_t*D*D*2).

_CACHE_MAGIC = b"LZFLOQ01"


def solution_cache_key(params_mapping: dict) -> str:
    """Stable hash of a parameter mapping, used as the cache file stem."""
    blob = json.dumps(params_mapping, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:32]


def save_solution(sol: FloquetSolution, path) -> None:
    d, n_t = sol.dim, sol.n_t
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<II", d, n_t))
        fh.write(struct.pack("<ddd", sol.omega, sol.unitarity_defect, sol.mode_defect))
        sol.quasienergies.astype("<f8").tofile(fh)
        mono = np.empty((d, d, 2))
        mono[..., 0], mono[..., 1] = sol.monodromy.real, sol.monodromy.imag
        mono.astype("<f8").tofile(fh)
        samp = np.empty((n_t, d, d, 2))
        samp[..., 0], samp[..., 1] = sol.mode_samples.real, sol.mode_samples.imag
        samp.astype("<f8").tofile(fh)


def load_solution(path) -> FloquetSolution:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _CACHE_MAGIC:
            raise ValueError(f"{path}: not a Floquet cache file")
        d, n_t = struct.unpack("<II", fh.read(8))
        omega, udef, mdef = struct.unpack("<ddd", fh.read(24))
        eps = np.fromfile(fh, dtype="<f8", count=d)
        mono = np.fromfile(fh, dtype="<f8", count=d * d * 2).reshape(d, d, 2)
        samp = np.fromfile(fh, dtype="<f8", count=n_t * d * d * 2).reshape(n_t, d, d, 2)
    monodromy = mono[..., 0] + 1j * mono[..., 1]
    samples = samp[..., 0] + 1j * samp[..., 1]
    pairs = []
    for i in range(d):
        for j in range(i + 1, d):
            delta = abs(eps[i] - eps[j])
            delta = min(delta, omega - delta)
            if delta < 1e-10 * omega:
                pairs.append((i, j))
    return FloquetSolution(quasienergies=eps, monodromy=monodromy,
                           mode_samples=samples, omega=omega, n_t=n_t,
                           degenerate_pairs=tuple(pairs), unitarity_defect=udef,
                           mode_defect=mdef)
