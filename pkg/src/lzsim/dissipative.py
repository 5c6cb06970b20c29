"""Floquet-Born-Markov generator, reduced-density-matrix evolution, and
steady-state observables.

The master equation acts on rho_{alpha beta}(t) = <alpha(t)|rho(t)|beta(t)>
in the time-periodic Floquet basis.  With X_{ab,k} the Fourier components
of the coupling operator and N(e) the bath rate kernel evaluated at
quasienergy differences shifted by multiples of omega,
N_{ab,k} = N(eps_a - eps_b + k*omega), the generator reads

  d rho_{ab}/dt = -i (eps_a - eps_b) rho_{ab} + sum_{ij} R_{ab,ij} rho_{ij},

  R_{ab,ij} = sum_k (N_{ai,k} + N_{bj,k}) X_{ai,k} X_{jb,-k}
            - delta_{bj} sum_{e,k} N_{ei,k} X_{ae,-k} X_{ei,k}
            - delta_{ai} sum_{e,k} N_{ej,k} X_{je,-k} X_{eb,k}.

All coefficients are time independent (moderate rotating-wave form); the
structure preserves trace and Hermiticity as algebraic identities, which
build_generator verifies.  The Lamb-shift (principal-value) correction is
omitted; this is recorded in generator metadata.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .bath import BathSpec, rate_kernel
from .dynamics import ProbabilityTrace
from .floquet import (DriveHamiltonian, FloquetSolution, FourierCoeffs,
                      floquet_solution, fourier_coefficients)
from .operators import as_matrix, basis_state, coupling_coordinate, pauli, qubit_parts, rabi_parts


class GeneratorError(RuntimeError):
    """FBM generator construction produced invalid (NaN/identity-violating) data."""


class SteadyStateMultiplicityError(RuntimeError):
    """The generator null space is not one-dimensional."""


class PositivityWarning(UserWarning):
    """Steady state has a negative eigenvalue beyond the silent tolerance."""


@dataclass(frozen=True)
class FbmGenerator:
    """Dense FBM generator acting on row-major vectorized rho_{alpha beta}."""

    matrix: np.ndarray
    quasienergies: np.ndarray
    basis: FloquetSolution
    trace_defect: float
    k_tail_fraction: float
    lamb_shift_included: bool = False

    @property
    def dim(self) -> int:
        return self.quasienergies.shape[0]


def build_generator(sol: FloquetSolution, x_coeffs: FourierCoeffs,
                    bath: BathSpec) -> FbmGenerator:
    """Assemble the FBM generator from Floquet data, coupling Fourier
    components, and a bath specification."""
    d = sol.dim
    if x_coeffs.dim != d:
        raise ValueError("Fourier coefficients do not match the Floquet solution dimension")
    k_max = x_coeffs.k_max
    eps = sol.quasienergies
    omega = sol.omega

    ks = np.arange(-k_max, k_max + 1)
    args = eps[:, None, None] - eps[None, :, None] + ks[None, None, :] * omega
    n_mat = rate_kernel(bath, args.ravel()).reshape(d, d, 2 * k_max + 1)
    if not np.isfinite(n_mat).all():
        raise GeneratorError("rate kernel produced non-finite values")

    x = x_coeffs.coeffs
    xr = x[:, :, ::-1]  # X_{ab,-k} on the forward k axis
    nx = n_mat * x
    # weighted truncation tail of sum_k |X|^2 N within the available k range
    w_abs = np.abs(x) ** 2 * np.abs(n_mat)
    total = float(w_abs.sum())
    edge = max(k_max - 2, 0)
    tail_mask = np.abs(ks) > edge
    tail = float(w_abs[:, :, tail_mask].sum())
    tail_fraction = tail / total if total > 0 else 0.0
    # the absolute floor keeps roundoff-level tails from tripping the check
    if tail_fraction > 1e-8 and tail > 1e-20 * max(1.0, float(np.abs(n_mat).max())):
        warnings.warn(
            f"k-sum tail mass fraction {tail_fraction:.3e} beyond |k| = {edge} "
            "exceeds 1e-8; increase k_max", stacklevel=2)

    term1 = np.einsum("aik,jbk->abij", nx, xr, optimize=True)
    term1 += np.einsum("aik,jbk->abij", x, n_mat.transpose(1, 0, 2) * xr, optimize=True)
    m2 = np.einsum("aek,eik->ai", xr, nx, optimize=True)
    m3 = np.einsum("jek,ejk,ebk->jb", xr, n_mat, x, optimize=True)
    r_tensor = term1
    eye = np.eye(d)
    r_tensor -= np.einsum("ai,bj->abij", m2, eye)
    r_tensor -= np.einsum("ai,jb->abij", eye, m3)

    gen = r_tensor.reshape(d * d, d * d)
    coh = (-1j * (eps[:, None] - eps[None, :])).reshape(d * d)
    gen[np.diag_indices(d * d)] += coh

    if not np.isfinite(gen).all():
        raise GeneratorError("generator contains non-finite entries")
    vec_ident = np.eye(d, dtype=complex).reshape(d * d)
    scale = max(1.0, float(np.abs(gen).max()))
    trace_defect = float(np.abs(vec_ident @ gen).max())
    if trace_defect > 1e-10 * scale:
        raise GeneratorError(
            f"trace-preservation defect {trace_defect:.3e} exceeds 1e-10 * scale")
    return FbmGenerator(matrix=gen, quasienergies=eps.copy(), basis=sol,
                        trace_defect=trace_defect, k_tail_fraction=tail_fraction)


def rho0_floquet(sol: FloquetSolution, psi0) -> np.ndarray:
    """Initial pure state projected into the Floquet basis at t = 0."""
    psi0 = np.asarray(psi0, dtype=complex)
    c0 = sol.modes0.conj().T @ psi0
    return np.outer(c0, c0.conj())


def _check_rho(rho, what="rho0"):
    rho = np.asarray(rho, dtype=complex)
    if np.abs(rho - rho.conj().T).max() > 1e-9:
        raise ValueError(f"{what} must be Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-9:
        raise ValueError(f"{what} must have unit trace")
    return rho


def evolve(gen: FbmGenerator, rho0, t_list, cond_threshold: float = 1e10) -> np.ndarray:
    """rho(t) = exp(G t) rho(0) at the requested times (shape (len(t), D, D)).

    Uses the eigendecomposition of G; if its eigenvector matrix is too
    ill-conditioned, falls back to scaling-and-squaring per time point.
    The near-zero steady eigenvalue is clipped to exactly zero so very long
    times do not accumulate spurious trace drift.
    """
    d = gen.dim
    rho0 = _check_rho(rho0)
    vec0 = rho0.reshape(d * d)
    t_list = np.atleast_1d(np.asarray(t_list, dtype=float))

    g = gen.matrix
    out = np.empty((t_list.shape[0], d, d), dtype=complex)
    use_eig = True
    try:
        w, v = np.linalg.eig(g)
        cond = np.linalg.cond(v)
        if not np.isfinite(cond) or cond > cond_threshold:
            use_eig = False
    except np.linalg.LinAlgError:
        use_eig = False

    if use_eig:
        scale = float(np.abs(w).max()) if w.size else 0.0
        w = np.where(np.abs(w) < 1e-12 * scale, 0.0, w)
        # roundoff can push decaying modes infinitesimally unstable
        tiny_pos = (w.real > 0) & (w.real < 1e-10 * max(scale, 1.0))
        w = np.where(tiny_pos, 1j * w.imag, w)
        if np.any(w.real > 0):
            warnings.warn("generator has an unstable eigenvalue "
                          f"(max Re = {w.real.max():.3e})", stacklevel=2)
        c = np.linalg.solve(v, vec0)
        for i, t in enumerate(t_list):
            out[i] = ((v * np.exp(w * t)) @ c).reshape(d, d)
        method = "eig"
    else:
        for i, t in enumerate(t_list):
            out[i] = (expm(g * t) @ vec0).reshape(d, d)
        method = "expm"

    out = 0.5 * (out + out.conj().transpose(0, 2, 1))
    drift = float(np.abs(np.trace(out, axis1=1, axis2=2) - 1.0).max())
    if drift > 1e-8:
        raise GeneratorError(
            f"trace drift {drift:.3e} exceeds 1e-8 (evolution method {method})")
    return out


@dataclass(frozen=True)
class SteadyStateResult:
    """Null-space steady state with its numerical diagnostics."""

    rho: np.ndarray
    residual: float
    min_eigenvalue: float


def steady_state(gen: FbmGenerator, null_tol: float = 1e-10,
                 positivity_tol: float = 1e-6) -> SteadyStateResult:
    """Unique trace-one null vector of the generator, Hermitized.

    Raises SteadyStateMultiplicityError when the null space is not
    one-dimensional within null_tol * ||G||; emits PositivityWarning when
    the state has an eigenvalue below -positivity_tol (a Born-Markov
    artifact, reported but not fatal).
    """
    d = gen.dim
    _, s, vh = np.linalg.svd(gen.matrix)
    if s[0] == 0.0:
        raise SteadyStateMultiplicityError("generator is identically zero")
    if s[-2] < null_tol * s[0]:
        raise SteadyStateMultiplicityError(
            f"null space dimension > 1 (second singular value {s[-2]:.3e} "
            f"below {null_tol:.1e} * ||G||)")
    vec = vh[-1].conj()
    rho = vec.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12 * np.abs(rho).max():
        raise SteadyStateMultiplicityError("null vector has (near-)zero trace")
    rho = rho / tr
    min_eig = float(np.linalg.eigvalsh(rho).min())
    if min_eig < -positivity_tol:
        warnings.warn(f"steady state eigenvalue {min_eig:.3e} below "
                      f"-{positivity_tol:.1e}", PositivityWarning, stacklevel=2)
    return SteadyStateResult(rho=rho, residual=float(s[-1] / s[0]),
                             min_eigenvalue=min_eig)


def _default_up_projector(dim: int) -> np.ndarray:
    proj = np.zeros((dim, dim), dtype=complex)
    proj[np.arange(dim // 2, dim), np.arange(dim // 2, dim)] = 1.0
    return proj


def p_up_period_averaged(rho_fb, sol: FloquetSolution, projector=None) -> float:
    """Period-averaged qubit-up population of a Floquet-basis density matrix:

    (1/tau) Int_0^tau sum_{ab} rho_{ab} <b(s)|Pi_up|a(s)> ds over the grid.
    """
    proj = _default_up_projector(sol.dim) if projector is None else as_matrix(projector)
    m = sol.mode_samples
    pbar = np.einsum("tib,ij,tja->ba", m.conj(), proj, m, optimize=True) / sol.n_t
    return float(np.real(np.einsum("ba,ab->", pbar, np.asarray(rho_fb))))


@dataclass(frozen=True)
class DissipativeResult:
    """Finite-time trace and/or steady state of one dissipative pipeline run."""

    p_up_vs_time: ProbabilityTrace | None
    steady_p_up: float | None
    rho_steady: np.ndarray | None
    solution: FloquetSolution
    generator: FbmGenerator
    diagnostics: dict = field(default_factory=dict)


def _pipeline(drive: DriveHamiltonian, coupling, bath: BathSpec, psi0,
              projector, *, times_tau, steady, n_t, k_max, tol, method,
              substeps, initial_label="", target_label="up"):
    sol = floquet_solution(drive, n_t=n_t, tol=tol, method=method, substeps=substeps)
    xc = fourier_coefficients(sol, coupling, k_max)
    gen = build_generator(sol, xc, bath)
    diagnostics = {
        "unitarity_defect": sol.unitarity_defect,
        "mode_defect": sol.mode_defect,
        "fourier_leakage": xc.leakage_fraction,
        "k_tail_fraction": gen.k_tail_fraction,
        "trace_defect": gen.trace_defect,
        "lamb_shift_included": gen.lamb_shift_included,
    }
    trace = None
    if times_tau is not None:
        times_tau = np.atleast_1d(np.asarray(times_tau, dtype=float))
        rho0 = rho0_floquet(sol, psi0)
        rhos = evolve(gen, rho0, times_tau * sol.tau)
        values = np.array([p_up_period_averaged(r, sol, projector) for r in rhos])
        trace = ProbabilityTrace(times_tau=times_tau, values=values,
                                 initial_label=initial_label, target_label=target_label)
    steady_p = None
    rho_steady = None
    if steady:
        ss = steady_state(gen)
        rho_steady = ss.rho
        steady_p = p_up_period_averaged(ss.rho, sol, projector)
        diagnostics["null_residual"] = ss.residual
        diagnostics["min_eigenvalue"] = ss.min_eigenvalue
    return DissipativeResult(p_up_vs_time=trace, steady_p_up=steady_p,
                             rho_steady=rho_steady, solution=sol, generator=gen,
                             diagnostics=diagnostics)


def dissipative_run(params, bath: BathSpec, *, initial_state="down,0",
                    times_tau=None, steady: bool = True, n_t: int = 1024,
                    k_max: int = 200, tol: float = 1e-10,
                    method: str = "magnus4", substeps: int = 2) -> DissipativeResult:
    """Full qubit+resonator pipeline: Floquet basis -> (a + a^dag) Fourier
    components -> FBM generator -> finite-time and/or steady observables.

    initial_state is a basis label like "down,0" or an amplitude vector.
    """
    h0, h1 = rabi_parts(params)
    drive = DriveHamiltonian(h0, h1, params.omega)
    if isinstance(initial_state, str):
        psi0 = basis_state(initial_state, params.n_max)
        label = initial_state
    else:
        psi0 = np.asarray(initial_state, dtype=complex)
        label = "custom"
    return _pipeline(drive, coupling_coordinate(params.n_max), bath, psi0,
                     None, times_tau=times_tau, steady=steady, n_t=n_t,
                     k_max=k_max, tol=tol, method=method, substeps=substeps,
                     initial_label=label)


def structured_bath_run(params, bath: BathSpec, *, initial_state="down",
                        times_tau=None, steady: bool = True, n_t: int = 1024,
                        k_max: int = 200, tol: float = 1e-10,
                        method: str = "magnus4", substeps: int = 2) -> DissipativeResult:
    """Qubit-only pipeline with the resonator absorbed into a structured bath;
    the coupling operator is sigma_y."""
    if bath.kind != "structured":
        raise ValueError("structured_bath_run requires a structured BathSpec")
    h0, h1 = qubit_parts(params)
    drive = DriveHamiltonian(h0, h1, params.omega)
    if isinstance(initial_state, str):
        label = initial_state.strip().lower()
        if label not in ("down", "up"):
            raise ValueError(f"qubit initial state must be 'down' or 'up', got {initial_state!r}")
        psi0 = np.array([1.0, 0.0] if label == "down" else [0.0, 1.0], dtype=complex)
    else:
        psi0 = np.asarray(initial_state, dtype=complex)
        label = "custom"
    return _pipeline(drive, pauli("y").mat, bath, psi0, None,
                     times_tau=times_tau, steady=steady, n_t=n_t, k_max=k_max,
                     tol=tol, method=method, substeps=substeps,
                     initial_label=label)
