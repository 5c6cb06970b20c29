"""Closed-system observables: transition probabilities, the rotating-wave
resonance formula, and the resonance-region geometry of the (A, eps0) plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .operators import as_matrix


class StateValidityError(ValueError):
    """State vector or density matrix violates normalization/trace bounds."""


@dataclass(frozen=True)
class ProbabilityTrace:
    """A probability time series; times are in units of the drive period."""

    times_tau: np.ndarray
    values: np.ndarray
    initial_label: str = ""
    target_label: str = ""

    def to_csv(self) -> str:
        lines = ["t_over_tau,probability"]
        for t, v in zip(self.times_tau, self.values):
            lines.append(f"{t:.17g},{v:.17g}")
        return "\n".join(lines) + "\n"


def _check_normalized(psi0):
    psi0 = np.asarray(psi0, dtype=complex)
    norm = np.linalg.norm(psi0)
    if abs(norm - 1.0) > 1e-9:
        raise StateValidityError(f"initial state norm deviates from 1 by {abs(norm - 1.0):.3e}")
    return psi0


def _projector_means(sol, proj):
    """Period-grid samples and average of <beta(t)|Pi|alpha(t)> (shape (n_t, D, D))."""
    pm = as_matrix(proj)
    m = sol.mode_samples
    samples = np.einsum("tib,ij,tja->tba", m.conj(), pm, m, optimize=True)
    return samples, samples.mean(axis=0)


def instantaneous_probability(sol, psi0, target_projector, times_tau,
                              initial_label: str = "", target_label: str = "") -> ProbabilityTrace:
    """P(t) = <psi(t)|Pi|psi(t)> with |psi(t)> = sum_a c_a e^{-i eps_a t} |a(t)>.

    Times are in units of tau and must sit on the period sample grid,
    i.e. be multiples of 1/n_t.
    """
    psi0 = _check_normalized(psi0)
    times_tau = np.atleast_1d(np.asarray(times_tau, dtype=float))
    frac = times_tau * sol.n_t
    idx = np.rint(frac).astype(int)
    if np.abs(frac - idx).max() > 1e-6:
        raise ValueError("times must be multiples of tau/n_t within 1e-6")
    c0 = sol.modes0.conj().T @ psi0
    pm = as_matrix(target_projector)
    tau = sol.tau
    values = np.empty(times_tau.shape[0])
    for k, (t_tau, j_full) in enumerate(zip(times_tau, idx)):
        j = j_full % sol.n_t
        coeff = c0 * np.exp(-1j * sol.quasienergies * (t_tau * tau))
        psi_t = sol.mode_samples[j] @ coeff
        values[k] = float(np.real(psi_t.conj() @ (pm @ psi_t)))
    return ProbabilityTrace(times_tau=times_tau, values=values,
                            initial_label=initial_label, target_label=target_label)


def time_averaged_probability(sol, psi0, target_projector,
                              degeneracy_tol: float = 1e-10) -> float:
    """Infinite-time average of the transition probability.

    Equals the Floquet-diagonal period average
    sum_a |c_a|^2 (1/tau) Int <a(t)|Pi|a(t)> dt, plus cross terms between
    quasienergies that coincide within degeneracy_tol*omega.
    """
    psi0 = _check_normalized(psi0)
    c0 = sol.modes0.conj().T @ psi0
    _, pbar = _projector_means(sol, target_projector)
    eps = sol.quasienergies
    delta = np.abs(eps[:, None] - eps[None, :])
    delta = np.minimum(delta, sol.omega - delta)
    mask = delta < degeneracy_tol * sol.omega
    weights = np.outer(c0, c0.conj()) * mask
    return float(np.real(np.einsum("ab,ba->", weights, pbar)))


def period_averaged_probability_at_time(sol, psi0, target_projector, t_tau: float) -> float:
    """Period-averaged probability with the Floquet coherences evaluated at time t.

    This is the closed-system analog of the dissipative observable
    P_bar(t): coherences rotate as e^{-i(eps_a - eps_b) t} while the mode
    matrix elements are averaged over one period.
    """
    psi0 = _check_normalized(psi0)
    c0 = sol.modes0.conj().T @ psi0
    _, pbar = _projector_means(sol, target_projector)
    t = t_tau * sol.tau
    phases = np.exp(-1j * sol.quasienergies * t)
    rho = np.outer(c0 * phases, (c0 * phases).conj())
    return float(np.real(np.einsum("ab,ba->", rho, pbar)))


def running_average(trace: ProbabilityTrace, window_tau: float) -> ProbabilityTrace:
    """Centered moving average over a window of window_tau periods."""
    dt = float(trace.times_tau[1] - trace.times_tau[0])
    n_win = max(1, int(round(window_tau / dt)))
    kernel = np.ones(n_win) / n_win
    smooth = np.convolve(trace.values, kernel, mode="same")
    return ProbabilityTrace(times_tau=trace.times_tau, values=smooth,
                            initial_label=trace.initial_label,
                            target_label=trace.target_label)


def rwa_probability(d, m: int, delta0=None):
    """Rotating-wave time-averaged probability near the m-photon resonance:

        P = 1/2 * w^2 / [(delta0 - m*omega)^2 + w^2],
        w = gap_n * J_{-m}(A / omega).

    Vanishes at the zeros of J_{-m} (coherent destruction of tunneling);
    at the measure-zero point where additionally delta0 = m*omega the limit
    along the amplitude axis, 0, is returned.  Bessel factors below 1e-12
    count as exact zeros so CDT points located by root finding land on the
    documented convention.
    """
    d0 = np.asarray(d.delta0 if delta0 is None else delta0, dtype=float)
    bess = jv(-m, d.amp / d.omega)
    if abs(bess) < 1e-12:
        bess = 0.0
    w = d.gap_n * bess
    num = w * w
    det = d0 - m * d.omega
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(num == 0.0, 0.0, 0.5 * num / (det * det + num))
    return float(out) if np.ndim(out) == 0 else out


def rwa_probability_instantaneous(d, m: int, t):
    """Rotating-wave instantaneous transition probability near the m-resonance:

        P(t) = w^2/(w^2 + det^2) * sin^2(sqrt(w^2 + det^2) t / 2).
    """
    w = d.gap_n * jv(-m, d.amp / d.omega)
    det = d.delta0 - m * d.omega
    omega_rabi = math.hypot(w, det)
    t = np.asarray(t, dtype=float)
    if omega_rabi == 0.0:
        out = np.zeros_like(t)
    else:
        out = (w / omega_rabi) ** 2 * np.sin(0.5 * omega_rabi * t) ** 2
    return float(out) if out.ndim == 0 else out


def p_up(state, n_max: int) -> float:
    """Probability of measuring the qubit up, irrespective of photon number.

    Accepts a state vector or a density matrix on the product space.
    """
    arr = np.asarray(state, dtype=complex)
    dim = 2 * (n_max + 1)
    if arr.shape not in ((dim,), (dim, dim)):
        raise ValueError(f"state shape {arr.shape} incompatible with n_max={n_max}")
    up = slice(n_max + 1, dim)
    if arr.ndim == 1:
        norm = np.linalg.norm(arr)
        if abs(norm - 1.0) > 1e-6:
            raise StateValidityError(f"state norm deviates from 1 by {abs(norm - 1.0):.3e}")
        return float(np.sum(np.abs(arr[up]) ** 2))
    tr = float(np.real(np.trace(arr)))
    if abs(tr - 1.0) > 1e-6:
        raise StateValidityError(f"density-matrix trace deviates from 1 by {abs(tr - 1.0):.3e}")
    return float(np.real(np.trace(arr[up, up])))


# --- resonance-region geometry ----------------------------------------------

_REGION_LABELS = ("I", "II", "III", "IV", "V", "VI")


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in the (A, eps0) plane."""

    amp_min: float
    amp_max: float
    eps0_min: float
    eps0_max: float

    def __post_init__(self):
        for v in (self.amp_min, self.amp_max, self.eps0_min, self.eps0_max):
            if not np.isfinite(v):
                raise ValueError("rect bounds must be finite")
        if self.amp_max < self.amp_min or self.eps0_max < self.eps0_min:
            raise ValueError("rect bounds must be ordered")


@dataclass(frozen=True)
class ResonanceRegions:
    """Partition of a rectangle by the gap-reachability lines A = |eps0 - e_gap|.

    Gaps sit at eps0 in {0, -omega_r, +omega_r}.  Labels follow the
    spectroscopy-map convention: I/II no gap reachable (eps0 < 0 / >= 0),
    III qubit gap only, IV qubit + left photonic (-omega_r), V qubit +
    right photonic (+omega_r), VI all gaps.
    """

    omega_r: float
    rect: Rect

    def region_at(self, amp, eps0) -> str:
        amp = float(amp)
        eps0 = float(eps0)
        reach_q = amp >= abs(eps0)
        reach_left = amp >= abs(eps0 + self.omega_r)
        reach_right = amp >= abs(eps0 - self.omega_r)
        if reach_left and reach_right:
            return "VI"
        if reach_left:
            return "IV"
        if reach_right:
            return "V"
        if reach_q:
            return "III"
        return "I" if eps0 < 0 else "II"

    def region_grid(self, amps, eps0s) -> np.ndarray:
        """Region labels on the outer product grid, shape (len(amps), len(eps0s))."""
        out = np.empty((len(amps), len(eps0s)), dtype=object)
        for i, a in enumerate(amps):
            for j, e in enumerate(eps0s):
                out[i, j] = self.region_at(a, e)
        return out

    def boundaries(self) -> list[dict]:
        """Reachability boundaries A = |eps0 - e_gap| clipped to the rectangle,
        one polyline per gap, vertices ordered by eps0."""
        r = self.rect
        out = []
        for name, e_gap in (("qubit", 0.0),
                            ("photonic_minus", -self.omega_r),
                            ("photonic_plus", +self.omega_r)):
            pts = []
            for x in sorted({r.eps0_min, r.eps0_max, e_gap,
                             e_gap - r.amp_min, e_gap + r.amp_min,
                             e_gap - r.amp_max, e_gap + r.amp_max}):
                if not (r.eps0_min <= x <= r.eps0_max):
                    continue
                a = abs(x - e_gap)
                if r.amp_min <= a <= r.amp_max:
                    pts.append((x, a))
            if len(pts) >= 2:
                out.append({"gap": name, "eps0_gap": e_gap,
                            "vertices": [[float(x), float(a)] for x, a in pts]})
        return out

    def labels(self, samples: int = 41) -> list[dict]:
        """Representative label positions: centroid of each region's sample points."""
        r = self.rect
        amps = np.linspace(r.amp_min, r.amp_max, samples)
        eps0s = np.linspace(r.eps0_min, r.eps0_max, samples)
        grid = self.region_grid(amps, eps0s)
        out = []
        for lab in _REGION_LABELS:
            ii, jj = np.nonzero(grid == lab)
            if ii.size:
                out.append({"region": lab,
                            "eps0": float(eps0s[jj].mean()),
                            "amp": float(amps[ii].mean())})
        return out


def resonance_regions(omega_r: float, rect) -> ResonanceRegions:
    """Partition the (A, eps0) rectangle by LZS gap reachability."""
    if not isinstance(rect, Rect):
        rect = Rect(*rect)
    return ResonanceRegions(omega_r=float(omega_r), rect=rect)
