"""Operators and Hamiltonians on the truncated qubit (x) Fock product space.

Basis conventions, fixed for all dump/compare purposes:
  - qubit basis |down>, |up| mapped to indices 0, 1;
  - product basis |s> (x) |n> with flat index s*(n_max+1) + n;
  - the Kronecker ordering is always qubit (x) resonator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar


class EigensolverError(RuntimeError):
    """Dense diagonalization failed; carries conditioning context."""


@dataclass(frozen=True)
class Operator:
    """A dense complex matrix together with its basis tag.

    Tags are "qubit", "fock(n_max)", "product(n_max)" or None for generic
    intermediates; product(n) implies dim == 2*(n+1).
    """

    mat: np.ndarray
    basis: str | None = None

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        if self.basis is not None and self.basis.startswith("product("):
            n = int(self.basis[len("product("):-1])
            if self.dim != 2 * (n + 1):
                raise ValueError(
                    f"product({n}) operator must have dim {2 * (n + 1)}, got {self.dim}")

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def dagger(self) -> "Operator":
        return Operator(self.mat.conj().T, self.basis)

    def __matmul__(self, other):
        other_mat = as_matrix(other)
        return Operator(self.mat @ other_mat, self.basis)


def as_matrix(op) -> np.ndarray:
    """Coerce an Operator or array-like to a complex ndarray."""
    if isinstance(op, Operator):
        return op.mat
    return np.asarray(op, dtype=complex)


# Pauli matrices written in the package's fixed (|down>, |up>) = (0, 1)
# ordering, i.e. sigma_z |up> = +|up>: entry (i, j) = <i|sigma|j>.
_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex),
    "z": np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex),
}


def pauli(axis: str) -> Operator:
    """2x2 Pauli matrix for axis in {"x", "y", "z"} in the (down, up) ordering."""
    try:
        return Operator(_PAULI[axis].copy(), "qubit")
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def qubit_identity() -> Operator:
    return Operator(np.eye(2, dtype=complex), "qubit")


def fock_identity(n_max: int) -> Operator:
    return Operator(np.eye(n_max + 1, dtype=complex), f"fock({n_max})")


def annihilation_op(n_max: int) -> Operator:
    """Photon annihilation operator a on the truncated Fock space, <n-1|a|n> = sqrt(n)."""
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    a = np.diag(np.sqrt(np.arange(1.0, n_max + 1.0)), k=1).astype(complex)
    return Operator(a, f"fock({n_max})")


def number_op(n_max: int) -> Operator:
    """Photon number operator a^dag a."""
    return Operator(np.diag(np.arange(n_max + 1.0)).astype(complex), f"fock({n_max})")


def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product with fixed qubit (x) resonator ordering."""
    amat, bmat = as_matrix(a), as_matrix(b)
    tag = None
    if isinstance(a, Operator) and isinstance(b, Operator):
        if a.basis == "qubit" and b.basis is not None and b.basis.startswith("fock("):
            tag = "product(" + b.basis[len("fock("):]
    return Operator(np.kron(amat, bmat), tag)


def basis_index(label: str, n_max: int) -> int:
    """Flat product-space index of a label like "down,0" or "up,2"."""
    spin, _, num = label.partition(",")
    spin = spin.strip().lower()
    if spin not in ("down", "up"):
        raise ValueError(f"spin must be 'down' or 'up', got {label!r}")
    n = int(num)
    if not 0 <= n <= n_max:
        raise ValueError(f"photon number {n} outside 0..{n_max}")
    return (0 if spin == "down" else 1) * (n_max + 1) + n


def basis_state(label: str, n_max: int) -> np.ndarray:
    """Unit vector for a product basis label."""
    psi = np.zeros(2 * (n_max + 1), dtype=complex)
    psi[basis_index(label, n_max)] = 1.0
    return psi


def up_projector(n_max: int) -> Operator:
    """Projector |up><up| (x) identity, the qubit-up population observable."""
    return tensor(Operator(np.diag([0.0, 1.0]).astype(complex), "qubit"),
                  fock_identity(n_max))


def coupling_coordinate(n_max: int) -> Operator:
    """Resonator coordinate identity (x) (a + a^dag), the bath coupling operator."""
    a = annihilation_op(n_max).mat
    return tensor(qubit_identity(), Operator(a + a.conj().T, f"fock({n_max})"))


def rabi_parts(p) -> tuple[np.ndarray, np.ndarray]:
    """Static and drive parts of the Rabi Hamiltonian, H(t) = h0 + cos(omega t) h1."""
    n_max = p.n_max
    ident_f = np.eye(n_max + 1, dtype=complex)
    a = annihilation_op(n_max).mat
    h_qubit = 0.5 * (p.eps0 * _PAULI["z"] + p.delta * _PAULI["x"])
    h0 = (np.kron(h_qubit, ident_f)
          + np.kron(np.eye(2, dtype=complex), p.omega_r * np.diag(np.arange(n_max + 1.0)))
          + p.g * np.kron(_PAULI["y"], a + a.conj().T))
    h1 = 0.5 * p.amp * np.kron(_PAULI["z"], ident_f)
    return h0, h1


def build_rabi_hamiltonian(p, t: float) -> Operator:
    """Driven Rabi Hamiltonian at time t:

    H(t) = 1/2[(eps0 + A cos(omega t)) sz + delta sx] (x) I
           + I (x) omega_r a^dag a + g sy (x) (a + a^dag).
    """
    h0, h1 = rabi_parts(p)
    return Operator(h0 + math.cos(p.omega * t) * h1, f"product({p.n_max})")


def djc_parts(d) -> tuple[np.ndarray, np.ndarray]:
    """Static and drive parts of one driven Jaynes-Cummings block."""
    h0 = np.array([[(d.n + 0.5) * d.omega_r + 0.5 * d.delta0, -0.5j * d.gap_n],
                   [0.5j * d.gap_n, (d.n + 0.5) * d.omega_r - 0.5 * d.delta0]],
                  dtype=complex)
    h1 = np.array([[0.5 * d.amp, 0.0], [0.0, -0.5 * d.amp]], dtype=complex)
    return h0, h1


def build_djc_hamiltonian(d, t: float) -> Operator:
    """Driven Jaynes-Cummings block Hamiltonian at time t, in the basis
    (|up,n>, |down,n+1>):

    H(t) = (n + 1/2) omega_r I + 1/2 [delta(t) sz + gap_n sy],
    delta(t) = delta0 + A cos(omega t).
    """
    h0, h1 = djc_parts(d)
    return Operator(h0 + math.cos(d.omega * t) * h1, None)


def qubit_parts(p) -> tuple[np.ndarray, np.ndarray]:
    """Static and drive parts of the bare driven qubit (no resonator)."""
    h0 = 0.5 * (p.eps0 * _PAULI["z"] + p.delta * _PAULI["x"])
    h1 = 0.5 * p.amp * _PAULI["z"]
    return h0, h1


def static_hamiltonian(p, eps: float) -> Operator:
    """Undriven Rabi Hamiltonian with the static bias eps substituted for eps(t)."""
    return build_rabi_hamiltonian(p.replace(eps0=eps, amp=0.0), 0.0)


@dataclass(frozen=True)
class StaticSpectrum:
    """Sorted eigenvalues and eigenvector columns of the static Hamiltonian."""

    energies: np.ndarray
    states: np.ndarray

    @property
    def dim(self) -> int:
        return self.energies.shape[0]


def static_spectrum(p, eps: float, degeneracy_tol: float = 1e-12) -> StaticSpectrum:
    """Diagonalize the undriven Hamiltonian at bias eps.

    Eigenvalues ascend; eigenvectors within degenerate groups are
    re-orthonormalized by QR so dumps are reproducible across backends.
    """
    h = static_hamiltonian(p, eps).mat
    try:
        energies, states = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        scale = float(np.abs(h).max())
        raise EigensolverError(
            f"eigh failed for static Hamiltonian at eps={eps} "
            f"(dim={h.shape[0]}, max|H|={scale:.3e}): {exc}") from exc
    # QR re-orthonormalization inside (near-)degenerate groups
    scale = max(abs(energies[-1]), abs(energies[0]), 1.0)
    i = 0
    while i < len(energies):
        j = i + 1
        while j < len(energies) and energies[j] - energies[j - 1] < degeneracy_tol * scale:
            j += 1
        if j - i > 1:
            q, _ = np.linalg.qr(states[:, i:j])
            states[:, i:j] = q
        i = j
    return StaticSpectrum(energies=energies, states=states)


@dataclass(frozen=True)
class GapScanResult:
    """Location and magnitude of the minimal distance between two levels."""

    eps_min: float
    gap: float
    at_boundary: bool


def gap_scan(p, level_pair, eps_range, resolution: int = 2001,
             rel_tol: float = 1e-10) -> GapScanResult:
    """Scan the static bias for the minimal gap between levels i < j.

    A dense scan over eps_range locates the bracket; golden-section/Brent
    refinement then converges the gap to rel_tol.  If no interior local
    minimum exists, the boundary minimum is returned with at_boundary set.
    """
    i, j = level_pair
    dim = 2 * (p.n_max + 1)
    if not (0 <= i < j < dim):
        raise ValueError(f"level pair {level_pair} invalid for dim {dim}")
    lo, hi = map(float, eps_range)
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError(f"eps_range must be finite with lo < hi, got {eps_range}")
    if resolution < 3:
        raise ValueError("resolution must be >= 3")

    def gap_at(eps):
        energies = static_spectrum(p, eps).energies
        return energies[j] - energies[i]

    grid = np.linspace(lo, hi, resolution)
    gaps = np.array([gap_at(e) for e in grid])
    interior = (gaps[1:-1] <= gaps[:-2]) & (gaps[1:-1] <= gaps[2:])
    if not interior.any():
        k = int(np.argmin(gaps))
        return GapScanResult(eps_min=float(grid[k]), gap=float(gaps[k]), at_boundary=True)
    candidates = np.where(interior)[0] + 1
    k = candidates[np.argmin(gaps[candidates])]
    res = minimize_scalar(gap_at, bracket=None,
                          bounds=(grid[k - 1], grid[k + 1]), method="bounded",
                          options={"xatol": (hi - lo) * 1e-14})
    eps_min, gap = float(res.x), float(res.fun)
    # polish: ensure relative convergence of the gap value itself
    span = grid[k + 1] - grid[k - 1]
    for shrink in (1e-2, 1e-4):
        res2 = minimize_scalar(gap_at, bounds=(eps_min - span * shrink, eps_min + span * shrink),
                               method="bounded", options={"xatol": span * shrink * 1e-10})
        if abs(res2.fun - gap) <= rel_tol * max(abs(gap), 1e-300):
            eps_min, gap = float(res2.x), float(res2.fun)
            break
        eps_min, gap = float(res2.x), float(res2.fun)
    return GapScanResult(eps_min=eps_min, gap=gap, at_boundary=False)


def dump_operator(op: Operator) -> str:
    """Plain-text row-major dump, entries as "re,im" with 17 significant digits.

    The first line is a header comment carrying dimension metadata so dumps
    from different implementations can be diffed directly.
    """
    mat = as_matrix(op)
    basis = op.basis if isinstance(op, Operator) else None
    lines = [f"# dim={mat.shape[0]} basis={basis or 'unspecified'}"]
    for row in mat:
        lines.append(" ".join(f"{z.real:.17g},{z.imag:.17g}" for z in row))
    return "\n".join(lines) + "\n"
