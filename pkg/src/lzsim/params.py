"""Parameter containers for the driven qubit-resonator system.

All energies and angular frequencies share one unit system with hbar = 1
(and k_B = 1 for temperatures).  The conventional choice throughout the
package and its defaults is omega_r = 1.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SystemParams:
    """Constants of the harmonically driven qubit-resonator (Rabi) model.

    The qubit bias is modulated as eps(t) = eps0 + amp * cos(omega * t).
    Defaults correspond to the strong-coupling working point used for all
    bundled example configs (delta = 0.0038, omega = 0.0375, g = 0.0019,
    in units of omega_r).
    """

    delta: float = 0.0038
    eps0: float = 0.0
    amp: float = 0.0
    omega: float = 0.0375
    omega_r: float = 1.0
    g: float = 0.0019
    n_max: int = 3

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.amp < 0:
            raise ValueError(f"amp must be >= 0, got {self.amp}")
        if self.omega <= 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if self.omega_r <= 0:
            raise ValueError(f"omega_r must be > 0, got {self.omega_r}")
        if self.g < 0:
            raise ValueError(f"g must be >= 0, got {self.g}")
        if self.n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {self.n_max}")

    @property
    def omega_q(self) -> float:
        """Undriven qubit splitting sqrt(eps0^2 + delta^2)."""
        return math.hypot(self.eps0, self.delta)

    @property
    def tau(self) -> float:
        """Drive period 2*pi/omega."""
        return 2.0 * math.pi / self.omega

    @property
    def dim(self) -> int:
        """Dimension of the truncated product space, 2*(n_max+1)."""
        return 2 * (self.n_max + 1)

    def replace(self, **kwargs) -> "SystemParams":
        return dataclasses.replace(self, **kwargs)


@dataclass(frozen=True)
class DjcParams:
    """Constants of one photon-number block of the driven Jaynes-Cummings model.

    Each block is a two-level system spanned by (|up,n>, |down,n+1>) with
    detuning delta(t) = delta0 + amp*cos(omega*t), delta0 = eps0 - omega_r,
    and gap gap_n = 2*g*sqrt(n+1).  omega_r only enters through the global
    (n+1/2)*omega_r shift of the block Hamiltonian.
    """

    n: int
    delta0: float
    amp: float
    omega: float
    gap_n: float
    omega_r: float = 1.0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")
        if self.amp < 0:
            raise ValueError(f"amp must be >= 0, got {self.amp}")
        if self.omega <= 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if self.gap_n < 0:
            raise ValueError(f"gap_n must be >= 0, got {self.gap_n}")

    @classmethod
    def from_coupling(cls, n, delta0, amp, omega, g, omega_r=1.0) -> "DjcParams":
        """Build block parameters from the qubit-resonator coupling g."""
        return cls(n=n, delta0=delta0, amp=amp, omega=omega,
                   gap_n=2.0 * g * math.sqrt(n + 1.0), omega_r=omega_r)

    @property
    def tau(self) -> float:
        return 2.0 * math.pi / self.omega

    def replace(self, **kwargs) -> "DjcParams":
        return dataclasses.replace(self, **kwargs)
