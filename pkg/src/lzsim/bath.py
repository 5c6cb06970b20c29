"""Spectral densities, thermal occupation, and the golden-rule rate kernel.

Units: hbar = k_B = 1; temperatures are energies.  The rate kernel follows
the convention N(e) = pi * J(|e|) * [n_B(|e|) + theta(-e)], i.e. absorption
for e > 0 and stimulated+spontaneous emission for e < 0, which enforces
detailed balance N(e)/N(-e) = exp(-e/T) and Gibbs relaxation in the
undriven limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# arguments beyond this give n_B below ~1e-300; treat as zero occupation
_EXP_ARG_MAX = 700.0


@dataclass(frozen=True)
class BathSpec:
    """A thermal harmonic bath: ohmic (kappa, omega_d) or structured (kappa, g, omega_r).

    The structured model is the effective reservoir seen by the qubit when a
    resonator of frequency omega_r (damped at rate kappa, coupled with
    strength g) is absorbed into the environment.
    """

    kind: str
    kappa: float
    temperature: float
    omega_d: float | None = None
    g: float | None = None
    omega_r: float | None = None

    def __post_init__(self):
        if self.kind not in ("ohmic", "structured"):
            raise ValueError(f"bath kind must be 'ohmic' or 'structured', got {self.kind!r}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.kind == "ohmic":
            if self.omega_d is None or self.omega_d <= 0:
                raise ValueError("ohmic bath requires omega_d > 0")
        else:
            if self.g is None or self.g < 0:
                raise ValueError("structured bath requires g >= 0")
            if self.omega_r is None or self.omega_r <= 0:
                raise ValueError("structured bath requires omega_r > 0")

    @classmethod
    def ohmic(cls, kappa, omega_d, temperature) -> "BathSpec":
        return cls(kind="ohmic", kappa=kappa, temperature=temperature, omega_d=omega_d)

    @classmethod
    def structured(cls, kappa, g, omega_r, temperature) -> "BathSpec":
        return cls(kind="structured", kappa=kappa, temperature=temperature,
                   g=g, omega_r=omega_r)

    @property
    def low_freq_slope(self) -> float:
        """lim_{w->0} J(w)/w; the structured model is ohmic at low frequency."""
        if self.kind == "ohmic":
            return self.kappa
        return 16.0 * self.kappa * self.g**2 / self.omega_r**2


def spectral_density(bath: BathSpec, w):
    """Bath spectral density J(w) for w >= 0.

    ohmic:      J(w) = kappa * w * exp(-w / omega_d)
    structured: J(w) = 16 kappa g^2 omega_r^2 w /
                       [(omega_r^2 - w^2)^2 + (kappa omega_r w)^2]
    """
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("spectral_density requires w >= 0 "
                         "(the odd extension lives in the rate kernel)")
    if bath.kind == "ohmic":
        out = bath.kappa * w * np.exp(-w / bath.omega_d)
    else:
        wr = bath.omega_r
        out = (16.0 * bath.kappa * bath.g**2 * wr**2 * w
               / ((wr**2 - w**2) ** 2 + (bath.kappa * wr * w) ** 2))
    return out if out.ndim else float(out)


def bose_occupation(w, temperature):
    """Bose-Einstein occupation n_B(w) = 1/(exp(w/T) - 1).

    w = 0 is a domain error; callers needing the w -> 0 limit must go
    through rate_kernel, where it is finite.  T = 0 returns 0 for w > 0.
    """
    w_arr = np.asarray(w, dtype=float)
    if np.any(w_arr == 0.0):
        raise ValueError("bose_occupation diverges at w = 0; use rate_kernel")
    if temperature == 0.0:
        out = np.where(w_arr > 0, 0.0, -1.0)
    else:
        x = w_arr / temperature
        with np.errstate(over="ignore"):
            out = np.where(np.abs(x) > _EXP_ARG_MAX,
                           np.where(x > 0, 0.0, -1.0),
                           1.0 / np.expm1(np.where(np.abs(x) > _EXP_ARG_MAX, 1.0, x)))
    return out if out.ndim else float(out)


def rate_kernel(bath: BathSpec, eps):
    """Golden-rule kernel N(eps) entering the Floquet-Born-Markov rates.

    N(eps) = pi J(eps) n_B(eps)            for eps > 0   (absorption)
    N(eps) = pi J(|eps|) (1 + n_B(|eps|))  for eps < 0   (emission)
    N(0)   = pi * lim_{w->0} J(w)/w * T    (continuous limit)
    """
    eps_arr = np.asarray(eps, dtype=float)
    scalar = eps_arr.ndim == 0
    eps_arr = np.atleast_1d(eps_arr)
    out = np.empty_like(eps_arr)

    zero = eps_arr == 0.0
    out[zero] = math.pi * bath.low_freq_slope * bath.temperature

    nz = ~zero
    if np.any(nz):
        e = eps_arr[nz]
        j = spectral_density(bath, np.abs(e))
        if bath.temperature == 0.0:
            occ = np.zeros_like(e)
        else:
            x = np.abs(e) / bath.temperature
            small = x <= _EXP_ARG_MAX
            occ = np.zeros_like(e)
            occ[small] = 1.0 / np.expm1(x[small])
        out[nz] = math.pi * j * np.where(e > 0, occ, 1.0 + occ)
    return float(out[0]) if scalar else out
