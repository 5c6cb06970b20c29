"""Strict JSON config schemas shared by the CLI and the HTTP service.

Every physical quantity carries an explicit unit suffix in its key name
(_over_omega_r for static scales, _over_omega for drive-plane coordinates,
_over_tau for times) to keep unit bugs out of run configs.  Unknown keys
are rejected.
"""
from __future__ import annotations

import hashlib
import json
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .bath import BathSpec
from .params import DjcParams, SystemParams


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ParamsConfig(StrictModel):
    """Static system constants; strong-coupling reference values by default."""

    delta_over_omega_r: float = Field(0.0038, ge=0)
    omega_over_omega_r: float = Field(0.0375, gt=0)
    g_over_omega_r: float = Field(0.0019, ge=0)
    omega_r: float = Field(1.0, gt=0, description="absolute frequency scale")
    n_max: int = Field(3, ge=0)

    def system_params(self, eps0=0.0, amp=0.0) -> SystemParams:
        wr = self.omega_r
        return SystemParams(delta=self.delta_over_omega_r * wr, eps0=eps0,
                            amp=amp, omega=self.omega_over_omega_r * wr,
                            omega_r=wr, g=self.g_over_omega_r * wr,
                            n_max=self.n_max)

    def djc_params(self, n: int, delta0=0.0, amp=0.0) -> DjcParams:
        wr = self.omega_r
        return DjcParams.from_coupling(n=n, delta0=delta0, amp=amp,
                                       omega=self.omega_over_omega_r * wr,
                                       g=self.g_over_omega_r * wr, omega_r=wr)


class BathConfig(StrictModel):
    """Thermal bath; defaults kappa = 0.001, omega_D = 12.5 omega_r,
    T = 0.0175 omega_r."""

    model: Literal["ohmic", "structured"] = "ohmic"
    kappa: float = Field(0.001, gt=0)
    omega_d_over_omega_r: float = Field(12.5, gt=0)
    temperature_over_omega_r: float = Field(0.0175, ge=0)

    def bath_spec(self, params: ParamsConfig) -> BathSpec:
        wr = params.omega_r
        if self.model == "ohmic":
            return BathSpec.ohmic(kappa=self.kappa,
                                  omega_d=self.omega_d_over_omega_r * wr,
                                  temperature=self.temperature_over_omega_r * wr)
        return BathSpec.structured(kappa=self.kappa,
                                   g=params.g_over_omega_r * wr, omega_r=wr,
                                   temperature=self.temperature_over_omega_r * wr)


class GridConfig(StrictModel):
    """Inclusive-endpoint sweep grid in the (A, eps0) plane, units of omega."""

    amp_min_over_omega: float = 0.0
    amp_max_over_omega: float = 50.0
    amp_steps: int = Field(201, ge=1)
    eps0_min_over_omega: float = -100.0 / 3.0
    eps0_max_over_omega: float = 100.0 / 3.0
    eps0_steps: int = Field(201, ge=1)

    @model_validator(mode="after")
    def _ranges(self):
        if self.amp_max_over_omega < self.amp_min_over_omega:
            raise ValueError("amp range must be ordered")
        if self.eps0_max_over_omega < self.eps0_min_over_omega:
            raise ValueError("eps0 range must be ordered")
        if self.amp_min_over_omega < 0:
            raise ValueError("amplitudes must be >= 0")
        return self


class NumericsConfig(StrictModel):
    n_t: int = Field(1024, ge=4)
    k_max: int = Field(200, ge=1)
    ode_tol: float = Field(1e-10, gt=0, le=1e-4)
    propagator: Literal["magnus4", "dop853"] = "magnus4"
    substeps: int = Field(2, ge=1)

    @model_validator(mode="after")
    def _kmax(self):
        if self.k_max > self.n_t // 2 - 1:
            raise ValueError("k_max must be <= n_t/2 - 1")
        return self


InitialState = Union[str, list[list[float]]]


class SweepConfig(StrictModel):
    """A 2-D sweep over drive amplitude and dc bias.

    For model "djc" the eps0 axis is the detuning delta0 = eps0 - omega_r
    of the photon block djc_n, matching the interference-map axes.
    """

    model: Literal["rabi", "djc", "qubit_structured"] = "rabi"
    djc_n: Optional[int] = Field(None, ge=0)
    params: ParamsConfig = ParamsConfig()
    bath: Optional[BathConfig] = None
    grid: GridConfig = GridConfig()
    observable: Literal["unitary_avg", "dissipative_at_time", "dissipative_steady"] = "unitary_avg"
    time_over_tau: Optional[float] = Field(None, ge=0)
    initial_state: Optional[InitialState] = None
    numerics: NumericsConfig = NumericsConfig()
    workers: int = Field(1, ge=1)
    cache_dir: Optional[str] = None

    @model_validator(mode="after")
    def _consistency(self):
        dissipative = self.observable.startswith("dissipative")
        if dissipative and self.bath is None:
            raise ValueError(f"observable {self.observable!r} requires a bath section")
        if not dissipative and self.bath is not None:
            raise ValueError("bath set but observable is unitary_avg; remove one")
        if self.observable == "dissipative_at_time" and self.time_over_tau is None:
            raise ValueError("dissipative_at_time requires time_over_tau")
        if self.observable != "dissipative_at_time" and self.time_over_tau is not None:
            raise ValueError("time_over_tau is only meaningful for dissipative_at_time")
        if self.model == "djc":
            if self.djc_n is None:
                raise ValueError("model 'djc' requires djc_n")
            if dissipative:
                raise ValueError("dissipative observables support models 'rabi' and "
                                 "'qubit_structured' only")
        elif self.djc_n is not None:
            raise ValueError("djc_n is only meaningful for model 'djc'")
        if self.model == "qubit_structured":
            if self.bath is not None and self.bath.model != "structured":
                raise ValueError("model 'qubit_structured' requires bath.model 'structured'")
            if not dissipative:
                raise ValueError("model 'qubit_structured' is a dissipative pipeline")
        elif self.bath is not None and self.bath.model == "structured":
            raise ValueError("bath.model 'structured' requires model 'qubit_structured'")
        return self

    def config_hash(self) -> str:
        """Hash of the physics-defining fields (workers/cache do not matter)."""
        payload = self.model_dump(mode="json", exclude={"workers", "cache_dir"})
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


class SpectrumConfig(StrictModel):
    """Static energy levels as a function of the dc bias."""

    params: ParamsConfig = ParamsConfig()
    eps_min_over_omega_r: float = -2.0
    eps_max_over_omega_r: float = 2.0
    steps: int = Field(401, ge=2)
    levels: Optional[int] = Field(None, ge=1, description="keep only the lowest k levels")


class GapScanConfig(StrictModel):
    """Minimal level-pair distance versus dc bias."""

    params: ParamsConfig = ParamsConfig()
    level_low: int = Field(1, ge=0)
    level_high: int = Field(2, ge=1)
    eps_min_over_omega_r: float = -1.2
    eps_max_over_omega_r: float = -0.8
    resolution: int = Field(801, ge=3)


class FloquetPointConfig(StrictModel):
    """Quasienergies (and diagnostics) at one (A, eps0) point."""

    model: Literal["rabi", "djc", "qubit_structured"] = "rabi"
    djc_n: Optional[int] = Field(None, ge=0)
    params: ParamsConfig = ParamsConfig()
    amp_over_omega: float = Field(0.0, ge=0)
    eps0_over_omega: float = 0.0
    numerics: NumericsConfig = NumericsConfig()

    @model_validator(mode="after")
    def _djc(self):
        if self.model == "djc" and self.djc_n is None:
            raise ValueError("model 'djc' requires djc_n")
        return self


class TimeSeriesConfig(StrictModel):
    """Probability time series at a fixed drive point.

    Closed system when no bath is given (instantaneous probability);
    dissipative period-averaged p_up when a bath section is present.
    """

    kind: Literal["time_series"] = "time_series"
    model: Literal["rabi", "djc", "qubit_structured"] = "rabi"
    djc_n: Optional[int] = None
    params: ParamsConfig = ParamsConfig()
    bath: Optional[BathConfig] = None
    amp_over_omega: float = Field(0.0, ge=0)
    eps0_over_omega: float = 0.0
    t_max_over_tau: float = Field(20.0, gt=0)
    samples_per_tau: int = Field(32, ge=1)
    initial_state: Optional[InitialState] = None
    numerics: NumericsConfig = NumericsConfig()

    @model_validator(mode="after")
    def _consistency(self):
        if self.model == "djc":
            if self.djc_n is None:
                raise ValueError("model 'djc' requires djc_n")
            if self.bath is not None:
                raise ValueError("dissipative traces support 'rabi' and 'qubit_structured'")
        if self.model == "qubit_structured":
            if self.bath is None or self.bath.model != "structured":
                raise ValueError("model 'qubit_structured' requires bath.model 'structured'")
        elif self.bath is not None and self.bath.model == "structured":
            raise ValueError("bath.model 'structured' requires model 'qubit_structured'")
        return self


class CutConfig(StrictModel):
    """1-D cut through an existing sweep result directory."""

    kind: Literal["cut"] = "cut"
    result_dir: str
    axis: Literal["amp", "eps0"]
    value_over_omega: float


TraceConfig = Union[TimeSeriesConfig, CutConfig]


class RegionsConfig(StrictModel):
    """Resonance-region overlay for a rectangle in the (A, eps0) plane."""

    params: ParamsConfig = ParamsConfig()
    amp_min_over_omega: float = 0.0
    amp_max_over_omega: float = 50.0
    eps0_min_over_omega: float = -100.0 / 3.0
    eps0_max_over_omega: float = 100.0 / 3.0


class PlotConfig(StrictModel):
    """Heatmap rendering of a sweep result directory."""

    result_dir: str
    palette: str = "viridis"
    filename: str = "heatmap.png"
