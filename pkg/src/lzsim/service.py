"""HTTP service exposing the simulator: point queries respond inline, sweeps
run as background jobs with polling.

The request bodies reuse the same strict schemas as the CLI config files
(config.py), so a JSON config is valid both on disk and on the wire.
"""
from __future__ import annotations

import math
import threading
import uuid
from typing import Literal, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from . import __version__
from .config import (FloquetPointConfig, GapScanConfig, ParamsConfig,
                     RegionsConfig, SpectrumConfig, SweepConfig,
                     TimeSeriesConfig)
from .dissipative import dissipative_run, structured_bath_run
from .dynamics import (Rect, instantaneous_probability, resonance_regions,
                       rwa_probability)
from .floquet import DriveHamiltonian, floquet_solution
from .operators import djc_parts, gap_scan, qubit_parts, rabi_parts, static_spectrum
from .sweep import SweepResult, cut_1d, run_sweep


class HealthResponse(BaseModel):
    status: str
    version: str


class SpectrumResponse(BaseModel):
    eps_over_omega_r: list[float]
    energies_over_omega_r: list[list[float]]


class GapScanResponse(BaseModel):
    eps_min_over_omega_r: float
    gap_over_omega_r: float
    at_boundary: bool


class FloquetResponse(BaseModel):
    quasienergies_over_omega: list[float]
    degenerate_pairs: list[tuple[int, int]]
    unitarity_defect: float
    mode_defect: float


class RwaRequest(BaseModel):
    params: ParamsConfig = ParamsConfig()
    n: int
    m: int
    amp_over_omega: float
    delta0_over_omega: list[float]


class RwaResponse(BaseModel):
    delta0_over_omega: list[float]
    probability: list[float]


class TraceResponse(BaseModel):
    times_over_tau: list[float]
    values: list[float]
    initial_label: str
    target_label: str


class RegionBoundary(BaseModel):
    gap: str
    eps0_gap_over_omega: float
    vertices: list[list[float]]


class RegionLabel(BaseModel):
    region: str
    eps0_over_omega: float
    amp_over_omega: float


class RegionsResponse(BaseModel):
    boundaries: list[RegionBoundary]
    labels: list[RegionLabel]


class JobSubmitted(BaseModel):
    job_id: str


class JobStatus(BaseModel):
    job_id: str
    status: Literal["running", "done", "failed"]
    error: Optional[str] = None
    n_failed: Optional[int] = None
    failed_fraction: Optional[float] = None
    wall_time_s: Optional[float] = None


class SweepResponse(BaseModel):
    amp_over_omega: list[float]
    eps0_over_omega: list[float]
    values: list[list[Optional[float]]]
    meta: dict


class CutResponse(BaseModel):
    axis: str
    requested: float
    actual: float
    coords: list[float]
    values: list[Optional[float]]


class _Job:
    def __init__(self, cfg: SweepConfig, out_dir=None, resume=False):
        self.cfg = cfg
        self.out_dir = out_dir
        self.resume = resume
        self.status = "running"
        self.error: str | None = None
        self.result: SweepResult | None = None
        self.thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        try:
            self.result = run_sweep(self.cfg, out_dir=self.out_dir, resume=self.resume)
            self.status = "done"
        except Exception as exc:  # surfaced through the status endpoint
            self.error = f"{type(exc).__name__}: {exc}"
            self.status = "failed"


def _nan_to_none(values: np.ndarray):
    return [[None if math.isnan(v) else float(v) for v in row] for row in values]


def _drive_for_point_config(cfg: FloquetPointConfig) -> DriveHamiltonian:
    omega = cfg.params.omega_over_omega_r * cfg.params.omega_r
    amp = cfg.amp_over_omega * omega
    eps0 = cfg.eps0_over_omega * omega
    if cfg.model == "rabi":
        p = cfg.params.system_params(eps0=eps0, amp=amp)
        h0, h1 = rabi_parts(p)
    elif cfg.model == "djc":
        d = cfg.params.djc_params(n=cfg.djc_n, delta0=eps0, amp=amp)
        h0, h1 = djc_parts(d)
    else:
        p = cfg.params.system_params(eps0=eps0, amp=amp)
        h0, h1 = qubit_parts(p)
    return DriveHamiltonian(h0, h1, omega)


def create_app() -> FastAPI:
    app = FastAPI(title="lzsim", version=__version__,
                  description="Driven qubit-resonator interference patterns, "
                              "closed and dissipative")
    jobs: dict[str, _Job] = {}
    jobs_lock = threading.Lock()

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/spectrum", response_model=SpectrumResponse)
    def spectrum(cfg: SpectrumConfig):
        wr = cfg.params.omega_r
        p = cfg.params.system_params()
        eps = np.linspace(cfg.eps_min_over_omega_r * wr, cfg.eps_max_over_omega_r * wr,
                          cfg.steps)
        keep = cfg.levels or 2 * (cfg.params.n_max + 1)
        energies = [static_spectrum(p, e).energies[:keep] / wr for e in eps]
        return SpectrumResponse(eps_over_omega_r=list(eps / wr),
                                energies_over_omega_r=[list(row) for row in energies])

    @app.post("/gap-scan", response_model=GapScanResponse)
    def gap_scan_endpoint(cfg: GapScanConfig):
        wr = cfg.params.omega_r
        p = cfg.params.system_params()
        try:
            res = gap_scan(p, (cfg.level_low, cfg.level_high),
                           (cfg.eps_min_over_omega_r * wr, cfg.eps_max_over_omega_r * wr),
                           resolution=cfg.resolution)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return GapScanResponse(eps_min_over_omega_r=res.eps_min / wr,
                               gap_over_omega_r=res.gap / wr,
                               at_boundary=res.at_boundary)

    @app.post("/floquet", response_model=FloquetResponse)
    def floquet_point(cfg: FloquetPointConfig):
        drive = _drive_for_point_config(cfg)
        num = cfg.numerics
        sol = floquet_solution(drive, n_t=num.n_t, tol=num.ode_tol,
                               method=num.propagator, substeps=num.substeps)
        return FloquetResponse(
            quasienergies_over_omega=list(sol.quasienergies / sol.omega),
            degenerate_pairs=list(sol.degenerate_pairs),
            unitarity_defect=sol.unitarity_defect,
            mode_defect=sol.mode_defect)

    @app.post("/rwa", response_model=RwaResponse)
    def rwa(cfg: RwaRequest):
        omega = cfg.params.omega_over_omega_r * cfg.params.omega_r
        values = []
        for d0 in cfg.delta0_over_omega:
            d = cfg.params.djc_params(n=cfg.n, delta0=d0 * omega,
                                      amp=cfg.amp_over_omega * omega)
            values.append(rwa_probability(d, cfg.m))
        return RwaResponse(delta0_over_omega=cfg.delta0_over_omega, probability=values)

    @app.post("/trace", response_model=TraceResponse)
    def trace(cfg: TimeSeriesConfig):
        trace_obj = compute_time_series(cfg)
        return TraceResponse(times_over_tau=list(trace_obj.times_tau),
                             values=list(trace_obj.values),
                             initial_label=trace_obj.initial_label,
                             target_label=trace_obj.target_label)

    @app.post("/regions", response_model=RegionsResponse)
    def regions(cfg: RegionsConfig):
        omega = cfg.params.omega_over_omega_r * cfg.params.omega_r
        rect = Rect(cfg.amp_min_over_omega * omega, cfg.amp_max_over_omega * omega,
                    cfg.eps0_min_over_omega * omega, cfg.eps0_max_over_omega * omega)
        reg = resonance_regions(cfg.params.omega_r, rect)
        return RegionsResponse(
            boundaries=[RegionBoundary(gap=b["gap"],
                                       eps0_gap_over_omega=b["eps0_gap"] / omega,
                                       vertices=[[x / omega, a / omega]
                                                 for x, a in b["vertices"]])
                        for b in reg.boundaries()],
            labels=[RegionLabel(region=lab["region"],
                                eps0_over_omega=lab["eps0"] / omega,
                                amp_over_omega=lab["amp"] / omega)
                    for lab in reg.labels()])

    @app.post("/sweeps", response_model=JobSubmitted)
    def submit_sweep(cfg: SweepConfig):
        job = _Job(cfg)
        job_id = uuid.uuid4().hex[:12]
        with jobs_lock:
            jobs[job_id] = job
        job.thread.start()
        return JobSubmitted(job_id=job_id)

    def _get_job(job_id: str) -> _Job:
        with jobs_lock:
            job = jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"no job {job_id}")
        return job

    @app.get("/sweeps/{job_id}", response_model=JobStatus)
    def job_status(job_id: str):
        job = _get_job(job_id)
        extra = {}
        if job.status == "done" and job.result is not None:
            extra = {"n_failed": job.result.n_failed,
                     "failed_fraction": job.result.meta["failed_fraction"],
                     "wall_time_s": job.result.meta["wall_time_s"]}
        return JobStatus(job_id=job_id, status=job.status, error=job.error, **extra)

    @app.get("/sweeps/{job_id}/result", response_model=SweepResponse)
    def job_result(job_id: str):
        job = _get_job(job_id)
        if job.status != "done":
            raise HTTPException(status_code=409, detail=f"job is {job.status}")
        res = job.result
        return SweepResponse(amp_over_omega=list(res.amp_over_omega),
                             eps0_over_omega=list(res.eps0_over_omega),
                             values=_nan_to_none(res.values), meta=res.meta)

    @app.get("/sweeps/{job_id}/result.csv", response_class=PlainTextResponse)
    def job_result_csv(job_id: str):
        job = _get_job(job_id)
        if job.status != "done":
            raise HTTPException(status_code=409, detail=f"job is {job.status}")
        return PlainTextResponse(job.result.to_csv_text(), media_type="text/csv")

    @app.get("/sweeps/{job_id}/cut", response_model=CutResponse)
    def job_cut(job_id: str, axis: Literal["amp", "eps0"], value: float):
        job = _get_job(job_id)
        if job.status != "done":
            raise HTTPException(status_code=409, detail=f"job is {job.status}")
        try:
            cut = cut_1d(job.result, axis, value)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return CutResponse(axis=cut.axis, requested=cut.requested, actual=cut.actual,
                           coords=list(cut.coords),
                           values=[None if math.isnan(v) else float(v)
                                   for v in cut.values])

    return app


def compute_time_series(cfg: TimeSeriesConfig):
    """Shared implementation of the trace endpoint and the CLI trace command."""
    from .sweep import _drive_and_operators, _resolve_initial_state

    sweep_like = SweepConfig(
        model=cfg.model, djc_n=cfg.djc_n, params=cfg.params,
        bath=cfg.bath if cfg.bath is not None else None,
        observable="dissipative_steady" if cfg.bath is not None else "unitary_avg",
        initial_state=cfg.initial_state, numerics=cfg.numerics)
    omega = cfg.params.omega_over_omega_r * cfg.params.omega_r
    amp = cfg.amp_over_omega * omega
    eps0 = cfg.eps0_over_omega * omega
    drive, proj, _ = _drive_and_operators(sweep_like, amp, eps0)
    psi0 = _resolve_initial_state(sweep_like, drive.dim)
    num = cfg.numerics

    if cfg.bath is None:
        # closed system: instantaneous probability on the period sample grid
        stride = max(1, num.n_t // cfg.samples_per_tau)
        step = stride / num.n_t
        times = np.arange(0.0, cfg.t_max_over_tau + step / 2, step)
        sol = floquet_solution(drive, n_t=num.n_t, tol=num.ode_tol,
                               method=num.propagator, substeps=num.substeps)
        return instantaneous_probability(sol, psi0, proj, times,
                                         initial_label=str(cfg.initial_state or ""),
                                         target_label="up")
    times = np.linspace(0.0, cfg.t_max_over_tau,
                        max(2, int(cfg.t_max_over_tau * cfg.samples_per_tau) + 1))
    initial = cfg.initial_state if isinstance(cfg.initial_state, str) else psi0
    kwargs = dict(initial_state=initial if initial is not None else psi0,
                  times_tau=times, steady=False, n_t=num.n_t, k_max=num.k_max,
                  tol=num.ode_tol, method=num.propagator, substeps=num.substeps)
    p = cfg.params.system_params(eps0=eps0, amp=amp)
    if cfg.model == "qubit_structured":
        res = structured_bath_run(p, cfg.bath.bath_spec(cfg.params), **kwargs)
    else:
        res = dissipative_run(p, cfg.bath.bath_spec(cfg.params), **kwargs)
    return res.p_up_vs_time


app = create_app()
