"""Parallel (A, eps0) grid sweeps with deterministic, resumable output.

Grid semantics: inclusive endpoints, row-major ordering with A as the outer
loop; axes are stored in units of the drive frequency omega.  Every grid
point is a pure function of the config, so results are independent of the
worker count and scheduling order; per-point failures are recorded as NaN
plus a diagnostic instead of aborting the sweep.

Artifacts written to the output directory:
  result.csv   - "A_over_omega,eps0_over_omega,value" rows (primary artifact)
  result.bin   - optional binary mirror (see README for the layout)
  meta.json    - config, config hash, versions, timings, diagnostics summary
  points.jsonl - one JSON line per computed point with its diagnostics
"""
from __future__ import annotations

import json
import math
import os
import struct
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import SweepConfig
from .dissipative import (build_generator, evolve, p_up_period_averaged,
                          rho0_floquet, steady_state)
from .dynamics import time_averaged_probability
from .floquet import (DriveHamiltonian, floquet_solution, fourier_coefficients,
                      load_solution, save_solution, solution_cache_key)
from .operators import (basis_state, coupling_coordinate, djc_parts, pauli,
                        qubit_parts, rabi_parts, up_projector)

_RESULT_MAGIC = b"LZSWEEP1"


def _resolve_initial_state(cfg: SweepConfig, dim: int) -> np.ndarray:
    spec = cfg.initial_state
    if spec is None:
        if cfg.model == "rabi":
            spec = "down,0"
        elif cfg.model == "djc":
            return np.array([0.0, 1.0], dtype=complex)  # |down, n+1>
        else:
            return np.array([1.0, 0.0], dtype=complex)  # |down>
    if isinstance(spec, str):
        if cfg.model == "rabi":
            psi = basis_state(spec, cfg.params.n_max)
        elif cfg.model == "djc":
            spin, _, num = spec.partition(",")
            spin = spin.strip().lower()
            n = int(num)
            if spin == "up" and n == cfg.djc_n:
                psi = np.array([1.0, 0.0], dtype=complex)
            elif spin == "down" and n == cfg.djc_n + 1:
                psi = np.array([0.0, 1.0], dtype=complex)
            else:
                raise ValueError(
                    f"initial state {spec!r} outside the djc_n={cfg.djc_n} block "
                    f"(expected 'up,{cfg.djc_n}' or 'down,{cfg.djc_n + 1}')")
        else:
            spin = spec.strip().lower()
            if spin not in ("down", "up"):
                raise ValueError(f"qubit initial state must be 'down' or 'up', got {spec!r}")
            psi = np.array([1.0, 0.0] if spin == "down" else [0.0, 1.0], dtype=complex)
    else:
        arr = np.asarray(spec, dtype=float)
        if arr.shape != (dim, 2):
            raise ValueError(f"amplitude list must have shape ({dim}, 2) [re, im] pairs")
        psi = arr[:, 0] + 1j * arr[:, 1]
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"initial amplitudes norm deviates from 1 by {abs(norm - 1.0):.2e}")
    return psi


def _point_dim(cfg: SweepConfig) -> int:
    return 2 * (cfg.params.n_max + 1) if cfg.model == "rabi" else 2


def _drive_and_operators(cfg: SweepConfig, amp: float, eps0: float):
    """DriveHamiltonian, up-projector, bath coupling operator for one point."""
    if cfg.model == "rabi":
        p = cfg.params.system_params(eps0=eps0, amp=amp)
        h0, h1 = rabi_parts(p)
        proj = up_projector(p.n_max).mat
        coupling = coupling_coordinate(p.n_max).mat
        omega = p.omega
    elif cfg.model == "djc":
        d = cfg.params.djc_params(n=cfg.djc_n, delta0=eps0, amp=amp)
        h0, h1 = djc_parts(d)
        proj = np.diag([1.0, 0.0]).astype(complex)  # target |up, n>
        coupling = None
        omega = d.omega
    else:
        p = cfg.params.system_params(eps0=eps0, amp=amp)
        h0, h1 = qubit_parts(p)
        proj = np.diag([0.0, 1.0]).astype(complex)
        coupling = pauli("y").mat
        omega = p.omega
    return DriveHamiltonian(h0, h1, omega), proj, coupling


def _cached_solution(cfg: SweepConfig, drive, amp, eps0):
    num = cfg.numerics
    if cfg.cache_dir:
        key = solution_cache_key({
            "model": cfg.model, "djc_n": cfg.djc_n,
            "params": cfg.params.model_dump(mode="json"),
            "amp": amp, "eps0": eps0,
            "n_t": num.n_t, "tol": num.ode_tol,
            "propagator": num.propagator, "substeps": num.substeps,
        })
        path = os.path.join(cfg.cache_dir, key + ".floq")
        if os.path.exists(path):
            return load_solution(path)
        sol = floquet_solution(drive, n_t=num.n_t, tol=num.ode_tol,
                               method=num.propagator, substeps=num.substeps)
        os.makedirs(cfg.cache_dir, exist_ok=True)
        save_solution(sol, path)
        return sol
    return floquet_solution(drive, n_t=num.n_t, tol=num.ode_tol,
                            method=num.propagator, substeps=num.substeps)


def compute_point(cfg: SweepConfig, amp_over_omega: float,
                  eps0_over_omega: float) -> tuple[float, dict]:
    """Observable value and diagnostics at one grid point (pure function)."""
    omega = cfg.params.omega_over_omega_r * cfg.params.omega_r
    amp = amp_over_omega * omega
    eps0 = eps0_over_omega * omega
    drive, proj, coupling = _drive_and_operators(cfg, amp, eps0)
    psi0 = _resolve_initial_state(cfg, drive.dim)
    sol = _cached_solution(cfg, drive, amp, eps0)
    diag = {"unitarity_defect": sol.unitarity_defect,
            "mode_defect": sol.mode_defect,
            "n_degenerate_pairs": len(sol.degenerate_pairs)}
    if cfg.observable == "unitary_avg":
        value = time_averaged_probability(sol, psi0, proj)
        return value, diag
    xc = fourier_coefficients(sol, coupling, cfg.numerics.k_max)
    gen = build_generator(sol, xc, cfg.bath.bath_spec(cfg.params))
    diag["fourier_leakage"] = xc.leakage_fraction
    diag["k_tail_fraction"] = gen.k_tail_fraction
    if cfg.observable == "dissipative_steady":
        ss = steady_state(gen)
        diag["null_residual"] = ss.residual
        diag["positivity_deficit"] = min(0.0, ss.min_eigenvalue)
        value = p_up_period_averaged(ss.rho, sol, proj)
    else:
        rho0 = rho0_floquet(sol, psi0)
        rho_t = evolve(gen, rho0, [cfg.time_over_tau * sol.tau])[0]
        value = p_up_period_averaged(rho_t, sol, proj)
    return value, diag


def _point_task(args):
    cfg, i, j, amp_ow, eps0_ow = args
    try:
        value, diag = compute_point(cfg, amp_ow, eps0_ow)
    except Exception as exc:  # failure isolation: record, never abort the sweep
        return i, j, float("nan"), {"error": f"{type(exc).__name__}: {exc}"}
    return i, j, float(value), diag


@dataclass
class SweepResult:
    """Grid coordinates (units of omega), the value matrix, and run metadata."""

    amp_over_omega: np.ndarray
    eps0_over_omega: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_failed(self) -> int:
        return int(np.isnan(self.values).sum())

    def to_csv_text(self) -> str:
        lines = ["A_over_omega,eps0_over_omega,value"]
        for i, a in enumerate(self.amp_over_omega):
            for j, e in enumerate(self.eps0_over_omega):
                lines.append(f"{a:.17g},{e:.17g},{self.values[i, j]:.17g}")
        return "\n".join(lines) + "\n"

    def to_binary(self) -> bytes:
        parts = [_RESULT_MAGIC,
                 struct.pack("<II", self.amp_over_omega.size, self.eps0_over_omega.size),
                 self.amp_over_omega.astype("<f8").tobytes(),
                 self.eps0_over_omega.astype("<f8").tobytes(),
                 self.values.astype("<f8").tobytes()]
        return b"".join(parts)


def grid_axes(cfg: SweepConfig) -> tuple[np.ndarray, np.ndarray]:
    g = cfg.grid
    amps = np.linspace(g.amp_min_over_omega, g.amp_max_over_omega, g.amp_steps)
    eps0s = np.linspace(g.eps0_min_over_omega, g.eps0_max_over_omega, g.eps0_steps)
    return amps, eps0s


def _journal_path(out_dir):
    return os.path.join(out_dir, "points.jsonl")


def _load_journal(out_dir, expected_hash):
    """Completed points from a previous run with the same config hash."""
    done = {}
    meta_path = os.path.join(out_dir, "meta.json")
    journal = _journal_path(out_dir)
    if not (os.path.exists(meta_path) and os.path.exists(journal)):
        return done
    with open(meta_path) as fh:
        meta = json.load(fh)
    if meta.get("config_hash") != expected_hash:
        raise ValueError(
            f"resume requested but {out_dir} holds config hash "
            f"{meta.get('config_hash')} != {expected_hash}")
    with open(journal) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            value = rec["value"]
            done[(rec["i"], rec["j"])] = (
                float("nan") if value is None else float(value), rec.get("diag", {}))
    return done


def _warm_propagator():
    """JIT-compile the propagation kernel in the parent before forking workers."""
    h = np.eye(2, dtype=complex)
    floquet_solution(DriveHamiltonian(h, 0.0 * h, 1.0), n_t=4, substeps=1)


def _single_threaded_blas():
    """Pin BLAS to one thread per worker; the matrices here are far too small
    to gain from BLAS threading, and spinning pool threads wreck scaling."""
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=1)
    except ImportError:  # pragma: no cover - declared dependency
        pass


def run_sweep(cfg: SweepConfig, out_dir=None, resume: bool = False,
              binary: bool = False, progress: bool = False) -> SweepResult:
    """Run the sweep described by cfg; optionally persist artifacts to out_dir.

    With resume=True, previously completed points found in out_dir (under
    the same config hash) are reused and only missing points are computed.
    The final CSV is byte-identical no matter how work was scheduled.
    """
    t_start = time.time()
    amps, eps0s = grid_axes(cfg)
    cfg_hash = cfg.config_hash()
    done = {}
    journal_fh = None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        if resume:
            done = _load_journal(out_dir, cfg_hash)
        elif os.path.exists(_journal_path(out_dir)):
            os.remove(_journal_path(out_dir))
        journal_fh = open(_journal_path(out_dir), "a")

    tasks = [(cfg, i, j, float(amps[i]), float(eps0s[j]))
             for i in range(amps.size) for j in range(eps0s.size)
             if (i, j) not in done]
    values = np.full((amps.size, eps0s.size), np.nan)
    diags = {}
    for (i, j), (v, d) in done.items():
        values[i, j] = v
        diags[(i, j)] = d

    n_total = amps.size * eps0s.size
    n_done = 0

    def record(i, j, value, diag):
        nonlocal n_done
        values[i, j] = value
        diags[(i, j)] = diag
        if journal_fh is not None:
            rec = {"i": i, "j": j,
                   "value": None if math.isnan(value) else value, "diag": diag}
            journal_fh.write(json.dumps(rec) + "\n")
        n_done += 1
        if progress and (n_done % max(1, len(tasks) // 50) == 0 or n_done == len(tasks)):
            print(f"\r{n_done}/{len(tasks)} points", end="", file=sys.stderr, flush=True)

    try:
        if cfg.workers == 1 or len(tasks) <= 1:
            for task in tasks:
                i, j, value, diag = _point_task(task)
                record(i, j, value, diag)
        else:
            _warm_propagator()
            chunk = max(1, len(tasks) // (cfg.workers * 8))
            try:
                from threadpoolctl import threadpool_limits
                limiter = threadpool_limits(limits=1)
            except ImportError:  # pragma: no cover
                limiter = None
            try:
                # forked workers inherit the single-thread BLAS setting; the
                # initializer re-applies it for non-fork start methods
                with ProcessPoolExecutor(max_workers=cfg.workers,
                                         initializer=_single_threaded_blas) as pool:
                    for i, j, value, diag in pool.map(_point_task, tasks,
                                                      chunksize=chunk):
                        record(i, j, value, diag)
            finally:
                if limiter is not None:
                    limiter.restore_original_limits()
    finally:
        if journal_fh is not None:
            journal_fh.close()
        if progress and tasks:
            print(file=sys.stderr)

    n_failed = int(np.isnan(values).sum())
    defect_keys = ("unitarity_defect", "mode_defect", "fourier_leakage",
                   "k_tail_fraction", "null_residual")
    summary = {}
    for key in defect_keys:
        vals = [d[key] for d in diags.values() if key in d]
        if vals:
            summary[f"max_{key}"] = max(vals)
    deficits = [d["positivity_deficit"] for d in diags.values() if "positivity_deficit" in d]
    if deficits:
        summary["worst_positivity_deficit"] = min(deficits)
    failures = sorted((f"({i},{j})", d.get("error", ""))
                      for (i, j), d in diags.items() if "error" in d)[:50]

    meta = {
        "config": cfg.model_dump(mode="json"),
        "config_hash": cfg_hash,
        "package_version": __version__,
        "versions": {"numpy": np.__version__,
                     "python": sys.version.split()[0]},
        "grid_shape": [int(amps.size), int(eps0s.size)],
        "n_failed": n_failed,
        "failed_fraction": n_failed / n_total,
        "failures": failures,
        "diagnostics_summary": summary,
        "wall_time_s": time.time() - t_start,
        "workers": cfg.workers,
        "lamb_shift_included": False,
    }
    result = SweepResult(amp_over_omega=amps, eps0_over_omega=eps0s,
                         values=values, meta=meta)
    if out_dir:
        with open(os.path.join(out_dir, "result.csv"), "w") as fh:
            fh.write(result.to_csv_text())
        if binary:
            with open(os.path.join(out_dir, "result.bin"), "wb") as fh:
                fh.write(result.to_binary())
        with open(os.path.join(out_dir, "meta.json"), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return result


def load_result(out_dir) -> SweepResult:
    """Reload a persisted sweep from its result.csv + meta.json."""
    meta_path = os.path.join(out_dir, "meta.json")
    with open(meta_path) as fh:
        meta = json.load(fh)
    raw = np.genfromtxt(os.path.join(out_dir, "result.csv"), delimiter=",",
                        skip_header=1)
    raw = np.atleast_2d(raw)
    n_a, n_e = meta["grid_shape"]
    amps = raw[::n_e, 0].copy()
    eps0s = raw[:n_e, 1].copy()
    values = raw[:, 2].reshape(n_a, n_e)
    return SweepResult(amp_over_omega=amps, eps0_over_omega=eps0s,
                       values=values, meta=meta)


@dataclass(frozen=True)
class Cut:
    """A 1-D extraction along one grid line of a sweep."""

    axis: str
    requested: float
    actual: float
    coords: np.ndarray
    values: np.ndarray

    def to_csv_text(self) -> str:
        other = "eps0_over_omega" if self.axis == "amp" else "A_over_omega"
        lines = [f"# cut axis={self.axis} requested={self.requested:.17g} "
                 f"actual={self.actual:.17g}",
                 f"{other},value"]
        for c, v in zip(self.coords, self.values):
            lines.append(f"{c:.17g},{v:.17g}")
        return "\n".join(lines) + "\n"


def cut_1d(result: SweepResult, axis: str, value: float) -> Cut:
    """Nearest-grid-line cut; the actually used coordinate is recorded."""
    if axis not in ("amp", "eps0"):
        raise ValueError(f"axis must be 'amp' or 'eps0', got {axis!r}")
    line = result.amp_over_omega if axis == "amp" else result.eps0_over_omega
    if not (line.min() <= value <= line.max()):
        raise ValueError(f"cut value {value} outside grid range "
                         f"[{line.min()}, {line.max()}]")
    k = int(np.argmin(np.abs(line - value)))
    if axis == "amp":
        return Cut(axis=axis, requested=value, actual=float(line[k]),
                   coords=result.eps0_over_omega.copy(), values=result.values[k].copy())
    return Cut(axis=axis, requested=value, actual=float(line[k]),
               coords=result.amp_over_omega.copy(), values=result.values[:, k].copy())
