"""Command-line front end.

Thin orchestration over the same core entry points the HTTP service wraps:
each subcommand reads a strict JSON config, runs one pipeline, and writes
plain artifacts into --out.  Exit codes: 0 success, 2 config error,
3 sweep with more than 1% failed points.
"""
from __future__ import annotations

import json
import os
import sys

import click
import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import (CutConfig, FloquetPointConfig, PlotConfig, RegionsConfig,
                     SpectrumConfig, SweepConfig, TimeSeriesConfig)
from .dynamics import Rect, resonance_regions
from .floquet import floquet_solution
from .operators import static_spectrum
from .plotting import emit_plot, overlay_payload
from .sweep import cut_1d, load_result, run_sweep

_FAILURE_EXIT_THRESHOLD = 0.01


def _load_config(path, model_cls):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"config error: cannot read {path}: {exc}", err=True)
        sys.exit(2)
    try:
        return model_cls.model_validate(raw)
    except (ValidationError, ValueError) as exc:
        click.echo(f"config error in {path}:\n{exc}", err=True)
        sys.exit(2)


def _ensure_out(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


config_opt = click.option("--config", "config_path", required=True,
                          type=click.Path(exists=True, dir_okay=False),
                          help="JSON config file")
out_opt = click.option("--out", "out_dir", required=True,
                       type=click.Path(file_okay=False), help="output directory")


@click.group()
@click.version_option(version=__version__, prog_name="lzsim")
def main():
    """Interference-pattern simulator for a driven qubit-resonator system."""


@main.command()
@config_opt
@out_opt
def spectrum(config_path, out_dir):
    """Static energy levels vs dc bias (spectrum.csv)."""
    cfg = _load_config(config_path, SpectrumConfig)
    _ensure_out(out_dir)
    wr = cfg.params.omega_r
    p = cfg.params.system_params()
    eps = np.linspace(cfg.eps_min_over_omega_r * wr, cfg.eps_max_over_omega_r * wr,
                      cfg.steps)
    keep = cfg.levels or 2 * (cfg.params.n_max + 1)
    path = os.path.join(out_dir, "spectrum.csv")
    with open(path, "w") as fh:
        fh.write("eps_over_omega_r," +
                 ",".join(f"E{i}_over_omega_r" for i in range(keep)) + "\n")
        for e in eps:
            energies = static_spectrum(p, e).energies[:keep] / wr
            fh.write(f"{e / wr:.17g}," + ",".join(f"{v:.17g}" for v in energies) + "\n")
    click.echo(path)


@main.command()
@config_opt
@out_opt
def floquet(config_path, out_dir):
    """Quasienergies at one drive point (quasienergies.json)."""
    cfg = _load_config(config_path, FloquetPointConfig)
    _ensure_out(out_dir)
    from .service import _drive_for_point_config

    drive = _drive_for_point_config(cfg)
    num = cfg.numerics
    sol = floquet_solution(drive, n_t=num.n_t, tol=num.ode_tol,
                           method=num.propagator, substeps=num.substeps)
    payload = {
        "quasienergies_over_omega": [float(v) for v in sol.quasienergies / sol.omega],
        "degenerate_pairs": [list(pair) for pair in sol.degenerate_pairs],
        "unitarity_defect": sol.unitarity_defect,
        "mode_defect": sol.mode_defect,
    }
    path = os.path.join(out_dir, "quasienergies.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(path)


@main.command()
@config_opt
@out_opt
def trace(config_path, out_dir):
    """Probability time series at a drive point, or a 1-D cut of a sweep."""
    try:
        with open(config_path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"config error: cannot read {config_path}: {exc}", err=True)
        sys.exit(2)
    kind = raw.get("kind", "time_series")
    if kind == "cut":
        cfg = _load_config(config_path, CutConfig)
        _ensure_out(out_dir)
        try:
            result = load_result(cfg.result_dir)
            cut = cut_1d(result, cfg.axis, cfg.value_over_omega)
        except (OSError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        path = os.path.join(out_dir, "cut.csv")
        with open(path, "w") as fh:
            fh.write(cut.to_csv_text())
    else:
        cfg = _load_config(config_path, TimeSeriesConfig)
        _ensure_out(out_dir)
        from .service import compute_time_series

        trace_obj = compute_time_series(cfg)
        path = os.path.join(out_dir, "trace.csv")
        with open(path, "w") as fh:
            fh.write(trace_obj.to_csv())
    click.echo(path)


@main.command()
@config_opt
@out_opt
@click.option("--workers", type=int, default=None,
              help="override the config worker count")
@click.option("--resume", is_flag=True, help="reuse completed points in --out")
@click.option("--format", "fmt", type=click.Choice(["csv", "binary"]),
              default="csv", help="binary adds result.bin next to result.csv")
def sweep(config_path, out_dir, workers, resume, fmt):
    """2-D (A, eps0) sweep -> result.csv, meta.json, points.jsonl."""
    cfg = _load_config(config_path, SweepConfig)
    if workers is not None:
        if workers < 1:
            click.echo("config error: --workers must be >= 1", err=True)
            sys.exit(2)
        cfg = cfg.model_copy(update={"workers": workers})
    _ensure_out(out_dir)
    result = run_sweep(cfg, out_dir=out_dir, resume=resume,
                       binary=(fmt == "binary"), progress=True)
    frac = result.meta["failed_fraction"]
    click.echo(os.path.join(out_dir, "result.csv"))
    if frac > _FAILURE_EXIT_THRESHOLD:
        click.echo(f"{result.n_failed} points failed "
                   f"({100 * frac:.2f}% > {100 * _FAILURE_EXIT_THRESHOLD:.0f}%)", err=True)
        sys.exit(3)


@main.command()
@config_opt
@out_opt
def regions(config_path, out_dir):
    """Resonance-region boundary overlay (overlay.json)."""
    cfg = _load_config(config_path, RegionsConfig)
    _ensure_out(out_dir)
    omega = cfg.params.omega_over_omega_r * cfg.params.omega_r
    rect = Rect(cfg.amp_min_over_omega * omega, cfg.amp_max_over_omega * omega,
                cfg.eps0_min_over_omega * omega, cfg.eps0_max_over_omega * omega)
    reg = resonance_regions(cfg.params.omega_r, rect)
    path = os.path.join(out_dir, "overlay.json")
    with open(path, "w") as fh:
        json.dump(overlay_payload(reg, omega), fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(path)


@main.command()
@config_opt
@out_opt
def plot(config_path, out_dir):
    """Heatmap PNG from a persisted sweep result."""
    cfg = _load_config(config_path, PlotConfig)
    _ensure_out(out_dir)
    try:
        result = load_result(cfg.result_dir)
    except OSError as exc:
        click.echo(f"error: cannot load result from {cfg.result_dir}: {exc}", err=True)
        sys.exit(2)
    path = emit_plot(result, palette=cfg.palette,
                     out_path=os.path.join(out_dir, cfg.filename))
    click.echo(path)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service (FastAPI/uvicorn)."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
