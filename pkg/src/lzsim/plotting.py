"""Static artifact emission: heatmap rendering and region-boundary overlays.

Plots are a thin optional stage; the CSV is the primary artifact.  PNG
output avoids timestamps so bytes are reproducible for a fixed renderer
version.
"""
from __future__ import annotations

import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dynamics import ResonanceRegions
from .sweep import SweepResult


def emit_plot(result: SweepResult, palette: str = "viridis",
              out_path: str = "heatmap.png") -> str:
    """Raster heatmap of a sweep, axes in units of omega, colorbar = probability."""
    amps = result.amp_over_omega
    eps0s = result.eps0_over_omega

    def edges(x):
        if x.size == 1:
            return np.array([x[0] - 0.5, x[0] + 0.5])
        mid = 0.5 * (x[1:] + x[:-1])
        return np.concatenate([[x[0] - (mid[0] - x[0])], mid,
                               [x[-1] + (x[-1] - mid[-1])]])

    fig, ax = plt.subplots(figsize=(6.4, 4.8), dpi=150)
    mesh = ax.pcolormesh(edges(eps0s), edges(amps), result.values,
                         cmap=palette, vmin=0.0, vmax=1.0)
    ax.set_xlabel(r"$\varepsilon_0 / \omega$")
    ax.set_ylabel(r"$A / \omega$")
    observable = result.meta.get("config", {}).get("observable", "")
    ax.set_title(observable)
    fig.colorbar(mesh, ax=ax, label="probability")
    fig.tight_layout()
    fig.savefig(out_path, metadata={"Software": ""})
    plt.close(fig)
    return out_path


def overlay_payload(regions: ResonanceRegions, omega: float) -> dict:
    """Overlay dict with coordinates rescaled to sweep-axis units (omega)."""
    r = regions.rect
    return {
        "units": "omega",
        "omega_r_over_omega": regions.omega_r / omega,
        "rectangle": {
            "amp_min": r.amp_min / omega, "amp_max": r.amp_max / omega,
            "eps0_min": r.eps0_min / omega, "eps0_max": r.eps0_max / omega,
        },
        "boundaries": [
            {"gap": b["gap"], "eps0_gap": b["eps0_gap"] / omega,
             "vertices": [[x / omega, a / omega] for x, a in b["vertices"]]}
            for b in regions.boundaries()
        ],
        "labels": [
            {"region": lab["region"], "eps0": lab["eps0"] / omega,
             "amp": lab["amp"] / omega}
            for lab in regions.labels()
        ],
    }


def emit_overlay(regions: ResonanceRegions, result: SweepResult,
                 out_path: str = "overlay.json", rect_tol: float = 1e-9) -> str:
    """Region-boundary polylines aligned to the sweep axes, as JSON.

    Coordinates are in units of omega like the sweep CSV; the regions
    rectangle must match the sweep rectangle.
    """
    cfg = result.meta.get("config", {})
    omega = (cfg.get("params", {}).get("omega_over_omega_r", 0.0375)
             * cfg.get("params", {}).get("omega_r", 1.0))
    if result.amp_over_omega.size == 0 or result.eps0_over_omega.size == 0:
        raise ValueError("empty sweep grid")
    r = regions.rect
    sweep_rect = (result.amp_over_omega[0] * omega, result.amp_over_omega[-1] * omega,
                  result.eps0_over_omega[0] * omega, result.eps0_over_omega[-1] * omega)
    got = (r.amp_min, r.amp_max, r.eps0_min, r.eps0_max)
    scale = max(abs(v) for v in sweep_rect) or 1.0
    if any(abs(a - b) > rect_tol * scale for a, b in zip(sweep_rect, got)):
        raise ValueError(f"regions rectangle {got} does not match the sweep "
                         f"rectangle {sweep_rect}")
    with open(out_path, "w") as fh:
        json.dump(overlay_payload(regions, omega), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_path
