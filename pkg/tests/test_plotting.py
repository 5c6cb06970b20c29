"""Heatmap emission and region overlays."""
import json

import numpy as np
import pytest
from PIL import Image

from lzsim.dynamics import Rect, resonance_regions
from lzsim.plotting import emit_overlay, emit_plot, overlay_payload
from lzsim.sweep import SweepResult

OMEGA = 0.0375


def _result(amps, eps0s, values):
    meta = {"config": {"params": {"omega_over_omega_r": OMEGA, "omega_r": 1.0},
                       "observable": "unitary_avg"}}
    return SweepResult(amp_over_omega=np.asarray(amps, dtype=float),
                       eps0_over_omega=np.asarray(eps0s, dtype=float),
                       values=np.asarray(values, dtype=float), meta=meta)


def test_constant_grid_uniform_midpalette(tmp_path):
    res = _result([0, 1, 2], [0, 1, 2, 3], np.full((3, 4), 0.5))
    path = str(tmp_path / "flat.png")
    emit_plot(res, palette="viridis", out_path=path)
    img = np.asarray(Image.open(path).convert("RGB"))
    h, w, _ = img.shape
    # interior samples of a constant map share one color
    probe = img[h // 3:h // 2, w // 3:w // 2].reshape(-1, 3)
    assert np.all(probe == probe[0])


def test_plot_bytes_deterministic(tmp_path):
    res = _result([0, 1], [0, 1], [[0.1, 0.9], [0.4, 0.6]])
    p1, p2 = str(tmp_path / "a.png"), str(tmp_path / "b.png")
    emit_plot(res, out_path=p1)
    emit_plot(res, out_path=p2)
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_overlay_matches_sweep_rectangle(tmp_path):
    amps = np.linspace(0.0, 50.0, 11)
    eps0s = np.linspace(-100.0 / 3, 100.0 / 3, 21)
    res = _result(amps, eps0s, np.zeros((11, 21)))
    rect = Rect(0.0, 50.0 * OMEGA, -100.0 / 3 * OMEGA, 100.0 / 3 * OMEGA)
    reg = resonance_regions(1.0, rect)
    path = str(tmp_path / "overlay.json")
    emit_overlay(reg, res, out_path=path)
    payload = json.loads(open(path).read())
    assert {lab["region"] for lab in payload["labels"]} == {"I", "II", "III",
                                                            "IV", "V", "VI"}
    assert {b["gap"] for b in payload["boundaries"]} == {"qubit",
                                                         "photonic_minus",
                                                         "photonic_plus"}
    # vertices still satisfy A = |eps0 - eps_gap| after the unit rescale
    for b in payload["boundaries"]:
        for x, a in b["vertices"]:
            assert a == pytest.approx(abs(x - b["eps0_gap"]), abs=1e-9)


def test_overlay_rejects_mismatched_rectangle(tmp_path):
    res = _result([0.0, 50.0], [-10.0, 10.0], np.zeros((2, 2)))
    reg = resonance_regions(1.0, Rect(0.0, 50.0 * OMEGA, -0.9, 0.9))
    with pytest.raises(ValueError):
        emit_overlay(reg, res, out_path=str(tmp_path / "x.json"))


def test_overlay_single_region_rectangle():
    # a rectangle fully inside region III produces one label
    rect = Rect(0.3, 0.4, -0.05, 0.05)
    reg = resonance_regions(1.0, rect)
    payload = overlay_payload(reg, OMEGA)
    assert [lab["region"] for lab in payload["labels"]] == ["III"]


def test_overlay_empty_grid_rejected(tmp_path):
    res = SweepResult(amp_over_omega=np.array([]), eps0_over_omega=np.array([]),
                      values=np.zeros((0, 0)), meta={"config": {}})
    reg = resonance_regions(1.0, Rect(0, 1, -1, 1))
    with pytest.raises(ValueError):
        emit_overlay(reg, res, out_path=str(tmp_path / "x.json"))
