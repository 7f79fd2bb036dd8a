"""End-to-end figure pipeline: every preset renders from real CLI output.

The data is produced by invoking the simulator CLI as a subprocess (the only
interface this package consumes); each figure must then render without error
with the panel structure and curve counts its preset defines.
"""
import subprocess
import sys

import pytest

from spinrelay_plots import build_figure, default_spec, render

EXPECTED_CURVES = {
    2: [4, 4, 4, 3],
    3: [1, 1, 1, 1],
    4: [2, 1],
    5: [3, 3],
    6: [1, 1, 1, 1],
    7: [2, 2],
    8: [2, 2],
}

EXPECTED_LAYOUT = {
    2: (2, 2),
    3: (2, 2),
    4: (1, 2),
    5: (1, 2),
    6: (2, 2),
    7: (1, 2),
    8: (1, 2),
}


@pytest.fixture(scope="module")
def preset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("figures")
    for fid in sorted(EXPECTED_CURVES):
        proc = subprocess.run(
            [sys.executable, "-m", "spinrelay", "figure", str(fid), "--out", str(out)],
            capture_output=True,
            text=True,
            timeout=1200,
        )
        assert proc.returncode == 0, f"figure {fid} preset failed: {proc.stderr}"
    return out


@pytest.mark.parametrize("fid", sorted(EXPECTED_CURVES))
def test_a12_figure_pipeline(preset_dir, fid):
    """A12: each preset's CSVs render with the expected panels and curves."""
    spec = default_spec(fid, preset_dir)
    fig, info = build_figure(spec)
    curves = [p["curves"] for p in info["panels"]]
    out = render(spec, preset_dir / f"figure{fid}.png")
    ok = (
        spec.panel_layout == EXPECTED_LAYOUT[fid]
        and curves == EXPECTED_CURVES[fid]
        and out.stat().st_size > 0
    )
    print(
        f"[A12/fig{fid}] {'PASS' if ok else 'FAIL'}: layout {spec.panel_layout}, "
        f"curves {curves}, {out.stat().st_size} bytes"
    )
    assert spec.panel_layout == EXPECTED_LAYOUT[fid]
    assert curves == EXPECTED_CURVES[fid]
    assert out.stat().st_size > 0
