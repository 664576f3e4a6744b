import runpy
from pathlib import Path

import pytest

pytest.importorskip("matplotlib")

DEMOS = sorted((Path(__file__).parent.parent / "demos").glob("plot_*.py"))


@pytest.mark.parametrize("script", DEMOS, ids=lambda p: p.stem)
def test_demo_runs(script, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    runpy.run_path(str(script), run_name="__main__")
