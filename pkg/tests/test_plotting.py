import numpy as np
import pytest

pytest.importorskip("matplotlib")

from symte.align import lag_compare_scan, lag_scan  # noqa: E402
from symte.plotting import (  # noqa: E402
    compare_profile_figure,
    lag_profile_figure,
    pvalue_cdf_figure,
    statistic_histogram_figure,
)
from symte.synthetic import lagged_copy, lagged_copy_pair  # noqa: E402


def test_figures_are_written_and_reproducible(tmp_path):
    tgt, src = lagged_copy_pair(n_events=1000, seed=0)
    other = lagged_copy(tgt, 1.0, "other")
    jobs = {
        "lag.png": lambda p: lag_profile_figure(lag_scan(tgt, src, [0.0, 0.25, 0.75]), p),
        "cmp.png": lambda p: compare_profile_figure(
            lag_compare_scan(tgt, src, other, [0.0, 0.5, 0.9]), p),
        "cdf.png": lambda p: pvalue_cdf_figure({"a": np.linspace(0, 1, 50)}, p),
        "hist.png": lambda p: statistic_histogram_figure(
            np.random.default_rng(0).chisquare(2, 500), p, reference=lambda x: np.exp(-x / 2) / 2),
    }
    for name, draw in jobs.items():
        draw(tmp_path / name)
        first = (tmp_path / name).read_bytes()
        draw(tmp_path / name)
        assert (tmp_path / name).read_bytes() == first
        assert first.startswith(b"\x89PNG")
