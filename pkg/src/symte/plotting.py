"""Optional matplotlib figures written next to the CSV outputs.

Imported only when a command is run with ``--plot``; needs the ``plot``
extra. Figures are saved as PNG with fixed metadata so reruns produce
identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.5),
    "figure.dpi": 100,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "svg.hashsalt": "symte",
}
PNG_METADATA = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata=PNG_METADATA)
    plt.close(fig)


def lag_profile_figure(profile, path) -> None:
    """TE against shift, significant shifts filled, cutoff marked."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        shifts = np.asarray(profile.shifts, dtype=float)
        te = np.asarray(profile.te_values, dtype=float)
        sig = np.asarray(profile.significant, dtype=bool)
        ax.plot(shifts, te, color="0.5", lw=1)
        ax.scatter(shifts[sig], te[sig], color="C0", zorder=3, label=f"p < {profile.threshold:g}")
        ax.scatter(shifts[~sig], te[~sig], facecolor="white", edgecolor="C0", zorder=3,
                   label="not significant")
        if profile.cutoff_shift is not None:
            ax.axvline(profile.cutoff_shift, color="C3", ls="--", lw=1, label="cutoff")
        ax.set_xlabel("shift (s)")
        ax.set_ylabel("TE (nats)")
        ax.legend(frameon=False)
        _save(fig, path)


def compare_profile_figure(profile, path) -> None:
    """Vuong metric against shift with the two-sided significance band."""
    from .special import normal_sf

    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        shifts = np.asarray(profile.shifts, dtype=float)
        v = np.array([r.v if r is not None else np.nan for r in profile.results])
        ax.plot(shifts, v, marker="o", color="C0", lw=1)
        z = _normal_quantile(1.0 - profile.threshold / 2.0, normal_sf)
        ax.axhspan(-z, z, color="0.9", zorder=0)
        ax.axhline(0.0, color="0.5", lw=0.8)
        ax.set_xlabel("shift (s)")
        ax.set_ylabel("Vuong metric V")
        _save(fig, path)


def _normal_quantile(prob, normal_sf):
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 1.0 - normal_sf(mid) < prob:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pvalue_cdf_figure(series: dict, path) -> None:
    """Empirical CDFs of p-value samples keyed by label, with the diagonal."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot([0, 1], [0, 1], color="0.6", lw=0.8, ls=":")
        for k, (label, p) in enumerate(series.items()):
            p = np.sort(np.asarray(p, dtype=float))
            p = p[np.isfinite(p)]
            if p.size == 0:
                continue
            ax.step(p, np.arange(1, p.size + 1) / p.size, where="post", color=f"C{k}", label=label)
        ax.set_xlabel("p-value")
        ax.set_ylabel("empirical CDF")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.legend(frameon=False)
        _save(fig, path)


def statistic_histogram_figure(statistic, path, reference=None, label="statistic") -> None:
    """Histogram of a statistic with an optional reference density callable."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = np.asarray(statistic, dtype=float)
        x = x[np.isfinite(x)]
        ax.hist(x, bins=50, density=True, color="C0", alpha=0.6)
        if reference is not None and x.size:
            grid = np.linspace(x.min(), x.max(), 400)
            ax.plot(grid, reference(grid), color="C3", lw=1.2)
        ax.set_xlabel(label)
        ax.set_ylabel("density")
        _save(fig, path)
