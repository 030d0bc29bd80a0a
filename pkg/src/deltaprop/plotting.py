"""PNG figures next to the CSV tables. Agg only; no timestamps in the files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.dpi": 100,
    "savefig.dpi": 120,
}


def _save(fig, path):
    # no Software/date metadata so repeated runs give identical bytes
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_norms(path, times, norms):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5, 3))
        norms = np.asarray(norms)
        ax.plot(times, norms - norms[0], "k.-", ms=3)
        ax.set_xlabel("t")
        ax.set_ylabel(r"$\|\psi(t)\| - \|\psi(s)\|$")
        fig.tight_layout()
        return _save(fig, path)


def plot_density(path, x, times, density, points=()):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        extent = (x[0], x[-1], times[0], times[-1])
        im = ax.imshow(density, aspect="auto", origin="lower", extent=extent, cmap="viridis")
        for p in points:
            ax.axvline(p, color="w", lw=0.6, ls="--")
        ax.set_xlabel("x")
        ax.set_ylabel("t")
        fig.colorbar(im, ax=ax, label=r"$|\psi|^2$")
        fig.tight_layout()
        return _save(fig, path)


def plot_report(path, records):
    """Measured/bound for every record with a positive bound, FAIL rows in red."""
    rows = [r for r in records if r.bound not in (None, 0.0) and np.isfinite(r.measured)]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(6, 0.3 * max(len(rows), 3) + 1))
        if rows:
            y = np.arange(len(rows))
            vals = [max(abs(r.measured) / abs(r.bound), 1e-20) for r in rows]
            colors = ["tab:red" if r.status == "FAIL" else "tab:blue" for r in rows]
            ax.barh(y, vals, color=colors)
            ax.set_yticks(y)
            ax.set_yticklabels([r.check for r in rows])
            ax.set_xscale("log")
            ax.axvline(1.0, color="k", lw=0.8)
            ax.invert_yaxis()
        ax.set_xlabel("measured / bound")
        fig.tight_layout()
        return _save(fig, path)


def plot_convergence(path, n_slices, errors):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.5))
        n = np.asarray(n_slices, dtype=float)
        e = np.asarray(errors, dtype=float)
        ok = e > 0
        ax.loglog(n[ok], e[ok], "ko-", ms=4, label="error")
        if ok.sum() >= 1:
            n0, e0 = n[ok][0], e[ok][0]
            ax.loglog(n[ok], e0 * n0 / n[ok], "k:", lw=0.8, label=r"$\propto n^{-1}$")
        ax.set_xlabel("slices")
        ax.set_ylabel("relative error")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_frames(path, levels):
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.5))
        h = [lv.h for lv in levels]
        ax.loglog(h, [lv.distance for lv in levels], "ko-", ms=4, label="lab vs co-moving")
        sc = [(lv.h, lv.direct_selfconv) for lv in levels if np.isfinite(lv.direct_selfconv)]
        if sc:
            ax.loglog(*zip(*sc), "s--", color="tab:blue", ms=4, label="direct self-convergence")
        ax.invert_xaxis()
        ax.set_xlabel("h")
        ax.set_ylabel(r"$L^2$ distance")
        ax.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)
