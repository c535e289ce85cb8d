"""Figure rendering for profiles and sweep reports.

Everything draws through the Agg backend straight to files; the
command-line report path drops these next to its delimited output.
"""

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .decay import DecayProfile
from .reports import CheckRecord


def render_decay_heatmap(profile: DecayProfile, path: str) -> str:
    """log10 of the decay table over the chamber triangle; skipped
    wall points stay blank."""
    imax = max((i for i, _ in profile.table), default=0)
    grid = np.full((imax + 1, imax + 1), np.nan)
    for (i, j), value in profile.table.items():
        grid[j, i] = math.log10(value) if value > 0 else np.nan
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    img = ax.imshow(grid, origin="lower", cmap="viridis", aspect="equal")
    fig.colorbar(img, ax=ax, label="log10 bound")
    pexp = profile.setting.p_exp
    ax.set_title(
        f"{profile.setting.kind.value}  q={profile.setting.q}  "
        f"p={'inf' if pexp == math.inf else pexp}  n={profile.n}"
    )
    ax.set_xlabel("i")
    ax.set_ylabel("j")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_decay_curves(profiles: list[DecayProfile], path: str) -> str:
    """Decay along the diagonal band for several exponents at once."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for profile in profiles:
        n = profile.n
        points = sorted(
            (i, v)
            for (i, j), v in profile.table.items()
            if j * (n + 1) == i * n and v > 0
        )
        if not points:
            continue
        pexp = profile.setting.p_exp
        label = f"p={'inf' if pexp == math.inf else pexp}, n={n}"
        ax.semilogy([i for i, _ in points], [v for _, v in points], label=label)
    ax.set_xlabel("i along the band")
    ax.set_ylabel("bound")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_margin_chart(records: list[CheckRecord], path: str) -> str:
    """Measured value against its bound, one marker per instance."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    bounded = [r for r in records if r.bound is not None]
    xs = range(len(bounded))
    ax.plot(xs, [r.measured for r in bounded], "o", label="measured")
    ax.plot(xs, [r.bound for r in bounded], "_", markersize=12, label="bound")
    for x, rec in zip(xs, bounded):
        if not rec.passed:
            ax.plot([x], [rec.measured], "rx", markersize=10)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(
        ["/".join(str(v) for v in r.instance) for r in bounded],
        rotation=60,
        fontsize=7,
    )
    ax.set_ylabel("value")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
