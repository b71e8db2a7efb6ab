"""Figure rendering for scenario reports.

CSV files are the data contract; these PNGs are companion displays
written next to them. Everything uses the non-interactive Agg backend so
reports render identically in headless runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_pmf_figure(path, action_labels, series, title, ylabel="probability"):
    """Bar chart of one or more probability mass functions.

    Args:
        path: output PNG path.
        action_labels: x tick labels, one per action.
        series: mapping from legend label to probability vector.
        title: figure title.
    """
    fig, ax = plt.subplots(figsize=(8, 4.5))
    count = len(series)
    width = 0.8 / max(count, 1)
    base = range(len(action_labels))
    for k, (label, probs) in enumerate(series.items()):
        offsets = [x + (k - (count - 1) / 2) * width for x in base]
        ax.bar(offsets, [float(p) for p in probs], width=width, label=label)
    ax.set_xticks(list(base))
    ax.set_xticklabels([str(a) for a in action_labels], rotation=45, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_band_figure(path, iterations, bands, title, ylabel="RMSE",
                     logy=True):
    """Median line with percentile shading for a per-iteration statistic.

    ``bands`` maps percentile (int) to a series over iterations; the 25/75
    pair is shaded darker than the 5/95 pair when present.
    """
    fig, ax = plt.subplots(figsize=(8, 4.5))
    if 5 in bands and 95 in bands:
        ax.fill_between(iterations, bands[5], bands[95], alpha=0.15,
                        color="gray", label="P5-P95")
    if 25 in bands and 75 in bands:
        ax.fill_between(iterations, bands[25], bands[75], alpha=0.35,
                        color="gray", label="P25-P75")
    if 50 in bands:
        ax.plot(iterations, bands[50], color="black", label="median")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_line_figure(path, x, series, title, xlabel, ylabel):
    """Simple multi-line plot: ``series`` maps legend label to y values."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for label, ys in series.items():
        ax.plot(x, ys, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
