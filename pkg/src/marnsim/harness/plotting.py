"""Static figures written next to the delimited results."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_ber(results, path, labels=None, title=None):
    """Aggregate BER against SNR for one or more sweeps, log scale."""
    fig, ax = plt.subplots(figsize=(5.5, 4))
    labels = labels or [None] * len(results)
    for res, label in zip(results, labels):
        ber = res.ber()
        keep = ber > 0
        ax.semilogy(res.snr_db[keep], ber[keep], marker="o", label=label or res.metadata.get("scheme"))
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_outage(result, path, label=None):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    keep = result.probability > 0
    ax.loglog(result.epsilon[keep], result.probability[keep], marker="o",
              label=label or f"slope {result.slope:.2f}")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("P(gamma < epsilon)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return _save(fig, path)


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


__all__ = ["plot_ber", "plot_outage"]
