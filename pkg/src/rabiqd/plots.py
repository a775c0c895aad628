"""Figure rendering for run, sweep and convergence reports.

PNG files are written next to the delimited outputs; the CSV remains the
machine-readable contract and nothing downstream depends on these figures.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _maybe_log_time(ax, times):
    positive = [t for t in times if t > 0]
    if positive and max(positive) / min(positive) > 1e4:
        ax.set_xscale("log")


def plot_run(records, path, title: str | None = None) -> None:
    """Correlations and mean excitation numbers versus dimensionless time."""
    t = [r.t for r in records]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(t, [r.discord for r in records], label="discord", color="tab:red")
    ax1.plot(t, [r.concurrence for r in records], label="concurrence", color="tab:blue")
    ax1.plot(t, [r.mutual_info for r in records], label="mutual information",
             color="tab:gray", alpha=0.6, lw=0.9)
    ax1.set_ylabel("correlations")
    ax1.legend(loc="best", fontsize=8)
    ax2.plot(t, [r.n_total for r in records], label=r"$\langle N_{total}\rangle$",
             color="tab:green")
    ax2.plot(t, [r.n_atoms for r in records], label=r"$\langle N_{atoms}\rangle$",
             color="tab:purple")
    ax2.set_xlabel(r"$\omega t$")
    ax2.set_ylabel("mean excitations")
    ax2.legend(loc="best", fontsize=8)
    _maybe_log_time(ax2, t[1:])
    if title:
        ax1.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep(results, axis: str, label: str, path) -> None:
    """Overlay discord and concurrence trajectories for each sweep value."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for value, result in results.items():
        t = [r.t for r in result.records]
        ax1.plot(t, [r.discord for r in result.records], label=f"{axis}={value:g}")
        ax2.plot(t, [r.concurrence for r in result.records], label=f"{axis}={value:g}")
    ax1.set_ylabel("discord")
    ax2.set_ylabel("concurrence")
    ax2.set_xlabel(r"$\omega t$")
    ax1.legend(loc="best", fontsize=8)
    ax1.set_title(label)
    all_t = [r.t for res in results.values() for r in res.records[1:]]
    _maybe_log_time(ax2, all_t)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_convergence(report, path, title: str | None = None) -> None:
    """Truncation differences versus the lower n_max of each pair."""
    n = report.n_values[:-1]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(n, np.maximum(report.max_deltas, 1e-18), "o-", label="truncated comparison")
    ax.semilogy(n, np.maximum(report.max_deltas_embedded, 1e-18), "s--",
                label="zero-padded comparison")
    ax.axhline(1e-10, color="tab:red", lw=0.8, ls=":", label="convergence threshold")
    ax.set_xlabel("Fock truncation $n_{max}$")
    ax.set_ylabel("max elementwise change")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
