"""Matplotlib renderings of the delimited run outputs.

Every report the CLI writes as CSV (ROC sweeps, training curves, per-round
federation metrics, node sweeps) can also be rendered to PNG next to it.
Rendering uses the Agg backend and never opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

DPI = 150


def _finish(fig, ax, path: str, xlabel: str, ylabel: str, title: str) -> None:
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_roc_figure(path: str, curves: list, title: str = "ROC") -> None:
    """curves: list of (label, fpr, tpr, auc_value)."""
    fig, ax = plt.subplots(figsize=(5, 4.2))
    for label, fpr, tpr, auc_value in curves:
        ax.plot(fpr, tpr, label=f"{label} (AUC={auc_value:.3f})")
    ax.plot([0, 1], [0, 1], linestyle="--", color="grey", linewidth=0.8)
    ax.legend(loc="lower right", fontsize=8)
    _finish(fig, ax, path, "false positive rate", "true positive rate", title)


def save_loss_figure(path: str, losses: list, title: str = "Training loss") -> None:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.plot(range(1, len(losses) + 1), losses, marker="o", markersize=3)
    _finish(fig, ax, path, "epoch", "mean BCE loss", title)


def save_rounds_figure(path: str, rounds: list, title: str = "Federated rounds") -> None:
    """rounds: list of RoundMetrics-like objects with round_index/test_auc/test_accuracy."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    xs = [r.round_index for r in rounds]
    ax.plot(xs, [r.test_auc for r in rounds], marker="o", markersize=3, label="test AUC")
    ax.plot(xs, [r.test_accuracy for r in rounds], marker="s", markersize=3, label="test accuracy")
    ax.legend(fontsize=8)
    _finish(fig, ax, path, "global round", "metric", title)


def save_sweep_figure(path: str, rows: list, title: str = "Node sweep") -> None:
    """rows: list of (n_nodes, auc, accuracy) tuples, one per federation setting."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    xs = [r[0] for r in rows]
    ax.plot(xs, [r[1] for r in rows], marker="o", markersize=4, label="test AUC")
    ax.plot(xs, [r[2] for r in rows], marker="s", markersize=4, label="test accuracy")
    ax.set_xticks(xs)
    ax.legend(fontsize=8)
    _finish(fig, ax, path, "number of nodes", "metric", title)
