"""Matplotlib renderers for the CLI report paths (written next to the
JSON/JSONL outputs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_training_curve(report: dict, path: str) -> None:
    """Mean reward per epoch with a +-1 std band."""
    epochs = [e["epoch"] for e in report["epochs"]]
    mean = np.array([e["mean_reward"] for e in report["epochs"]])
    std = np.array([e["std_reward"] for e in report["epochs"]])
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(epochs, mean, lw=1.5, label="mean reward")
    ax.fill_between(epochs, mean - std, mean + std, alpha=0.25, label="+-1 std")
    ax.axhline(report["max_reward"], color="gray", ls="--", lw=1, label="max achievable")
    ax.set_xlabel("epoch")
    ax.set_ylabel("sampled mean reward")
    ax.set_title(f"toy GRPO training (seed {report['task_seed']})")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_reward_components(rows: list[dict], path: str) -> None:
    """Per-component mean bars plus a total-reward histogram."""
    components = ["r_fmt", "r_len", "r_acc", "r_type", "r_table", "r_eg", "r_rs"]
    means = [float(np.mean([r["breakdown"][c] for r in rows])) for c in components]
    totals = [r["breakdown"]["r_total"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.bar(components, means)
    ax1.set_ylabel("mean component value")
    ax1.set_title("reward components")
    ax1.tick_params(axis="x", rotation=45)
    ax2.hist(totals, bins=min(20, max(5, len(set(totals)))))
    ax2.set_xlabel("total reward")
    ax2.set_ylabel("rollouts")
    ax2.set_title("total reward distribution")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_metric_values(report: dict, metric: str, path: str) -> None:
    """Histogram of per-record metric values with the mean marked."""
    values = [r["value"] for r in report["per_record"]]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(values, bins=min(20, max(5, len(set(values)))))
    ax.axvline(report["mean"], color="crimson", ls="--", lw=1.2, label=f"mean = {report['mean']:.4f}")
    ax.set_xlabel(metric)
    ax.set_ylabel("records")
    ax.set_title(f"{metric} over {report['count']} records")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
