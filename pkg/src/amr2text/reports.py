"""Rendering of corpus and training reports as TSV tables plus figures.

Every report writes a delimited file for downstream tooling and a PNG chart
of the same numbers. Figures use the Agg backend so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .amr import linearize, surface_form, token_distance


def write_diameter_report(hist: dict, tsv_path, figure_path) -> None:
    """Cumulative diameter distribution as TSV rows and a step chart."""
    diameters = sorted(hist)
    with open(tsv_path, "w", encoding="utf-8") as f:
        f.write("diameter\tcumulative_fraction\n")
        for d in diameters:
            f.write(f"{d}\t{hist[d]:.6f}\n")
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.step(diameters, [hist[d] for d in diameters], where="post", marker="o")
    ax.set_xlabel("graph diameter")
    ax.set_ylabel("fraction with diameter ≤ d")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(figure_path, dpi=120)
    plt.close(fig)


def adjacency_token_distances(graphs) -> list:
    """Token distances in the linearization for node pairs one edge apart.

    Serialization stretches graph neighbors across the token sequence; this
    measures by how much, one value per edge over the whole corpus.
    """
    distances = []
    for graph in graphs:
        lin = linearize(graph)
        concepts = dict(graph.nodes)
        for src, tgt, _ in graph.edges:
            distances.append(token_distance(lin, surface_form(concepts[src]), surface_form(concepts[tgt])))
    return distances


def write_distance_report(distances, tsv_path, figure_path) -> None:
    """Histogram of serialized distances between graph-adjacent concepts."""
    counts = {}
    for d in distances:
        counts[d] = counts.get(d, 0) + 1
    with open(tsv_path, "w", encoding="utf-8") as f:
        f.write("token_distance\tedge_count\n")
        for d in sorted(counts):
            f.write(f"{d}\t{counts[d]}\n")
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    xs = sorted(counts)
    ax.bar(xs, [counts[d] for d in xs], width=0.8)
    ax.set_xlabel("token distance between adjacent concepts")
    ax.set_ylabel("edges")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(figure_path, dpi=120)
    plt.close(fig)


def write_training_report(history, figure_path) -> None:
    """Loss and dev BLEU curves on twin axes; history rows are (epoch, loss, bleu)."""
    epochs = [e for e, _, _ in history]
    losses = [l for _, l, _ in history]
    bleus = [b for _, _, b in history]
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(epochs, losses, color="tab:red", marker=".", label="train loss / token")
    ax.set_xlabel("epoch")
    ax.set_ylabel("train loss per token", color="tab:red")
    ax.tick_params(axis="y", labelcolor="tab:red")
    twin = ax.twinx()
    twin.plot(epochs, bleus, color="tab:blue", marker=".", label="dev BLEU")
    twin.set_ylabel("dev BLEU", color="tab:blue")
    twin.tick_params(axis="y", labelcolor="tab:blue")
    twin.set_ylim(0.0, 102.0)
    fig.tight_layout()
    fig.savefig(figure_path, dpi=120)
    plt.close(fig)
