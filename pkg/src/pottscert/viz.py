"""Decomposition map rendering: exact PPM pixels and matplotlib summaries."""
from __future__ import annotations

import numpy as np

from .model import ModelError


def decomposition_image(labels, block_ids, certified, rows: int, cols: int,
                        num_labels: int) -> np.ndarray:
    """Pixel map of a block decomposition over a grid instance.

    Uncertified nodes are pure red, certified nodes adjacent to a different
    block are pure green, and everything else is a gray level proportional to
    its label.  Node u sits at (u // cols, u % cols).
    """
    n = rows * cols
    labels = list(labels)
    block_ids = list(block_ids)
    certified = list(certified)
    if not (len(labels) == len(block_ids) == len(certified) == n):
        raise ModelError("grid dimensions do not match the node count")
    img = np.zeros((rows, cols, 3), dtype=np.uint8)
    for u in range(n):
        r, c = divmod(u, cols)
        if not certified[u]:
            img[r, c] = (255, 0, 0)
            continue
        seam = False
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < rows and 0 <= cc < cols:
                if block_ids[rr * cols + cc] != block_ids[u]:
                    seam = True
                    break
        if seam:
            img[r, c] = (0, 255, 0)
        else:
            level = 0 if num_labels <= 1 else round(255 * labels[u] / (num_labels - 1))
            img[r, c] = (level, level, level)
    return img


def save_report_figure(fractions, image: np.ndarray | None, path) -> None:
    """Matplotlib summary: certified fraction per iteration plus the map."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ncols = 2 if image is not None else 1
    fig, axes = plt.subplots(1, ncols, figsize=(5 * ncols, 4))
    axes = np.atleast_1d(axes)
    ax = axes[0]
    ax.plot(range(1, len(fractions) + 1), fractions, marker="o")
    ax.set_xlabel("iteration")
    ax.set_ylabel("certified fraction")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    if image is not None:
        axes[1].imshow(image, interpolation="nearest")
        axes[1].set_title("blocks (red: uncertified, green: seams)")
        axes[1].axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
