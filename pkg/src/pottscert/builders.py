"""Instance construction: golden examples, random generators, vision models."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .model import (
    FORBIDDEN,
    BoundaryDual,
    Labeling,
    ModelError,
    PottsInstance,
)


def _number(value, exact: bool):
    if isinstance(value, Fraction) or not exact:
        return value
    return Fraction(str(value))


def counterexample_triangle(eps: float = 0.1, *, exact: bool = False
                            ) -> tuple[PottsInstance, Labeling]:
    """Three mutually connected nodes whose relaxation is fractional everywhere.

    Each node's cheapest label is unique, yet the relaxed optimum spreads half
    a unit over the two permitted labels per node and beats the exact optimum
    (value 2) with 3(1 + eps)/2 for any eps below 1/3.
    """
    if not 0 < float(eps) < 1 / 3:
        raise ModelError("eps must lie strictly between 0 and 1/3")
    e = _number(eps, exact)
    zero, one = (Fraction(0), Fraction(1)) if exact else (0.0, 1.0)
    costs = (
        (FORBIDDEN, zero, e),
        (zero, FORBIDDEN, e),
        (e, zero, FORBIDDEN),
    )
    edges = ((0, 1, one), (1, 2, one), (0, 2, one))
    return PottsInstance(3, 3, costs, edges), (1, 0, 1)


def combined_example(eps: float = 0.01, gamma: float = 0.1, *, exact: bool = False
                     ) -> tuple[PottsInstance, Labeling, BoundaryDual]:
    """Six-node instance mixing a stable clique with a tree-structured half.

    Nodes 0..5 stand for u, v, w, x, y, z.  Also returns the hand-built
    boundary dual for the split {u,v,w} | {x,y,z}, which is optimal for the
    block dual: its value matches the exact optimum 1 + 2*eps.
    """
    if not (0 < float(eps) and 0 < float(gamma) < 2):
        raise ModelError("eps must be positive and gamma in (0, 2)")
    e = _number(eps, exact)
    gm = _number(gamma, exact)
    zero, one, two = (
        (Fraction(0), Fraction(1), Fraction(2)) if exact else (0.0, 1.0, 2.0)
    )
    costs = (
        (zero, zero, two),        # u
        (zero, FORBIDDEN, FORBIDDEN),  # v
        (zero, zero, two),        # w
        (two, zero, two),         # x
        (two, zero, two),         # y
        (zero, one, one),         # z
    )
    edges = (
        (0, 1, two),
        (0, 2, two),
        (1, 2, two),
        (0, 3, e),
        (2, 4, e),
        (3, 4, two),
        (4, 5, two - gm),
    )
    g = (0, 0, 0, 1, 1, 1)
    messages = {
        (0, 3): (e, zero, zero),
        (3, 0): (-e, zero, zero),
        (2, 4): (e, zero, zero),
        (4, 2): (-e, zero, zero),
    }
    bdual = BoundaryDual(frozenset({(0, 3), (2, 4)}), messages)
    return PottsInstance(6, 3, costs, edges), g, bdual


def random_grid(rows: int, cols: int, k: int, cost_range=(0.0, 5.0),
                weight_range=(1.0, 1.0), seed: int = 0,
                integer_costs: bool = False) -> PottsInstance:
    """Seeded 4-connected grid with uniform random costs and weights."""
    if rows < 1 or cols < 1:
        raise ModelError("grid needs at least one row and one column")
    rng = np.random.default_rng(seed)
    n = rows * cols
    lo, hi = cost_range
    if integer_costs:
        costs = rng.integers(int(lo), int(hi) + 1, size=(n, k)).astype(float)
    else:
        costs = rng.uniform(lo, hi, size=(n, k))
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges.append((u, u + 1))
            if r + 1 < rows:
                edges.append((u, u + cols))
    wlo, whi = weight_range
    weights = rng.uniform(wlo, whi, size=len(edges)) if whi > wlo else np.full(len(edges), float(wlo))
    return PottsInstance(
        n, k,
        tuple(tuple(float(x) for x in row) for row in costs),
        tuple((u, v, float(w)) for (u, v), w in zip(edges, weights)),
    )


def random_tree(num_nodes: int, k: int, cost_range=(0.0, 5.0),
                weight_range=(0.5, 2.0), seed: int = 0) -> PottsInstance:
    """Seeded random tree by uniform attachment."""
    if num_nodes < 1:
        raise ModelError("tree needs at least one node")
    rng = np.random.default_rng(seed)
    lo, hi = cost_range
    costs = rng.uniform(lo, hi, size=(num_nodes, k))
    wlo, whi = weight_range
    edges = []
    for v in range(1, num_nodes):
        u = int(rng.integers(0, v))
        w = float(rng.uniform(wlo, whi)) if whi > wlo else float(wlo)
        edges.append((u, v, w))
    return PottsInstance(
        num_nodes, k,
        tuple(tuple(float(x) for x in row) for row in costs),
        tuple(edges),
    )


def _bt_bounds(row: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel min/max over the half-pixel interpolated neighborhood."""
    vals = row.astype(float)
    left = np.empty_like(vals)
    right = np.empty_like(vals)
    left[1:] = 0.5 * (vals[1:] + vals[:-1])
    left[0] = vals[0]
    right[:-1] = 0.5 * (vals[:-1] + vals[1:])
    right[-1] = vals[-1]
    stacked = np.stack([vals, left, right])
    return stacked.min(axis=0), stacked.max(axis=0)


def _grid_edges_with_weights(image: np.ndarray, s: float, p: float, t: float):
    """4-neighbor Potts weights: p*s on smooth transitions, s elsewhere."""
    h, w = image.shape[:2]
    if image.ndim == 2:
        diff = lambda a, b: abs(float(a) - float(b))  # noqa: E731
    else:
        diff = lambda a, b: float(np.linalg.norm(np.asarray(a, float) - np.asarray(b, float)))  # noqa: E731
    edges = []
    for r in range(h):
        for c in range(w):
            u = r * w + c
            if c + 1 < w:
                wt = p * s if diff(image[r, c], image[r, c + 1]) < t else s
                edges.append((u, u + 1, float(wt)))
            if r + 1 < h:
                wt = p * s if diff(image[r, c], image[r + 1, c]) < t else s
                edges.append((u, u + w, float(wt)))
    return edges


def build_stereo(left: np.ndarray, right: np.ndarray, k: int, *, s: float = 50.0,
                 p: float = 2.0, t: float = 4.0,
                 bt_correction: bool = True) -> PottsInstance:
    """Disparity MRF: data costs from squared intensity differences.

    Label i means pixel (r, c) of the left image matches (r, c - i) on the
    right; shifts that exit the right image are FORBIDDEN (only disparity 0
    is always available).  ``bt_correction`` swaps the raw difference for the
    sampling-insensitive half-pixel dissimilarity before squaring.
    """
    left = np.asarray(left)
    right = np.asarray(right)
    if left.shape != right.shape or left.ndim != 2:
        raise ModelError("stereo needs two grayscale images of equal shape")
    h, w = left.shape
    if k < 1 or k > w:
        raise ModelError("label count must be between 1 and the image width")
    costs = np.full((h * w, k), FORBIDDEN)
    for r in range(h):
        lrow = left[r].astype(float)
        rrow = right[r].astype(float)
        if bt_correction:
            rmin, rmax = _bt_bounds(rrow)
            lmin, lmax = _bt_bounds(lrow)
        for i in range(k):
            cols = np.arange(i, w)
            shifted = cols - i
            if bt_correction:
                d_left = np.maximum(
                    0.0,
                    np.maximum(lrow[cols] - rmax[shifted], rmin[shifted] - lrow[cols]),
                )
                d_right = np.maximum(
                    0.0,
                    np.maximum(rrow[shifted] - lmax[cols], lmin[cols] - rrow[shifted]),
                )
                d = np.minimum(d_left, d_right)
            else:
                d = lrow[cols] - rrow[shifted]
            costs[r * w + cols, i] = d * d
    cost_rows = tuple(
        tuple(FORBIDDEN if math.isinf(x) else float(x) for x in row) for row in costs
    )
    return PottsInstance(h * w, k, cost_rows, tuple(_grid_edges_with_weights(left, s, p, t)))


def segmentation_weight(rgb_difference: float, lambda1: float = 5.0,
                        lambda2: float = 100.0, sigma: float = 5.0) -> float:
    """Contrast-modulated boundary weight for unit-distance neighbors."""
    return lambda1 + lambda2 * math.exp(-(rgb_difference**2) / (2.0 * sigma**2))


def build_segmentation(image_rgb: np.ndarray, node_costs: np.ndarray, *,
                       lambda1: float = 5.0, lambda2: float = 100.0,
                       sigma: float = 5.0) -> PottsInstance:
    """Segmentation MRF from an RGB image and externally supplied node costs.

    Weights fall off with the Euclidean RGB difference between 4-neighbors;
    node costs come from a file (cost learning is out of scope here).
    """
    image_rgb = np.asarray(image_rgb)
    if image_rgb.ndim != 3 or image_rgb.shape[2] != 3:
        raise ModelError("segmentation needs an (H, W, 3) RGB image")
    h, w, _ = image_rgb.shape
    node_costs = np.asarray(node_costs, dtype=float)
    if node_costs.ndim != 2 or node_costs.shape[0] != h * w:
        raise ModelError("node cost table must have one row per pixel")
    k = node_costs.shape[1]
    edges = []
    img = image_rgb.astype(float)
    for r in range(h):
        for c in range(w):
            u = r * w + c
            if c + 1 < w:
                gdiff = float(np.linalg.norm(img[r, c] - img[r, c + 1]))
                edges.append((u, u + 1, segmentation_weight(gdiff, lambda1, lambda2, sigma)))
            if r + 1 < h:
                gdiff = float(np.linalg.norm(img[r, c] - img[r + 1, c]))
                edges.append((u, u + w, segmentation_weight(gdiff, lambda1, lambda2, sigma)))
    return PottsInstance(
        h * w, k,
        tuple(tuple(float(x) for x in row) for row in node_costs),
        tuple(edges),
    )


def parse_cost_table(text: str) -> np.ndarray:
    """Node-cost block in the instance text format: one row of k costs per node."""
    rows = []
    width = None
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        vals = [math.inf if p.lower() in ("inf", "+inf") else float(p) for p in parts]
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ModelError("cost table rows have inconsistent widths")
        rows.append(vals)
    if not rows:
        raise ModelError("cost table is empty")
    return np.array(rows)
