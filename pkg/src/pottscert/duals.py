"""Pairwise and block dual evaluation, conversions, and local decoding.

The pairwise dual puts a message vector on every directed edge pair; its
value is the sum of reparametrized node minima plus leftover edge minima.
Relaxing consistency only on edges that cross between blocks gives the block
dual: per-block LP subproblems with boundary costs shifted by the messages,
plus the crossing-edge minima.  Restricting an optimal pairwise dual to the
crossing pairs is already optimal for the block dual, and stitching optimal
per-block duals back onto the crossing messages recovers a pairwise optimum.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping

import numpy as np

from .lp import solve_lp
from .model import (
    TAU,
    BlockDecomposition,
    BoundaryDual,
    ModelError,
    PairwiseDual,
    PottsInstance,
    as_exact,
    crossing_edges,
    is_forbidden,
    restricted_instance,
    validate_pairwise_dual,
)


def pairwise_dual_value(inst: PottsInstance, dual: PairwiseDual, *, exact: bool = False):
    """Value of the relaxation's Lagrangian dual at the given messages."""
    validate_pairwise_dual(inst, dual)
    k = inst.num_labels
    if exact:
        total = Fraction(0)
        for u in range(inst.num_nodes):
            best = None
            for i in range(k):
                c = inst.node_costs[u][i]
                if is_forbidden(c):
                    continue
                val = as_exact(c) + sum(
                    (as_exact(dual.messages[(u, v)][i]) for v in inst.neighbors(u)),
                    Fraction(0),
                )
                if best is None or val < best:
                    best = val
            total += best
        for u, v, w in inst.edges:
            wv = as_exact(w)
            muv = dual.messages[(u, v)]
            mvu = dual.messages[(v, u)]
            best = None
            for i in range(k):
                for j in range(k):
                    val = (Fraction(0) if i == j else wv) - as_exact(muv[i]) - as_exact(mvu[j])
                    if best is None or val < best:
                        best = val
            total += best
        return total
    theta_hat = inst.costs_array.copy()
    for (a, b), vec in dual.messages.items():
        theta_hat[a] += np.array([float(t) for t in vec])
    total = float(theta_hat.min(axis=1).sum())
    eye = np.eye(k)
    for u, v, w in inst.edges:
        muv = np.array([float(t) for t in dual.messages[(u, v)]])
        mvu = np.array([float(t) for t in dual.messages[(v, u)]])
        total += float((float(w) * (1.0 - eye) - muv[:, None] - mvu[None, :]).min())
    return total


def _block_boundary_dual(inst: PottsInstance, block: frozenset[int],
                         bdual: BoundaryDual) -> BoundaryDual:
    """Messages of a decomposition-wide dual relevant to one block."""
    edges = frozenset(
        (u, v) for (u, v) in bdual.boundary_edges if (u in block) != (v in block)
    )
    msgs = {}
    for u, v in edges:
        msgs[(u, v)] = bdual.messages[(u, v)]
        msgs[(v, u)] = bdual.messages[(v, u)]
    return BoundaryDual(edges, msgs)


def block_dual_value(inst: PottsInstance, decomp: BlockDecomposition,
                     bdual: BoundaryDual, *, rational: bool = False,
                     engine: str = "auto", big: float | None = None):
    """Block dual value: per-block LP optima plus crossing-edge minima."""
    cross = frozenset(crossing_edges(inst, decomp))
    if bdual.boundary_edges != cross:
        raise ModelError("boundary dual does not match the decomposition's crossing edges")
    total = Fraction(0) if rational else 0.0
    for block in decomp.blocks:
        if not block:
            continue
        sub = restricted_instance(inst, block, _block_boundary_dual(inst, block, bdual))
        primal, _ = solve_lp(sub, rational=rational, engine=engine, big=big)
        total = total + primal.objective
    k = inst.num_labels
    for u, v in sorted(cross):
        w = inst.edges[inst.edge_ids[(u, v)]][2]
        muv = bdual.messages[(u, v)]
        mvu = bdual.messages[(v, u)]
        if rational:
            best = None
            for i in range(k):
                for j in range(k):
                    val = (Fraction(0) if i == j else as_exact(w)) - as_exact(
                        muv[i]
                    ) - as_exact(mvu[j])
                    if best is None or val < best:
                        best = val
        else:
            mat = float(w) * (1.0 - np.eye(k))
            mat = mat - np.array([float(t) for t in muv])[:, None]
            mat = mat - np.array([float(t) for t in mvu])[None, :]
            best = float(mat.min())
        total = total + best
    return total


def restrict_dual(inst: PottsInstance, dual: PairwiseDual,
                  decomp: BlockDecomposition, *, lp_objective,
                  tol: float = TAU, exact: bool = False) -> BoundaryDual:
    """Restriction of an optimal pairwise dual to the crossing pairs.

    Optimality of the input is a precondition for the restriction to solve
    the block dual, so the caller must supply the LP optimum and the gap is
    verified here before anything is returned.
    """
    gap = pairwise_dual_value(inst, dual, exact=exact) - lp_objective
    scale = max(1.0, abs(float(lp_objective)))
    if abs(float(gap)) > tol * scale:
        raise ModelError(
            f"pairwise dual is not certified optimal (gap {float(gap):.3g})"
        )
    cross = frozenset(crossing_edges(inst, decomp))
    msgs = {}
    for u, v in cross:
        msgs[(u, v)] = dual.messages[(u, v)]
        msgs[(v, u)] = dual.messages[(v, u)]
    return BoundaryDual(cross, msgs)


def extend_dual(inst: PottsInstance, decomp: BlockDecomposition,
                bdual: BoundaryDual,
                block_duals: Mapping[int, PairwiseDual]) -> PairwiseDual:
    """Stitch per-block duals and crossing messages into a pairwise dual.

    ``block_duals[b]`` must be a dual for block b's restricted instance
    (local node indexing by rank in the sorted block).  Keys must cover the
    directed pairs of the whole edge set exactly once.
    """
    cross = frozenset(crossing_edges(inst, decomp))
    msgs: dict[tuple[int, int], tuple] = {}
    for u, v in cross:
        msgs[(u, v)] = bdual.messages[(u, v)]
        msgs[(v, u)] = bdual.messages[(v, u)]
    for b, block in enumerate(decomp.blocks):
        if not block:
            continue
        nodes = sorted(block)
        sub_dual = block_duals.get(b)
        has_internal = any(u in block and v in block for u, v, _ in inst.edges)
        if sub_dual is None:
            if has_internal:
                raise ModelError(f"missing dual for block {b} with internal edges")
            continue
        for (a, b2), vec in sub_dual.messages.items():
            ga, gb = nodes[a], nodes[b2]
            if (ga, gb) in msgs:
                raise ModelError(f"duplicate message for directed pair ({ga},{gb})")
            msgs[(ga, gb)] = tuple(vec)
    want = set()
    for u, v, _ in inst.edges:
        want.add((u, v))
        want.add((v, u))
    if set(msgs) != want:
        raise ModelError("stitched dual does not cover the directed edge pairs exactly")
    return PairwiseDual(msgs)


def local_decode(inst: PottsInstance, dual: PairwiseDual, u: int,
                 *, tol: float = TAU) -> int | None:
    """Unique minimizer of node u's reparametrized costs, or None on a tie."""
    validate_pairwise_dual(inst, dual)
    k = inst.num_labels
    vals = []
    for i in range(k):
        c = inst.node_costs[u][i]
        if is_forbidden(c):
            vals.append(float("inf"))
        else:
            vals.append(
                float(c) + sum(float(dual.messages[(u, v)][i]) for v in inst.neighbors(u))
            )
    order = sorted(range(k), key=lambda i: (vals[i], i))
    if k > 1 and vals[order[1]] - vals[order[0]] <= tol:
        return None
    return order[0]


def boundary_message_sums(bdual: BoundaryDual, block) -> dict[int, tuple]:
    """Accumulated message per (boundary node, label): the cost-shift bounds.

    Rows are emitted only for block nodes that touch a crossing edge.
    """
    block = frozenset(block)
    out: dict[int, list] = {}
    for (u, v), vec in bdual.messages.items():
        if u in block and v not in block:
            if u not in out:
                out[u] = [0] * len(vec)
            for i, x in enumerate(vec):
                cur = out[u][i]
                if isinstance(cur, Fraction) or isinstance(x, Fraction):
                    out[u][i] = as_exact(cur) + as_exact(x)
                else:
                    out[u][i] = cur + float(x)
    return {u: tuple(row) for u, row in out.items()}


def dumps_dual(dual: PairwiseDual | BoundaryDual, prefix: str = "eta") -> str:
    lines = []
    for (u, v) in sorted(dual.messages):
        for i, x in enumerate(dual.messages[(u, v)]):
            lines.append(f"{prefix} {u} {v} {i} {'%.17g' % float(x)}")
    return "\n".join(lines) + "\n" if lines else ""
