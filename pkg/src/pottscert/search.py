"""Depth-first labeling search bounded by reparametrized dual costs.

Given a dual point for the pairwise LP, every labeling's objective splits into
per-node reparametrized costs plus entrywise-nonnegative edge matrices (at an
optimal dual the leftover edge minima are zero).  Partial assignments then get
an additive lower bound that is cheap to maintain incrementally, which is what
makes branch-and-bound over labelings practical without an LP solve per node.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .model import PottsInstance, is_forbidden


class SearchCapExceeded(RuntimeError):
    pass


@dataclass
class SearchTables:
    num_nodes: int
    num_labels: int
    theta: list            # n x k reparametrized node costs
    node_min: list
    adjacency: list        # per node: list of (neighbor, edge id, node-is-first)
    edge_mat: list         # per edge: k x k cost matrix, [first label][second label]
    row_min_first: list    # per edge: min over second label, indexed by first
    row_min_second: list
    edge_min: list
    base: object           # sum of node minima and edge minima


def build_tables(inst: PottsInstance, dual=None, *, exact: bool = False) -> SearchTables:
    """Reparametrize a finite instance by a pairwise dual (or the zero dual)."""
    n, k = inst.num_nodes, inst.num_labels
    if exact:
        from .model import as_exact

        conv = as_exact
    else:
        conv = float
    msgs = dual.messages if dual is not None else None
    theta = []
    for u in range(n):
        row = [conv(c) for c in inst.node_costs[u]]
        if any(is_forbidden(inst.node_costs[u][i]) for i in range(k)):
            raise ValueError("search tables require a finite instance")
        theta.append(row)
    adjacency: list[list[tuple[int, int, bool]]] = [[] for _ in range(n)]
    edge_mat, rmf, rms, emin = [], [], [], []
    for e, (u, v, w) in enumerate(inst.edges):
        wv = conv(w)
        eta_uv = [conv(x) for x in msgs[(u, v)]] if msgs is not None else [0] * k
        eta_vu = [conv(x) for x in msgs[(v, u)]] if msgs is not None else [0] * k
        for i in range(k):
            theta[u][i] += eta_uv[i]
            theta[v][i] += eta_vu[i]
        mat = [
            [(0 if i == j else wv) - eta_uv[i] - eta_vu[j] for j in range(k)]
            for i in range(k)
        ]
        edge_mat.append(mat)
        rmf.append([min(r) for r in mat])
        rms.append([min(mat[i][j] for i in range(k)) for j in range(k)])
        emin.append(min(min(r) for r in mat))
        adjacency[u].append((v, e, True))
        adjacency[v].append((u, e, False))
    node_min = [min(r) for r in theta]
    base = sum(node_min) + sum(emin) if n else 0
    return SearchTables(n, k, theta, node_min, adjacency, edge_mat, rmf, rms, emin, base)


class _State:
    """Assignment state with the incremental additive lower bound."""

    def __init__(self, tables: SearchTables):
        self.t = tables
        self.labels = [-1] * tables.num_nodes
        self.contrib = list(tables.edge_min)
        self.bound = tables.base

    def assign(self, u: int, i: int):
        t = self.t
        undo = []
        delta = t.theta[u][i] - t.node_min[u]
        for v, e, first in t.adjacency[u]:
            old = self.contrib[e]
            lv = self.labels[v]
            if lv >= 0:
                new = t.edge_mat[e][i][lv] if first else t.edge_mat[e][lv][i]
            else:
                new = t.row_min_first[e][i] if first else t.row_min_second[e][i]
            if new != old:
                delta += new - old
                self.contrib[e] = new
                undo.append((e, old))
        self.labels[u] = i
        self.bound += delta
        return undo, delta

    def unassign(self, u: int, undo, delta):
        self.labels[u] = -1
        self.bound -= delta
        for e, old in undo:
            self.contrib[e] = old

    def peek(self, u: int, i: int):
        """Bound after assigning u <- i, without mutating state."""
        t = self.t
        delta = t.theta[u][i] - t.node_min[u]
        for v, e, first in t.adjacency[u]:
            lv = self.labels[v]
            if lv >= 0:
                new = t.edge_mat[e][i][lv] if first else t.edge_mat[e][lv][i]
            else:
                new = t.row_min_first[e][i] if first else t.row_min_second[e][i]
            delta += new - self.contrib[e]
        return self.bound + delta


def minimize_labeling(
    tables: SearchTables,
    evaluate: Callable[[Sequence[int]], object],
    *,
    order: Sequence[int] | None = None,
    label_order: Sequence[Sequence[int]] | None = None,
    incumbent: Sequence[int] | None = None,
    node_cap: int | None = None,
):
    """Best labeling under the table objective; returns (labeling, value).

    ``evaluate`` recomputes the exact objective of a full labeling and is the
    authority for incumbent comparisons (the incremental bound only prunes).
    """
    t = tables
    n, k = t.num_nodes, t.num_labels
    order = list(order) if order is not None else list(range(n))
    state = _State(t)
    best_f = None
    best_val = None
    if incumbent is not None:
        best_f = list(incumbent)
        best_val = evaluate(best_f)
    expansions = 0

    stack = [(0, 0, None, None)]  # (depth, label position, undo, delta)
    while stack:
        depth, pos, undo, delta = stack.pop()
        if undo is not None:
            # Post-visit marker: undo the assignment made at this depth.
            state.unassign(order[depth], undo, delta)
            continue
        if depth == n:
            val = evaluate(state.labels)
            if best_val is None or val < best_val:
                best_val = val
                best_f = list(state.labels)
            continue
        u = order[depth]
        labels = label_order[u] if label_order is not None else range(k)
        labels = list(labels)
        if pos >= len(labels):
            continue
        stack.append((depth, pos + 1, None, None))
        lab = labels[pos]
        expansions += 1
        if node_cap is not None and expansions > node_cap:
            raise SearchCapExceeded("labeling search exceeded its node cap")
        nb = state.peek(u, lab)
        if best_val is not None and nb >= best_val:
            continue
        undo, delta = state.assign(u, lab)
        stack.append((depth, 0, undo, delta))
        stack.append((depth + 1, 0, None, None))
    return best_f, best_val, expansions


def first_within_budget(
    tables: SearchTables,
    evaluate: Callable[[Sequence[int]], object],
    budget,
    *,
    candidates: Sequence[Sequence[int]] | None = None,
    node_cap: int | None = None,
):
    """Lexicographically first labeling with exact objective <= budget, or None.

    Nodes are scanned in natural order with ascending labels, so the first
    hit is the lexicographic minimum of the budget's sublevel set.
    """
    t = tables
    n, k = t.num_nodes, t.num_labels
    state = _State(t)
    expansions = 0
    stack = [(0, 0, None, None)]
    while stack:
        depth, pos, undo, delta = stack.pop()
        if undo is not None:
            state.unassign(depth, undo, delta)
            continue
        if depth == n:
            if evaluate(state.labels) <= budget:
                return list(state.labels)
            continue
        labels = candidates[depth] if candidates is not None else range(k)
        labels = list(labels)
        if pos >= len(labels):
            continue
        stack.append((depth, pos + 1, None, None))
        lab = labels[pos]
        expansions += 1
        if node_cap is not None and expansions > node_cap:
            raise SearchCapExceeded("labeling search exceeded its node cap")
        if state.peek(depth, lab) > budget:
            continue
        undo, delta = state.assign(depth, lab)
        stack.append((depth, 0, undo, delta))
        stack.append((depth + 1, 0, None, None))
    return None


def max_hamming_within_budget(
    tables: SearchTables,
    evaluate: Callable[[Sequence[int]], object],
    reference: Sequence[int],
    budget,
    *,
    ham_cap: int | None = None,
    node_cap: int | None = None,
):
    """Labeling maximizing disagreements with ``reference`` subject to a budget.

    Returns (witness, hamming, capped).  Hamming 0 means only the reference
    labeling fits inside the budget.  The witness, when hamming ties occur, is
    the lexicographically smallest maximizer.  ``node_cap`` bounds expansions;
    hitting it returns the best witness found so far with capped=True.
    """
    t = tables
    n, k = t.num_nodes, t.num_labels
    cap_ham = n if ham_cap is None else min(ham_cap, n)
    state = _State(t)
    best_f = None
    best_ham = 0
    expansions = 0
    capped = False
    disagree = 0
    stack = [(0, 0, None, None, 0)]
    while stack:
        depth, pos, undo, delta, dis_flag = stack.pop()
        if undo is not None:
            state.unassign(depth, undo, delta)
            disagree -= dis_flag
            continue
        if depth == n:
            if disagree > best_ham and evaluate(state.labels) <= budget:
                best_ham = disagree
                best_f = list(state.labels)
                if best_ham >= cap_ham:
                    break
            continue
        if disagree + (n - depth) <= best_ham:
            continue
        labels = list(range(k))
        if pos >= len(labels):
            continue
        stack.append((depth, pos + 1, None, None, 0))
        lab = labels[pos]
        expansions += 1
        if node_cap is not None and expansions > node_cap:
            capped = True
            break
        if state.peek(depth, lab) > budget:
            continue
        undo, delta = state.assign(depth, lab)
        flag = 1 if lab != reference[depth] else 0
        disagree += flag
        stack.append((depth, 0, undo, delta, flag))
        stack.append((depth + 1, 0, None, None, 0))
    return best_f, best_ham, capped
