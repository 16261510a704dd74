"""Core data model: Potts instances, labelings, objectives, and perturbations.

An instance is an undirected graph with per-node label costs and nonnegative
edge weights; a labeling pays its node costs plus the weight of every edge
whose endpoints disagree.  Costs may be FORBIDDEN (infinite); solvers replace
those by a large finite constant on entry (see :func:`replace_forbidden`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

FORBIDDEN = math.inf
TAU = 1e-6

Number = int | float | Fraction
Labeling = tuple[int, ...]


class ModelError(ValueError):
    """Invalid instance data or an operation's precondition violated."""


def as_exact(value: Number) -> Number:
    """Exact rational image of a stored value; infinities pass through."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if math.isinf(value):
        return value
    return Fraction(value)


def is_forbidden(value: Number) -> bool:
    return isinstance(value, float) and math.isinf(value)


@dataclass(frozen=True)
class PottsInstance:
    """Immutable Potts model: graph, node costs, edge weights, label count.

    Edges are stored canonically as (min, max, weight), sorted.  Costs and
    weights may be int/float/Fraction; float caches are used for fast paths
    while exact values are retained for rational-mode solves.
    """

    num_nodes: int
    num_labels: int
    node_costs: tuple[tuple[Number, ...], ...]
    edges: tuple[tuple[int, int, Number], ...]

    def __post_init__(self):
        n, k = self.num_nodes, self.num_labels
        if n < 1 or k < 1:
            raise ModelError("instance needs at least one node and one label")
        costs = tuple(tuple(row) for row in self.node_costs)
        if len(costs) != n or any(len(row) != k for row in costs):
            raise ModelError("node_costs must be num_nodes rows of num_labels entries")
        for u, row in enumerate(costs):
            if all(is_forbidden(c) for c in row):
                raise ModelError(f"node {u} has no permitted label")
            for c in row:
                if not is_forbidden(c) and not math.isfinite(float(c)):
                    raise ModelError(f"node {u} has a non-finite cost that is not FORBIDDEN")
        seen = set()
        norm = []
        for u, v, w in self.edges:
            if u == v:
                raise ModelError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ModelError(f"edge ({u},{v}) out of range")
            a, b = (u, v) if u < v else (v, u)
            if (a, b) in seen:
                raise ModelError(f"duplicate edge ({a},{b})")
            if float(w) < 0 or not math.isfinite(float(w)):
                raise ModelError(f"edge ({a},{b}) must have finite nonnegative weight")
            seen.add((a, b))
            norm.append((a, b, w))
        norm.sort(key=lambda e: (e[0], e[1]))
        object.__setattr__(self, "node_costs", costs)
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def costs_array(self) -> np.ndarray:
        return np.array([[float(c) for c in row] for row in self.node_costs])

    @cached_property
    def edge_endpoints(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array([(u, v) for u, v, _ in self.edges], dtype=np.int64)

    @cached_property
    def weights_array(self) -> np.ndarray:
        return np.array([float(w) for _, _, w in self.edges])

    @cached_property
    def edge_ids(self) -> dict[tuple[int, int], int]:
        return {(u, v): e for e, (u, v, _) in enumerate(self.edges)}

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per node, the (neighbor, edge id) pairs, neighbor-sorted."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.num_nodes)]
        for e, (u, v, _) in enumerate(self.edges):
            adj[u].append((v, e))
            adj[v].append((u, e))
        return tuple(tuple(sorted(a)) for a in adj)

    def neighbors(self, u: int) -> tuple[int, ...]:
        return tuple(v for v, _ in self.adjacency[u])

    @cached_property
    def has_forbidden(self) -> bool:
        return any(is_forbidden(c) for row in self.node_costs for c in row)

    @cached_property
    def magnitude(self) -> float:
        """Largest finite |cost| or |weight|; scales tolerances and BIG."""
        best = 0.0
        for row in self.node_costs:
            for c in row:
                if not is_forbidden(c):
                    best = max(best, abs(float(c)))
        for _, _, w in self.edges:
            best = max(best, abs(float(w)))
        return best

    def default_big(self) -> float:
        return max(1e6, 1e6 * self.magnitude)

    def with_weights(self, weights: Sequence[Number]) -> "PottsInstance":
        if len(weights) != self.num_edges:
            raise ModelError("weight vector length mismatch")
        edges = tuple((u, v, w) for (u, v, _), w in zip(self.edges, weights))
        return replace(self, edges=edges)

    def with_costs(self, costs: Sequence[Sequence[Number]]) -> "PottsInstance":
        return replace(self, node_costs=tuple(tuple(row) for row in costs))


def validate_labeling(inst: PottsInstance, f: Sequence[int]) -> Labeling:
    f = tuple(int(x) for x in f)
    if len(f) != inst.num_nodes:
        raise ModelError("labeling length does not match node count")
    if any(not 0 <= x < inst.num_labels for x in f):
        raise ModelError("labeling contains an out-of-range label")
    return f


def objective(inst: PottsInstance, f: Sequence[int]) -> float:
    """Total cost of a labeling: node costs plus weights of cut edges."""
    f = validate_labeling(inst, f)
    arr = np.asarray(f)
    node_part = inst.costs_array[np.arange(inst.num_nodes), arr].sum()
    if inst.num_edges:
        uu, vv = inst.edge_endpoints[:, 0], inst.edge_endpoints[:, 1]
        cut = arr[uu] != arr[vv]
        return float(node_part + inst.weights_array[cut].sum())
    return float(node_part)


def objective_exact(inst: PottsInstance, f: Sequence[int]) -> Number:
    """Objective in exact arithmetic (FORBIDDEN choices yield infinity)."""
    f = validate_labeling(inst, f)
    total: Number = Fraction(0)
    for u, lab in enumerate(f):
        c = inst.node_costs[u][lab]
        if is_forbidden(c):
            return FORBIDDEN
        total += as_exact(c)
    for u, v, w in inst.edges:
        if f[u] != f[v]:
            total += as_exact(w)
    return total


def replace_forbidden(inst: PottsInstance, big: float | None = None) -> PottsInstance:
    """Finite copy for LP/ILP entry: FORBIDDEN costs become the constant BIG."""
    if not inst.has_forbidden:
        return inst
    if big is None:
        big = inst.default_big()
    if not big > 0 or not math.isfinite(big):
        raise ModelError("BIG must be a positive finite constant")
    costs = tuple(
        tuple(big if is_forbidden(c) else c for c in row) for row in inst.node_costs
    )
    return inst.with_costs(costs)


@dataclass(frozen=True)
class WeightPerturbation:
    """Per-edge multiplicative weight factors within [1/beta, gamma]."""

    factors: tuple[Number, ...]
    beta: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.beta < 1 or self.gamma < 1:
            raise ModelError("perturbation bounds require beta >= 1 and gamma >= 1")
        lo = 0.0 if math.isinf(self.beta) else 1.0 / self.beta
        slack = 1e-12 * max(1.0, self.gamma if math.isfinite(self.gamma) else 1.0)
        for fct in self.factors:
            v = float(fct)
            if v <= 0 or v < lo - slack or v > self.gamma + slack:
                raise ModelError(f"factor {v} outside [1/beta, gamma]")


def apply_weight_perturbation(inst: PottsInstance, p: WeightPerturbation) -> PottsInstance:
    if len(p.factors) != inst.num_edges:
        raise ModelError("perturbation factor count does not match edge count")
    new_w = []
    for (u, v, w), fct in zip(inst.edges, p.factors):
        if isinstance(w, Fraction) or isinstance(fct, Fraction):
            new_w.append(as_exact(w) * as_exact(fct))
        else:
            new_w.append(w * fct)
    return inst.with_weights(new_w)


def boundary(inst: PottsInstance, block: Iterable[int]) -> tuple[frozenset[int], tuple[tuple[int, int], ...]]:
    """Boundary nodes of a block and the edges leaving it.

    Returns (border, crossing) where border is the set of block nodes with a
    neighbor outside the block and crossing lists the (u, v) canonical pairs
    with exactly one endpoint inside.
    """
    block = frozenset(block)
    if any(not 0 <= u < inst.num_nodes for u in block):
        raise ModelError("block contains out-of-range nodes")
    border = set()
    crossing = []
    for u, v, _ in inst.edges:
        inside_u, inside_v = u in block, v in block
        if inside_u != inside_v:
            crossing.append((u, v))
            border.add(u if inside_u else v)
    return frozenset(border), tuple(crossing)


@dataclass(frozen=True)
class CostPerturbation:
    """Additive node-cost shifts, supported only on a block's boundary.

    ``shifts[u][i]`` perturbs node u's cost for label i; every shifted node
    must lie on the boundary of ``block`` and obey |shift| <= |bound|.
    """

    block: frozenset[int]
    shifts: Mapping[int, tuple[Number, ...]]
    bounds: Mapping[int, tuple[Number, ...]]

    def __post_init__(self):
        object.__setattr__(self, "block", frozenset(self.block))
        object.__setattr__(
            self, "shifts", {int(u): tuple(row) for u, row in self.shifts.items()}
        )
        object.__setattr__(
            self, "bounds", {int(u): tuple(row) for u, row in self.bounds.items()}
        )
        for u, row in self.shifts.items():
            bound = self.bounds.get(u)
            if bound is None or len(bound) != len(row):
                raise ModelError(f"no matching bound row for shifted node {u}")
            for s, b in zip(row, bound):
                if abs(float(s)) > abs(float(b)) + 1e-12:
                    raise ModelError(f"shift at node {u} exceeds its bound")


def apply_cost_perturbation(inst: PottsInstance, cp: CostPerturbation) -> PottsInstance:
    border, _ = boundary(inst, cp.block)
    off = set(cp.shifts) - border
    if off:
        raise ModelError(f"cost shifts keyed off the block boundary: {sorted(off)}")
    costs = [list(row) for row in inst.node_costs]
    for u, row in cp.shifts.items():
        if len(row) != inst.num_labels:
            raise ModelError(f"shift row at node {u} has wrong label count")
        for i, s in enumerate(row):
            c = costs[u][i]
            if is_forbidden(c):
                continue
            if isinstance(c, Fraction) or isinstance(s, Fraction):
                costs[u][i] = as_exact(c) + as_exact(s)
            else:
                costs[u][i] = c + s
    return inst.with_costs(costs)


@dataclass(frozen=True)
class BoundaryDual:
    """Dual variables on directed boundary pairs of a block decomposition.

    ``messages[(u, v)]`` is the length-k vector added into node u's costs for
    the crossing edge {u, v}; both directions of every crossing edge must be
    present.
    """

    boundary_edges: frozenset[tuple[int, int]]
    messages: Mapping[tuple[int, int], tuple[Number, ...]]

    def __post_init__(self):
        object.__setattr__(self, "boundary_edges", frozenset(self.boundary_edges))
        msgs = {
            (int(u), int(v)): tuple(vec) for (u, v), vec in self.messages.items()
        }
        object.__setattr__(self, "messages", msgs)
        want = set()
        for u, v in self.boundary_edges:
            want.add((u, v))
            want.add((v, u))
        if set(msgs) != want:
            raise ModelError("boundary dual keys must cover exactly the directed crossing pairs")
        sizes = {len(vec) for vec in msgs.values()}
        if msgs and len(sizes) != 1:
            raise ModelError("boundary dual vectors must share one label count")

    def value(self, u: int, v: int, i: int) -> float:
        return float(self.messages[(u, v)][i])


@dataclass(frozen=True)
class PairwiseDual:
    """Dual variables on all directed edge pairs: messages[(u, v)][i]."""

    messages: Mapping[tuple[int, int], tuple[Number, ...]]

    def __post_init__(self):
        msgs = {
            (int(u), int(v)): tuple(vec) for (u, v), vec in self.messages.items()
        }
        object.__setattr__(self, "messages", msgs)

    def value(self, u: int, v: int, i: int) -> float:
        return float(self.messages[(u, v)][i])


def validate_pairwise_dual(inst: PottsInstance, dual: PairwiseDual) -> None:
    want = set()
    for u, v, _ in inst.edges:
        want.add((u, v))
        want.add((v, u))
    if set(dual.messages) != want:
        raise ModelError("pairwise dual keys must cover exactly the directed edge pairs")
    for vec in dual.messages.values():
        if len(vec) != inst.num_labels:
            raise ModelError("pairwise dual vector has wrong label count")


class BlockStatus(str, Enum):
    UNTESTED = "untested"
    STABLE = "stable"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of a stability check against an adversarially perturbed instance.

    A witness is a labeling different from the reference with perturbed
    objective no worse; its absence (maximum disagreement 0) certifies
    stability.  Block-level checks additionally report whether the reference
    agreed with the restricted instance's own optimum.
    """

    stable: bool
    witness: Labeling | None
    hamming: int
    margin: Number | None
    restricted_optimum: Labeling | None = None
    optimum_matches: bool = True
    capped: bool = False

    def __post_init__(self):
        if self.stable and self.witness is not None:
            raise ModelError("a stable verdict cannot carry a witness")
        if self.witness is not None and self.hamming < 1:
            raise ModelError("a witness must disagree somewhere")


def ilp_tolerance(inst: PottsInstance) -> float:
    """Default slack for the perturbed-objective budget in float mode."""
    return 1e-9 * max(1.0, inst.magnitude)


@dataclass(frozen=True)
class BlockDecomposition:
    """Disjoint node blocks covering all nodes, with per-block status.

    ``boundary_index`` marks the catch-all block holding cut-edge nodes when
    the decomposition was produced by the block finder; it is None for
    ad-hoc partitions.
    """

    num_nodes: int
    blocks: tuple[frozenset[int], ...]
    boundary_index: int | None = None
    statuses: tuple[BlockStatus, ...] = field(default=())

    def __post_init__(self):
        blocks = tuple(frozenset(b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not self.statuses:
            object.__setattr__(self, "statuses", tuple(BlockStatus.UNTESTED for _ in blocks))
        if len(self.statuses) != len(blocks):
            raise ModelError("one status per block required")
        seen: set[int] = set()
        for b in blocks:
            if b & seen:
                raise ModelError("blocks must be disjoint")
            seen |= b
        if seen != set(range(self.num_nodes)):
            raise ModelError("blocks must partition the node set")
        if self.boundary_index is not None and not 0 <= self.boundary_index < len(blocks):
            raise ModelError("boundary block index out of range")

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    def block_of(self) -> np.ndarray:
        out = np.empty(self.num_nodes, dtype=np.int64)
        for b, nodes in enumerate(self.blocks):
            for u in nodes:
                out[u] = b
        return out


def crossing_edges(inst: PottsInstance, decomp: BlockDecomposition) -> tuple[tuple[int, int], ...]:
    """Canonical (u, v) pairs whose endpoints lie in different blocks."""
    if decomp.num_nodes != inst.num_nodes:
        raise ModelError("decomposition node count does not match instance")
    owner = decomp.block_of()
    return tuple((u, v) for u, v, _ in inst.edges if owner[u] != owner[v])


def _message_map(delta) -> Mapping[tuple[int, int], Sequence[Number]]:
    if delta is None:
        return {}
    if isinstance(delta, Mapping):
        return delta
    return delta.messages


def restricted_instance(inst: PottsInstance, block: Iterable[int], delta=None) -> PottsInstance:
    """Sub-instance on a block with boundary costs shifted by dual messages.

    Nodes are renumbered by rank in sorted(block).  ``delta`` must be a
    BoundaryDual (or mapping) keyed on exactly the directed crossing pairs of
    the block; interior costs are copied unchanged.
    """
    block = sorted(set(int(u) for u in block))
    if not block:
        raise ModelError("block must be nonempty")
    inside = frozenset(block)
    _, crossing = boundary(inst, inside)
    msgs = _message_map(delta)
    want = set()
    for u, v in crossing:
        want.add((u, v))
        want.add((v, u))
    if set(msgs) != want:
        missing = want - set(msgs)
        extra = set(msgs) - want
        raise ModelError(
            f"boundary dual keys mismatch (missing {sorted(missing)}, off-boundary {sorted(extra)})"
        )
    local = {u: r for r, u in enumerate(block)}
    costs = []
    for u in block:
        row = list(inst.node_costs[u])
        for (a, b), vec in msgs.items():
            if a == u and b not in inside:
                if len(vec) != inst.num_labels:
                    raise ModelError("boundary dual vector has wrong label count")
                for i in range(inst.num_labels):
                    if is_forbidden(row[i]):
                        continue
                    if isinstance(row[i], Fraction) or isinstance(vec[i], Fraction):
                        row[i] = as_exact(row[i]) + as_exact(vec[i])
                    else:
                        row[i] = row[i] + float(vec[i])
        costs.append(tuple(row))
    edges = tuple(
        (local[u], local[v], w) for u, v, w in inst.edges if u in inside and v in inside
    )
    return PottsInstance(len(block), inst.num_labels, tuple(costs), edges)


def _format_number(x: Number) -> str:
    if is_forbidden(x):
        return "inf"
    return "%.17g" % float(x)


def _parse_number(token: str, exact: bool) -> Number:
    low = token.lower()
    if low in ("inf", "+inf", "infinity"):
        return FORBIDDEN
    if exact:
        return Fraction(token)
    return float(token)


def dumps_instance(inst: PottsInstance) -> str:
    """Canonical whitespace-separated text form (17 significant digits)."""
    lines = [f"POTTS {inst.num_nodes} {inst.num_labels} {inst.num_edges}"]
    for row in inst.node_costs:
        lines.append(" ".join(_format_number(c) for c in row))
    for u, v, w in inst.edges:
        lines.append(f"{u} {v} {_format_number(w)}")
    return "\n".join(lines) + "\n"


def loads_instance(text: str, exact: bool = False) -> PottsInstance:
    tokens = text.split()
    if len(tokens) < 4 or tokens[0] != "POTTS":
        raise ModelError("instance text must start with a POTTS header")
    try:
        n, k, m = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise ModelError("malformed POTTS header") from exc
    need = 4 + n * k + 3 * m
    if len(tokens) != need:
        raise ModelError(f"expected {need} tokens, found {len(tokens)}")
    pos = 4
    costs = []
    for _ in range(n):
        costs.append(tuple(_parse_number(t, exact) for t in tokens[pos : pos + k]))
        pos += k
    edges = []
    for _ in range(m):
        u, v = int(tokens[pos]), int(tokens[pos + 1])
        w = _parse_number(tokens[pos + 2], exact)
        if is_forbidden(w):
            raise ModelError("edge weights must be finite")
        edges.append((u, v, w))
        pos += 3
    return PottsInstance(n, k, tuple(costs), tuple(edges))


def write_instance(inst: PottsInstance, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_instance(inst))


def read_instance(path, exact: bool = False) -> PottsInstance:
    with open(path) as fh:
        return loads_instance(fh.read(), exact=exact)
