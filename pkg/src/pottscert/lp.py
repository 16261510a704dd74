"""Pairwise LP relaxation over the local polytope, exact MAP, persistency.

The LP minimizes node costs against per-node label marginals plus Potts edge
costs against edge marginals, subject to normalization and both edge
marginalization families.  Duals of the marginalization rows convert directly
into the pairwise dual's messages, so strong duality is a checkable identity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from . import simplex
from .model import (
    TAU,
    Labeling,
    ModelError,
    PairwiseDual,
    PottsInstance,
    as_exact,
    objective,
    objective_exact,
    replace_forbidden,
    validate_labeling,
)
from .search import build_tables, first_within_budget, minimize_labeling

EXHAUSTIVE_LIMIT = 10**6
RATIONAL_NODE_LIMIT = 64
_SIMPLEX_MAX_ROWS = 1200
_SIMPLEX_MAX_CELLS = 3_000_000


@dataclass(frozen=True)
class PrimalSolution:
    """LP marginals: node_marginals[u, i], edge_marginals[(u, v)][i, j]."""

    node_marginals: np.ndarray
    edge_marginals: dict
    objective: object

    def argmax_labeling(self) -> Labeling:
        return tuple(int(np.argmax([float(x) for x in row])) for row in self.node_marginals)

    def integral_labeling(self, tol: float = TAU) -> Labeling | None:
        """The labeling carried by the marginals if they are integral."""
        labs = []
        for row in self.node_marginals:
            vals = [float(x) for x in row]
            i = int(np.argmax(vals))
            if vals[i] < 1.0 - tol:
                return None
            labs.append(i)
        return tuple(labs)


class PersistencyFlag(Enum):
    INTEGRAL_MATCH = "integral_match"
    INTEGRAL_MISMATCH = "integral_mismatch"
    FRACTIONAL = "fractional"


@dataclass(frozen=True)
class PersistencyMask:
    flags: tuple[PersistencyFlag, ...]

    @property
    def fraction(self) -> float:
        if not self.flags:
            return 0.0
        hits = sum(1 for f in self.flags if f is PersistencyFlag.INTEGRAL_MATCH)
        return hits / len(self.flags)

    @property
    def fractional_nodes(self) -> tuple[int, ...]:
        return tuple(u for u, f in enumerate(self.flags) if f is PersistencyFlag.FRACTIONAL)


def persistency_mask(x: PrimalSolution, g: Labeling, tol: float = TAU) -> PersistencyMask:
    """Classify each node of an LP solution against the exact optimum."""
    if len(x.node_marginals) != len(g):
        raise ModelError("solution and labeling sizes differ")
    flags = []
    for u, row in enumerate(x.node_marginals):
        vals = [float(v) for v in row]
        i = int(np.argmax(vals))
        if vals[i] >= 1.0 - tol:
            flags.append(
                PersistencyFlag.INTEGRAL_MATCH
                if i == g[u]
                else PersistencyFlag.INTEGRAL_MISMATCH
            )
        else:
            flags.append(PersistencyFlag.FRACTIONAL)
    return PersistencyMask(tuple(flags))


class PolytopeSystem:
    """Variable/constraint layout of the local polytope for one instance.

    Rows: one normalization row per node, then for each edge the
    marginalization family onto its first endpoint (per label) followed by
    the family onto its second endpoint.  ``allowed`` optionally restricts
    each node to a subset of labels (used by branch-and-bound fixings).
    """

    def __init__(self, inst: PottsInstance, allowed=None, big: float | None = None):
        self.original = inst
        self.inst = replace_forbidden(inst, big)
        n, k = inst.num_nodes, inst.num_labels
        if allowed is None:
            allowed = [tuple(range(k))] * n
        else:
            allowed = [tuple(sorted(set(a))) for a in allowed]
            if len(allowed) != n or any(not a for a in allowed):
                raise ModelError("allowed label lists must be nonempty per node")
        self.allowed = allowed
        self.node_col: dict[tuple[int, int], int] = {}
        cols = 0
        for u in range(n):
            for i in allowed[u]:
                self.node_col[(u, i)] = cols
                cols += 1
        self.edge_col: dict[tuple[int, int, int], int] = {}
        for e, (u, v, _) in enumerate(self.inst.edges):
            for i in allowed[u]:
                for j in allowed[v]:
                    self.edge_col[(e, i, j)] = cols
                    cols += 1
        self.num_cols = cols
        # rows: ("norm", u) or ("marg", e, end, label)
        self.rows: list[tuple] = [("norm", u) for u in range(n)]
        for e, (u, v, _) in enumerate(self.inst.edges):
            for i in allowed[u]:
                self.rows.append(("marg", e, 0, i))
            for j in allowed[v]:
                self.rows.append(("marg", e, 1, j))
        self.num_rows = len(self.rows)

    def _row_entries(self, row):
        if row[0] == "norm":
            u = row[1]
            return [(self.node_col[(u, i)], 1) for i in self.allowed[u]], 1
        _, e, end, lab = row
        u, v, _ = self.inst.edges[e]
        entries = [(self.node_col[((u, v)[end], lab)], 1)]
        if end == 0:
            entries += [(self.edge_col[(e, lab, j)], -1) for j in self.allowed[v]]
        else:
            entries += [(self.edge_col[(e, i, lab)], -1) for i in self.allowed[u]]
        return entries, 0

    def dense_float(self):
        a = np.zeros((self.num_rows, self.num_cols))
        b = np.zeros(self.num_rows)
        for r, row in enumerate(self.rows):
            entries, rhs = self._row_entries(row)
            for c, val in entries:
                a[r, c] = val
            b[r] = rhs
        return a, b

    def sparse(self):
        from scipy.sparse import csr_matrix

        data, ri, ci = [], [], []
        b = np.zeros(self.num_rows)
        for r, row in enumerate(self.rows):
            entries, rhs = self._row_entries(row)
            for c, val in entries:
                data.append(float(val))
                ri.append(r)
                ci.append(c)
            b[r] = rhs
        return csr_matrix((data, (ri, ci)), shape=(self.num_rows, self.num_cols)), b

    def exact_rows(self):
        zero, one = Fraction(0), Fraction(1)
        rows = []
        rhs = []
        for row in self.rows:
            entries, r = self._row_entries(row)
            vec = [zero] * self.num_cols
            for c, val in entries:
                vec[c] = one if val > 0 else -one
            rows.append(vec)
            rhs.append(Fraction(r))
        return rows, rhs

    def lp_cost(self, exact: bool = False):
        """Objective coefficients of the relaxation on this system's instance."""
        conv = as_exact if exact else float
        zero = Fraction(0) if exact else 0.0
        cost = [zero] * self.num_cols
        for (u, i), c in self.node_col.items():
            cost[c] = conv(self.inst.node_costs[u][i])
        for (e, i, j), c in self.edge_col.items():
            cost[c] = conv(self.inst.edges[e][2]) if i != j else zero
        return cost if exact else np.array(cost)

    def agreement_cost(self, g: Labeling, exact: bool = False):
        """Coefficients of sum_u x_u(g(u)); minimizing it maximizes Hamming."""
        zero = Fraction(0) if exact else 0.0
        one = Fraction(1) if exact else 1.0
        cost = [zero] * self.num_cols
        for u, lab in enumerate(g):
            col = self.node_col.get((u, lab))
            if col is not None:
                cost[col] = one
        return cost if exact else np.array(cost)

    def extract_marginals(self, x) -> PrimalSolution:
        n, k = self.original.num_nodes, self.original.num_labels
        exact = any(isinstance(v, Fraction) for v in x)
        if exact:
            node = np.empty((n, k), dtype=object)
            node[:] = Fraction(0)
        else:
            node = np.zeros((n, k))
        for (u, i), c in self.node_col.items():
            node[u, i] = x[c]
        edge = {}
        for e, (u, v, _) in enumerate(self.inst.edges):
            if exact:
                mat = np.empty((k, k), dtype=object)
                mat[:] = Fraction(0)
            else:
                mat = np.zeros((k, k))
            for i in self.allowed[u]:
                for j in self.allowed[v]:
                    mat[i, j] = x[self.edge_col[(e, i, j)]]
            edge[(u, v)] = mat
        return PrimalSolution(node, edge, None)

    def extract_dual(self, eq_duals) -> PairwiseDual:
        k = self.original.num_labels
        exact = any(isinstance(v, Fraction) for v in eq_duals)
        zero = Fraction(0) if exact else 0.0
        msgs = {}
        for u, v, _ in self.inst.edges:
            msgs[(u, v)] = [zero] * k
            msgs[(v, u)] = [zero] * k
        for r, row in enumerate(self.rows):
            if row[0] != "marg":
                continue
            _, e, end, lab = row
            u, v, _ = self.inst.edges[e]
            a, b = (u, v) if end == 0 else (v, u)
            msgs[(a, b)][lab] = -eq_duals[r]
        return PairwiseDual({key: tuple(vec) for key, vec in msgs.items()})


def _choose_engine(engine: str, rational: bool, rows: int, cols: int) -> str:
    if rational:
        return "exact"
    if engine in ("simplex", "highs"):
        return engine
    if engine != "auto":
        raise ModelError(f"unknown LP engine {engine!r}")
    if rows <= _SIMPLEX_MAX_ROWS and rows * cols <= _SIMPLEX_MAX_CELLS:
        return "simplex"
    return "highs"


def _solve_highs(system: PolytopeSystem, cost, budget_row=None):
    from scipy.optimize import linprog

    a_eq, b_eq = system.sparse()
    a_ub = b_ub = None
    if budget_row is not None:
        from scipy.sparse import csr_matrix

        coeffs, rhs = budget_row
        a_ub = csr_matrix(np.asarray(coeffs, dtype=float).reshape(1, -1))
        b_ub = np.array([float(rhs)])
    res = linprog(
        np.asarray(cost, dtype=float),
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs-ds",
    )
    if not res.success:
        raise simplex.NumericalError(f"HiGHS failed: {res.message}")
    duals = list(res.eqlin.marginals) if res.eqlin is not None else None
    if duals is None:
        raise simplex.NumericalError("HiGHS returned no equality duals")
    return list(res.x), float(res.fun), duals


def solve_system(system: PolytopeSystem, cost, *, engine="auto", rational=False,
                 budget_row=None):
    """Minimize ``cost`` over the system; returns (x, objective, eq_duals)."""
    chosen = _choose_engine(engine, rational, system.num_rows, system.num_cols)
    if chosen == "exact":
        rows, rhs = system.exact_rows()
        a_ub, b_ub = [], []
        if budget_row is not None:
            a_ub = [[as_exact(v) for v in budget_row[0]]]
            b_ub = [as_exact(budget_row[1])]
        res = simplex.solve_linear_program(cost, rows, rhs, a_ub, b_ub, rational=True)
        return res.x, res.objective, res.eq_duals
    if chosen == "simplex":
        a_eq, b_eq = system.dense_float()
        a_ub = [np.asarray(budget_row[0], dtype=float)] if budget_row is not None else []
        b_ub = [float(budget_row[1])] if budget_row is not None else []
        try:
            res = simplex.solve_linear_program(
                np.asarray(cost, dtype=float), a_eq, b_eq, a_ub, b_ub
            )
            return list(res.x), float(res.objective), [float(y) for y in res.eq_duals]
        except simplex.NumericalError:
            if engine == "simplex":
                raise
    return _solve_highs(system, cost, budget_row)


def improve_dual(inst: PottsInstance, dual: PairwiseDual, *, sweeps: int = 500,
                 damping: float = 0.5, tol: float | None = None) -> PairwiseDual:
    """Rebalance an optimal dual by coordinate descent (max-sum diffusion).

    Each pass averages every node's reparametrized costs against the adjacent
    edge minima, which never lowers the dual value; started from an optimum
    it stays optimal while spreading slack evenly.  Balanced duals make the
    restricted instances used for block certification far better behaved than
    raw simplex multipliers.  FORBIDDEN labels are left untouched.
    """
    n, k = inst.num_nodes, inst.num_labels
    if tol is None:
        tol = 1e-10 * max(1.0, inst.magnitude)
    eta = {key: np.array([float(x) for x in vec]) for key, vec in dual.messages.items()}
    # Push messages on FORBIDDEN labels far down first.  Their node costs are
    # infinite either way, and raising the corresponding edge rows keeps them
    # out of every edge minimum, which the balancing sweeps below rely on
    # (weak duality caps the value, so this can only tighten the dual).
    forbid = ~np.isfinite(inst.costs_array)
    if forbid.any():
        low = -10.0 * (
            1.0 + inst.magnitude + max(float(np.abs(v).max()) for v in eta.values())
        )
        for (a, _), vec in eta.items():
            vec[forbid[a]] = low
    theta = inst.costs_array.copy()
    for (a, _), vec in eta.items():
        theta[a] += vec
    eye = np.eye(k)
    mats = []
    for u, v, w in inst.edges:
        mats.append(float(w) * (1.0 - eye) - eta[(u, v)][:, None] - eta[(v, u)][None, :])
    for _ in range(sweeps):
        shift_max = 0.0
        for e, (u, v, _) in enumerate(inst.edges):
            mat = mats[e]
            for node, axis, key in ((u, 1, (u, v)), (v, 0, (v, u))):
                finite = np.isfinite(theta[node])
                t = np.where(finite, (mat.min(axis=axis) - theta[node]) * damping, 0.0)
                theta[node] += t
                mat -= t[:, None] if axis == 1 else t[None, :]
                eta[key] += t
                shift_max = max(shift_max, float(np.abs(t).max(initial=0.0)))
        if shift_max < tol:
            break
    return PairwiseDual({key: tuple(float(x) for x in vec) for key, vec in eta.items()})


def solve_lp(inst: PottsInstance, *, rational: bool = False, engine: str = "auto",
             big: float | None = None, improve: bool | None = None
             ) -> tuple[PrimalSolution, PairwiseDual]:
    """Optimal marginals and a matching pairwise dual for the relaxation.

    The returned dual satisfies strong duality against the returned primal,
    which downstream certification rechecks before trusting restrictions.
    By default the float-mode dual is rebalanced by :func:`improve_dual`;
    rational mode returns the raw exact multipliers.
    """
    if rational and inst.num_nodes > RATIONAL_NODE_LIMIT:
        raise ModelError(f"rational mode supports at most {RATIONAL_NODE_LIMIT} nodes")
    system = PolytopeSystem(inst, big=big)
    cost = system.lp_cost(exact=rational)
    x, obj, eq_duals = solve_system(system, cost, engine=engine, rational=rational)
    primal = system.extract_marginals(x)
    primal = PrimalSolution(primal.node_marginals, primal.edge_marginals, obj)
    dual = system.extract_dual(eq_duals)
    if improve is None:
        improve = not rational
    if improve and inst.num_edges:
        from .duals import pairwise_dual_value

        candidate = improve_dual(inst, dual)
        gap = abs(pairwise_dual_value(inst, candidate) - float(obj))
        if gap <= 1e-7 * max(1.0, abs(float(obj))):
            dual = candidate
    return primal, dual


def _enumerate_lexicographic(inst: PottsInstance, batch: int = 1 << 17):
    """Yield (offset, labelings, objectives) over all labelings in lex order."""
    n, k = inst.num_nodes, inst.num_labels
    total = k**n
    powers = np.array([k ** (n - 1 - i) for i in range(n)], dtype=np.int64)
    costs = inst.costs_array
    ends = inst.edge_endpoints
    weights = inst.weights_array
    cols = np.arange(n)
    for start in range(0, total, batch):
        stop = min(start + batch, total)
        idx = np.arange(start, stop, dtype=np.int64)
        labs = (idx[:, None] // powers[None, :]) % k
        vals = costs[cols[None, :], labs].sum(axis=1)
        if len(ends):
            cut = labs[:, ends[:, 0]] != labs[:, ends[:, 1]]
            vals = vals + cut @ weights
        yield start, labs, vals


def _map_exhaustive(inst: PottsInstance, rational: bool) -> Labeling:
    best_val = math.inf
    best = None
    exact_best = None
    exact_f = None
    guard = 1e-7 * max(1.0, inst.magnitude) if rational else 0.0
    for _, labs, vals in _enumerate_lexicographic(inst):
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val = float(vals[j])
            best = tuple(int(x) for x in labs[j])
        if rational:
            # The float pass demarcates a provable superset of the exact
            # optima (summation error is far below the guard); re-score it
            # exactly.  Enumeration order makes the first hit lex-smallest.
            for h in np.flatnonzero(vals <= best_val + guard):
                f = tuple(int(x) for x in labs[h])
                val = objective_exact(inst, f)
                if exact_best is None or val < exact_best:
                    exact_best, exact_f = val, f
    return exact_f if rational else best


def solve_map(inst: PottsInstance, *, rational: bool = False, engine: str = "auto",
              big: float | None = None, tol: float = TAU,
              exhaustive_limit: int = EXHAUSTIVE_LIMIT,
              node_cap: int | None = None) -> Labeling:
    """Exact minimum-cost labeling; ties break to the lexicographic smallest.

    Small instances are enumerated outright; otherwise branch-and-bound runs
    on bounds derived from the root LP's dual reparametrization, and a final
    lexicographic sweep pins the tie-break.
    """
    n, k = inst.num_nodes, inst.num_labels
    if k**n <= exhaustive_limit:
        return _map_exhaustive(inst, rational)
    finite = replace_forbidden(inst, big)
    primal, dual = solve_lp(inst, rational=rational, engine=engine, big=big)
    tables = build_tables(finite, dual, exact=rational)
    if rational:
        evaluate = lambda f: objective_exact(finite, f)  # noqa: E731
    else:
        evaluate = lambda f: objective(finite, f)  # noqa: E731
    # A near-exactly integral vertex is already optimal; the loose user
    # tolerance is not safe for skipping the search.
    seed = primal.integral_labeling(1e-9)
    if seed is not None:
        best_val = evaluate(seed)
    else:
        frac = np.array(
            [1.0 - max(float(v) for v in row) for row in primal.node_marginals]
        )
        order = list(np.argsort(-frac, kind="stable"))
        _, best_val, _ = minimize_labeling(
            tables, evaluate, order=order,
            incumbent=primal.argmax_labeling(), node_cap=node_cap,
        )
    lex = first_within_budget(tables, evaluate, best_val, node_cap=node_cap)
    return tuple(lex)


def dumps_solution(primal: PrimalSolution) -> str:
    """Text dump: x/mu variable lines plus the objective."""
    lines = []
    for u, row in enumerate(primal.node_marginals):
        for i, val in enumerate(row):
            lines.append(f"x {u} {i} {'%.17g' % float(val)}")
    for (u, v) in sorted(primal.edge_marginals):
        mat = primal.edge_marginals[(u, v)]
        for i in range(len(mat)):
            for j in range(len(mat[i])):
                lines.append(f"mu {u} {v} {i} {j} {'%.17g' % float(mat[i][j])}")
    lines.append(f"objective {'%.17g' % float(primal.objective)}")
    return "\n".join(lines) + "\n"


def loads_solution(text: str) -> PrimalSolution:
    node_vals: dict[tuple[int, int], float] = {}
    edge_vals: dict[tuple[int, int, int, int], float] = {}
    objective = None
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "x":
            node_vals[(int(parts[1]), int(parts[2]))] = float(parts[3])
        elif parts[0] == "mu":
            edge_vals[(int(parts[1]), int(parts[2]), int(parts[3]), int(parts[4]))] = float(parts[5])
        elif parts[0] == "objective":
            objective = float(parts[1])
    if not node_vals or objective is None:
        raise ModelError("solution dump is missing variables or the objective")
    n = max(u for u, _ in node_vals) + 1
    k = max(i for _, i in node_vals) + 1
    node = np.zeros((n, k))
    for (u, i), val in node_vals.items():
        node[u, i] = val
    edges: dict[tuple[int, int], np.ndarray] = {}
    for (u, v, i, j), val in edge_vals.items():
        edges.setdefault((u, v), np.zeros((k, k)))[i, j] = val
    return PrimalSolution(node, edges, objective)
