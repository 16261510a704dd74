"""Independent brute-force verifiers for the solvers and test suites.

Everything here recomputes results from first principles with no shared
pruning or search logic, so agreement with the main code paths is evidence
rather than tautology.  Enumeration refuses instances beyond 10^6 labelings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    TAU,
    Labeling,
    ModelError,
    PairwiseDual,
    PottsInstance,
    StabilityVerdict,
    ilp_tolerance,
    is_forbidden,
    objective_exact,
    validate_labeling,
)

ENUMERATION_LIMIT = 10**6


class TooLargeError(ModelError):
    pass


def _check_size(inst: PottsInstance) -> int:
    total = inst.num_labels**inst.num_nodes
    if total > ENUMERATION_LIMIT:
        raise TooLargeError(
            f"{inst.num_labels}^{inst.num_nodes} labelings exceed the enumeration limit"
        )
    return total


def _all_labelings(inst: PottsInstance) -> np.ndarray:
    """Every labeling as one row, lexicographic by node index."""
    total = _check_size(inst)
    grids = np.unravel_index(
        np.arange(total), (inst.num_labels,) * inst.num_nodes
    )
    return np.stack(grids, axis=1).astype(np.int64)


def _scores(inst: PottsInstance, labs: np.ndarray, weights=None) -> np.ndarray:
    vals = np.zeros(len(labs))
    for u in range(inst.num_nodes):
        vals += inst.costs_array[u, labs[:, u]]
    w = inst.weights_array if weights is None else np.asarray(weights, dtype=float)
    for e, (u, v, _) in enumerate(inst.edges):
        if w[e]:
            vals += w[e] * (labs[:, u] != labs[:, v])
    return vals


def enumerate_map(inst: PottsInstance) -> tuple[Labeling, float]:
    """Global minimum by exhaustive enumeration, lexicographic tie-break."""
    labs = _all_labelings(inst)
    vals = _scores(inst, labs)
    j = int(np.argmin(vals))
    return tuple(int(x) for x in labs[j]), float(vals[j])


def count_optimal_labelings(inst: PottsInstance, tol: float = 0.0) -> int:
    """How many labelings come within ``tol`` of the exhaustive minimum."""
    labs = _all_labelings(inst)
    vals = _scores(inst, labs)
    return int(np.count_nonzero(vals <= vals.min() + tol))


def _adversarial_weights(inst: PottsInstance, g: Labeling, beta: float, gamma: float):
    out = []
    for u, v, w in inst.edges:
        wf = float(w)
        if g[u] != g[v]:
            out.append(0.0 if wf == 0.0 else gamma * wf)
        else:
            out.append(0.0 if math.isinf(beta) else wf / beta)
    if any(math.isinf(w) for w in out):
        raise ModelError("infinite gamma on a cut edge makes the check undefined")
    return out


def enumerate_stability(
    inst: PottsInstance,
    g: Labeling,
    beta: float,
    gamma: float,
    *,
    ilp_tol: float | None = None,
    exact: bool = False,
) -> StabilityVerdict:
    """Exhaustive stability verdict under the adversarial perturbation.

    Verifies the reference labeling is an optimum of the unperturbed instance
    first.  In exact mode the budget comparison is rational, so ties are
    classified with no tolerance.
    """
    g = validate_labeling(inst, g)
    labs = _all_labelings(inst)
    plain = _scores(inst, labs)
    garr = np.asarray(g)
    gidx = int((garr * inst.num_labels ** np.arange(inst.num_nodes - 1, -1, -1)).sum())
    if plain.min() < plain[gidx] - 1e-7 * max(1.0, inst.magnitude):
        raise ModelError("reference labeling is not optimal for the instance")
    wstar = _adversarial_weights(inst, g, beta, gamma)
    vals = _scores(inst, labs, weights=wstar)
    ham = (labs != garr[None, :]).sum(axis=1)
    if exact:
        budget = objective_exact(inst.with_weights(wstar), g)
        guard = 1e-7 * max(1.0, inst.magnitude)
        cand = np.flatnonzero(vals <= float(budget) + guard)
        best_h, best_f, best_q = 0, None, None
        for c in cand:
            h = int(ham[c])
            if h <= best_h:
                continue
            f = tuple(int(x) for x in labs[c])
            q = objective_exact(inst.with_weights(wstar), f)
            if q <= budget:
                best_h, best_f, best_q = h, f, q
        if best_f is None:
            return StabilityVerdict(True, None, 0, None)
        return StabilityVerdict(False, best_f, best_h, budget - best_q)
    if ilp_tol is None:
        ilp_tol = ilp_tolerance(inst)
    budget = float(vals[gidx]) + ilp_tol
    feasible = vals <= budget
    if not np.any(feasible & (ham > 0)):
        return StabilityVerdict(True, None, 0, None)
    best_h = int(ham[feasible].max())
    j = int(np.flatnonzero(feasible & (ham == best_h))[0])
    witness = tuple(int(x) for x in labs[j])
    return StabilityVerdict(False, witness, best_h, float(vals[gidx] - vals[j]))


@dataclass(frozen=True)
class CertificateReport:
    """Residuals and implications checked for a primal/dual pair."""

    normalization_residual: float
    marginalization_residual: float
    min_entry: float
    duality_gap: float
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_lp_certificate(inst: PottsInstance, x, eta: PairwiseDual,
                          tol: float = TAU) -> CertificateReport:
    """Check feasibility, strong duality, and local-decodability implications.

    Evaluated against the instance as given: FORBIDDEN labels contribute
    nothing when their marginal is (numerically) zero and blow up otherwise.
    """
    n, k = inst.num_nodes, inst.num_labels
    node = np.array([[float(v) for v in row] for row in x.node_marginals])
    violations = []
    norm_res = float(np.abs(node.sum(axis=1) - 1.0).max())
    min_entry = float(node.min())
    marg_res = 0.0
    forbid = ~np.isfinite(inst.costs_array)
    contrib = np.where(forbid, np.where(node <= tol, 0.0, math.inf),
                       node * np.where(forbid, 0.0, inst.costs_array))
    obj = contrib.sum()
    for e, (u, v, w) in enumerate(inst.edges):
        mu = np.array([[float(t) for t in row] for row in x.edge_marginals[(u, v)]])
        min_entry = min(min_entry, float(mu.min()))
        marg_res = max(marg_res, float(np.abs(mu.sum(axis=1) - node[u]).max()))
        marg_res = max(marg_res, float(np.abs(mu.sum(axis=0) - node[v]).max()))
        obj += float(w) * (mu.sum() - np.trace(mu))
    # Pairwise dual value, evaluated from scratch (infinities absorb messages).
    theta_hat = inst.costs_array.copy()
    for (a, b), vec in eta.messages.items():
        theta_hat[a] = theta_hat[a] + np.array([float(t) for t in vec])
    dual_val = float(theta_hat.min(axis=1).sum())
    for u, v, w in inst.edges:
        ev = np.array([float(t) for t in eta.messages[(u, v)]])
        eu = np.array([float(t) for t in eta.messages[(v, u)]])
        mat = float(w) * (1.0 - np.eye(k)) - ev[:, None] - eu[None, :]
        dual_val += float(mat.min())
    gap = abs(dual_val - float(obj))
    scale = max(1.0, abs(float(obj)))
    if norm_res > tol:
        violations.append(f"normalization residual {norm_res:.3g}")
    if marg_res > tol:
        violations.append(f"marginalization residual {marg_res:.3g}")
    if min_entry < -tol:
        violations.append(f"negative marginal {min_entry:.3g}")
    if gap > tol * scale:
        violations.append(f"duality gap {gap:.3g}")
    for u in range(n):
        row = theta_hat[u]
        order = np.argsort(row, kind="stable")
        if len(row) > 1 and row[order[1]] - row[order[0]] > tol:
            if node[u, int(order[0])] < 1.0 - tol:
                violations.append(f"decodable node {u} is fractional")
    return CertificateReport(norm_res, marg_res, min_entry, gap, tuple(violations))
