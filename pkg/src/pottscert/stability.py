"""Stability checks under adversarial weight perturbations.

An instance with optimum g is stable for bounds (beta, gamma) exactly when no
other labeling matches g's objective after cut edges are scaled up by gamma
and uncut edges scaled down by 1/beta.  The checker maximizes disagreement
with g subject to that budget: small instances are enumerated outright,
larger ones run branch-and-bound seeded by the relaxation's bounds.
"""
from __future__ import annotations

import math
from dataclasses import replace as dc_replace
from fractions import Fraction

import numpy as np

from . import oracle
from .lp import (
    EXHAUSTIVE_LIMIT,
    PolytopeSystem,
    _enumerate_lexicographic,
    solve_map,
    solve_system,
)
from .model import (
    TAU,
    Labeling,
    ModelError,
    PottsInstance,
    StabilityVerdict,
    ilp_tolerance,
    objective,
    objective_exact,
    replace_forbidden,
    restricted_instance,
    validate_labeling,
)
from .search import build_tables, max_hamming_within_budget


def adversarial_perturbation(inst: PottsInstance, g: Labeling, beta: float,
                             gamma: float) -> PottsInstance:
    """Worst-case weights for g: cut edges scaled by gamma, others by 1/beta."""
    g = validate_labeling(inst, g)
    if beta < 1 or gamma < 1:
        raise ModelError("perturbation bounds require beta >= 1 and gamma >= 1")
    new_w = []
    for u, v, w in inst.edges:
        exact_w = isinstance(w, (int, Fraction))
        if g[u] != g[v]:
            if float(w) == 0.0:
                new_w.append(0)
            elif math.isinf(gamma):
                raise ModelError("infinite gamma on a cut edge makes the check undefined")
            else:
                new_w.append(w * Fraction(gamma) if exact_w else w * gamma)
        elif math.isinf(beta):
            new_w.append(0)
        else:
            new_w.append(w / Fraction(beta) if exact_w else w / beta)
    return inst.with_weights(new_w)


def _exhaustive_verdict(wstar: PottsInstance, g: Labeling, ilp_tol: float,
                        exact: bool) -> StabilityVerdict:
    n = wstar.num_nodes
    garr = np.asarray(g)
    if exact:
        budget = objective_exact(wstar, g)
        guard = 1e-7 * max(1.0, wstar.magnitude)
        best_h, best_f, best_q = 0, None, None
        for _, labs, vals in _enumerate_lexicographic(wstar):
            ham = (labs != garr[None, :]).sum(axis=1)
            for c in np.flatnonzero(vals <= float(budget) + guard):
                h = int(ham[c])
                if h <= best_h:
                    continue
                f = tuple(int(t) for t in labs[c])
                q = objective_exact(wstar, f)
                if q <= budget:
                    best_h, best_f, best_q = h, f, q
        if best_f is None:
            return StabilityVerdict(True, None, 0, None)
        return StabilityVerdict(False, best_f, best_h, budget - best_q)
    budget_val = objective(wstar, g)
    budget = budget_val + ilp_tol
    best_h, best_f, best_q = 0, None, None
    for _, labs, vals in _enumerate_lexicographic(wstar):
        feas = vals <= budget
        if not np.any(feas):
            continue
        ham = (labs != garr[None, :]).sum(axis=1)
        ham = np.where(feas, ham, -1)
        h = int(ham.max())
        if h > best_h:
            best_h = h
            j = int(np.flatnonzero(ham == h)[0])
            best_f = tuple(int(t) for t in labs[j])
            best_q = float(vals[j])
    if best_f is None:
        return StabilityVerdict(True, None, 0, None)
    return StabilityVerdict(False, best_f, best_h, budget_val - best_q)


def _branch_and_bound_verdict(wstar: PottsInstance, g: Labeling, ilp_tol,
                              rational: bool, engine: str, big, node_cap):
    finite = replace_forbidden(wstar, big)
    n = finite.num_nodes
    if rational:
        budget_val = objective_exact(finite, g)
        budget = budget_val
        evaluate = lambda f: objective_exact(finite, f)  # noqa: E731
    else:
        budget_val = objective(finite, g)
        budget = budget_val + ilp_tol
        evaluate = lambda f: objective(finite, f)  # noqa: E731
    system = PolytopeSystem(finite)
    lp_cost = system.lp_cost(exact=rational)
    _, _, duals = solve_system(system, lp_cost, engine=engine, rational=rational)
    eta = system.extract_dual(duals)
    # Relaxation of the max-disagreement program caps the search outright.
    agree = system.agreement_cost(g, exact=rational)
    _, s_star, _ = solve_system(
        system, agree, engine=engine, rational=rational, budget_row=(lp_cost, budget)
    )
    ham_cap = int(math.floor(n - float(s_star) + 1e-7))
    if ham_cap <= 0:
        return StabilityVerdict(True, None, 0, None)
    tables = build_tables(finite, eta, exact=rational)
    witness, ham, capped = max_hamming_within_budget(
        tables, evaluate, g, budget, ham_cap=ham_cap, node_cap=node_cap
    )
    if witness is None:
        return StabilityVerdict(not capped, None, 0, None, capped=capped)
    return StabilityVerdict(
        False, tuple(witness), ham, budget_val - evaluate(witness), capped=capped
    )


def check_stable(inst: PottsInstance, g: Labeling, beta: float = 2.0,
                 gamma: float = 1.0, *, rational: bool = False,
                 engine: str = "auto", ilp_tol: float | None = None,
                 exhaustive_limit: int = EXHAUSTIVE_LIMIT,
                 node_cap: int | None = None,
                 big: float | None = None) -> StabilityVerdict:
    """Stability verdict for an instance whose exact optimum is g.

    The returned witness, when present, maximizes the number of disagreements
    with g among labelings whose perturbed objective stays within budget;
    ties go to the lexicographically smallest witness.
    """
    g = validate_labeling(inst, g)
    wstar = adversarial_perturbation(inst, g, beta, gamma)
    if ilp_tol is None:
        ilp_tol = ilp_tolerance(wstar)
    if inst.num_labels**inst.num_nodes <= exhaustive_limit:
        return _exhaustive_verdict(wstar, g, ilp_tol, rational)
    return _branch_and_bound_verdict(wstar, g, ilp_tol, rational, engine, big, node_cap)


def check_block_stable(inst: PottsInstance, block, g: Labeling,
                       beta: float = 2.0, gamma: float = 1.0, delta=None, *,
                       rational: bool = False, engine: str = "auto",
                       ilp_tol: float | None = None,
                       exhaustive_limit: int = EXHAUSTIVE_LIMIT,
                       node_cap: int | None = None,
                       big: float | None = None) -> StabilityVerdict:
    """Stability of one block after its boundary costs absorb dual messages.

    Builds the restricted instance, solves it exactly, and runs the stability
    check against the restriction of g.  When the restricted optimum differs
    from g on the block, the verdict is unstable with that optimum as the
    witness; persistency certification then does not apply to the block.
    """
    g = validate_labeling(inst, g)
    nodes = sorted(set(int(u) for u in block))
    sub = restricted_instance(inst, nodes, delta)
    g_local = tuple(g[u] for u in nodes)
    g_sub = solve_map(sub, rational=rational, engine=engine, big=big,
                      exhaustive_limit=exhaustive_limit, node_cap=node_cap)
    if g_sub != g_local:
        if rational:
            margin = objective_exact(sub, g_local) - objective_exact(sub, g_sub)
        else:
            margin = objective(sub, g_local) - objective(sub, g_sub)
        ham = sum(1 for a, b in zip(g_sub, g_local) if a != b)
        return StabilityVerdict(False, g_sub, ham, margin,
                                restricted_optimum=g_sub, optimum_matches=False)
    verdict = check_stable(sub, g_local, beta, gamma, rational=rational,
                           engine=engine, ilp_tol=ilp_tol,
                           exhaustive_limit=exhaustive_limit,
                           node_cap=node_cap, big=big)
    return dc_replace(verdict, restricted_optimum=g_sub)


def brute_force_stable(inst: PottsInstance, g: Labeling, beta: float = 2.0,
                       gamma: float = 1.0, *, ilp_tol: float | None = None,
                       exact: bool = False) -> StabilityVerdict:
    """Ground-truth verdict by exhaustive enumeration (small instances only)."""
    return oracle.enumerate_stability(inst, g, beta, gamma, ilp_tol=ilp_tol, exact=exact)


def dumps_verdict(verdict: StabilityVerdict) -> str:
    lines = [f"stable {1 if verdict.stable else 0}", f"hamming {verdict.hamming}"]
    if verdict.witness is not None:
        lines.append("witness " + " ".join(str(x) for x in verdict.witness))
    return "\n".join(lines) + "\n"
