"""Self-contained dense two-phase simplex with float64 and exact backends.

Solves  min c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0.

The float backend runs on numpy tableaus with Dantzig pricing and a Bland
fallback once degenerate stalling is detected, then re-derives the final
primal/dual values from a fresh factorization of the optimal basis.  The
exact backend runs the same algorithm over Fractions and reads the duals off
the artificial columns, so theorem-level identities hold with no tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_STALL_LIMIT = 200


class SimplexError(RuntimeError):
    pass


class InfeasibleError(SimplexError):
    pass


class NumericalError(SimplexError):
    pass


@dataclass
class LPResult:
    x: list
    objective: object
    eq_duals: list
    ub_duals: list
    iterations: int


def solve_linear_program(c, a_eq, b_eq, a_ub=None, b_ub=None, *, rational=False,
                         max_iterations=None):
    """Solve the LP; raises InfeasibleError / NumericalError on failure.

    Duals follow the convention max b.y with A'y <= c, so equality-row duals
    are free and <=-row duals are nonpositive.
    """
    a_ub = a_ub if a_ub is not None else []
    b_ub = b_ub if b_ub is not None else []
    if rational:
        return _solve_exact(c, a_eq, b_eq, a_ub, b_ub, max_iterations)
    return _solve_float(c, a_eq, b_eq, a_ub, b_ub, max_iterations)


def _assemble(c, a_eq, b_eq, a_ub, b_ub, one, zero):
    """Standard form: slack columns for <= rows, rows flipped to b >= 0."""
    n = len(c)
    n_eq, n_ub = len(a_eq), len(a_ub)
    m = n_eq + n_ub
    total = n + n_ub
    rows = []
    rhs = []
    sign = []
    for i in range(n_eq):
        row = list(a_eq[i]) + [zero] * n_ub
        b = b_eq[i]
        if b < zero:
            row = [-x for x in row]
            b = -b
            sign.append(-1)
        else:
            sign.append(1)
        rows.append(row)
        rhs.append(b)
    for j in range(n_ub):
        row = list(a_ub[j]) + [zero] * n_ub
        row[n + j] = one
        b = b_ub[j]
        if b < zero:
            row = [-x for x in row]
            b = -b
            sign.append(-1)
        else:
            sign.append(1)
        rows.append(row)
        rhs.append(b)
    return rows, rhs, sign, n, n_ub, m, total


def _solve_float(c, a_eq, b_eq, a_ub, b_ub, max_iterations):
    rows, rhs, sign, n, n_ub, m, total = _assemble(c, a_eq, b_eq, a_ub, b_ub, 1.0, 0.0)
    a_full = np.zeros((m, total + m))
    for i, row in enumerate(rows):
        a_full[i, :total] = row
        a_full[i, total + i] = 1.0
    b = np.array([float(x) for x in rhs])
    tableau = np.hstack([a_full, b[:, None]])
    basis = list(range(total, total + m))
    orig_row = list(range(m))
    cap = max_iterations or (20000 + 40 * (m + total))

    # Phase 1: drive artificial costs to zero.
    red = np.zeros(total + m)
    red[:total] = -tableau[:, :total].sum(axis=0)
    obj = [float(b.sum())]
    iters = _pivot_loop(tableau, basis, red, obj, total + m, total, cap, phase1=True)
    if obj[0] > 1e-7 * max(1.0, float(np.abs(b).max(initial=0.0))):
        raise InfeasibleError("phase 1 ended with positive infeasibility")

    # Remove leftover basic artificials; drop redundant rows entirely.
    drop = []
    for r in range(tableau.shape[0]):
        if basis[r] >= total:
            cols = np.abs(tableau[r, :total])
            j = int(cols.argmax())
            if cols[j] > 1e-7:
                _pivot(tableau, red, r, j)
                basis[r] = j
            else:
                drop.append(r)
    if drop:
        keep = [r for r in range(tableau.shape[0]) if r not in set(drop)]
        tableau = tableau[keep]
        basis = [basis[r] for r in keep]
        orig_row = [orig_row[r] for r in keep]

    # Phase 2 with the real objective; artificials are barred from entering.
    cost = np.zeros(total + m)
    cost[:n] = [float(x) for x in c]
    cb = cost[basis]
    red = cost - cb @ tableau[:, :-1]
    obj = [float(cb @ tableau[:, -1])]
    tol_enter = _COST_TOL * (1.0 + np.abs(cost))
    iters += _pivot_loop(tableau, basis, red, obj, total, total, cap,
                         phase1=False, tol_enter=tol_enter)

    x, objective, y = _refine_float(rows, rhs, [float(v) for v in c], basis, tableau,
                                    total, n, orig_row)
    _verify_float(rows, rhs, [float(v) for v in c], x, y, orig_row, n)
    eq_duals = [0.0] * len(a_eq)
    ub_duals = [0.0] * n_ub
    present = {orig_row[r]: r for r in range(len(orig_row))}
    for i in range(m):
        r = present.get(i)
        val = y[r] * sign[i] if r is not None else 0.0
        if i < len(a_eq):
            eq_duals[i] = val
        else:
            ub_duals[i - len(a_eq)] = val
    return LPResult(list(x[:n]), objective, eq_duals, ub_duals, iters)


def _pivot(tableau, red, r, j):
    piv = tableau[r, j]
    tableau[r] /= piv
    col = tableau[:, j].copy()
    col[r] = 0.0
    tableau -= np.outer(col, tableau[r])
    tableau[:, j] = 0.0
    tableau[r, j] = 1.0
    red -= red[j] * tableau[r, :-1]
    red[j] = 0.0


def _pivot_loop(tableau, basis, red, obj, n_enter, n_real, cap, *, phase1,
                tol_enter=None):
    iters = 0
    stall = 0
    bland = False
    last = obj[0]
    while True:
        if iters > cap:
            raise NumericalError("simplex iteration cap exceeded")
        active = red[:n_enter]
        if tol_enter is None:
            neg = np.flatnonzero(active < -_COST_TOL)
        else:
            neg = np.flatnonzero(active < -tol_enter[:n_enter])
        if neg.size == 0:
            return iters
        if bland:
            j = int(neg[0])
        else:
            rel = active[neg] if tol_enter is None else active[neg] / tol_enter[neg]
            j = int(neg[int(rel.argmin())])
        colv = tableau[:, j]
        pos = np.flatnonzero(colv > _PIVOT_TOL)
        if pos.size == 0:
            raise NumericalError("unbounded direction encountered")
        ratios = np.maximum(tableau[pos, -1], 0.0) / colv[pos]
        best = ratios.min()
        tied = pos[ratios <= best + 1e-12]
        r = int(tied[int(np.argmin([basis[t] for t in tied]))])
        delta = red[j] * max(tableau[r, -1], 0.0) / colv[r]
        _pivot(tableau, red, r, j)
        basis[r] = j
        obj[0] += delta
        iters += 1
        if obj[0] < last - 1e-12 * (1.0 + abs(last)):
            stall = 0
            last = obj[0]
        else:
            stall += 1
            if stall > _STALL_LIMIT:
                bland = True


def _refine_float(rows, rhs, c, basis, tableau, total, n, orig_row):
    """Recompute x, objective, and row duals from a fresh factorization.

    Only the surviving (non-redundant) rows participate; the returned dual
    vector is indexed over surviving rows in tableau order.
    """
    a = np.array([[float(v) for v in row] for row in rows])
    bvec = np.array([float(v) for v in rhs])
    cost = np.zeros(total)
    cost[:n] = c
    surv = np.array(orig_row, dtype=np.int64)
    bmat = a[surv][:, basis]
    try:
        xb = np.linalg.solve(bmat, bvec[surv])
        y = np.linalg.solve(bmat.T, cost[basis])
    except np.linalg.LinAlgError:
        xb = tableau[: len(surv), -1].copy()
        y, *_ = np.linalg.lstsq(bmat.T, cost[basis], rcond=None)
    x = np.zeros(total)
    for val, col in zip(xb, basis):
        x[col] = val
    return x, float(cost @ x), list(y)


def _verify_float(rows, rhs, c, x, y, orig_row, n):
    a = np.array([[float(v) for v in row] for row in rows])
    bvec = np.array([float(v) for v in rhs])
    scale = max(1.0, float(np.abs(bvec).max(initial=0.0)))
    resid = a @ x - bvec
    if float(np.abs(resid).max(initial=0.0)) > 1e-6 * scale:
        raise NumericalError("primal residual too large after refinement")
    if x.size and float(x.min()) < -1e-7 * scale:
        raise NumericalError("negative primal value after refinement")
    cost = np.zeros(a.shape[1])
    cost[:n] = c
    yfull = np.zeros(len(rows))
    for pos, i in enumerate(orig_row):
        yfull[i] = y[pos]
    reduced = cost - yfull @ a
    tol = 1e-6 * (1.0 + np.abs(cost))
    if np.any(reduced < -tol):
        raise NumericalError("dual infeasibility after refinement")


def _solve_exact(c, a_eq, b_eq, a_ub, b_ub, max_iterations):
    zero, one = Fraction(0), Fraction(1)
    cf = [_frac(v) for v in c]
    aeq = [[_frac(v) for v in row] for row in a_eq]
    beq = [_frac(v) for v in b_eq]
    aub = [[_frac(v) for v in row] for row in a_ub]
    bub = [_frac(v) for v in b_ub]
    rows, rhs, sign, n, n_ub, m, total = _assemble(cf, aeq, beq, aub, bub, one, zero)
    width = total + m + 1
    tab = [row + [zero] * m + [b] for row, b in zip(rows, rhs)]
    for i in range(m):
        tab[i][total + i] = one
    basis = list(range(total, total + m))
    orig_row = list(range(m))
    cap = max_iterations or (20000 + 40 * (m + total))

    red = [zero] * (total + m)
    for j in range(total):
        red[j] = -sum(tab[i][j] for i in range(m))
    obj = sum(rhs, zero)
    obj, iters = _exact_loop(tab, basis, red, obj, total + m, cap)
    if obj > 0:
        raise InfeasibleError("phase 1 ended with positive infeasibility")

    drop = []
    for r in range(len(tab)):
        if basis[r] >= total:
            j = next((j for j in range(total) if tab[r][j] != 0), None)
            if j is not None:
                _exact_pivot(tab, red, r, j)
                basis[r] = j
            else:
                drop.append(r)
    for r in reversed(drop):
        del tab[r]
        del basis[r]
        del orig_row[r]

    cost = [zero] * (total + m)
    for j in range(n):
        cost[j] = cf[j]
    red = list(cost)
    obj = zero
    for r, col in enumerate(basis):
        cb = cost[col]
        if cb != 0:
            obj += cb * tab[r][-1]
            for j in range(total + m):
                red[j] -= cb * tab[r][j]
    obj2, more = _exact_loop(tab, basis, red, obj, total, cap)
    iters += more

    x = [zero] * total
    for r, col in enumerate(basis):
        if col < total:
            x[col] = tab[r][-1]
    # Duals read off the artificial columns: reduced cost there equals -y_i.
    eq_duals = [zero] * len(a_eq)
    ub_duals = [zero] * n_ub
    for pos, i in enumerate(orig_row):
        y = -red[total + i] * sign[i]
        if i < len(a_eq):
            eq_duals[i] = y
        else:
            ub_duals[i - len(a_eq)] = y
    objective = sum((cf[j] * x[j] for j in range(n)), zero)
    return LPResult(x[:n], objective, eq_duals, ub_duals, iters)


def _frac(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    return Fraction(v)


def _exact_pivot(tab, red, r, j):
    piv = tab[r][j]
    row = tab[r]
    if piv != 1:
        tab[r] = row = [v / piv for v in row]
    for i, other in enumerate(tab):
        if i == r:
            continue
        f = other[j]
        if f != 0:
            tab[i] = [a - f * b for a, b in zip(other, row)]
    f = red[j]
    if f != 0:
        for j2 in range(len(red)):
            red[j2] -= f * row[j2]


def _exact_loop(tab, basis, red, obj, n_enter, cap):
    iters = 0
    stall = 0
    bland = False
    while True:
        if iters > cap:
            raise NumericalError("simplex iteration cap exceeded")
        j = None
        if bland:
            for j2 in range(n_enter):
                if red[j2] < 0:
                    j = j2
                    break
        else:
            best = 0
            for j2 in range(n_enter):
                if red[j2] < best:
                    best = red[j2]
                    j = j2
        if j is None:
            return obj, iters
        r = None
        best_ratio = None
        for i, row in enumerate(tab):
            if row[j] > 0:
                ratio = row[-1] / row[j]
                if best_ratio is None or ratio < best_ratio or (
                    ratio == best_ratio and basis[i] < basis[r]
                ):
                    best_ratio = ratio
                    r = i
        if r is None:
            raise NumericalError("unbounded direction encountered")
        obj += red[j] * best_ratio
        _exact_pivot(tab, red, r, j)
        basis[r] = j
        iters += 1
        if best_ratio == 0:
            stall += 1
            if stall > _STALL_LIMIT:
                bland = True
        else:
            stall = 0
