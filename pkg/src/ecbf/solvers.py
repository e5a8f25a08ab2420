"""Small dense convex solvers: active-set QP, single-cone SOCP, hypograph tools.

Problems here have a handful of variables and a dozen constraints, so both
solvers are dense and factor-free. The QP solver is a dual active-set method
that starts from the unconstrained minimizer and adds violated constraints;
the SOCP solver is a log-barrier interior-point method with a phase-I
feasibility stage and a Newton polish to active-set accuracy.

Objective convention for both: minimize x^T Q x + q^T x (no 1/2 factor), so
``Q = I, q = -2 u_des`` encodes ``||x - u_des||^2`` up to a constant.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from itertools import product

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITERATIONS = "max_iterations"

_MAX_ITER = 200


@dataclass(frozen=True)
class QpProblem:
    """minimize x^T Q x + q^T x  s.t.  G x <= h, lb <= x <= ub.

    Q must be symmetric positive definite. Bounds are optional and folded
    into inequality rows; use +-inf entries to leave a coordinate free.
    """

    Q: np.ndarray
    q: np.ndarray
    G: np.ndarray | None = None
    h: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def stacked_rows(self) -> tuple[np.ndarray, np.ndarray]:
        n = len(self.q)
        rows = [np.zeros((0, n))] if self.G is None else [np.atleast_2d(self.G)]
        rhs = [np.zeros(0)] if self.h is None else [np.atleast_1d(self.h)]
        eye = np.eye(n)
        if self.ub is not None:
            keep = np.isfinite(self.ub)
            rows.append(eye[keep])
            rhs.append(np.asarray(self.ub, dtype=float)[keep])
        if self.lb is not None:
            keep = np.isfinite(self.lb)
            rows.append(-eye[keep])
            rhs.append(-np.asarray(self.lb, dtype=float)[keep])
        return np.vstack(rows), np.concatenate(rhs)


@dataclass(frozen=True)
class SocpProblem:
    """QpProblem plus one second-order cone row ||F x + g|| <= f^T x + d."""

    Q: np.ndarray
    q: np.ndarray
    G: np.ndarray | None
    h: np.ndarray | None
    F: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    g: np.ndarray = field(default_factory=lambda: np.zeros(0))
    f: np.ndarray = field(default_factory=lambda: np.zeros(0))
    d: float = 0.0
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def as_qp(self) -> QpProblem:
        return QpProblem(self.Q, self.q, self.G, self.h, self.lb, self.ub)


@dataclass(frozen=True)
class Solution:
    x_star: np.ndarray
    objective: float
    status: str
    iterations: int
    solve_time_us: int


def _objective(Q, q, x) -> float:
    return float(x @ Q @ x + q @ x)


def solve_qp(p: QpProblem) -> Solution:
    """Dual active-set method (Goldfarb-Idnani) for strictly convex dense QPs.

    Starts at the unconstrained minimizer and repeatedly enforces the most
    violated constraint, taking primal steps toward its boundary and dual
    steps that drop blocking constraints. Terminates with the exact optimum,
    an infeasibility certificate (the incoming normal lies in the span of the
    active normals with no droppable blocker), or an iteration cap.
    """
    t0 = time.perf_counter_ns()
    Q = np.asarray(p.Q, dtype=float)
    q = np.asarray(p.q, dtype=float)
    n = len(q)
    G, h = p.stacked_rows()
    m = len(h)

    H = 2.0 * Q  # Hessian of x^T Q x + q^T x
    Hinv = np.linalg.inv(H)
    x = -Hinv @ q
    lam = np.zeros(m)
    active: list[int] = []

    # constraints in ">=" form: normals N_i = -G_i, offsets b_i = -h_i
    N_all = -G
    b_all = -h

    feas_tol = 1e-9
    iters = 0
    status = OPTIMAL
    while True:
        iters += 1
        if iters > _MAX_ITER:
            status = MAX_ITERATIONS
            break
        s = N_all @ x - b_all if m else np.zeros(0)
        s[active] = 0.0
        worst = int(np.argmin(s)) if m else 0
        if m == 0 or s[worst] >= -feas_tol:
            break  # optimal
        np_vec = N_all[worst]
        sp = s[worst]
        u_new = 0.0
        infeasible = False
        while True:
            if active:
                Nact = N_all[active].T  # n x k
                B = Nact.T @ Hinv @ Nact
                try:
                    r = np.linalg.solve(B, Nact.T @ (Hinv @ np_vec))
                except np.linalg.LinAlgError:
                    r = np.linalg.lstsq(B, Nact.T @ (Hinv @ np_vec), rcond=None)[0]
                z = Hinv @ (np_vec - Nact @ r)
            else:
                r = np.zeros(0)
                z = Hinv @ np_vec

            t1 = math.inf
            drop = -1
            for j, idx in enumerate(active):
                if r[j] > 1e-12:
                    cand = lam[idx] / r[j]
                    if cand < t1:
                        t1 = cand
                        drop = j
            ztn = float(z @ np_vec)
            # dependence test: compare the projected curvature against the
            # unprojected one, so a normal that lies in the span of the
            # active set reads as zero regardless of problem scale
            full = float(np_vec @ (Hinv @ np_vec))
            t2 = -sp / ztn if ztn > 1e-10 * max(full, 1e-300) else math.inf

            t_step = min(t1, t2)
            if not math.isfinite(t_step):
                infeasible = True
                break
            if math.isfinite(t2) and t_step == t2:
                # full primal step: worst constraint becomes active
                x = x + t_step * z
                u_new += t_step
                for j, idx in enumerate(active):
                    lam[idx] -= t_step * r[j]
                lam[worst] = u_new
                active.append(worst)
                break
            # blocked: dual step (and partial primal step if z is nonzero)
            if math.isfinite(t2):
                x = x + t_step * z
                sp = float(np_vec @ x - b_all[worst])
            u_new += t_step
            for j, idx in enumerate(active):
                lam[idx] -= t_step * r[j]
            dropped = active.pop(drop)
            lam[dropped] = 0.0
        if infeasible:
            status = INFEASIBLE
            break

    if status == OPTIMAL and m:
        # safety net: numerical degeneracy must never masquerade as success
        viol = float((G @ x - h).max())
        if viol > 1e-7 * max(1.0, float(np.abs(h).max())):
            status = MAX_ITERATIONS
    dt_us = (time.perf_counter_ns() - t0) // 1000
    return Solution(x, _objective(Q, q, x), status, iters, int(dt_us))


# ---------------------------------------------------------------------------
# second-order cone programming
# ---------------------------------------------------------------------------


def _soc_terms(F, g, f, d, x):
    z = F @ x + g
    v = float(f @ x + d)
    return z, v


def _barrier_value(G, h, F, g, f, d, Q, q, w, x, phase1_s=None):
    """objective + w * (-sum log slacks - log SOC gap); +inf outside the domain.

    The barrier carries the weight (not the objective) so function values stay
    on the objective's scale along the whole path and line-search comparisons
    remain meaningful in float64.
    """
    if phase1_s is None:
        slacks = h - G @ x
        z, v = _soc_terms(F, g, f, d, x)
        obj = _objective(Q, q, x)
    else:
        slacks = h + phase1_s - G @ x
        z, v = _soc_terms(F, g, f, d, x)
        v += phase1_s
        obj = phase1_s
    gap = v * v - float(z @ z)
    if v <= 0.0 or gap <= 0.0 or (len(slacks) and slacks.min() <= 0.0):
        return math.inf
    return obj + w * (-float(np.sum(np.log(slacks))) - math.log(gap))


def _newton_loop(grad_hess, value_at, y, w, max_newton=25, stop=None, regularize=False):
    """Damped Newton with backtracking on a convex barrier.

    The phase-I barrier is flat along directions outside the span of the
    constraint normals, so that stage Tikhonov-regularizes the system just
    enough to stay solvable; along flat directions this degrades to gradient
    descent, which is fine because phase-I exits as soon as strict
    feasibility shows. Phase II has a positive definite Hessian and runs
    unregularized.
    """
    eye = np.eye(len(y))
    f0 = value_at(y, w)
    for _ in range(max_newton):
        gvec, Hmat = grad_hess(y, w)
        if regularize:
            Hmat = Hmat + 1e-10 * (1.0 + float(np.abs(Hmat).max())) * eye
        try:
            step = np.linalg.solve(Hmat, -gvec)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(Hmat, -gvec, rcond=None)[0]
        decrement = float(-gvec @ step)
        if decrement < 1e-12 * (1.0 + abs(f0)):
            break
        alpha = 1.0
        moved = False
        while alpha > 1e-13:
            cand = y + alpha * step
            fc = value_at(cand, w)
            if fc < f0 - 0.25 * alpha * decrement + 1e-15 * abs(f0):
                y = cand
                f0 = fc
                moved = True
                break
            alpha *= 0.5
        if not moved:
            break
        if stop is not None and stop(y):
            break
    return y


def _socp_phase1(G, h, F, g, f, d, x0):
    """Find a strictly feasible point, or report infeasibility.

    Minimizes an added scalar relaxation s over the shifted constraint set;
    strict feasibility is declared as soon as s < -1e-7 and infeasibility if
    the minimum stalls at a nonnegative value.
    """
    m, n = G.shape
    resid = float((G @ x0 - h).max()) if m else -math.inf
    z, v = _soc_terms(F, g, f, d, x0)
    resid = max(resid, float(np.linalg.norm(z)) - v)
    if resid < -1e-7:
        return x0, True
    s = resid + 1.0
    y = np.concatenate([x0, [s]])

    def value_at(y, w):
        # objective here is the relaxation s itself, already included
        return _barrier_value(G, h, F, g, f, d, None, None, w, y[:-1], phase1_s=y[-1])

    def grad_hess(y, w):
        x, s = y[:-1], y[-1]
        slacks = h + s - G @ x
        z, v = _soc_terms(F, g, f, d, x)
        v += s
        gap = v * v - float(z @ z)
        gvec = np.zeros(n + 1)
        Hmat = np.zeros((n + 1, n + 1))
        gvec[-1] = 1.0
        inv = 1.0 / slacks
        gvec[:n] += w * (G.T @ inv)
        gvec[-1] -= w * float(inv.sum())
        W = G * inv[:, None]
        Hmat[:n, :n] += w * (W.T @ W)
        Hmat[:n, -1] -= w * (W.T @ inv)
        Hmat[-1, :n] -= w * (inv @ W)
        Hmat[-1, -1] += w * float(inv @ inv)
        # SOC barrier in (x, s): gap gradient has x-part 2 v f - 2 F^T z
        dgap = np.concatenate([2.0 * v * f - 2.0 * F.T @ z, [2.0 * v]])
        d2gap = np.zeros((n + 1, n + 1))
        ff = np.concatenate([f, [1.0]])
        d2gap += 2.0 * np.outer(ff, ff)
        d2gap[:n, :n] -= 2.0 * F.T @ F
        gvec -= w * dgap / gap
        Hmat += w * (-d2gap / gap + np.outer(dgap, dgap) / gap**2)
        return gvec, Hmat

    w = 1.0
    for _ in range(30):
        y = _newton_loop(grad_hess, value_at, y, w,
                         stop=lambda yy: yy[-1] < -1e-6, regularize=True)
        if y[-1] < -1e-7:
            return y[:-1], True
        if (m + 2) * w < 1e-9:
            break
        w /= 20.0
    return y[:-1], False


def _l1_warm_start(Q, q, G, h, F, g, f, d):
    """Solve the QP with the cone replaced by its l1 over-approximation.

    Rows of F that are identically zero only shift the right side by |g_i|;
    each nonzero row is sign-split, so the row count doubles per nonzero row
    and the construction is only attempted for up to three of them. Returns a
    cone-feasible near-optimal point or None.
    """
    nz = [i for i in range(F.shape[0]) if F[i].any()]
    if len(nz) > 3:
        return None
    const = sum(abs(float(g[i])) for i in range(F.shape[0]) if i not in nz)
    rows = []
    rhs = []
    for pattern in product((-1.0, 1.0), repeat=len(nz)):
        row = -f.copy()
        offset = const
        for sgn, i in zip(pattern, nz):
            row += sgn * F[i]
            offset += sgn * float(g[i])
        rows.append(row)
        rhs.append(d - offset)
    G2 = np.vstack([G, np.array(rows)])
    h2 = np.concatenate([h, np.array(rhs)])
    sol = solve_qp(QpProblem(Q, q, G2, h2))
    if sol.status != OPTIMAL:
        return None
    return sol.x_star


def _socp_polish(Q, q, G, h, F, g, f, d, x, t_final):
    """Refine an interior-point iterate to an exact KKT point.

    If the cone is inactive, re-solves the linear-rows QP and keeps the
    answer when the cone stays slack. Otherwise runs Newton on the KKT
    system with the cone held on its boundary.
    """
    z, v = _soc_terms(F, g, f, d, x)
    cone_slack = v - float(np.linalg.norm(z))
    if cone_slack > 1e-5 * (1.0 + abs(v)):
        cand = solve_qp(QpProblem(Q, q, G, h))
        if cand.status == OPTIMAL:
            zc, vc = _soc_terms(F, g, f, d, cand.x_star)
            if float(np.linalg.norm(zc)) <= vc - 1e-9:
                return cand.x_star
        return x

    slacks = h - G @ x
    act = [i for i, s in enumerate(slacks) if s < 1e-5 * (1.0 + abs(h[i]))]
    Ga = G[act]
    k = len(act)
    n = len(x)
    mu = np.array([1.0 / (t_final * max(slacks[i], 1e-14)) for i in act])
    gap = v * v - float(z @ z)
    nu = 2.0 * v / (t_final * max(gap, 1e-14))

    y = np.concatenate([x, mu, [nu]])
    scale = 1.0 + float(np.abs(q).max(initial=0.0))
    converged = False
    best_res = math.inf
    stalled = 0
    for _ in range(12):
        x_c = y[:n]
        mu_c = y[n : n + k]
        nu_c = y[-1]
        z, v = _soc_terms(F, g, f, d, x_c)
        nz = float(np.linalg.norm(z))
        if nz < 1e-12:
            return x
        grad_c = F.T @ z / nz - f
        r1 = 2.0 * Q @ x_c + q + Ga.T @ mu_c + nu_c * grad_c
        r2 = Ga @ x_c - h[act]
        r3 = np.array([nz - v])
        res = np.concatenate([r1, r2, r3])
        res_norm = float(np.abs(res).max())
        if res_norm < 1e-10 * scale:
            converged = True
            break
        if res_norm > 0.5 * best_res:
            stalled += 1
            if stalled >= 2:
                break
        best_res = min(best_res, res_norm)
        hess_c = (F.T @ F - np.outer(F.T @ z, F.T @ z) / nz**2) / nz
        KKT = np.zeros((n + k + 1, n + k + 1))
        KKT[:n, :n] = 2.0 * Q + nu_c * hess_c
        KKT[:n, n : n + k] = Ga.T
        KKT[n : n + k, :n] = Ga
        KKT[:n, -1] = grad_c
        KKT[-1, :n] = grad_c
        try:
            step = np.linalg.solve(KKT, -res)
        except np.linalg.LinAlgError:
            return x
        y = y + step

    if not converged:
        return x
    x_new = y[:n]
    if y[-1] < -1e-9 or (k and y[n : n + k].min() < -1e-9):
        return x
    z, v = _soc_terms(F, g, f, d, x_new)
    if float(np.linalg.norm(z)) > v + 1e-9:
        return x
    slack_new = h - G @ x_new
    if len(slack_new) and slack_new.min() < -1e-9:
        return x
    return x_new


def solve_socp(p: SocpProblem, x_init=None) -> Solution:
    """Log-barrier interior-point method for one-cone dense SOCPs.

    Degenerate cones (F and g identically zero) reduce to a linear row and
    are dispatched to the QP solver, which keeps the zero-uncertainty
    reduction of the robust controllers exact. ``x_init``, when strictly
    feasible, skips the phase-I stage.
    """
    t0 = time.perf_counter_ns()
    Q = np.asarray(p.Q, dtype=float)
    q = np.asarray(p.q, dtype=float)
    n = len(q)
    G, h = p.as_qp().stacked_rows()
    F = np.atleast_2d(np.asarray(p.F, dtype=float))
    if F.size == 0:
        F = np.zeros((0, n))
    g = np.asarray(p.g, dtype=float)
    f = np.asarray(p.f, dtype=float)
    d = float(p.d)

    if not F.any() and not g.any():
        # ||0|| <= f^T x + d is the linear row -f^T x <= d
        G2 = np.vstack([G, -f[None, :]])
        h2 = np.concatenate([h, [d]])
        inner = solve_qp(QpProblem(Q, q, G2, h2))
        dt_us = (time.perf_counter_ns() - t0) // 1000
        return Solution(inner.x_star, inner.objective, inner.status, inner.iterations, int(dt_us))

    # presolve: if the optimum of the linear-rows relaxation already satisfies
    # the cone, it is the SOCP optimum; if the relaxation is infeasible, so is
    # the SOCP
    pres = solve_qp(QpProblem(Q, q, G, h))
    if pres.status == INFEASIBLE:
        dt_us = (time.perf_counter_ns() - t0) // 1000
        return Solution(pres.x_star, pres.objective, INFEASIBLE, pres.iterations, int(dt_us))
    if pres.status == OPTIMAL:
        z, v = _soc_terms(F, g, f, d, pres.x_star)
        if float(np.linalg.norm(z)) <= v + 1e-11 * (1.0 + abs(v)):
            dt_us = (time.perf_counter_ns() - t0) // 1000
            return Solution(pres.x_star, pres.objective, OPTIMAL, pres.iterations, int(dt_us))

    x0 = -np.linalg.solve(2.0 * Q, q)
    if x_init is None:
        candidates = [x0]
    elif isinstance(x_init, (list, tuple)):
        candidates = [np.asarray(c, dtype=float) for c in x_init] + [x0]
    else:
        candidates = [np.asarray(x_init, dtype=float), x0]
    x_start = None
    for cand in candidates:
        resid = float((G @ cand - h).max()) if len(h) else -math.inf
        z, v = _soc_terms(F, g, f, d, cand)
        resid = max(resid, float(np.linalg.norm(z)) - v)
        if resid < -1e-7:
            x_start = cand
            break
    if x_start is None:
        x_start, ok = _socp_phase1(G, h, F, g, f, d, x0)
        if not ok:
            dt_us = (time.perf_counter_ns() - t0) // 1000
            return Solution(x_start, _objective(Q, q, x_start), INFEASIBLE, 0, int(dt_us))
    else:
        # warm start: over-approximate the cone by sign-split linear rows
        # (the l1 norm dominates the l2 norm), solve the resulting QP, and
        # blend its cone-feasible near-optimal point with the strictly
        # interior candidate
        ws = _l1_warm_start(Q, q, G, h, F, g, f, d)
        if ws is not None:
            x_start = 0.997 * ws + 0.003 * x_start

    Q2 = 2.0 * Q
    Gt = np.ascontiguousarray(G.T)
    Ft = np.ascontiguousarray(F.T)
    d2gap = 2.0 * np.outer(f, f) - 2.0 * F.T @ F

    def value_at(x, w):
        slacks = h - G @ x
        z = F @ x + g
        v = float(f @ x) + d
        gap = v * v - float(z @ z)
        if v <= 0.0 or gap <= 0.0 or (len(slacks) and slacks.min() <= 0.0):
            return math.inf
        obj = float(x @ (Q @ x)) + float(q @ x)
        return obj + w * (-float(np.log(slacks).sum()) - math.log(gap))

    def grad_hess(x, w):
        slacks = h - G @ x
        z = F @ x + g
        v = float(f @ x) + d
        gap = v * v - float(z @ z)
        inv = 1.0 / slacks
        W = G * inv[:, None]
        dgap = (2.0 * v) * f - 2.0 * (Ft @ z)
        gvec = Q2 @ x + q + w * (Gt @ inv) - (w / gap) * dgap
        Hmat = (
            Q2
            + w * (W.T @ W)
            + (w / gap**2) * (dgap[:, None] * dgap[None, :])
            - (w / gap) * d2gap
        )
        return gvec, Hmat

    x = x_start
    # balance the initial pull of the objective against the barrier so the
    # first centering stays interior; a weak initial barrier wedges
    # large-scale problems into a boundary corner before the path is found.
    # From a warm start near the optimum, the matched weight is already small
    # and most of the schedule is skipped.
    g_obj = 2.0 * Q @ x + q
    g_bar = grad_hess(x, 1.0)[0] - g_obj
    ratio = float(np.linalg.norm(g_obj)) / (float(np.linalg.norm(g_bar)) + 1e-12)
    w = min(max(1.0, (1.0 + float(np.abs(g_obj).max())) / (len(h) + 2.0)), max(ratio, 1e-6))
    iters = 0
    status = OPTIMAL
    while True:
        iters += 1
        x = _newton_loop(grad_hess, value_at, x, w)
        if (len(h) + 2) * w < 3e-8:
            break
        if iters > 60:
            status = MAX_ITERATIONS
            break
        w /= 20.0

    if status == OPTIMAL:
        x = _socp_polish(Q, q, G, h, F, g, f, d, x, 1.0 / w)
    dt_us = (time.perf_counter_ns() - t0) // 1000
    return Solution(x, _objective(Q, q, x), status, iters, int(dt_us))


# ---------------------------------------------------------------------------
# hypograph reformulation of sum-of-min concave constraints
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HypographBlock:
    """Constraint a0 + sum_i min(b_minus_i u_i, b_plus_i u_i) >= 0.

    Environment components with known values have already been folded into
    the constant a0; the coefficient vectors cover decision components only.
    """

    a0: float
    b_minus: np.ndarray
    b_plus: np.ndarray

    def margin(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return self.a0 + float(np.minimum(self.b_minus * u, self.b_plus * u).sum())

    def feasible(self, u, tol: float = 0.0) -> bool:
        return self.margin(u) >= -tol

    def aux_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Linear rows over stacked (u, t) variables, in G y <= h form.

        Per decision index i: t_i <= b_minus_i u_i and t_i <= b_plus_i u_i,
        plus the coupling row -sum t_i <= a0.
        """
        k = len(self.b_minus)
        rows = []
        rhs = []
        for i in range(k):
            for coeff in (self.b_minus[i], self.b_plus[i]):
                row = np.zeros(2 * k)
                row[i] = -coeff
                row[k + i] = 1.0
                rows.append(row)
                rhs.append(0.0)
        row = np.zeros(2 * k)
        row[k:] = -1.0
        rows.append(row)
        rhs.append(self.a0)
        return np.array(rows), np.array(rhs)

    def eliminated_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Equivalent rows over u alone, auxiliaries eliminated exactly.

        Eliminating each t_i against its two upper bounds leaves one row per
        choice of lower/upper coefficient across the strict pairs:
        -sum_i b^{sigma_i}_i u_i <= a0 for all sign patterns sigma. Indices
        with equal coefficients contribute a fixed term to every row, so the
        zero-uncertainty case degenerates to a single linear constraint.
        """
        k = len(self.b_minus)
        strict = [i for i in range(k) if self.b_minus[i] != self.b_plus[i]]
        fixed = np.array([0.0 if i in strict else self.b_minus[i] for i in range(k)])
        rows = []
        for pattern in product((0, 1), repeat=len(strict)):
            row = -fixed.copy()
            for which, i in zip(pattern, strict):
                row[i] = -(self.b_plus[i] if which else self.b_minus[i])
            rows.append(row)
        return np.array(rows), np.full(len(rows), self.a0)


def hypograph_reformulate(a0, b_minus, b_plus, known_values=None) -> HypographBlock:
    """Fold known components and return the decision-variable block.

    ``known_values`` maps component index -> fixed value (the environment
    rate estimate); those components contribute min(b- v, b+ v) to the
    constant. Raises ValueError when any b_minus exceeds its b_plus.
    """
    b_minus = np.asarray(b_minus, dtype=float)
    b_plus = np.asarray(b_plus, dtype=float)
    if b_minus.shape != b_plus.shape:
        raise ValueError("coefficient vectors must have equal length")
    if np.any(b_minus > b_plus + 1e-15):
        raise ValueError("b_minus must not exceed b_plus")
    known_values = dict(known_values or {})
    a0 = float(a0)
    keep = []
    for i in range(len(b_minus)):
        if i in known_values:
            v = float(known_values[i])
            a0 += min(b_minus[i] * v, b_plus[i] * v)
        else:
            keep.append(i)
    return HypographBlock(a0, b_minus[keep], b_plus[keep])
