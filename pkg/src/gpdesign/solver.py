"""Equality-constrained barrier interior-point solver for log-domain GPs.

Path following on the normalized merit F0(y) - (1/t) * sum log(-F_i(y))
subject to A y = b, where each F is a log-sum-exp block.  Inner iterations
are damped Newton steps on the KKT system with backtracking (Armijo) line
search; the outer loop multiplies t by barrier_mu until the deterministic
gap bound m/t is below tolerance.
Unboundedness is detected through a recession-ray certificate on the Newton
direction, infeasibility through a slack-minimizing phase-I problem.
"""

from __future__ import annotations

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np

from .logdomain import LogConvexProblem, LseBlock, eval_lse

__all__ = ["Status", "SolverConfig", "KktResiduals", "Solution", "solve", "phase1",
           "check_kkt", "GgpSolution", "solve_ggp"]

logger = logging.getLogger("gpdesign.solver")


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class SolverConfig:
    barrier_mu: float = 10.0
    t0: float = 1.0
    newton_tol: float = 1e-10          # on the Newton decrement lambda^2 / 2
    duality_gap_tol: float = 1e-8      # absolute, on m / t
    max_newton: int = 200              # per centering
    ls_alpha: float = 0.25
    ls_beta: float = 0.5
    feasibility_margin: float = 1e-9
    phase1_box: float = 100.0          # |y_j| bound during phase-I (log domain)

    def __post_init__(self):
        if min(self.barrier_mu, self.t0, self.newton_tol, self.duality_gap_tol,
               self.feasibility_margin, self.phase1_box) <= 0 or self.max_newton <= 0:
            raise ValueError("solver config values must be positive")
        if not (0.0 < self.ls_alpha < 0.5):
            raise ValueError("line search alpha must be in (0, 0.5)")
        if not (0.0 < self.ls_beta < 1.0):
            raise ValueError("line search beta must be in (0, 1)")
        if self.barrier_mu <= 1.0:
            raise ValueError("barrier_mu must exceed 1")


@dataclass(frozen=True)
class KktResiduals:
    primal_residual: float      # max_i log f_i at the solution (<= 0 feasible)
    equality_residual: float    # ||A y - b||_inf
    duality_gap: float          # m / t_final certificate


@dataclass
class Solution:
    status: Status
    x: Optional[np.ndarray]
    y: Optional[np.ndarray]
    objective_value: float
    kkt: Optional[KktResiduals]
    iterations: int
    t_final: float = 0.0
    merit_history: List[List[float]] = field(default_factory=list)
    message: str = ""


# ---------------------------------------------------------------------------
# stacked workspace
# ---------------------------------------------------------------------------


class _Work:
    """Pre-stacked matrices for fast repeated evaluation of all blocks."""

    def __init__(self, p: LogConvexProblem):
        self.p = p
        self.n = p.n
        self.A0 = p.objective.A
        self.b0 = p.objective.b
        if p.ineqs:
            self.Ai = np.vstack([blk.A for blk in p.ineqs])
            self.bi = np.concatenate([blk.b for blk in p.ineqs])
            self.slices = []
            lo = 0
            for blk in p.ineqs:
                hi = lo + blk.A.shape[0]
                self.slices.append((lo, hi))
                lo = hi
        else:
            self.Ai = np.zeros((0, self.n))
            self.bi = np.zeros(0)
            self.slices = []
        self.A_full = np.vstack([self.A0, self.Ai])
        self.A_eq = p.A_eq if p.has_eq() else None
        self.b_eq = p.b_eq if p.has_eq() else None
        self.m = len(p.ineqs)

    def block_values(self, y: np.ndarray) -> Tuple[float, np.ndarray]:
        z0 = self.A0 @ y + self.b0
        m0 = float(np.max(z0))
        F0 = m0 + math.log(float(np.sum(np.exp(z0 - m0))))
        F = np.empty(self.m)
        if self.m:
            z = self.Ai @ y + self.bi
            for i, (lo, hi) in enumerate(self.slices):
                zi = z[lo:hi]
                mi = float(np.max(zi))
                F[i] = mi + math.log(float(np.sum(np.exp(zi - mi))))
        return F0, F

    def phi(self, t: float, y: np.ndarray) -> Tuple[float, float]:
        """Barrier merit value and F0; +inf outside the domain.

        The merit is normalized as F0 + (1/t) * barrier so its scale stays
        comparable to the objective at every t; otherwise the Newton
        decrement and line-search decreases drown in float rounding once t
        has grown large.
        """
        F0, F = self.block_values(y)
        if self.m and np.max(F) >= 0.0:
            return math.inf, F0
        val = F0
        if self.m:
            val -= float(np.sum(np.log(-F))) / t
        return val, F0

    def assemble(self, t: float, y: np.ndarray):
        """Merit value, gradient and Hessian of the barrier objective."""
        n = self.n
        z0 = self.A0 @ y + self.b0
        m0 = float(np.max(z0))
        w0 = np.exp(z0 - m0)
        s0 = float(np.sum(w0))
        F0 = m0 + math.log(s0)
        p0 = w0 / s0
        g0 = self.A0.T @ p0

        grad = g0.copy()
        row_w = [p0]
        gmat = [g0]
        gcoef = [-1.0]
        phi = F0

        F = np.empty(self.m)
        if self.m:
            z = self.Ai @ y + self.bi
            for i, (lo, hi) in enumerate(self.slices):
                zi = z[lo:hi]
                mi = float(np.max(zi))
                wi = np.exp(zi - mi)
                si = float(np.sum(wi))
                Fi = mi + math.log(si)
                F[i] = Fi
                if Fi >= 0.0:
                    return math.inf, None, None, F0, F
                pi = wi / si
                gi = self.Ai[lo:hi].T @ pi
                inv = -1.0 / (t * Fi)
                grad += inv * gi
                row_w.append(inv * pi)
                gmat.append(gi)
                gcoef.append((1.0 / (Fi * Fi) + 1.0 / Fi) / t)
                phi -= math.log(-Fi) / t

        w = np.concatenate(row_w)
        H = (self.A_full * w[:, None]).T @ self.A_full
        G = np.array(gmat)
        c = np.array(gcoef)
        H += (G * c[:, None]).T @ G
        H = 0.5 * (H + H.T)
        return phi, grad, H, F0, F

    def is_recession(self, d: np.ndarray) -> bool:
        """True if the ray y + s*d stays feasible forever while the objective
        block tends to -inf: a sound unboundedness certificate."""
        nrm = float(np.linalg.norm(d))
        if nrm == 0.0 or not np.isfinite(nrm):
            return False
        d = d / nrm
        if self.A_eq is not None and self.A_eq.shape[0]:
            if float(np.max(np.abs(self.A_eq @ d))) > 1e-9:
                return False
        if self.m and float(np.max(self.Ai @ d)) > 1e-12:
            return False
        return float(np.max(self.A0 @ d)) <= -1e-9


def _kkt_step(H: np.ndarray, A_eq: Optional[np.ndarray], grad: np.ndarray):
    """Solve the Newton KKT system; perturb once on singularity.

    The Hessian block grows with the barrier parameter while equality rows
    stay O(1), so the bordered system is rescaled (H and grad by 1/|H|,
    compensated in the multiplier block) to keep it well conditioned.
    """
    n = H.shape[0]
    scale = 1.0 / max(1.0, float(np.max(np.abs(H))))
    for attempt in range(2):
        try:
            if A_eq is None or A_eq.shape[0] == 0:
                dy = np.linalg.solve(H, -grad)
            else:
                k = A_eq.shape[0]
                M = np.zeros((n + k, n + k))
                M[:n, :n] = scale * H
                M[:n, n:] = A_eq.T
                M[n:, :n] = A_eq
                rhs = np.concatenate([-scale * grad, np.zeros(k)])
                dy = np.linalg.solve(M, rhs)[:n]
            if np.all(np.isfinite(dy)):
                return dy
        except np.linalg.LinAlgError:
            pass
        H = H + (1e-10 / scale) * np.eye(n)
    return None


def _center(work: _Work, t: float, y: np.ndarray, cfg: SolverConfig,
            stop_when: Optional[Callable[[np.ndarray], bool]] = None):
    """Newton minimization of the barrier merit at fixed t.

    Returns (flag, y, steps, merits) with flag in {"converged", "earlystop",
    "unbounded", "iterlimit", "numfail"}.  stop_when is checked after every
    accepted step so phase-I can bail out the moment feasibility is reached
    instead of chasing a drifting centering minimizer.
    """
    merits: List[float] = []
    if stop_when is not None and stop_when(y):
        return "earlystop", y, 0, merits
    for it in range(cfg.max_newton):
        out = work.assemble(t, y)
        phi, grad, H, F0, F = out
        if not math.isfinite(phi):
            return "numfail", y, it, merits
        merits.append(phi)
        if F0 < -1e30:
            return "unbounded", y, it, merits
        dy = _kkt_step(H, work.A_eq, grad)
        if dy is None:
            return "numfail", y, it, merits
        rate = float(grad @ dy)
        # Newton decrement lambda^2 = g' H^{-1} g = -rate; a positive rate
        # means the KKT solve lost descent to rounding, so fall back to a
        # ridge-damped step which is guaranteed downhill for convex merit
        if rate > 0.0:
            ridge = 1e-12 * max(1.0, float(np.max(np.abs(H))))
            for _ in range(3):
                dy2 = _kkt_step(H + ridge * np.eye(H.shape[0]), work.A_eq, grad)
                if dy2 is not None:
                    r2 = float(grad @ dy2)
                    if r2 < 0.0:
                        dy, rate = dy2, r2
                        break
                ridge *= 1e3
            else:
                return "numfail", y, it, merits
        if 0.5 * (-rate) <= cfg.newton_tol:
            return "converged", y, it, merits
        if work.is_recession(dy):
            return "unbounded", y, it, merits
        step = 1.0
        accepted = False
        while step >= 1e-18:
            y_new = y + step * dy
            phi_new, _ = work.phi(t, y_new)
            if phi_new <= phi + cfg.ls_alpha * step * rate:
                accepted = True
                break
            step *= cfg.ls_beta
        if not accepted:
            # no admissible decrease left at machine precision
            return "converged", y, it + 1, merits
        y = y_new
        if stop_when is not None and stop_when(y):
            return "earlystop", y, it + 1, merits
    return "iterlimit", y, cfg.max_newton, merits


def _barrier(work: _Work, y0: np.ndarray, cfg: SolverConfig,
             early_stop: Optional[Callable[[np.ndarray], bool]] = None):
    """Outer path-following loop.  Returns (flag, y, t_final, total_steps,
    merit_history)."""
    y = y0
    t = cfg.t0
    total = 0
    history: List[List[float]] = []
    if work.m == 0:
        flag, y, steps, merits = _center(work, 1.0, y, cfg)
        history.append(merits)
        logger.info("outer iteration: t=%.3e gap=%.3e newton_steps=%d", 1.0, 0.0, steps)
        return flag, y, math.inf, steps, history
    while True:
        flag, y, steps, merits = _center(work, t, y, cfg, stop_when=early_stop)
        total += steps
        history.append(merits)
        gap = work.m / t
        logger.info("outer iteration: t=%.3e gap=%.3e newton_steps=%d", t, gap, steps)
        if flag != "converged":
            return flag, y, t, total, history
        if gap <= cfg.duality_gap_tol:
            return "converged", y, t, total, history
        t *= cfg.barrier_mu


def _eq_start(p: LogConvexProblem) -> np.ndarray:
    if p.has_eq():
        y0, *_ = np.linalg.lstsq(p.A_eq, p.b_eq, rcond=None)
        return y0
    return np.zeros(p.n)


def _lift_start(work: _Work, y: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    """Raise variables that only relax inequality blocks (epigraph-style
    auxiliaries and one-sided variables) until their blocks are satisfied.

    Minimal lifts keep epigraph variables tight, which matters when the rest
    of the feasible set has empty interior and the start point itself may be
    returned as the solution.  A deeper lift is kept only when it strictly
    improves the worst violation overall.
    """
    if work.m == 0 or work.n == 0:
        return y
    margin = cfg.feasibility_margin
    eligible = []
    for j in range(work.n):
        col = work.Ai[:, j]
        if np.all(col <= 0) and np.any(col < 0):
            if work.A_eq is None or not np.any(work.A_eq[:, j]):
                eligible.append(j)
    if not eligible:
        return y
    y = y.copy()

    def blocks_of(j: int):
        out = []
        for i, (lo, hi) in enumerate(work.slices):
            if np.any(work.Ai[lo:hi, j]):
                out.append(i)
        return out

    def block_max(y_now: np.ndarray, idx) -> float:
        _, F = work.block_values(y_now)
        return float(np.max(F[idx])) if len(idx) else -math.inf

    for _ in range(8):
        _, F = work.block_values(y)
        if float(np.max(F)) <= -margin:
            break
        progressed = False
        for j in eligible:
            jb = blocks_of(j)
            if not jb or block_max(y, jb) <= -2.0 * margin:
                continue

            def f(delta: float) -> float:
                z = y.copy()
                z[j] += delta
                return block_max(z, jb)

            hi = 1.0
            while f(hi) > -2.0 * margin and hi < 80.0:
                hi *= 2.0
            if f(hi) > -2.0 * margin:
                continue
            lo = 0.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if f(mid) <= -2.0 * margin:
                    hi = mid
                else:
                    lo = mid
            y[j] += hi
            progressed = True
            # optional deeper lift, kept only if it helps globally
            _, Fc = work.block_values(y)
            cur = float(np.max(Fc))
            extra = 1.0
            while f(extra) > -0.5 and extra < 80.0:
                extra *= 2.0
            z = y.copy()
            z[j] += extra
            _, Fz = work.block_values(z)
            if float(np.max(Fz)) < cur - margin:
                y = z
        if not progressed:
            break
    return y


def _eq_residual(p: LogConvexProblem, y: np.ndarray) -> float:
    if p.has_eq():
        return float(np.max(np.abs(p.A_eq @ y - p.b_eq)))
    return 0.0


def phase1(p: LogConvexProblem, cfg: Optional[SolverConfig] = None,
           y0: Optional[np.ndarray] = None):
    """Find a strictly feasible point by minimizing a shared slack s subject
    to F_i(y) <= s, with s >= -1 and a box |y_j| <= phase1_box keeping the
    search region compact (otherwise directions that only relax constraints
    let the centering iterates drift without bound).

    Returns (kind, y, slack) with kind in {"feasible", "boundary",
    "infeasible", "failed"}; y is the best point found, slack = max_i F_i(y).
    """
    cfg = cfg or SolverConfig()
    n = p.n
    base = _Work(p)
    if y0 is None:
        y0 = _lift_start(base, _eq_start(p), cfg)
    _, F = base.block_values(y0)
    if p.m == 0 or float(np.max(F)) <= -cfg.feasibility_margin:
        return "feasible", y0, (float(np.max(F)) if p.m else -math.inf)

    box = max(cfg.phase1_box, 2.0 * float(np.max(np.abs(y0))) if n else cfg.phase1_box)
    blocks = []
    for blk in p.ineqs:
        A = np.hstack([blk.A, -np.ones((blk.A.shape[0], 1))])
        blocks.append(LseBlock(A, blk.b.copy()))
    for j in range(n):
        for sign in (1.0, -1.0):
            row = np.zeros((1, n + 1))
            row[0, j] = sign
            row[0, n] = -1.0
            blocks.append(LseBlock(row, np.array([-box])))
    blocks.append(LseBlock(np.hstack([np.zeros((1, n)), -np.ones((1, 1))]), np.array([-1.0])))
    obj = LseBlock(np.hstack([np.zeros((1, n)), np.ones((1, 1))]), np.zeros(1))
    A_eq = None
    b_eq = None
    if p.has_eq():
        A_eq = np.hstack([p.A_eq, np.zeros((p.A_eq.shape[0], 1))])
        b_eq = p.b_eq
    aux = LogConvexProblem(n=n + 1, names=p.names + ["_slack"], objective=obj,
                           ineqs=blocks, A_eq=A_eq, b_eq=b_eq)
    work = _Work(aux)
    s0 = max(float(np.max(F)) + 1.0, -0.5)
    y_ext = np.concatenate([y0, [s0]])
    margin = cfg.feasibility_margin
    best = {"slack": math.inf, "y": y0}

    def early(y_ext_now: np.ndarray) -> bool:
        _, Fi = base.block_values(y_ext_now[:n])
        slack_now = float(np.max(Fi))
        if slack_now < best["slack"]:
            best["slack"] = slack_now
            best["y"] = y_ext_now[:n].copy()
        # stop on comfortable strict feasibility, or once the slack variable
        # itself is essentially zero (empty-interior problems never go
        # strictly inside)
        return slack_now <= -10.0 * margin or float(y_ext_now[n]) <= 0.5 * margin

    early(y_ext)
    flag, y_ext, t_final, steps, _ = _barrier(work, y_ext, cfg, early_stop=early)
    y_found, slack = best["y"], best["slack"]
    if flag == "converged" and slack > margin:
        # full convergence without triggering a stop: certify the slack bound
        gap = work.m / t_final if math.isfinite(t_final) else 0.0
        if float(y_ext[n]) - gap > 0.0:
            return "infeasible", y_found, slack
    if slack <= -margin:
        return "feasible", y_found, slack
    if slack <= margin:
        return "boundary", y_found, slack
    return "failed", y_found, slack


def solve(p: LogConvexProblem, cfg: Optional[SolverConfig] = None) -> Solution:
    """Solve the log-domain problem; returns a Solution with x = exp(y)."""
    cfg = cfg or SolverConfig()
    if not p.eq_consistent:
        return Solution(Status.INFEASIBLE, None, None, math.nan, None, 0,
                        message="equality constraints are inconsistent")
    work = _Work(p)
    y0 = _lift_start(work, _eq_start(p), cfg)

    if p.m:
        _, F = work.block_values(y0)
        if float(np.max(F)) > -cfg.feasibility_margin:
            kind, y1, slack = phase1(p, cfg, y0=y0)
            if kind == "infeasible":
                return Solution(Status.INFEASIBLE, None, None, math.nan,
                                KktResiduals(slack, _eq_residual(p, y1), math.nan), 0,
                                message="phase-I slack has a positive lower bound "
                                        "(within |log x_j| <= %g)" % cfg.phase1_box)
            if kind == "failed":
                return Solution(Status.NUMERICAL_FAILURE, None, None, math.nan, None, 0,
                                message="phase-I could not certify feasibility "
                                        "(best violation %.3e)" % slack)
            if kind == "boundary":
                # feasible set has (numerically) empty interior; the phase-I
                # point is the whole feasible set up to the margin
                F0b, Fb = work.block_values(y1)
                kkt = KktResiduals(float(np.max(Fb)), _eq_residual(p, y1), abs(slack))
                return Solution(Status.OPTIMAL, np.exp(y1), y1, math.exp(F0b), kkt, 0,
                                t_final=math.inf,
                                message="feasible set has empty interior; returning the phase-I point")
            y0 = y1

    flag, y, t_final, steps, history = _barrier(work, y0, cfg)
    F0, F = work.block_values(y)
    primal = float(np.max(F)) if p.m else -math.inf
    kkt = KktResiduals(primal, _eq_residual(p, y),
                       (work.m / t_final) if (p.m and math.isfinite(t_final)) else 0.0)
    if flag == "unbounded":
        # the iterate may have run far along the ray; exp overflowing to
        # inf is fine for a certificate, so keep the warning quiet
        with np.errstate(over="ignore"):
            vals = np.exp(y)
        return Solution(Status.UNBOUNDED, vals, y, 0.0, kkt, steps, t_final, history,
                        message="objective decreases without bound along a feasible ray")
    if flag == "iterlimit":
        return Solution(Status.ITERATION_LIMIT, np.exp(y), y, math.exp(F0), kkt, steps,
                        t_final, history, message="Newton iteration limit reached")
    if flag == "numfail":
        return Solution(Status.NUMERICAL_FAILURE, np.exp(y), y, math.exp(F0), kkt, steps,
                        t_final, history, message="singular KKT system after perturbation retry")
    ok = (primal <= cfg.feasibility_margin and kkt.equality_residual <= 1e-9
          and kkt.duality_gap <= cfg.duality_gap_tol)
    if not ok:
        return Solution(Status.NUMERICAL_FAILURE, np.exp(y), y, math.exp(F0), kkt, steps,
                        t_final, history, message="KKT residuals above tolerance at exit")
    return Solution(Status.OPTIMAL, np.exp(y), y, math.exp(F0), kkt, steps, t_final, history)


def check_kkt(p: LogConvexProblem, sol: Solution) -> KktResiduals:
    """Recompute KKT residuals of an Optimal solution from scratch."""
    if sol.status != Status.OPTIMAL:
        raise ValueError("check_kkt requires an Optimal solution, got %s" % sol.status.value)
    if sol.x is None:
        raise ValueError("solution has no point")
    y = np.log(np.asarray(sol.x, dtype=float))
    work = _Work(p)
    _, F = work.block_values(y)
    primal = float(np.max(F)) if p.m else -math.inf
    eq_res = _eq_residual(p, y)
    gap = (work.m / sol.t_final) if (p.m and sol.t_final and math.isfinite(sol.t_final)) else 0.0
    return KktResiduals(primal, eq_res, gap)


@dataclass(frozen=True)
class GgpSolution:
    """End-to-end result: original-variable values plus the raw log-domain
    solution (KKT residuals, iteration counts, merit history)."""

    status: Status
    objective_value: float
    values: "OrderedDict[str, float]"
    raw: Solution
    names: Tuple[str, ...]

    def __getitem__(self, name: str) -> float:
        return self.values[name]


def solve_ggp(p, cfg: Optional[SolverConfig] = None) -> GgpSolution:
    """Lower a generalized problem to GP form, pass to the log domain, solve,
    and map the point back onto the problem's own variables (auxiliary
    epigraph variables are dropped)."""
    from .lower import lower_to_gp
    from .logdomain import to_log_domain

    gp = lower_to_gp(p)
    lc = to_log_domain(gp)
    sol = solve(lc, cfg)
    names = tuple(v.name for v in p.registry)
    values: "OrderedDict[str, float]" = OrderedDict()
    if sol.x is not None:
        pos = {nm: i for i, nm in enumerate(lc.names)}
        for nm in names:
            values[nm] = float(sol.x[pos[nm]])
    return GgpSolution(sol.status, sol.objective_value, values, sol, names)
