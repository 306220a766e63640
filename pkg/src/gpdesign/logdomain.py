"""Log-domain convex form of a standard GP.

Substituting x = e^y turns each posynomial constraint f(x) <= 1 into
log sum_k exp(a_k . y + b_k) <= 0, a smooth convex (log-sum-exp) block, and
each monomial equality into an affine row.  This module builds that form and
provides numerically stable value/gradient/Hessian evaluation of a block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .lower import GpProblem
from .expr import Monomial, Posynomial

__all__ = ["LseBlock", "LogConvexProblem", "to_log_domain", "eval_lse"]


@dataclass(frozen=True)
class LseBlock:
    """Rows (A, b) representing log sum_k exp(A[k] . y + b[k])."""

    A: np.ndarray  # (k, n)
    b: np.ndarray  # (k,)

    def __post_init__(self):
        if self.A.ndim != 2 or self.b.ndim != 1 or self.A.shape[0] != self.b.shape[0]:
            raise ValueError("inconsistent block shapes %s %s" % (self.A.shape, self.b.shape))
        if self.A.shape[0] == 0:
            raise ValueError("empty block")


@dataclass
class LogConvexProblem:
    """Convex log-domain problem: minimize LSE_0(y) s.t. LSE_i(y) <= 0, A y = b."""

    n: int
    names: List[str]
    objective: LseBlock
    ineqs: List[LseBlock] = field(default_factory=list)
    A_eq: Optional[np.ndarray] = None  # full row rank after preprocessing
    b_eq: Optional[np.ndarray] = None
    eq_consistent: bool = True

    @property
    def m(self) -> int:
        return len(self.ineqs)

    def has_eq(self) -> bool:
        return self.A_eq is not None and self.A_eq.shape[0] > 0


def _rows_from_posy(p: Posynomial, index) -> LseBlock:
    k = len(p.terms)
    n = len(index)
    A = np.zeros((k, n))
    b = np.zeros(k)
    for r, t in enumerate(p.terms):
        b[r] = math.log(t.c)
        for name, a in t.exps.items():
            A[r, index[name]] = a
    return LseBlock(A, b)


def to_log_domain(gp: GpProblem) -> LogConvexProblem:
    """Map monomial terms c*prod x^a to affine rows (a, log c); equalities
    g = 1 become affine equations.  Redundant equality rows are removed; an
    inconsistent equality system is flagged rather than raised, so the solver
    can report Infeasible."""
    names = gp.names()
    index = {n: i for i, n in enumerate(names)}
    n = len(names)

    objective = _rows_from_posy(gp.objective, index)
    ineqs = [_rows_from_posy(f, index) for f in gp.ineq]

    A_eq = None
    b_eq = None
    consistent = True
    if gp.eq:
        m = len(gp.eq)
        A = np.zeros((m, n))
        b = np.zeros(m)
        for r, g in enumerate(gp.eq):
            if not isinstance(g, Monomial):
                raise TypeError("equality must be a monomial")
            b[r] = -math.log(g.c)
            for name, a in g.exps.items():
                A[r, index[name]] = a
        # remove redundant rows via SVD; detect inconsistency by checking
        # whether the least-squares solution satisfies the original rows
        # (if it does not, no point does)
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        tol = max(A.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
        r = int(np.sum(s > max(tol, 1e-13)))
        c = U.T @ b
        if r > 0:
            A_eq = Vt[:r]
            b_eq = c[:r] / s[:r]
            resid = A @ (A_eq.T @ b_eq) - b
        else:
            # all-zero rows: 0 = b, consistent only if b ~ 0
            A_eq = np.zeros((0, n))
            b_eq = np.zeros(0)
            resid = b
        if np.max(np.abs(resid)) > 1e-9 * max(1.0, float(np.linalg.norm(b))):
            consistent = False

    return LogConvexProblem(
        n=n,
        names=names,
        objective=objective,
        ineqs=ineqs,
        A_eq=A_eq,
        b_eq=b_eq,
        eq_consistent=consistent,
    )


def eval_lse(block: LseBlock, y: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient and Hessian of log sum exp(A y + b), max-shifted so
    overflow cannot occur.

    The gradient is the softmax-weighted average of the rows and the Hessian
    is the softmax-weighted covariance of the rows, hence symmetric PSD.
    """
    A, b = block.A, block.b
    z = A @ y + b
    zmax = np.max(z)
    w = np.exp(z - zmax)
    s = float(np.sum(w))
    value = zmax + math.log(s)
    p = w / s
    grad = A.T @ p
    if A.shape[0] == 1:
        hess = np.zeros((A.shape[1], A.shape[1]))
    else:
        centered = A - grad[None, :]
        hess = centered.T @ (centered * p[:, None])
    return value, grad, hess
