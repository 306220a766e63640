"""Monomial and posynomial model fitting from sampled data.

A monomial c * prod x_j^a_j is affine in log coordinates, so the monomial
fit is linear least squares of log f against log x.  Posynomial fits with
K terms minimize the same log-space residual with Gauss-Newton plus
Levenberg damping; the problem is nonconvex, so several seeded starts are
run and the best kept.  One start always embeds the (K-1)-term solution
as an exact K-term model (largest term split in two), which makes the
achieved residual non-increasing in K by construction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from .expr import Monomial, Posynomial

__all__ = [
    "FitError",
    "FitDataset",
    "FitConfig",
    "FitResult",
    "load_dataset",
    "parse_dataset",
    "fit_monomial",
    "fit_posynomial",
]

COEFF_FLOOR = 1e-12


class FitError(ValueError):
    """Raised for bad datasets or unfittable designs."""


@dataclass(frozen=True)
class FitDataset:
    """Positive samples (x_s, f_s) with named coordinates."""

    names: Tuple[str, ...]
    X: np.ndarray  # (samples, variables)
    f: np.ndarray  # (samples,)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        f = np.asarray(self.f, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "f", f)
        if X.ndim != 2 or f.ndim != 1 or X.shape[0] != f.shape[0]:
            raise FitError("dataset needs X of shape (s, n) and f of shape (s,)")
        if X.shape[1] != len(self.names):
            raise FitError("dataset has %d columns but %d names"
                           % (X.shape[1], len(self.names)))
        if len(set(self.names)) != len(self.names):
            raise FitError("duplicate variable names in dataset")
        if X.shape[0] == 0:
            raise FitError("dataset is empty")
        if not np.all(np.isfinite(X)) or not np.all(X > 0):
            raise FitError("all sample coordinates must be positive and finite")
        if not np.all(np.isfinite(f)) or not np.all(f > 0):
            raise FitError("all sample values must be positive and finite")

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]


def parse_dataset(text: str) -> FitDataset:
    """CSV whose final column is named f; the rest are variable columns."""
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise FitError("data file is empty") from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[-1] != "f":
        raise FitError("data file needs variable columns followed by a final 'f' column")
    names = tuple(header[:-1])
    rows: List[List[float]] = []
    for rownum, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise FitError("row %d has %d fields, expected %d"
                           % (rownum, len(row), len(header)))
        try:
            rows.append([float(c) for c in row])
        except ValueError:
            raise FitError("row %d contains a non-numeric field" % rownum) from None
    if not rows:
        raise FitError("data file has no samples")
    arr = np.array(rows)
    return FitDataset(names, arr[:, :-1], arr[:, -1])


def load_dataset(path) -> FitDataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_dataset(fh.read())


@dataclass(frozen=True)
class FitResult:
    """Fitted model with its RMS log-space residual.

    `converged` is False when Gauss-Newton ran out of iterations without
    meeting the step tolerance; the model is still the best one seen.
    """

    model: Union[Monomial, Posynomial]
    residual: float
    converged: bool


@dataclass(frozen=True)
class FitConfig:
    n_starts: int = 8
    max_iter: int = 200
    seed: int = 0
    tol: float = 1e-14

    def __post_init__(self):
        if self.n_starts < 1:
            raise FitError("n_starts must be >= 1")
        if self.max_iter < 1:
            raise FitError("max_iter must be >= 1")


def _rms(r: np.ndarray) -> float:
    return float(np.sqrt(np.mean(r * r)))


def fit_monomial(d: FitDataset) -> FitResult:
    """Least-squares affine fit of log f against log x.

    Deterministic: the same dataset always produces the same model.
    Rank deficiency of the log-space design is reported by naming the
    offending columns.
    """
    if d.n_samples < d.n + 1:
        raise FitError("need at least %d samples for %d variables, got %d"
                       % (d.n + 1, d.n, d.n_samples))
    U = np.log(d.X)
    v = np.log(d.f)
    D = np.hstack([np.ones((d.n_samples, 1)), U])
    _, R, piv = scipy.linalg.qr(D, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    scale = diag[0] if diag.size else 0.0
    rank = int(np.sum(diag > max(D.shape) * np.finfo(float).eps * scale))
    if rank < D.shape[1]:
        labels = ["constant" if j == 0 else d.names[j - 1] for j in piv[rank:]]
        raise FitError(
            "log-space design is rank deficient; collinear column(s): %s"
            % ", ".join(sorted(labels)))
    theta, *_ = np.linalg.lstsq(D, v, rcond=None)
    c = math.exp(theta[0])
    exps = {d.names[j]: float(theta[1 + j]) for j in range(d.n)}
    model = Monomial(max(c, COEFF_FLOOR), exps)
    return FitResult(model, _rms(D @ theta - v), True)


def _model_residual(b: np.ndarray, A: np.ndarray, U: np.ndarray,
                    v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Residual r_s = log(sum_k exp(b_k + a_k . u_s)) - v_s and softmax
    weights (samples x terms) used by the Jacobian."""
    Z = U @ A.T + b[None, :]
    m = np.max(Z, axis=1, keepdims=True)
    E = np.exp(Z - m)
    s = np.sum(E, axis=1)
    pred = m[:, 0] + np.log(s)
    P = E / s[:, None]
    return pred - v, P


def _gauss_newton(b0: np.ndarray, A0: np.ndarray, U: np.ndarray, v: np.ndarray,
                  cfg: FitConfig) -> Tuple[np.ndarray, np.ndarray, float, bool]:
    """Levenberg-damped Gauss-Newton on (b, A); returns best point, SSE
    and a convergence flag."""
    K, n = A0.shape
    s = U.shape[0]
    b, A = b0.copy(), A0.copy()
    r, P = _model_residual(b, A, U, v)
    sse = float(r @ r)
    lam = 1e-3
    converged = False
    for _ in range(cfg.max_iter):
        # Jacobian: d pred / d b_k = P[:, k]; d pred / d A_kj = P[:, k] * U[:, j]
        J = np.empty((s, K * (1 + n)))
        J[:, :K] = P
        for k in range(K):
            J[:, K + k * n:K + (k + 1) * n] = P[:, k:k + 1] * U
        g = J.T @ r
        JJ = J.T @ J
        accepted = False
        for _ in range(30):
            try:
                delta = np.linalg.solve(JJ + lam * np.eye(JJ.shape[0]), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            b_new = b + delta[:K]
            A_new = A + delta[K:].reshape(K, n)
            np.clip(b_new, math.log(1e-300), math.log(1e300), out=b_new)
            r_new, P_new = _model_residual(b_new, A_new, U, v)
            sse_new = float(r_new @ r_new)
            if np.isfinite(sse_new) and sse_new <= sse:
                improvement = sse - sse_new
                b, A, r, P, sse = b_new, A_new, r_new, P_new, sse_new
                lam = max(lam / 3.0, 1e-12)
                accepted = True
                if improvement <= cfg.tol * max(1.0, sse) and \
                        float(np.linalg.norm(delta)) <= 1e-10:
                    converged = True
                break
            lam *= 10.0
        if not accepted or converged:
            converged = converged or not accepted  # stall = local stationarity
            break
    return b, A, sse, converged


def fit_posynomial(d: FitDataset, K: int,
                   cfg: Optional[FitConfig] = None) -> FitResult:
    """Best K-term posynomial fit in RMS log-space error.

    K = 1 delegates to the closed-form monomial fit.  Multi-starts are
    seeded and reduced deterministically (best SSE, ties by start index).
    """
    if K < 1:
        raise FitError("K must be >= 1, got %d" % K)
    if K == 1:
        return fit_monomial(d)
    cfg = cfg or FitConfig()
    U = np.log(d.X)
    v = np.log(d.f)
    n = d.n

    starts: List[Tuple[np.ndarray, np.ndarray]] = []
    # 1) nested: (K-1)-term solution with its largest term split in two.
    #    The split model is pointwise identical, so this start's SSE equals
    #    the (K-1)-term SSE exactly and the final residual cannot be worse.
    prev = fit_posynomial(d, K - 1, cfg)
    prev_terms = prev.model.terms if isinstance(prev.model, Posynomial) \
        else [prev.model]
    idx = {name: j for j, name in enumerate(d.names)}
    rows: List[Tuple[float, np.ndarray]] = []
    for term in prev_terms:
        a_row = np.zeros(n)
        for name, a in term.exps.items():
            a_row[idx[name]] = a
        rows.append((math.log(term.c), a_row))
    # duplicate-exponent terms may have merged, so split the largest term
    # in half (pointwise-identical model) until K rows exist
    while len(rows) < K:
        big = max(range(len(rows)), key=lambda k: rows[k][0])
        carry, a_row = rows[big]
        rows[big] = (carry + math.log(0.5), a_row)
        rows.append((carry + math.log(0.5), a_row.copy()))
    b_nest = np.array([bk for bk, _ in rows])
    A_nest = np.vstack([ak for _, ak in rows])
    starts.append((b_nest, A_nest))
    # 2) monomial-informed: shared affine fit, perturbed per term.
    mono = fit_monomial(d).model
    b_m = np.full(K, math.log(mono.c) - math.log(K))
    A_m = np.tile(np.array([mono.exps.get(nm, 0.0) for nm in d.names]), (K, 1))
    rng0 = np.random.Generator(np.random.Philox(key=[cfg.seed, 0]))
    starts.append((b_m + rng0.normal(0, 0.1, K), A_m + rng0.normal(0, 0.1, (K, n))))
    # 3) random starts around the data scale.
    base = float(np.mean(v)) - math.log(K)
    for i in range(1, max(1, cfg.n_starts - 1)):
        rng = np.random.Generator(np.random.Philox(key=[cfg.seed, i]))
        starts.append((base + rng.normal(0, 1.0, K), rng.normal(0, 1.0, (K, n))))

    best: Optional[Tuple[float, int, np.ndarray, np.ndarray, bool]] = None
    for i, (b0, A0) in enumerate(starts):
        b, A, sse, conv = _gauss_newton(np.asarray(b0, dtype=float),
                                        np.asarray(A0, dtype=float), U, v, cfg)
        if best is None or sse < best[0]:
            best = (sse, i, b, A, conv)
    assert best is not None
    sse, _, b, A, conv = best
    terms = [Monomial(max(math.exp(b[k]), COEFF_FLOOR),
                      {d.names[j]: float(A[k, j]) for j in range(n)})
             for k in range(K)]
    model = Posynomial(terms)
    return FitResult(model, math.sqrt(sse / d.n_samples), conv)
