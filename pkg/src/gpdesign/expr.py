"""Expression algebra for monomials, posynomials, and generalized posynomials.

A monomial here is c * prod_j x_j^a_j with c > 0 and arbitrary real exponents,
a posynomial is a sum of monomials, and a generalized posynomial is anything
built from posynomials by addition, multiplication, powers (>= 1 on
non-monomials), and pointwise maximum.  Everything is immutable after
construction and safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "ModelingError",
    "DomainError",
    "VarId",
    "Monomial",
    "Posynomial",
    "GenExpr",
    "Posy",
    "Sum",
    "Prod",
    "Pow",
    "Max",
    "var",
    "const",
    "as_posynomial",
    "as_genexpr",
    "posy_add",
    "posy_mul",
    "posy_pow",
    "max_of",
    "GgpProblem",
    "make_registry",
]

SIG_DIGITS = 12


class ModelingError(ValueError):
    """Raised for structurally invalid expressions or unbound variables."""


class DomainError(ValueError):
    """Raised when an expression is evaluated outside the positive orthant."""


def _round_sig(v: float, digits: int = SIG_DIGITS) -> float:
    if v == 0.0 or not math.isfinite(v):
        return v
    return round(v, digits - 1 - int(math.floor(math.log10(abs(v)))))


@dataclass(frozen=True)
class VarId:
    """A named optimization variable with a dense per-problem index."""

    index: int
    name: str

    def __post_init__(self):
        if self.index < 0:
            raise ModelingError("variable index must be nonnegative")
        if not self.name:
            raise ModelingError("variable name must be nonempty")


Scalar = Union[int, float]


class Monomial:
    """c * prod_j x_j^a_j with c > 0; exponents stored sparsely by name."""

    __slots__ = ("c", "exps", "_key")

    def __init__(self, c: float, exps: Mapping[str, float] | None = None):
        c = float(c)
        if not (c > 0.0) or not math.isfinite(c):
            raise ModelingError("monomial coefficient must be positive and finite, got %r" % c)
        clean: Dict[str, float] = {}
        for name, a in (exps or {}).items():
            a = float(a)
            if not math.isfinite(a):
                raise ModelingError("exponent of %r is not finite" % name)
            if a != 0.0:
                clean[name] = a
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "exps", clean)
        object.__setattr__(
            self,
            "_key",
            tuple(sorted((n, _round_sig(a)) for n, a in clean.items())),
        )

    def __setattr__(self, name, value):
        raise AttributeError("Monomial is immutable")

    @property
    def key(self) -> Tuple[Tuple[str, float], ...]:
        """Canonical exponent-vector key used for term merging."""
        return self._key

    def variables(self) -> frozenset:
        return frozenset(self.exps)

    def eval(self, x: Mapping[str, float]) -> float:
        acc = math.log(self.c)
        for name, a in self.exps.items():
            try:
                v = x[name]
            except KeyError:
                raise ModelingError("variable %r is not bound" % name) from None
            if not (v > 0.0):
                raise DomainError("variable %r must be positive, got %r" % (name, v))
            acc += a * math.log(v)
        return math.exp(acc)

    def eval_many(self, X: np.ndarray, index: Mapping[str, int]) -> np.ndarray:
        out = np.full(X.shape[0], self.c)
        for name, a in self.exps.items():
            if name not in index:
                raise ModelingError("variable %r is not bound" % name)
            out = out * X[:, index[name]] ** a
        return out

    # algebra -----------------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            other = const(other)
        if isinstance(other, Monomial):
            exps = dict(self.exps)
            for n, a in other.exps.items():
                exps[n] = exps.get(n, 0.0) + a
            return Monomial(self.c * other.c, exps)
        if isinstance(other, (Posynomial, GenExpr)):
            return as_genexpr(self) * other if isinstance(other, GenExpr) else Posynomial([self]) * other
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            other = const(other)
        if isinstance(other, Monomial):
            return self * other ** -1.0
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, (int, float)):
            return const(other) * self ** -1.0
        if isinstance(other, Posynomial):
            return other * self ** -1.0
        return NotImplemented

    def __pow__(self, p: float):
        p = float(p)
        return Monomial(self.c ** p, {n: a * p for n, a in self.exps.items()})

    def __add__(self, other):
        return Posynomial([self]) + other

    __radd__ = __add__

    def __eq__(self, other):
        return (
            isinstance(other, Monomial)
            and self._key == other._key
            and self.c == other.c
        )

    def __hash__(self):
        return hash((self.c, self._key))

    def __repr__(self):
        if not self.exps:
            return "Monomial(%g)" % self.c
        body = "*".join(
            "%s^%g" % (n, a) if a != 1 else n for n, a in sorted(self.exps.items())
        )
        return "Monomial(%g*%s)" % (self.c, body)


class Posynomial:
    """Nonempty sum of monomials; terms with equal exponent vectors are merged."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Monomial]):
        merged: Dict[tuple, Monomial] = {}
        for t in terms:
            if not isinstance(t, Monomial):
                raise ModelingError("posynomial terms must be monomials, got %r" % (t,))
            k = t.key
            if k in merged:
                prev = merged[k]
                merged[k] = Monomial(prev.c + t.c, prev.exps)
            else:
                merged[k] = t
        if not merged:
            raise ModelingError("posynomial needs at least one term")
        object.__setattr__(self, "terms", tuple(merged[k] for k in sorted(merged)))

    def __setattr__(self, name, value):
        raise AttributeError("Posynomial is immutable")

    def variables(self) -> frozenset:
        out = frozenset()
        for t in self.terms:
            out = out | t.variables()
        return out

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def as_monomial(self) -> Monomial:
        if not self.is_monomial():
            raise ModelingError("posynomial with %d terms is not a monomial" % len(self.terms))
        return self.terms[0]

    def eval(self, x: Mapping[str, float]) -> float:
        return sum(t.eval(x) for t in self.terms)

    def eval_many(self, X: np.ndarray, index: Mapping[str, int]) -> np.ndarray:
        out = self.terms[0].eval_many(X, index)
        for t in self.terms[1:]:
            out = out + t.eval_many(X, index)
        return out

    # algebra -----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = const(other)
        if isinstance(other, Monomial):
            other = Posynomial([other])
        if isinstance(other, Posynomial):
            return Posynomial(self.terms + other.terms)
        if isinstance(other, GenExpr):
            return as_genexpr(self) + other
        return NotImplemented

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            other = const(other)
        if isinstance(other, Monomial):
            other = Posynomial([other])
        if isinstance(other, Posynomial):
            return Posynomial([a * b for a in self.terms for b in other.terms])
        if isinstance(other, GenExpr):
            return as_genexpr(self) * other
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            other = const(other)
        if isinstance(other, Monomial):
            return self * other ** -1.0
        return NotImplemented

    def __pow__(self, p):
        return posy_pow(self, p)

    def __eq__(self, other):
        return isinstance(other, Posynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __repr__(self):
        return "Posynomial(%s)" % " + ".join(repr(t)[9:-1] for t in self.terms)


def var(name: str) -> Monomial:
    """Unit monomial for a single variable."""
    return Monomial(1.0, {name: 1.0})


def const(v: Scalar) -> Monomial:
    return Monomial(float(v), {})


def as_posynomial(f) -> Posynomial:
    if isinstance(f, Posynomial):
        return f
    if isinstance(f, Monomial):
        return Posynomial([f])
    if isinstance(f, (int, float)):
        return Posynomial([const(f)])
    if isinstance(f, Posy):
        return f.posy
    raise ModelingError("cannot interpret %r as a posynomial" % (f,))


def posy_add(a, b) -> Posynomial:
    return as_posynomial(a) + as_posynomial(b)


def posy_mul(a, b) -> Posynomial:
    return as_posynomial(a) * as_posynomial(b)


def posy_pow(f, p: float):
    """Power of a posynomial.

    Monomials accept any real power.  Multi-term posynomials accept only
    integer powers >= 1 (expanded by repeated multiplication); anything else
    is not a generalized posynomial in closed form and is rejected.
    """
    p = float(p)
    if isinstance(f, Monomial):
        return f ** p
    f = as_posynomial(f)
    if f.is_monomial():
        return f.as_monomial() ** p
    if p == int(p) and p >= 1:
        out = f
        for _ in range(int(p) - 1):
            out = out * f
        return out
    raise ModelingError(
        "power %g of a %d-term posynomial is not closed form; use a Pow node" % (p, len(f.terms))
    )


# ---------------------------------------------------------------------------
# Generalized expressions
# ---------------------------------------------------------------------------


class GenExpr:
    """Base class for generalized-posynomial expression trees."""

    __slots__ = ()

    def eval(self, x: Mapping[str, float]) -> float:
        raise NotImplementedError

    def eval_many(self, X: np.ndarray, index: Mapping[str, int]) -> np.ndarray:
        raise NotImplementedError

    def variables(self) -> frozenset:
        raise NotImplementedError

    def children(self) -> Sequence["GenExpr"]:
        return ()

    def __add__(self, other):
        return Sum([self, as_genexpr(other)])

    __radd__ = __add__

    def __mul__(self, other):
        return Prod([self, as_genexpr(other)])

    __rmul__ = __mul__

    def __pow__(self, p):
        return Pow(self, p)


class Posy(GenExpr):
    """Leaf node wrapping a plain posynomial."""

    __slots__ = ("posy",)

    def __init__(self, posy):
        object.__setattr__(self, "posy", as_posynomial(posy))

    def __setattr__(self, name, value):
        raise AttributeError("Posy is immutable")

    def eval(self, x):
        return self.posy.eval(x)

    def eval_many(self, X, index):
        return self.posy.eval_many(X, index)

    def variables(self):
        return self.posy.variables()

    def __repr__(self):
        return "Posy(%r)" % (self.posy,)


def as_genexpr(f) -> GenExpr:
    if isinstance(f, GenExpr):
        return f
    return Posy(as_posynomial(f))


def _fold(children: List[GenExpr]) -> List[GenExpr]:
    """Flatten nested Sum/Prod of the same kind is done by callers; here we
    just coerce."""
    return [as_genexpr(c) for c in children]


class Sum(GenExpr):
    __slots__ = ("parts",)

    def __new__(cls, children):
        children = _fold(list(children))
        if not children:
            raise ModelingError("empty sum")
        flat: List[GenExpr] = []
        for c in children:
            if isinstance(c, Sum):
                flat.extend(c.parts)
            else:
                flat.append(c)
        if all(isinstance(c, Posy) for c in flat):
            p = flat[0].posy
            for c in flat[1:]:
                p = p + c.posy
            return Posy(p)
        self = object.__new__(cls)
        object.__setattr__(self, "parts", tuple(flat))
        return self

    def __setattr__(self, name, value):
        raise AttributeError("Sum is immutable")

    def children(self):
        return self.parts

    def eval(self, x):
        return sum(c.eval(x) for c in self.parts)

    def eval_many(self, X, index):
        out = self.parts[0].eval_many(X, index)
        for c in self.parts[1:]:
            out = out + c.eval_many(X, index)
        return out

    def variables(self):
        out = frozenset()
        for c in self.parts:
            out = out | c.variables()
        return out

    def __repr__(self):
        return "Sum(%s)" % ", ".join(map(repr, self.parts))


class Prod(GenExpr):
    __slots__ = ("parts",)

    def __new__(cls, children):
        children = _fold(list(children))
        if not children:
            raise ModelingError("empty product")
        flat: List[GenExpr] = []
        for c in children:
            if isinstance(c, Prod):
                flat.extend(c.parts)
            else:
                flat.append(c)
        if all(isinstance(c, Posy) for c in flat):
            p = flat[0].posy
            for c in flat[1:]:
                p = p * c.posy
            return Posy(p)
        self = object.__new__(cls)
        object.__setattr__(self, "parts", tuple(flat))
        return self

    def __setattr__(self, name, value):
        raise AttributeError("Prod is immutable")

    def children(self):
        return self.parts

    def eval(self, x):
        out = 1.0
        for c in self.parts:
            out *= c.eval(x)
        return out

    def eval_many(self, X, index):
        out = self.parts[0].eval_many(X, index)
        for c in self.parts[1:]:
            out = out * c.eval_many(X, index)
        return out

    def variables(self):
        out = frozenset()
        for c in self.parts:
            out = out | c.variables()
        return out

    def __repr__(self):
        return "Prod(%s)" % ", ".join(map(repr, self.parts))


class Pow(GenExpr):
    __slots__ = ("base", "p")

    def __new__(cls, base, p):
        base = as_genexpr(base)
        p = float(p)
        if isinstance(base, Posy) and base.posy.is_monomial():
            return Posy(base.posy.as_monomial() ** p)
        if p < 1.0:
            raise ModelingError(
                "power %g < 1 of a non-monomial expression is not a generalized posynomial" % p
            )
        self = object.__new__(cls)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "p", p)
        return self

    def __setattr__(self, name, value):
        raise AttributeError("Pow is immutable")

    def children(self):
        return (self.base,)

    def eval(self, x):
        return self.base.eval(x) ** self.p

    def eval_many(self, X, index):
        return self.base.eval_many(X, index) ** self.p

    def variables(self):
        return self.base.variables()

    def __repr__(self):
        return "Pow(%r, %g)" % (self.base, self.p)


class Max(GenExpr):
    __slots__ = ("parts",)

    def __new__(cls, children):
        children = _fold(list(children))
        if len(children) < 2:
            raise ModelingError("Max needs at least 2 children")
        self = object.__new__(cls)
        object.__setattr__(self, "parts", tuple(children))
        return self

    def __setattr__(self, name, value):
        raise AttributeError("Max is immutable")

    def children(self):
        return self.parts

    def eval(self, x):
        return max(c.eval(x) for c in self.parts)

    def eval_many(self, X, index):
        out = self.parts[0].eval_many(X, index)
        for c in self.parts[1:]:
            out = np.maximum(out, c.eval_many(X, index))
        return out

    def variables(self):
        out = frozenset()
        for c in self.parts:
            out = out | c.variables()
        return out

    def __repr__(self):
        return "Max(%s)" % ", ".join(map(repr, self.parts))


def max_of(*exprs) -> GenExpr:
    """Pointwise maximum; collapses to the single child for one argument."""
    exprs = [as_genexpr(e) for e in exprs]
    if len(exprs) == 1:
        return exprs[0]
    return Max(exprs)


# ---------------------------------------------------------------------------
# Problems
# ---------------------------------------------------------------------------


class GgpProblem:
    """A generalized geometric program.

    minimize   objective                 (GenExpr)
    subject to lhs_k <= rhs_k            (GenExpr <= Monomial)
               g_a = h_a                 (Monomial = Monomial)

    The registry fixes the variable order used by the solver and by vector
    interfaces.
    """

    def __init__(self, registry: Sequence[VarId], objective, ineq_constraints=(), eq_constraints=()):
        self.registry: List[VarId] = list(registry)
        names = [v.name for v in self.registry]
        if len(set(names)) != len(names):
            raise ModelingError("duplicate variable names in registry")
        if [v.index for v in self.registry] != list(range(len(names))):
            raise ModelingError("registry indices must be dense 0..n-1 in order")
        self.objective: GenExpr = as_genexpr(objective)
        self.ineq_constraints: List[Tuple[GenExpr, Monomial]] = []
        for lhs, rhs in ineq_constraints:
            if isinstance(rhs, (int, float)):
                rhs = const(rhs)
            if isinstance(rhs, Posynomial):
                rhs = rhs.as_monomial()
            if not isinstance(rhs, Monomial):
                raise ModelingError("inequality rhs must be a monomial, got %r" % (rhs,))
            self.ineq_constraints.append((as_genexpr(lhs), rhs))
        self.eq_constraints: List[Tuple[Monomial, Monomial]] = []
        for g, h in eq_constraints:
            g = g if isinstance(g, Monomial) else as_posynomial(g).as_monomial()
            h = h if isinstance(h, Monomial) else as_posynomial(h).as_monomial()
            self.eq_constraints.append((g, h))
        self._check_bound()

    def names(self) -> List[str]:
        return [v.name for v in self.registry]

    def _check_bound(self):
        known = set(self.names())
        used = set(self.objective.variables())
        for lhs, rhs in self.ineq_constraints:
            used |= lhs.variables() | rhs.variables()
        for g, h in self.eq_constraints:
            used |= g.variables() | h.variables()
        missing = used - known
        if missing:
            raise ModelingError("variables not in registry: %s" % ", ".join(sorted(missing)))


def make_registry(names: Iterable[str]) -> List[VarId]:
    return [VarId(i, n) for i, n in enumerate(names)]
