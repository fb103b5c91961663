"""Exponents, monomial orderings, sparse real polynomials and polynomial systems.

Exponents are plain tuples of nonnegative ints.  A :class:`Polynomial` is an
immutable map ``exponent -> float`` with no stored zeros.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cmp_to_key, lru_cache
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence

from .errors import (
    DimensionMismatch,
    EmptyPolynomial,
    MalformedTerm,
    UnknownVariable,
    ZeroPolynomial,
)

Exponent = tuple  # tuple[int, ...]

GRLEX = "grlex"
GREVLEX = "grevlex"
LEX = "lex"
ORDER_KINDS = (GRLEX, GREVLEX, LEX)


def degree(alpha: Exponent) -> int:
    return sum(alpha)


def add_exp(a: Exponent, b: Exponent) -> Exponent:
    return tuple(i + j for i, j in zip(a, b))


def unit(n: int, i: int) -> Exponent:
    return tuple(1 if k == i else 0 for k in range(n))


def divides(a: Exponent, b: Exponent) -> bool:
    """True when x^a divides x^b."""
    return all(i <= j for i, j in zip(a, b))


@dataclass(frozen=True)
class MonomialOrder:
    """A monomial ordering.

    ``precedence`` lists variable indices from most to least significant;
    the default ``(0, 1, ..., n-1)`` means x1 > x2 > ... > xn.
    """

    kind: str = GRLEX
    precedence: tuple | None = None

    def __post_init__(self):
        if self.kind not in ORDER_KINDS:
            raise ValueError(f"unknown ordering {self.kind!r}")
        if self.precedence is not None:
            object.__setattr__(self, "precedence", tuple(self.precedence))
            if sorted(self.precedence) != list(range(len(self.precedence))):
                raise ValueError("precedence must be a permutation of 0..n-1")

    def _prec(self, n):
        if self.precedence is None:
            return tuple(range(n))
        if len(self.precedence) != n:
            raise DimensionMismatch(
                f"ordering defined for {len(self.precedence)} variables, got {n}")
        return self.precedence

    def key(self, alpha: Exponent):
        """Sort key: ``sorted(..., key=order.key)`` is ascending in the order."""
        p = self._prec(len(alpha))
        if self.kind == LEX:
            return tuple(alpha[i] for i in p)
        if self.kind == GRLEX:
            return (sum(alpha),) + tuple(alpha[i] for i in p)
        # grevlex: ties broken by the smallest exponent in the last variable
        return (sum(alpha),) + tuple(-alpha[i] for i in reversed(p))

    @property
    def graded(self) -> bool:
        return self.kind != LEX


DEFAULT_ORDER = MonomialOrder(GRLEX)


def compare(order: MonomialOrder, a: Exponent, b: Exponent) -> int:
    """Return -1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    if len(a) != len(b):
        raise DimensionMismatch(f"exponents of length {len(a)} and {len(b)}")
    ka, kb = order.key(a), order.key(b)
    return (ka > kb) - (ka < kb)


def _index_key(alpha):
    # degree first, then x1-heavy exponents first: 1, x1, x2, x1^2, x1x2, x2^2, ...
    return (sum(alpha), tuple(-a for a in alpha))


@lru_cache(maxsize=None)
def _index_monomials(n: int, t: int) -> tuple:
    out = []
    for deg in range(t + 1):
        for combo in combinations_with_replacement(range(n), deg):
            alpha = [0] * n
            for i in combo:
                alpha[i] += 1
            out.append(tuple(alpha))
    out.sort(key=_index_key)
    return tuple(out)


def enumerate_monomials(n: int, t: int, order: MonomialOrder | None = None) -> list:
    """All exponents in N^n of degree <= t.

    Without ``order`` the list follows the matrix index convention used for
    moment matrices (graded, x1 scanned before x2).  With ``order`` the list is
    sorted ascending in that ordering.
    """
    if n < 1 or t < 0:
        raise ValueError("need n >= 1 and t >= 0")
    monos = list(_index_monomials(n, t))
    if order is not None:
        monos.sort(key=order.key)
    return monos


def sort_monomials(monos: Iterable[Exponent], order: MonomialOrder) -> list:
    return sorted(monos, key=order.key)


def num_monomials(n: int, t: int) -> int:
    return math.comb(n + t, n)


class Polynomial:
    """Sparse polynomial with real coefficients in ``n`` variables."""

    __slots__ = ("n", "_terms", "_hash")

    def __init__(self, terms: Mapping[Exponent, float], n: int | None = None):
        clean = {}
        for alpha, c in terms.items():
            alpha = tuple(int(a) for a in alpha)
            if n is None:
                n = len(alpha)
            if len(alpha) != n or any(a < 0 for a in alpha):
                raise DimensionMismatch(f"bad exponent {alpha} for n={n}")
            c = float(c)
            if c != 0.0:
                clean[alpha] = clean.get(alpha, 0.0) + c
        if n is None:
            raise ValueError("cannot infer variable count of an empty polynomial")
        self.n = n
        self._terms = {a: c for a, c in clean.items() if c != 0.0}
        self._hash = None

    # construction helpers
    @classmethod
    def constant(cls, c: float, n: int) -> "Polynomial":
        return cls({(0,) * n: c}, n)

    @classmethod
    def variable(cls, i: int, n: int) -> "Polynomial":
        return cls({unit(n, i): 1.0}, n)

    @classmethod
    def from_vector(cls, coeffs, monomials: Sequence[Exponent], tol: float = 0.0):
        n = len(monomials[0])
        return cls({m: c for m, c in zip(monomials, coeffs) if abs(c) > tol}, n)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coeff(self, alpha: Exponent) -> float:
        return self._terms.get(tuple(alpha), 0.0)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(a) for a in self._terms)

    def support(self) -> list:
        return sorted(self._terms, key=_index_key)

    def to_vector(self, monomials: Sequence[Exponent]):
        import numpy as np

        pos = {m: i for i, m in enumerate(monomials)}
        v = np.zeros(len(monomials))
        for a, c in self._terms.items():
            if a not in pos:
                raise DimensionMismatch(f"monomial {a} outside the index set")
            v[pos[a]] = c
        return v

    def __call__(self, point):
        return evaluate(self, point)

    # arithmetic
    def _check(self, other):
        if other.n != self.n:
            raise DimensionMismatch(f"{self.n} vs {other.n} variables")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Polynomial.constant(other, self.n)
        self._check(other)
        out = dict(self._terms)
        for a, c in other._terms.items():
            out[a] = out.get(a, 0.0) + c
        return Polynomial(out, self.n)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({a: -c for a, c in self._terms.items()}, self.n)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Polynomial) else -float(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial({a: c * other for a, c in self._terms.items()}, self.n)
        self._check(other)
        out = {}
        for a, c in self._terms.items():
            for b, e in other._terms.items():
                ab = add_exp(a, b)
                out[ab] = out.get(ab, 0.0) + c * e
        return Polynomial(out, self.n)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Polynomial.constant(1.0, self.n)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.n == other.n and self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        return f"Polynomial({format_polynomial(self)!r})"

    def __str__(self):
        return format_polynomial(self)


def evaluate(p: Polynomial, v) -> complex | float:
    """Evaluate ``p`` at a real or complex point, term by term."""
    v = list(v)
    if len(v) != p.n:
        raise DimensionMismatch(f"point of length {len(v)} for {p.n} variables")
    total = 0.0
    for alpha, c in p.items():
        term = c
        for vi, ai in zip(v, alpha):
            if ai:
                term = term * vi ** ai
        total = total + term
    return total


def half_degree(h: Polynomial) -> int:
    if h.is_zero():
        raise ZeroPolynomial("half degree of the zero polynomial")
    return (h.degree + 1) // 2


# --------------------------------------------------------------------------
# text format

_NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?"
_TERM_RE = re.compile(rf"^(?P<coef>{_NUMBER})?\*?(?P<rest>.*)$")
_EXP_TAIL = re.compile(r"(?:\d+\.?\d*|\.\d+)[eE]")
_FACTOR_RE = re.compile(r"^(?P<var>[A-Za-z_][A-Za-z0-9_]*)(?:\^(?P<exp>\d+))?$")


def _parse_number(s: str) -> float:
    if "/" in s:
        num, den = s.split("/")
        return float(num) / float(den)
    return float(s)


def _split_terms(text: str):
    """Split on top-level +/- signs; the sign in ``1e-3`` stays with its number."""
    terms, sign, buf, signed = [], 1.0, "", False
    for ch in text:
        if ch in "+-":
            if _EXP_TAIL.fullmatch(buf.rsplit("*", 1)[-1]):
                buf += ch
                continue
            if buf:
                terms.append((sign, buf))
                buf = ""
            elif terms or signed:
                raise MalformedTerm(f"consecutive signs in {text!r}")
            sign, signed = (-1.0 if ch == "-" else 1.0), True
        else:
            buf += ch
    if not buf:
        raise MalformedTerm(f"dangling sign in {text!r}")
    terms.append((sign, buf))
    return terms


def parse_polynomial(text: str, variables: Sequence[str]) -> Polynomial:
    """Parse an expanded polynomial such as ``"2*x1^2*x2 - 0.5*x3 + 1"``."""
    names = {v: i for i, v in enumerate(variables)}
    n = len(variables)
    compact = "".join(text.split())
    if not compact:
        raise EmptyPolynomial("empty polynomial text")
    if "(" in compact or ")" in compact:
        raise MalformedTerm("parentheses are not supported; expand the polynomial")
    terms = {}
    for sign, body in _split_terms(compact):
        m = _TERM_RE.match(body)
        coef_txt, rest = m.group("coef"), m.group("rest")
        coef = _parse_number(coef_txt) if coef_txt else 1.0
        alpha = [0] * n
        if rest:
            if coef_txt is None and rest.startswith("*"):
                raise MalformedTerm(f"term {body!r} starts with '*'")
            for factor in rest.split("*"):
                fm = _FACTOR_RE.match(factor)
                if fm is None:
                    raise MalformedTerm(f"cannot parse factor {factor!r} in {body!r}")
                var = fm.group("var")
                if var not in names:
                    raise UnknownVariable(f"unknown variable {var!r}")
                alpha[names[var]] += int(fm.group("exp") or 1)
        elif coef_txt is None:
            raise MalformedTerm(f"empty term in {text!r}")
        key = tuple(alpha)
        terms[key] = terms.get(key, 0.0) + sign * coef
    return Polynomial(terms, n)


def default_names(n: int) -> list:
    return [f"x{i + 1}" for i in range(n)]


def format_monomial(alpha: Exponent, names: Sequence[str] | None = None) -> str:
    names = names or default_names(len(alpha))
    parts = []
    for name, a in zip(names, alpha):
        if a == 1:
            parts.append(name)
        elif a > 1:
            parts.append(f"{name}^{a}")
    return "*".join(parts) if parts else "1"


def format_polynomial(p: Polynomial, names: Sequence[str] | None = None,
                      digits: int | None = None) -> str:
    """Inverse of :func:`parse_polynomial`; full precision unless ``digits``."""
    if p.is_zero():
        return "0"
    out = []
    for alpha in reversed(p.support()):
        c = p.coeff(alpha)
        mag = abs(c)
        num = repr(mag) if digits is None else f"{mag:.{digits}g}"
        mono = format_monomial(alpha, names)
        if mono == "1":
            body = num
        elif mag == 1.0 or num == "1":
            body = mono
        else:
            body = f"{num}*{mono}"
        sign = "-" if c < 0 else "+"
        out.append((sign, body))
    text = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        text += f" {sign} {body}"
    return text


@dataclass(frozen=True)
class PolySystem:
    """Equality generators h_1..h_m and inequality generators (h >= 0)."""

    n: int
    equalities: tuple
    inequalities: tuple = ()
    names: tuple = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "equalities", tuple(self.equalities))
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        if self.names is None:
            object.__setattr__(self, "names", tuple(default_names(self.n)))
        else:
            object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != self.n:
            raise DimensionMismatch("one name per variable required")
        if not self.equalities:
            raise ValueError("at least one equality generator is required")
        for h in self.equalities + self.inequalities:
            if h.n != self.n:
                raise DimensionMismatch(f"generator in {h.n} variables, system has {self.n}")
            if h.is_zero():
                raise ZeroPolynomial("zero generator")
            if h.degree < 1:
                raise ValueError(f"constant generator {h}")

    @property
    def half_degrees(self) -> tuple:
        return tuple(half_degree(h) for h in self.equalities + self.inequalities)

    @property
    def d(self) -> int:
        return max(self.half_degrees)

    @classmethod
    def from_strings(cls, equalities, variables, inequalities=()):
        variables = list(variables)
        return cls(
            n=len(variables),
            equalities=[parse_polynomial(s, variables) for s in equalities],
            inequalities=[parse_polynomial(s, variables) for s in inequalities],
            names=variables,
        )


def sorted_by(order: MonomialOrder):
    """``functools`` comparator adaptor, handy for ``sorted(..., key=...)``."""
    return cmp_to_key(lambda a, b: compare(order, a, b))
