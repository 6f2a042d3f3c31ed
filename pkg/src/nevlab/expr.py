"""Entire functions of the form sum_i P_i(z) exp(Q_i(z)).

An :class:`EntireExpr` is always held in canonical form: a mapping from the
exponent polynomial ``Q`` to its (non-zero) polynomial coefficient ``P``.
Distinct keys are distinct polynomials, so the representation is unique and
equality of expressions is structural.  The class is closed under sums,
products, non-negative integer powers and differentiation.

The JSON tree grammar accepted by :func:`parse_expr`::

    {"const": [num, den, num, den]}   {"var": true}
    {"sum": [e, ...]}                 {"prod": [e, ...]}
    {"pow": [e, k]}                   {"exp": {"poly": [coeff, ...]}}
"""

from __future__ import annotations

from typing import Any, Iterable, Mapping

import numpy as np

from .gaussian import ONE, ZERO, GaussianRational
from .poly import Poly

OVERFLOW_EXPONENT = 700.0


class ExpOverflow(OverflowError):
    """Raised by :meth:`EntireExpr.evaluate` when some Re Q(z) > 700."""


class EntireExpr:
    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Poly, Poly] | Iterable[tuple[Poly, Poly]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Poly, Poly] = {}
        for q, p in items:
            if q in acc:
                acc[q] = acc[q] + p
            else:
                acc[q] = p
        self.terms: dict[Poly, Poly] = {
            q: p for q, p in sorted(acc.items(), key=lambda kv: _poly_key(kv[0]))
            if not p.is_zero()
        }
        self._hash = None

    # -- constructors -------------------------------------------------------
    @classmethod
    def const(cls, c: Any) -> EntireExpr:
        return cls({Poly(): Poly([c])})

    @classmethod
    def var(cls) -> EntireExpr:
        return cls({Poly(): Poly.x()})

    @classmethod
    def poly(cls, coeffs: Iterable) -> EntireExpr:
        return cls({Poly(): Poly(coeffs)})

    @classmethod
    def exp_of(cls, q: Poly | EntireExpr) -> EntireExpr:
        """exp(q) for a pure polynomial q."""
        if isinstance(q, EntireExpr):
            q = q.as_polynomial()
        return cls({q: Poly([ONE])})

    # -- structure ----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_polynomial(self) -> bool:
        return all(q.is_zero() for q in self.terms)

    def as_polynomial(self) -> Poly:
        if self.is_zero():
            return Poly()
        if not self.is_polynomial():
            raise ValueError("exponent of exp() must be a polynomial in z")
        return self.terms[Poly()]

    def directions(self) -> list[Poly]:
        return list(self.terms)

    def single_direction(self) -> tuple[Poly, Poly] | None:
        """(Q, P) when self == P*exp(Q) for one Q, else None."""
        if len(self.terms) != 1:
            return None
        (q, p), = self.terms.items()
        return q, p

    def __eq__(self, other):
        if not isinstance(other, EntireExpr):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self.terms.items()))
        return self._hash

    def __repr__(self):
        if not self.terms:
            return "EntireExpr(0)"
        parts = []
        for q, p in self.terms.items():
            s = _poly_str(p)
            if not q.is_zero():
                s = f"({s})*exp({_poly_str(q)})"
            parts.append(s)
        return "EntireExpr(" + " + ".join(parts) + ")"

    # -- arithmetic -----------------------------------------------------------
    def __add__(self, other) -> EntireExpr:
        other = _as_expr(other)
        if other is NotImplemented:
            return other
        return EntireExpr(list(self.terms.items()) + list(other.terms.items()))

    __radd__ = __add__

    def __neg__(self) -> EntireExpr:
        return EntireExpr({q: -p for q, p in self.terms.items()})

    def __sub__(self, other) -> EntireExpr:
        other = _as_expr(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> EntireExpr:
        other = _as_expr(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other) -> EntireExpr:
        other = _as_expr(other)
        if other is NotImplemented:
            return other
        out = []
        for q1, p1 in self.terms.items():
            for q2, p2 in other.terms.items():
                out.append((q1 + q2, p1 * p2))
        return EntireExpr(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> EntireExpr:
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = EntireExpr.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def derivative(self) -> EntireExpr:
        # (P e^Q)' = (P' + P Q') e^Q
        return EntireExpr([(q, p.derivative() + p * q.derivative())
                           for q, p in self.terms.items()])

    # -- exact evaluation at Gaussian-rational points -----------------------
    def exponent_groups(self, a: GaussianRational) -> dict[GaussianRational, GaussianRational]:
        """Group sum_i P_i(a) e^{Q_i(a)} by the exact value of Q_i(a).

        By Lindemann-Weierstrass the value vanishes iff every group sum is 0.
        """
        groups: dict[GaussianRational, GaussianRational] = {}
        for q, p in self.terms.items():
            key = q(a)
            groups[key] = groups.get(key, ZERO) + p(a)
        return {k: v for k, v in groups.items() if v}

    def vanishes_at(self, a: GaussianRational) -> bool:
        return not self.exponent_groups(a)

    # -- numeric evaluation ---------------------------------------------------
    def evaluate_scaled(self, z) -> tuple[np.ndarray, np.ndarray]:
        """Return (mantissa, log_scale) with value = mantissa * exp(log_scale).

        ``log_scale`` is the largest Re Q_i(z), so the mantissa never
        overflows.  Works elementwise on arrays.
        """
        z = np.asarray(z, dtype=complex)
        if not self.terms:
            return np.zeros_like(z), np.zeros(z.shape)
        qvals = [q.eval_numeric(z) if not q.is_zero() else np.zeros_like(z)
                 for q in self.terms]
        scale = np.max(np.stack([qv.real for qv in qvals]), axis=0)
        mant = np.zeros_like(z)
        for qv, p in zip(qvals, self.terms.values()):
            mant = mant + p.eval_numeric(z) * np.exp(qv - scale)
        return mant, scale

    def evaluate(self, z):
        """Numeric value at ``z`` (scalar or array)."""
        mant, scale = self.evaluate_scaled(z)
        if np.any(scale > OVERFLOW_EXPONENT):
            raise ExpOverflow("Re Q(z) exceeds 700; use evaluate_scaled/log_abs")
        out = mant * np.exp(scale)
        return complex(out) if np.ndim(out) == 0 else out

    def __call__(self, z):
        return self.evaluate(z)

    def log_abs(self, z):
        """log|e(z)| computed in log space (-inf at zeros)."""
        mant, scale = self.evaluate_scaled(z)
        with np.errstate(divide="ignore"):
            out = np.log(np.abs(mant)) + scale
        return float(out) if np.ndim(out) == 0 else out

    # -- JSON -----------------------------------------------------------------
    def to_json(self) -> dict:
        parts = []
        for q, p in self.terms.items():
            pj = _poly_to_tree(p)
            if q.is_zero():
                parts.append(pj)
            else:
                parts.append({"prod": [pj, {"exp": {"poly": q.to_json()}}]})
        if not parts:
            return {"const": [0, 1, 0, 1]}
        if len(parts) == 1:
            return parts[0]
        return {"sum": parts}


def _poly_key(q: Poly):
    return (len(q.coeffs), [(c.re, c.im) for c in q.coeffs])


def _poly_str(p: Poly) -> str:
    parts = []
    for k, c in enumerate(p.coeffs):
        if not c:
            continue
        if k == 0:
            parts.append(str(c))
        elif k == 1:
            parts.append(f"{c}*z")
        else:
            parts.append(f"{c}*z^{k}")
    return " + ".join(parts) if parts else "0"


def _poly_to_tree(p: Poly) -> dict:
    z = {"var": True}
    parts = []
    for k, c in enumerate(p.coeffs):
        if not c:
            continue
        cj = {"const": c.to_json()}
        if k == 0:
            parts.append(cj)
        elif k == 1:
            parts.append({"prod": [cj, z]})
        else:
            parts.append({"prod": [cj, {"pow": [z, k]}]})
    if not parts:
        return {"const": [0, 1, 0, 1]}
    return parts[0] if len(parts) == 1 else {"sum": parts}


def _as_expr(x):
    if isinstance(x, EntireExpr):
        return x
    if isinstance(x, (int, GaussianRational)) and not isinstance(x, bool):
        return EntireExpr.const(x)
    try:
        from fractions import Fraction
        if isinstance(x, Fraction):
            return EntireExpr.const(x)
    except ImportError:  # pragma: no cover
        pass
    return NotImplemented


Z = EntireExpr.var()


def const(c) -> EntireExpr:
    return EntireExpr.const(c)


def exp(q) -> EntireExpr:
    return EntireExpr.exp_of(q)


def differentiate(e: EntireExpr, times: int = 1) -> EntireExpr:
    for _ in range(times):
        e = e.derivative()
    return e


def evaluate(e: EntireExpr, z):
    return e.evaluate(z)


def parse_expr(obj: Any) -> EntireExpr:
    """Build an EntireExpr from the JSON tree grammar."""
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError(f"expression node must be a one-key object, got {obj!r}")
    (tag, val), = obj.items()
    if tag == "const":
        return EntireExpr.const(GaussianRational.from_json(val))
    if tag == "var":
        return EntireExpr.var()
    if tag == "sum":
        out = EntireExpr()
        for item in val:
            out = out + parse_expr(item)
        return out
    if tag == "prod":
        out = EntireExpr.const(1)
        for item in val:
            out = out * parse_expr(item)
        return out
    if tag == "pow":
        base, k = val
        if not isinstance(k, int) or k < 0:
            raise ValueError(f"pow exponent must be a non-negative integer, got {k!r}")
        return parse_expr(base) ** k
    if tag == "exp":
        if isinstance(val, dict) and "poly" in val:
            return EntireExpr.exp_of(Poly.from_json(val["poly"]))
        # also allow an arbitrary expression tree that reduces to a polynomial
        return EntireExpr.exp_of(parse_expr(val))
    raise ValueError(f"unknown expression node {tag!r}")
