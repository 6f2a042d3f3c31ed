from __future__ import annotations

import cmath
import json
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from nevlab.expr import EntireExpr, ExpOverflow, differentiate, parse_expr
from nevlab.gaussian import GaussianRational
from nevlab.poly import Poly, certified_roots, square_free_decomposition
from nevlab.zeros import (IdenticallyZero, UnsupportedZeroSet, ZeroOnBoundary,
                          numeric_zero_divisor, winding_number, zero_divisor, zeros_in_disc)

Z = EntireExpr.var()
SZ = sp.Symbol("z")

# -- strategies ---------------------------------------------------------------------

small = st.fractions(min_value=-3, max_value=3, max_denominator=3)
gauss = st.builds(GaussianRational, small, st.one_of(st.just(0), small))
coeff_json = gauss.map(lambda g: g.to_json())
poly_json = st.lists(coeff_json, min_size=1, max_size=3)

leaves = st.one_of(
    coeff_json.map(lambda c: {"const": c}),
    st.just({"var": True}),
    poly_json.map(lambda p: {"exp": {"poly": p}}),
)


def _extend(children):
    return st.one_of(
        st.lists(children, min_size=1, max_size=3).map(lambda xs: {"sum": xs}),
        st.lists(children, min_size=1, max_size=2).map(lambda xs: {"prod": xs}),
        st.tuples(children, st.integers(0, 2)).map(lambda t: {"pow": [t[0], t[1]]}),
    )


trees = st.recursive(leaves, _extend, max_leaves=8)


def depth(t) -> int:
    (tag, val), = t.items()
    if tag in ("sum", "prod"):
        return 1 + max(depth(x) for x in val)
    if tag == "pow":
        return 1 + depth(val[0])
    return 1


shallow_trees = trees.filter(lambda t: depth(t) <= 5)


def assert_canonical(e: EntireExpr) -> None:
    keys = list(e.terms)
    assert len(set(keys)) == len(keys)
    for q, p in e.terms.items():
        assert isinstance(q, Poly) and isinstance(p, Poly)
        assert not p.is_zero()
        for poly in (q, p):
            assert not poly.coeffs or poly.coeffs[-1]
    # the JSON form parses back to the same value, so the form is unique
    assert parse_expr(json.loads(json.dumps(e.to_json()))) == e


def to_sympy(e: EntireExpr):
    def sp_poly(p: Poly):
        return sum((sp.Rational(c.re.numerator, c.re.denominator)
                    + sp.I * sp.Rational(c.im.numerator, c.im.denominator)) * SZ ** k
                   for k, c in enumerate(p.coeffs))
    return sum((sp_poly(p) * sp.exp(sp_poly(q)) for q, p in e.terms.items()), sp.Integer(0))


# -- structure ---------------------------------------------------------------------

@settings(max_examples=1000)
@given(shallow_trees)
def test_differentiation_closure(tree):
    e = parse_expr(tree)
    assert_canonical(e)
    d = differentiate(e)
    assert_canonical(d)


@settings(max_examples=200)
@given(shallow_trees, st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False))
def test_derivative_matches_central_difference(tree, z):
    e = parse_expr(tree)
    d = differentiate(e)
    h = 1e-5
    fd = (e.evaluate(z + h) - e.evaluate(z - h)) / (2 * h)
    dv = d.evaluate(z)
    assert abs(fd - dv) <= 1e-6 * (1 + abs(dv)) + 1e-10 * abs(e.evaluate(z))


@settings(max_examples=60)
@given(shallow_trees)
def test_derivative_agrees_with_sympy(tree):
    e = parse_expr(tree)
    ours = to_sympy(differentiate(e))
    ref = sp.diff(to_sympy(e), SZ)
    assert sp.expand(ours - ref) == 0


def test_ring_identities():
    e = Z * EntireExpr.exp_of(Poly.x())
    assert e - e == EntireExpr()
    assert (e + 1) * (e - 1) == e * e - 1
    assert (Z + 1) ** 3 == Z ** 3 + 3 * Z ** 2 + 3 * Z + 1


def test_exp_products_merge_directions():
    a = EntireExpr.exp_of(Poly.x())
    b = EntireExpr.exp_of(Poly([0, 2]))
    assert a * a == b
    assert (a * b).single_direction()[0] == Poly([0, 3])


def test_evaluate_overflow_and_log_space():
    e = EntireExpr.exp_of(Poly([0, 1000]))
    with pytest.raises(ExpOverflow):
        e.evaluate(1.0)
    assert e.log_abs(1.0) == pytest.approx(1000.0)
    mixed = EntireExpr.exp_of(Poly([0, 1000])) + Z
    assert mixed.log_abs(1.0) == pytest.approx(1000.0)


def test_parse_rejects_bad_nodes():
    with pytest.raises(ValueError):
        parse_expr({"pow": [{"var": True}, -1]})
    with pytest.raises(ValueError):
        parse_expr({"exp": {"var": True}, "sum": []})
    with pytest.raises(ValueError):
        parse_expr({"exp": {"exp": {"poly": [[0, 1, 0, 1], [1, 1, 0, 1]]}}})


def test_vanishing_at_rational_points_is_exact():
    e = (Z - 1) * EntireExpr.exp_of(Poly.x()) + (Z - 1)
    assert e.vanishes_at(GaussianRational(1))
    assert not e.vanishes_at(GaussianRational(0))
    # e^z - 1 vanishes at 0 because both terms share the exponent value 0
    assert (EntireExpr.exp_of(Poly.x()) - 1).vanishes_at(GaussianRational(0))


# -- square-free decomposition and roots ---------------------------------------------------

int_polys = st.lists(st.integers(-4, 4), min_size=1, max_size=4).filter(lambda c: any(c))


@settings(max_examples=150)
@given(st.lists(st.tuples(int_polys, st.integers(1, 3)), min_size=1, max_size=3))
def test_square_free_matches_sympy(factors):
    p = Poly([1])
    sp_p = sp.Integer(1)
    for cs, k in factors:
        p = p * Poly(cs) ** k
        sp_p *= sp.Poly(list(reversed(cs)), SZ).as_expr() ** k
    if p.degree <= 0:
        return
    ours = {}
    for a, k in square_free_decomposition(p):
        ours[k] = ours.get(k, 0) + a.degree
    _, ref_list = sp.sqf_list(sp.expand(sp_p), SZ)
    ref = {}
    for fac, k in ref_list:
        d = sp.degree(fac, SZ)
        if d > 0:
            ref[k] = ref.get(k, 0) + d
    assert ours == ref


def test_certified_roots_enclose_true_roots():
    p = Poly([-6, 11, -6, 1])        # (z-1)(z-2)(z-3)
    encl = certified_roots(p)
    for true in (1, 2, 3):
        assert any(abs(e.location - true) <= e.radius for e in encl)
    assert all(e.radius < 1e-10 for e in encl)


# -- zero divisors -------------------------------------------------------------------------

def test_zero_divisor_examples():
    d = zero_divisor(Z ** 2 * (Z - 1), 2)
    assert sorted((round(z.location.real, 12), z.multiplicity) for z in d) == [(0.0, 2), (1.0, 1)]
    d = zero_divisor((Z + 1) * EntireExpr.exp_of(Poly([0, 0, 1])), 3)
    assert len(d) == 1 and abs(d.zeros[0].location + 1) < 1e-12 and d.zeros[0].multiplicity == 1
    assert len(zero_divisor(Z - 5, 2)) == 0


def test_zero_divisor_errors():
    with pytest.raises(IdenticallyZero):
        zero_divisor(EntireExpr(), 1)
    with pytest.raises(UnsupportedZeroSet):
        zero_divisor(Z + EntireExpr.exp_of(Poly.x()), 1)
    with pytest.raises(ZeroOnBoundary):
        zero_divisor(Z - 1, 1.0)


@settings(max_examples=100)
@given(st.lists(st.tuples(int_polys, st.integers(1, 3)), min_size=1, max_size=3),
       st.lists(st.integers(-2, 2), min_size=1, max_size=3))
def test_zero_divisor_agrees_with_evaluate(factors, q):
    p = Poly([1])
    for cs, k in factors:
        p = p * Poly(cs) ** k
    if p.degree <= 0:
        return
    e = EntireExpr({Poly([0] + q): p})
    roots = zero_divisor(e, 1e6)
    assert roots.total_multiplicity() == p.degree
    for zr in roots:
        scale = max(1.0, float(np.max(np.abs(p.numeric_coeffs()))) * max(1, abs(zr.location)) ** p.degree)
        assert abs(EntireExpr.poly(p.coeffs).evaluate(zr.location)) <= 1e-9 * scale


def test_numeric_route_on_mixed_sum():
    # e^z - 1 has simple zeros at 2 pi i k
    e = EntireExpr.exp_of(Poly.x()) + EntireExpr.const(-1)
    d = numeric_zero_divisor(e, 10.0)
    locs = sorted(d.locations(), key=lambda w: w.imag)
    assert len(locs) == 3
    for got, k in zip(locs, (-1, 0, 1)):
        assert abs(got - 2j * cmath.pi * k) < 1e-8
    assert set(d.multiplicities()) == {1}
    assert zeros_in_disc(e, 10.0).total_multiplicity() == 3


def test_winding_number_counts_multiplicity():
    e = (Z - EntireExpr.const(Fraction(1, 2))) ** 3 * (Z + 2)
    assert winding_number(e, 0j, 1.0) == 3
    assert winding_number(e, 0j, 3.0) == 4
