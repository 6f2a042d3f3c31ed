from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nevlab.checks import random_component, random_gaussian, wronskian_identity_trial
from nevlab.curves import HolomorphicCurve, HyperplaneFamily, hyperplane
from nevlab.expr import EntireExpr
from nevlab.gaussian import GaussianRational
from nevlab.nochka import compute_weights
from nevlab.poly import Poly
from nevlab.wronskian import (IdenticallyZeroComponent, VectorField, collocation_rank,
                              divisor_inequality, is_linearly_nondegenerate, log_wronskian,
                              ord_at, wronskian)

Z = EntireExpr.var()
ONE = EntireExpr.const(1)
EZ = EntireExpr.exp_of(Poly.x())


def test_wronskian_examples():
    assert wronskian([ONE, Z, Z * Z]) == EntireExpr.const(2)
    assert wronskian([EZ, EZ * EZ]) == EntireExpr.exp_of(Poly([0, 3]))
    assert wronskian([ONE, Z * Z, Z]) == EntireExpr.const(-2)


def test_log_wronskian_example():
    d = log_wronskian([ONE, Z])
    assert d(2.0) == pytest.approx(0.5, abs=1e-15)
    assert ord_at(d, 0) == -1


def test_log_wronskian_rejects_zero_component():
    with pytest.raises(IdenticallyZeroComponent):
        log_wronskian([ONE, EntireExpr()])


def test_order_examples():
    assert ord_at(Z * Z * (Z - 1), 0) == 2
    assert ord_at(Z * Z * (Z - 1), GaussianRational(1)) == 1
    assert ord_at(wronskian([ONE, Z, Z * Z]), GaussianRational(Fraction(3, 7), 2)) == 0
    # e^z - 1 - z vanishes to order 2 at 0, seen exactly through exponent grouping
    assert ord_at(EZ - 1 - Z, 0) == 2
    # numeric route at an irrational point: (z - sqrt 2)^2
    e = (Z * Z - 2) ** 2
    assert ord_at(e, complex(2 ** 0.5, 0)) == 2


def test_nonconstant_vector_field():
    X = VectorField(Z + 1)
    # X(z) = z + 1, X^2(z) = z + 1
    assert wronskian([ONE, Z], X) == Z + 1
    assert X.iterate(Z * Z, 2) == (Z + 1) * (4 * Z + 2)


def test_linear_degeneracy():
    assert not is_linearly_nondegenerate([Z, 2 * Z])
    assert not is_linearly_nondegenerate([ONE, Z, ONE + Z])
    assert is_linearly_nondegenerate([ONE, Z, EZ])


def test_collocation_rank_examples():
    pts = [GaussianRational(Fraction(k, 3), k % 2) for k in range(1, 5)]
    assert collocation_rank([ONE, Z, EZ], pts) == 3
    assert collocation_rank([ONE, Z, 3 * Z + 1], pts) == 2


@settings(max_examples=150)
@given(st.integers(0, 2 ** 32 - 1))
def test_degeneracy_matches_collocation_rank(seed):
    rng = random.Random(seed)
    k = rng.randint(2, 3)
    fs = [random_component(rng) for _ in range(k)]
    if rng.random() < 0.4:
        # force a dependency with rational coefficients
        a, b = random_gaussian(rng), random_gaussian(rng)
        fs[-1] = fs[0] * a + fs[1] * b
    if any(f.is_zero() for f in fs):
        return
    pts = [GaussianRational(Fraction(rng.randint(-9, 9), rng.randint(1, 5)),
                            Fraction(rng.randint(-9, 9), rng.randint(1, 5))) for _ in range(k + 1)]
    independent = collocation_rank(fs, pts) == k
    assert is_linearly_nondegenerate(fs) == independent


@settings(max_examples=1000)
@given(st.integers(0, 2 ** 32 - 1))
def test_four_wronskian_identities(seed):
    assert wronskian_identity_trial(random.Random(seed)) == []


@settings(max_examples=100)
@given(st.integers(0, 2 ** 32 - 1))
def test_wronskian_matches_numeric_determinant(seed):
    rng = random.Random(seed)
    fs = [random_component(rng) for _ in range(3)]
    W = wronskian(fs)
    z = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    rows = [[f.evaluate(z) for f in fs]]
    ds = list(fs)
    for _ in range(2):
        ds = [d.derivative() for d in ds]
        rows.append([d.evaluate(z) for d in ds])
    ref = np.linalg.det(np.array(rows))
    assert abs(W.evaluate(z) - ref) <= 1e-9 * (1 + abs(ref))


def test_divisor_inequality_polynomial_curve():
    # f = [1 : z^3 : z^4]: W = 12 z^4, H = w1 vanishes to order 3, H = w2 to order 4
    f = HolomorphicCurve((ONE, Z ** 3, Z ** 4))
    F = HyperplaneFamily(tuple(hyperplane(*r) for r in
                               [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]), 2, 2)
    assert wronskian(list(f.components)) == 12 * Z ** 4
    W = compute_weights(F)
    rows = divisor_inequality(f, F, W, 3.0)
    at0 = [r for r in rows if abs(r.point) < 1e-9]
    assert len(at0) == 1
    assert at0[0].lhs == 3 and at0[0].ord_w == 4 and at0[0].exact
    assert all(r.ok for r in rows)


def test_divisor_inequality_exponential_curve():
    f = HolomorphicCurve((ONE, Z, EZ))
    F = HyperplaneFamily(tuple(hyperplane(*r) for r in
                               [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]), 2, 2)
    rows = divisor_inequality(f, F, compute_weights(F), 10.0)
    assert rows and all(r.ok for r in rows)
