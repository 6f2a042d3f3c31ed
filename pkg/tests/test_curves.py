from __future__ import annotations

import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nevlab.curves import (DimensionMismatch, HolomorphicCurve, HyperplaneFamily,
                           check_position, compose, hyperplane, load_problem)
from nevlab.expr import EntireExpr
from nevlab.gaussian import GaussianRational
from nevlab.poly import Poly

Z = EntireExpr.var()
ONE = EntireExpr.const(1)
EZ = EntireExpr.exp_of(Poly.x())


def family(rows, n, N):
    return HyperplaneFamily(tuple(hyperplane(*r) for r in rows), n, N)


def test_compose_examples():
    assert compose(hyperplane(1, 0, 0), HolomorphicCurve((ONE, Z, Z * Z))) == ONE
    assert compose(hyperplane(1, 1), HolomorphicCurve((ONE, Z))) == Z + 1
    assert compose(hyperplane(1, 0, -1), HolomorphicCurve((ONE, Z, EZ))) == 1 - EZ


def test_compose_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        compose(hyperplane(1, 1), HolomorphicCurve((ONE, Z, EZ)))


def test_hyperplane_rejects_zero_and_has_exact_norm():
    with pytest.raises(ValueError):
        hyperplane(0, 0, 0)
    H = hyperplane(1, GaussianRational(1, 1), Fraction(1, 2))
    assert H.norm_sq == Fraction(1) + 2 + Fraction(1, 4)
    assert H.norm == pytest.approx(np.sqrt(3.25))


def test_position_examples():
    assert check_position(family([(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)], 2, 2))
    assert check_position(family([(1, 0), (0, 1), (1, 1), (1, -1)], 1, 2))
    assert not check_position(family([(1, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)], 2, 2))


def test_rank_examples():
    F = family([(1, 2, 3), (2, 4, 6), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)], 2, 3)
    assert F.rank([0, 1]) == 1
    assert F.rank([2, 3, 4]) == 3
    G = family([(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)], 2, 2)
    assert all(G.rank(Q) == 3 for Q in itertools.combinations(range(4), 3))


def test_reducedness():
    assert HolomorphicCurve((ONE, Z)).is_reduced()
    assert not HolomorphicCurve((Z, Z * Z)).is_reduced()
    assert HolomorphicCurve((Z, EZ)).is_reduced()


def test_load_problem_roundtrip(tmp_path):
    f = HolomorphicCurve((ONE, Z, EZ), 0.5 + 0.25j)
    F = family([(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)], 2, 2)
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"curve": f.to_json(), "hyperplanes": F.to_json()}))
    g, G = load_problem(p)
    assert g.components == f.components and g.base_point == f.base_point
    assert G.hyperplanes == F.hyperplanes and (G.n, G.N) == (2, 2)


rat = st.fractions(min_value=-5, max_value=5, max_denominator=4)
row3 = st.tuples(rat, rat, rat).filter(any)
exprs = st.sampled_from([ONE, Z, EZ, Z * EZ + 1, Z * Z - 3, EntireExpr.exp_of(Poly([0, 0, 1]))])


@settings(max_examples=200)
@given(row3, row3, rat, rat, st.tuples(exprs, exprs, exprs))
def test_compose_is_linear(h1, h2, a, b, comps):
    f = HolomorphicCurve(comps)
    combo = [a * x + b * y for x, y in zip(h1, h2)]
    if not any(combo):
        return
    lhs = compose(hyperplane(*combo), f)
    rhs = compose(hyperplane(*h1), f) * a + compose(hyperplane(*h2), f) * b
    assert lhs == rhs


int_row = st.tuples(*[st.integers(-2, 2)] * 4).filter(any)


@settings(max_examples=200)
@given(st.lists(int_row, min_size=2, max_size=7), st.data())
def test_rank_monotone_and_bounded(rows, data):
    F = HyperplaneFamily(tuple(hyperplane(*r) for r in rows), 3, 3)
    q = len(rows)
    Q = data.draw(st.lists(st.integers(0, q - 1), min_size=1, unique=True))
    extra = data.draw(st.lists(st.integers(0, q - 1), unique=True))
    R = sorted(set(Q) | set(extra))
    assert F.rank(Q) <= F.rank(R)
    assert F.rank(Q) <= min(len(Q), 4)
    mat = np.array([[float(x) for x in rows[j]] for j in Q])
    assert F.rank(Q) == np.linalg.matrix_rank(mat)
