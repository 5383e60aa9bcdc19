import itertools
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from cohomflow.exact_geometry import (
    HullQuery,
    JForm,
    hull_vertices,
    in_hull,
    is_edge,
    is_null,
    j_eval,
    j_shifted,
    qvec,
    unique_sum,
)

D5 = JForm((1, 2, 2))


def half_d(form, x):
    return tuple(F(d + xi, 2) for d, xi in zip(form.d_ext, tuple(x) + (0,)))


CASE5_X = [(0, -1, -1), (0, 1, -1), (0, -1, 1), (1, 0, -2), (1, -2, 0)]
CASE5 = [half_d(D5, x) for x in CASE5_X]


def test_matrix_layout():
    m = D5.matrix
    assert m[0][0] == -1 and m[1][1] == F(-1, 2)
    assert m[0][3] == m[3][0] == F(-1, 2)
    assert m[3][3] == F(-(5 - 1), 4)
    assert D5.n == 5


def test_j_eval_examples():
    assert j_eval(D5, (1, 0, 0, 0), (1, 0, 0, 0)) == -1
    assert j_eval(D5, D5.d_ext, D5.d_ext) == 1
    for dims in [(1,), (4,), (2, 2), (1, 2, 4)]:
        form = JForm(dims)
        h = tuple(x / 2 for x in form.d_ext)
        assert j_eval(form, h, h) == F(1, 4)


def test_j_eval_matches_quadratic_form():
    p, phi = (F(1), F(-2), F(3)), F(5, 2)
    expected = -(p[0] ** 2 / 1 + p[1] ** 2 / 2 + p[2] ** 2 / 2 + phi * sum(p) + F(4, 4) * phi ** 2)
    assert j_eval(D5, p + (phi,), p + (phi,)) == expected


def test_j_eval_length_check():
    with pytest.raises(ValueError):
        j_eval(D5, (1, 0, 0), (1, 0, 0, 0))


def test_j_shifted_examples():
    assert j_shifted(D5, (-1, 0, 0, 0), (1, -2, 0, 0)) == 2
    assert j_shifted(D5, (0, 0, 0, 0), (0, 0, 0, 0)) == 1
    assert j_shifted(D5, (-1, 0, 0, 0), (-1, 0, 0, 0)) == 0
    with pytest.raises(ValueError):
        j_shifted(D5, (0, 0, 0, 1), (0, 0, 0, 0))


def test_is_null_examples():
    assert is_null(D5, (0, 1, 1, -1))
    assert is_null(D5, (0, 0, 0, 0))
    assert not is_null(D5, tuple(x / 2 for x in D5.d_ext))
    assert not is_null(D5, (1, 0, 0, 0))


def test_hull_vertices_examples():
    assert hull_vertices(HullQuery(((0, 0), (2, 2), (1, 1)))) == [qvec((0, 0)), qvec((2, 2))]
    assert hull_vertices(HullQuery(((3, 1),))) == [qvec((3, 1))]
    assert hull_vertices(HullQuery(tuple(CASE5))) == CASE5


def test_hull_query_validation():
    with pytest.raises(ValueError):
        HullQuery(())
    with pytest.raises(ValueError):
        HullQuery(((0, 0), (0, 0)))
    with pytest.raises(ValueError):
        HullQuery(((0, 0), (0, 0, 1)))


SQUARE = HullQuery(((0, 0), (1, 0), (1, 1), (0, 1)))


def test_is_edge_examples():
    assert is_edge(SQUARE, (0, 0), (1, 0))
    assert not is_edge(SQUARE, (0, 0), (1, 1))
    q = HullQuery(tuple(CASE5))
    assert is_edge(q, half_d(D5, (0, 1, -1)), half_d(D5, (0, -1, 1)))
    with pytest.raises(ValueError):
        is_edge(HullQuery(((0, 0), (1, 1), (2, 2))), (0, 0), (1, 1))


def test_edge_with_interior_point_is_not_edge():
    q = HullQuery(((0, 0), (2, 0), (1, 0), (0, 2)))
    assert not is_edge(q, (0, 0), (2, 0))
    assert is_edge(q, (2, 0), (0, 2))


def test_unique_sum_examples():
    assert not unique_sum(CASE5_X, (0, 1, -1), (1, -2, 0))
    assert unique_sum(CASE5_X, (0, -1, -1), (0, 1, -1))
    assert unique_sum([(0, 0), (1, 2)], (0, 0), (1, 2))
    with pytest.raises(ValueError):
        unique_sum(CASE5_X, (9, 9, 9), (0, 1, -1))


# ---------------------------------------------------------------------------
# properties

dims_st = st.lists(st.integers(1, 6), min_size=1, max_size=4)
rat = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@st.composite
def form_and_vectors(draw, k=2, zero_slot=False):
    dims = draw(dims_st)
    form = JForm(tuple(dims))
    vecs = []
    for _ in range(k):
        v = draw(st.lists(rat, min_size=len(dims), max_size=len(dims)))
        last = F(0) if zero_slot else draw(rat)
        vecs.append(tuple(v) + (last,))
    return form, vecs


@given(form_and_vectors())
def test_symmetry(data):
    form, (a, b) = data
    assert j_eval(form, a, b) == j_eval(form, b, a)


@settings(max_examples=500)
@given(form_and_vectors(zero_slot=True))
def test_shift_identity(data):
    form, (v, w) = data
    shifted = tuple(x + d for x, d in zip(v, form.d_ext)), tuple(x + d for x, d in zip(w, form.d_ext))
    assert j_shifted(form, v, w) == j_eval(form, *shifted)


@settings(max_examples=500)
@given(form_and_vectors(k=1))
def test_kernel_of_d(data):
    form, (v,) = data
    assert (j_eval(form, form.d_ext, v) == 0) == (v[-1] == 0)


@given(form_and_vectors(k=1))
def test_cone_consistency(data):
    form, (c,) = data
    assert is_null(form, c) == (j_eval(form, c, c) == 0)


@given(form_and_vectors(k=1, zero_slot=True))
def test_cone_consistency_zero_slot(data):
    form, (c,) = data
    assert is_null(form, c) == all(x == 0 for x in c)


def _solve_exact(cols, target):
    """Solve sum lam_j cols[j] = target exactly; None if inconsistent."""
    rows = len(target)
    n = len(cols)
    aug = [[cols[j][i] for j in range(n)] + [target[i]] for i in range(rows)]
    piv_cols = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, rows) if aug[i][c] != 0), None)
        if p is None:
            return None
        aug[r], aug[p] = aug[p], aug[r]
        for i in range(rows):
            if i != r and aug[i][c] != 0:
                f = aug[i][c] / aug[r][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        piv_cols.append(c)
        r += 1
    if any(aug[i][n] != 0 for i in range(r, rows)):
        return None
    return [aug[i][n] / aug[i][i] for i in range(n)]


def caratheodory_in_hull(p, others):
    """Brute force: p in conv(others) iff p is in the hull of an affinely independent subset."""
    dim = len(p)
    for k in range(1, min(len(others), dim + 1) + 1):
        for sub in itertools.combinations(others, k):
            cols = [tuple(x) + (F(1),) for x in sub]
            lam = _solve_exact(cols, tuple(p) + (F(1),))
            if lam is not None and all(x >= 0 for x in lam):
                return True
    return False


point_sets = st.integers(1, 3).flatmap(
    lambda dim: st.lists(st.tuples(*[st.integers(-3, 3)] * dim), min_size=1, max_size=7, unique=True)
)


@settings(max_examples=100)
@given(point_sets)
def test_hull_oracle(points):
    pts = [qvec(p) for p in points]
    verts = hull_vertices(HullQuery(tuple(pts)))
    oracle = [p for i, p in enumerate(pts) if not caratheodory_in_hull(p, pts[:i] + pts[i + 1:])]
    assert verts == oracle


def float_edge(points, a, b):
    """Edge test with HiGHS in floating point: no other point can carry weight at the midpoint."""
    pts = np.array(points, dtype=float)
    mid = (np.array(a, float) + np.array(b, float)) / 2
    cost = np.array([0.0 if tuple(p) in (tuple(a), tuple(b)) else -1.0 for p in points])
    A_eq = np.vstack([pts.T, np.ones(len(points))])
    res = linprog(cost, A_eq=A_eq, b_eq=np.append(mid, 1.0), bounds=(0, None), method="highs")
    return -res.fun < 1e-9


@settings(max_examples=60)
@given(point_sets)
def test_edge_oracle(points):
    pts = [qvec(p) for p in points]
    q = HullQuery(tuple(pts))
    verts = hull_vertices(q)
    for a, b in itertools.combinations(verts, 2):
        assert is_edge(q, a, b) == float_edge([tuple(map(float, p)) for p in pts], a, b)


@settings(max_examples=40)
@given(point_sets, st.fractions(min_value=F(1, 5), max_value=5, max_denominator=5))
def test_scaling_invariance(points, k):
    pts = [qvec(p) for p in points]
    scaled = [tuple(k * x for x in p) for p in pts]
    v1 = hull_vertices(HullQuery(tuple(pts)))
    v2 = hull_vertices(HullQuery(tuple(scaled)))
    assert [tuple(k * x for x in p) for p in v1] == v2
    for a, b in itertools.combinations(v1, 2):
        sa, sb = tuple(k * x for x in a), tuple(k * x for x in b)
        assert is_edge(HullQuery(tuple(pts)), a, b) == is_edge(HullQuery(tuple(scaled)), sa, sb)


def test_in_hull_basic():
    assert in_hull((1, 1), [(0, 0), (2, 0), (0, 2)])
    assert not in_hull((2, 2), [(0, 0), (2, 0), (0, 2)])
    assert not in_hull((0, 0), [])
