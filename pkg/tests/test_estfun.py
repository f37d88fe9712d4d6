import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twoseel.errors import DomainError, InputError, InsufficientData
from twoseel.estfun import TwoSampleData, gini_data, gini_ef, gini_pairs, mean_ef, regression_ef


def test_mean_ef_examples():
    g = mean_ef(1)
    np.testing.assert_array_equal(g([3.0], [3.0]), [0.0])
    g2 = mean_ef(2)
    np.testing.assert_array_equal(g2([1.0, 2.0], [0.0, 0.0]), [1.0, 2.0])
    np.testing.assert_array_equal(g2.jac(np.array([5.0, -1.0]), np.array([0.3, 0.2])), -np.eye(2))


def test_gini_pairs_examples():
    np.testing.assert_array_equal(gini_pairs([1, 3]), [[2.0, 1.0]])
    np.testing.assert_array_equal(gini_pairs([2, 2]), [[2.0, 2.0]])
    np.testing.assert_array_equal(gini_pairs([1, 5, 2, 4, 9]), [[1.5, 1.0], [4.5, 4.0]])


def test_gini_pairs_errors():
    with pytest.raises(InsufficientData):
        gini_pairs([1.0])
    with pytest.raises(InputError):
        gini_pairs([1.0, -2.0])
    with pytest.raises(InputError):
        gini_pairs([1.0, np.nan])
    with pytest.raises(InsufficientData):
        gini_pairs([1.0, 2.0, 3.0], min_pairs=2)
    # two-sample Gini data needs more pairs than equations
    with pytest.raises(InsufficientData):
        gini_data([1, 2, 3], [1, 2, 3, 4])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=2, max_size=60))
def test_gini_pairs_properties(raw):
    P = gini_pairs(raw)
    assert P.shape == (len(raw) // 2, 2)
    assert np.all(P[:, 0] >= P[:, 1]) and np.all(P[:, 1] >= 0)


def test_gini_ef_examples():
    g = gini_ef()
    assert g([2.0, 1.0], [0.5])[0] == 0.0
    assert g([2.0, 2.0], [0.0])[0] == 0.0
    assert g([4.5, 4.0], [1.0 / 9.0])[0] == pytest.approx(0.0, abs=1e-15)


def test_regression_ef_examples():
    g = regression_ef(2)
    np.testing.assert_array_equal(g([1.0, 0.0, 2.0], [2.0, 1.0]), [0.0, 0.0])
    np.testing.assert_array_equal(g([1.0, 1.0, 0.0], [0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_array_equal(g([1.0, 2.0, 7.0], [1.0, 2.0]), [2.0, 4.0])


def test_just_determined_enforced():
    from twoseel.estfun import EstimatingFunction

    with pytest.raises(DomainError):
        EstimatingFunction("bad", 1, 1, 2, lambda z, t: z, lambda z, t: z)


def _fd_jacobian(ef, z, theta):
    h = 1e-6 * (1.0 + np.abs(theta))
    cols = []
    for k in range(ef.p):
        e = np.zeros(ef.p)
        e[k] = h[k]
        cols.append((ef(z, theta + e) - ef(z, theta - e)) / (2 * h[k]))
    return np.stack(cols, axis=-1)


@pytest.mark.parametrize("ef, draw", [
    (mean_ef(1), lambda r: (r.normal(size=1), r.normal(size=1))),
    (mean_ef(3), lambda r: (r.normal(size=3), r.normal(size=3))),
    (gini_ef(), lambda r: (np.sort(r.exponential(size=2))[::-1], r.uniform(-1, 2, size=1))),
    (regression_ef(2), lambda r: (np.r_[1.0, r.uniform(0, 30), r.normal(30)], r.normal(size=2))),
    (regression_ef(3), lambda r: (r.normal(size=4), r.normal(size=3))),
])
def test_jacobian_matches_central_differences(ef, draw):
    rng = np.random.default_rng(11)
    for _ in range(100):
        z, theta = draw(rng)
        J = ef.jac(z, theta)
        fd = _fd_jacobian(ef, z, theta)
        scale = max(1.0, np.abs(J).max())
        assert np.abs(J - fd).max() <= 1e-5 * scale


def test_vectorised_evaluation_matches_rows():
    rng = np.random.default_rng(3)
    Z = np.column_stack([np.ones(7), rng.uniform(0, 30, 7), rng.normal(size=7)])
    ef = regression_ef(2)
    beta = np.array([0.5, -0.2])
    np.testing.assert_allclose(ef(Z, beta), np.stack([ef(z, beta) for z in Z]))
    np.testing.assert_allclose(ef.jac(Z, beta), np.stack([ef.jac(z, beta) for z in Z]))


def test_two_sample_data_derived_sizes():
    d = TwoSampleData(np.arange(6.0), np.arange(4.0))
    assert (d.m, d.n, d.N, d.d) == (6, 4, 10, 1)
    assert d.f_m == pytest.approx(10 / 6) and d.f_n == pytest.approx(10 / 4)
    assert d.larger == "x"
    assert TwoSampleData([1.0, 2.0], [1.0, 2.0, 3.0]).larger == "y"


def test_two_sample_data_validation():
    with pytest.raises(InputError):
        TwoSampleData([1.0, np.inf], [1.0, 2.0])
    with pytest.raises(InputError):
        TwoSampleData(np.ones((3, 2)), np.ones((3, 3)))
    d = TwoSampleData([1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(InsufficientData):
        TwoSampleData([[1.0, 2.0]] * 2, [[0.0, 1.0]] * 5).check(mean_ef(2))
    with pytest.raises(InputError):
        d.check(mean_ef(2))


def test_gini_data_uses_pair_counts():
    d = gini_data(np.arange(1.0, 21.0), np.arange(1.0, 31.0))
    assert (d.m, d.n, d.N) == (10, 15, 25)
