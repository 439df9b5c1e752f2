import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from alphapi.errors import ExcitationInsufficient
from alphapi.regression import COND_LIMIT, batch_least_squares


def system(seed, N=40, L=5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(N, L))
    W = rng.normal(size=L)
    return X, W, X @ W


def test_recovers_an_exact_solution():
    X, W, y = system(0)
    got, info = batch_least_squares(X, y)
    np.testing.assert_allclose(got, W, rtol=1e-12)
    assert info.ridge == 0.0 and info.residual_inf <= 1e-12 and info.dropped == ()


def test_matches_numpy_least_squares_on_noisy_data():
    X, W, y = system(1)
    y = y + np.random.default_rng(2).normal(scale=0.1, size=y.size)
    got, _ = batch_least_squares(X, y, groups=[0, 0, 1, 1, 2])
    np.testing.assert_allclose(got, np.linalg.lstsq(X, y, rcond=None)[0], rtol=1e-10)


@given(st.floats(1e-6, 1e6), st.integers(0, 4))
def test_rescaling_a_group_rescales_its_weights(c, seed):
    X, W, y = system(seed)
    groups = np.array([0, 0, 1, 1, 1])
    Xs = X.copy()
    Xs[:, groups == 1] *= c
    a, _ = batch_least_squares(X, y, groups=groups)
    b, _ = batch_least_squares(Xs, y, groups=groups)
    np.testing.assert_allclose(b[groups == 1] * c, a[groups == 1], rtol=1e-8)
    np.testing.assert_allclose(b[groups == 0], a[groups == 0], rtol=1e-8)


def test_dead_optional_column_is_dropped():
    X, W, y = system(3)
    X[:, 2] = 0.0
    y = X @ W
    got, info = batch_least_squares(X, y, names=list("abcde"),
                                    required=[True, True, False, False, False])
    assert info.dropped == ("c",)
    assert got[2] == 0.0
    np.testing.assert_allclose(np.delete(got, 2), np.delete(W, 2), rtol=1e-12)


def test_dead_required_column_is_named():
    X, _, y = system(4)
    X[:, 1] = 0.0
    with pytest.raises(ExcitationInsufficient, match=r"\['b'\]"):
        batch_least_squares(X, y, names=list("abcde"))


def test_duplicate_columns_are_rank_deficient():
    X, _, y = system(5)
    X[:, 4] = 3.0 * X[:, 0]
    with pytest.raises(ExcitationInsufficient, match="rank deficient") as info:
        batch_least_squares(X, y)
    assert info.value.smallest_singular_value < 1e-12


def test_too_few_samples_and_non_finite_data():
    X, _, y = system(6, N=4)
    with pytest.raises(ExcitationInsufficient):
        batch_least_squares(X, y)
    X, _, y = system(6)
    X[0, 0] = np.nan
    with pytest.raises(ExcitationInsufficient):
        batch_least_squares(X, y)


def test_ridge_engages_on_ill_conditioned_groups():
    X, W, y = system(7)
    X[:, 1] = X[:, 0] + 1e-14 * X[:, 1]
    _, info = batch_least_squares(X, y, groups=[0, 1, 2, 3, 4])
    assert info.condition > COND_LIMIT
    assert info.ridge > 0.0


def test_truncation_discards_weak_directions():
    X, W, y = system(8)
    X[:, 1] = X[:, 0] + 1e-6 * X[:, 1]
    y = X @ W
    full, _ = batch_least_squares(X, y)
    cut, _ = batch_least_squares(X, y, rcond=1e-3)
    np.testing.assert_allclose(full, W, rtol=1e-6)
    # the two nearly equal columns share their weight once the split is discarded
    assert cut[0] == pytest.approx(cut[1], rel=1e-3)
    assert np.abs(X @ cut - y).max() <= 1e-3 * np.abs(y).max()
