import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import definitional_ranks, pearson_definitional, spearman_definitional
from teamlens.stats import PairedSeries, average_ranks, pearson, spearman


def series(x, y):
    return PairedSeries(tuple(x), tuple(y))


def test_spearman_monotone():
    assert spearman(series([1, 2, 3, 4], [10, 20, 25, 90])) == pytest.approx(1.0, abs=1e-12)
    assert spearman(series([1, 2, 3, 4], [9, 5, 2, -1])) == pytest.approx(-1.0, abs=1e-12)


def test_spearman_tied_fixture():
    x, y = (1, 2, 2, 4), (1, 3, 2, 4)
    assert list(average_ranks(x)) == [1.0, 2.5, 2.5, 4.0]
    assert spearman(series(x, y)) == pytest.approx(spearman_definitional(x, y), abs=1e-12)
    # ranks (1, 2.5, 2.5, 4) vs (1, 3, 2, 4): cov 4.5, var 4.5 and 5 -> 4.5 / sqrt(22.5)
    assert spearman(series(x, y)) == pytest.approx(4.5 / math.sqrt(22.5), abs=1e-12)


def test_pearson_affine():
    x = [0.5, 1.0, 2.0, 3.5]
    assert pearson(series(x, [2 * v + 1 for v in x])) == pytest.approx(1.0, abs=1e-12)
    assert pearson(series(x, [-v for v in x])) == pytest.approx(-1.0, abs=1e-12)


def test_pearson_six_points():
    x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
    y = [2.1, 3.9, 6.2, 7.8, 9.5, 13.0]
    assert pearson(series(x, y)) == pytest.approx(pearson_definitional(x, y), abs=1e-12)
    assert pearson(series(x, y)) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)


def test_constant_series_rejected():
    for fn in (spearman, pearson):
        with pytest.raises(ValueError, match="zero variance"):
            fn(series([1, 1, 1], [1, 2, 3]))
        with pytest.raises(ValueError, match="zero variance"):
            fn(series([1, 2, 3], [4, 4, 4]))
    with pytest.raises(ValueError):
        spearman(series([1], [2]))


def test_from_pairs_drops_missing():
    s = PairedSeries.from_pairs([1, None, 3, 4], [1, 2, None, 5], labels=["a", "b", "c", "d"])
    assert s.x == (1.0, 4.0)
    assert s.labels == ("a", "d")
    assert s.n_dropped == 2


def test_ranks_match_definition():
    rng = random.Random(0)
    for _ in range(50):
        vals = [rng.randint(0, 5) for _ in range(rng.randint(1, 12))]
        assert list(average_ranks(vals)) == definitional_ranks(vals)


values = st.lists(st.integers(-50, 50), min_size=3, max_size=15)


def _nonconstant(xs):
    return len(set(xs)) > 1


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_spearman_monotone_invariance(data):
    n = data.draw(st.integers(3, 15))
    x = data.draw(st.lists(st.integers(-50, 50), min_size=n, max_size=n).filter(_nonconstant))
    y = data.draw(st.lists(st.integers(-50, 50), min_size=n, max_size=n).filter(_nonconstant))
    rho = spearman(series(x, y))
    assert -1 <= rho <= 1
    assert rho == pytest.approx(spearman(series(y, x)), abs=1e-12)
    assert spearman(series([v**3 + 7 for v in x], y)) == pytest.approx(rho, abs=1e-12)
    assert spearman(series(x, [math.exp(v / 10) for v in y])) == pytest.approx(rho, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_pearson_affine_invariance(data):
    n = data.draw(st.integers(3, 12))
    x = data.draw(st.lists(st.integers(-20, 20), min_size=n, max_size=n).filter(_nonconstant))
    y = data.draw(st.lists(st.integers(-20, 20), min_size=n, max_size=n).filter(_nonconstant))
    a = data.draw(st.floats(0.5, 4))
    b = data.draw(st.floats(-10, 10))
    r = pearson(series(x, y))
    assert -1 <= r <= 1
    assert r == pytest.approx(pearson(series(y, x)), abs=1e-12)
    assert pearson(series([a * v + b for v in x], y)) == pytest.approx(r, abs=1e-9)
