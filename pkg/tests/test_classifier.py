import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from mrn.classifier import CentroidSet, class_centroids, episode_loss, loss_from_distances, predict
from mrn.errors import UsageError
from mrn.numerics import Tensor, ops
from mrn.relation import MetricKind

from oracles import softmax_cross_entropy

EUCLID = MetricKind.EUCLIDEAN


def centroids(rows):
    arr = np.asarray(rows, dtype=float)
    return CentroidSet(Tensor(arr), np.arange(arr.shape[0]))


def test_single_shot_centroid_is_the_support(rng):
    s = rng.normal(size=(3, 4))
    c = class_centroids(Tensor(s), [0, 1, 2], 3, 1)
    assert c.centroids.data.tobytes() == s.tobytes()


def test_two_supports_average():
    c = class_centroids(Tensor([[0.0, 0.0], [2.0, 2.0]]), [0, 0], 1, 2)
    assert c.centroids.data.tolist() == [[1.0, 1.0]]


def test_support_order_does_not_matter(rng):
    s = rng.normal(size=(6, 3))
    y = np.array([0, 0, 0, 1, 1, 1])
    perm = rng.permutation(6)
    a = class_centroids(Tensor(s), y, 2, 3).centroids.data
    b = class_centroids(Tensor(s[perm]), y[perm], 2, 3).centroids.data
    np.testing.assert_allclose(a, b, rtol=1e-15, atol=1e-15)


def test_missing_class_is_an_error():
    with pytest.raises(UsageError, match="no support"):
        class_centroids(Tensor(np.zeros((2, 2))), [0, 0], 2, 2)
    with pytest.raises(UsageError, match="expected"):
        class_centroids(Tensor(np.zeros((3, 2))), [0, 0, 1], 2, 1)


def test_equidistant_loss_is_ln2():
    loss = episode_loss(Tensor([[0.0, 0.0]]), [0], centroids([[1.0, 0.0], [-1.0, 0.0]]), EUCLID)
    assert loss.item() == pytest.approx(np.log(2.0), abs=1e-15)


def test_loss_vanishes_in_the_separated_limit():
    d = Tensor([[0.0, 1e3, 1e3]])
    assert loss_from_distances(d, [0]).item() < 1e-300


def test_loss_matches_oracle(rng):
    d = rng.uniform(0, 5, size=(15, 5))
    y = rng.integers(0, 5, size=15)
    assert loss_from_distances(Tensor(d), y).item() == pytest.approx(softmax_cross_entropy(d, y), abs=1e-10)


def test_label_range_checked():
    with pytest.raises(UsageError):
        loss_from_distances(Tensor(np.zeros((2, 3))), [0, 3])


@given(hnp.arrays(np.int64, st.tuples(st.integers(1, 6), st.integers(2, 6)), elements=st.integers(0, 400)),
       st.integers(-80, 80), st.data())
def test_shift_invariance_and_nonnegativity(d, shift, data):
    # quarter-integer grid: shifting is exact, so argmin ties survive the shift
    d, shift = d / 4.0, shift / 4.0
    y = data.draw(st.lists(st.integers(0, d.shape[1] - 1), min_size=d.shape[0], max_size=d.shape[0]))
    base = loss_from_distances(Tensor(d), y).item()
    assert base >= 0
    assert loss_from_distances(Tensor(d + shift), y).item() == pytest.approx(base, abs=1e-9)
    assert (np.argmin(d, 1) == np.argmin(d + shift, 1)).all()


@pytest.mark.parametrize("c", [2, 5, 10])
def test_equal_distances_give_ln_c(c):
    assert loss_from_distances(Tensor(np.full((4, c), 2.5)), [0, 1, 0, 1]).item() == pytest.approx(np.log(c), abs=1e-14)


def test_predict_examples():
    cs = centroids([[0.0, 0.0], [10.0, 0.0]])
    assert predict(Tensor([[1.0, 0.0]]), cs, EUCLID).tolist() == [0]
    cs = centroids([[0.0, 0.0], [5.0, 1.0], [3.0, 3.0]])
    assert predict(Tensor([[3.0, 3.0]]), cs, EUCLID).tolist() == [2]


def test_predict_ties_go_to_lowest_class():
    cs = centroids([[1.0], [-1.0], [1.0]])
    assert predict(Tensor([[0.0]]), cs, EUCLID).tolist() == [0]


def test_predict_agrees_with_softmax(rng):
    q, c = rng.normal(size=(20, 3)), rng.normal(size=(5, 3))
    cs = centroids(c)
    d = ((q[:, None] - c[None]) ** 2).sum(-1)
    probs = ops.softmax(Tensor(-d), axis=1).data
    assert (predict(Tensor(q), cs, EUCLID) == probs.argmax(1)).all()


def test_predict_class_permutation_equivariance(rng):
    q, c = rng.normal(size=(20, 3)), rng.normal(size=(5, 3))
    perm = rng.permutation(5)
    a = predict(Tensor(q), centroids(c), EUCLID)
    b = predict(Tensor(q), centroids(c[perm]), EUCLID)
    assert (perm[b] == a).all()
