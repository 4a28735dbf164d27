import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from mrn.errors import ShapeError
from mrn.numerics import Tensor, finite_diff_check, no_grad
from mrn.relation import (
    MetricKind, RelationConfig, RelationModule, cross_matrix, pairwise_matrix, preprocess_diff,
    relation_distance, squared_euclidean,
)

vectors = hnp.arrays(np.float64, 6, elements=st.floats(-10, 10))


def zero_bias(module):
    for name, p in module.named_parameters().items():
        if name.endswith("bias") or name.endswith("beta"):
            p.data[:] = 0.0
    return module


def test_difference_values():
    assert preprocess_diff(Tensor([3.0, 1.0]), Tensor([1.0, 2.0])).data.tolist() == [2.0, -1.0]
    x = Tensor([0.5, -2.0])
    assert not preprocess_diff(x, x).data.any()


@given(vectors, vectors)
def test_difference_antisymmetric(a, b):
    assert (preprocess_diff(a, b).data == -preprocess_diff(b, a).data).all()


def test_difference_shape_mismatch():
    with pytest.raises(ShapeError):
        preprocess_diff(Tensor(np.ones(3)), Tensor(np.ones(4)))


def test_equal_inputs_zero_bias_give_ln2(rng):
    module = zero_bias(RelationModule(RelationConfig((6,)), rng))
    x = rng.normal(size=6)
    assert relation_distance(x, x, module).data == pytest.approx(np.log(2.0), abs=1e-15)


def test_equal_feature_maps_zero_bias_give_ln2(rng):
    module = zero_bias(RelationModule(RelationConfig((4, 5, 5), filters=8), rng)).eval()
    x = rng.normal(size=(4, 5, 5))
    with no_grad():
        d = relation_distance(x, x, module).data
    assert d == pytest.approx(np.log(2.0), abs=1e-15)


def test_learned_distance_non_negative(rng):
    module = RelationModule(RelationConfig((6,)), rng)
    a, b = rng.normal(size=(1000, 6)) * 5, rng.normal(size=(1000, 6)) * 5
    assert (relation_distance(a, b, module).data >= 0).all()


def test_linear_output_mode_can_be_negative(rng):
    module = RelationModule(RelationConfig((6,), output="linear"), rng)
    module.fc2.bias.data[:] = -100.0
    assert relation_distance(np.zeros(6), np.ones(6), module).data < 0


def test_relation_gradcheck_vector(rng):
    module = RelationModule(RelationConfig((5,), hidden=8), rng)
    a, b = Tensor(rng.normal(size=(7, 5))), Tensor(rng.normal(size=(7, 5)))
    assert finite_diff_check(lambda: relation_distance(a, b, module).sum(), module.parameters()) < 1e-4


def test_relation_gradcheck_feature_maps(rng):
    module = RelationModule(RelationConfig((3, 4, 4), filters=4), rng)
    a, b = Tensor(rng.normal(size=(4, 3, 4, 4))), Tensor(rng.normal(size=(4, 3, 4, 4)))
    assert finite_diff_check(lambda: relation_distance(a, b, module).sum(), module.parameters()) < 1e-4


def test_projected_difference_route_matches_explicit_difference(rng):
    module = RelationModule(RelationConfig((6,), hidden=16), rng)
    x, y = rng.normal(size=(5, 6)), rng.normal(size=(4, 6))
    explicit = module(Tensor((x[:, None, :] - y[None, :, :]).reshape(20, 6))).data.reshape(5, 4)
    np.testing.assert_allclose(module.cross(Tensor(x), Tensor(y)).data, explicit, rtol=1e-12, atol=1e-14)


def test_squared_euclidean_values():
    assert squared_euclidean(Tensor([0.0, 0.0]), Tensor([3.0, 4.0])).data == 25.0
    x = Tensor([1.5, -2.0, 3.0])
    assert squared_euclidean(x, x).data == 0.0


@given(vectors, vectors)
def test_squared_euclidean_symmetric_nonneg(a, b):
    d = squared_euclidean(Tensor(a), Tensor(b)).data
    assert d >= 0
    assert d == squared_euclidean(Tensor(b), Tensor(a)).data


def test_pairwise_euclidean_hand_matrix():
    f = Tensor([[0.0], [1.0], [4.0]])
    assert pairwise_matrix(f, MetricKind.EUCLIDEAN).data.tolist() == [[0, 1, 16], [1, 0, 9], [16, 9, 0]]


def test_pairwise_learned_shape_and_range(rng):
    module = RelationModule(RelationConfig((6,)), rng)
    d = pairwise_matrix(Tensor(rng.normal(size=(9, 6))), MetricKind.LEARNED, module).data
    assert d.shape == (9, 9)
    assert (d >= 0).all()


@pytest.mark.parametrize("metric", list(MetricKind))
def test_pairwise_matches_scalar_calls_bit_exactly(rng, metric):
    module = RelationModule(RelationConfig((6,), hidden=16), rng)
    f = rng.normal(size=(7, 6))
    dmat = pairwise_matrix(Tensor(f), metric, module).data
    for i in range(7):
        for j in range(7):
            if metric is MetricKind.LEARNED:
                ref = relation_distance(f[i], f[j], module).data
            else:
                ref = squared_euclidean(Tensor(f[i]), Tensor(f[j])).data
            assert dmat[i, j].tobytes() == np.float64(ref).tobytes()


def test_pairwise_matches_scalar_calls_feature_maps(rng):
    module = RelationModule(RelationConfig((2, 4, 4), filters=4), rng).eval()
    f = rng.normal(size=(4, 2, 4, 4))
    with no_grad():
        dmat = pairwise_matrix(Tensor(f), MetricKind.LEARNED, module).data
        ref = np.array([[relation_distance(f[i], f[j], module).data for j in range(4)] for i in range(4)])
    np.testing.assert_allclose(dmat, ref, rtol=1e-12)


def test_learned_metric_translation_invariant(rng):
    module = RelationModule(RelationConfig((6,)), rng)
    # dyadic values keep x + c and x - y exact in floating point
    f = rng.integers(-8, 8, size=(5, 6)) / 4.0
    c = rng.integers(-8, 8, size=6) / 2.0
    a = pairwise_matrix(Tensor(f), MetricKind.LEARNED, module).data
    b = pairwise_matrix(Tensor(f + c), MetricKind.LEARNED, module).data
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)
    ref = relation_distance(f[:, None, :].repeat(5, 1).reshape(-1, 6), np.tile(f, (5, 1)), module).data
    np.testing.assert_allclose(a.reshape(-1), ref, rtol=1e-12)


def test_symmetrize_flag(rng):
    module = RelationModule(RelationConfig((6,)), rng)
    f = Tensor(rng.normal(size=(5, 6)))
    d = pairwise_matrix(f, MetricKind.LEARNED, module, symmetrize=True).data
    np.testing.assert_allclose(d, d.T, rtol=0, atol=0)


def test_cross_matrix_shape(rng):
    module = RelationModule(RelationConfig((3,)), rng)
    out = cross_matrix(Tensor(rng.normal(size=(4, 3))), Tensor(rng.normal(size=(2, 3))), MetricKind.LEARNED, module)
    assert out.shape == (4, 2)
