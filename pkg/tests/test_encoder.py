import numpy as np
import pytest

from mrn.encoder import Encoder, EncoderConfig, encode
from mrn.errors import ConfigError, ShapeError
from mrn.numerics import Tensor, no_grad


def test_conv4_on_84px_input_gives_5x5_maps(rng):
    cfg = EncoderConfig(kind="conv4", input_shape=(3, 84, 84), channels=64)
    enc = Encoder(cfg, rng)
    with no_grad():
        out = enc(Tensor(rng.normal(size=(2, 3, 84, 84))))
    assert out.shape == (2, 64, 5, 5)
    assert cfg.feature_shape() == (64, 5, 5)


@pytest.mark.parametrize("side,expected", [(16, 1), (32, 2), (40, 2), (64, 4)])
def test_conv4_floor_arithmetic(rng, side, expected):
    cfg = EncoderConfig(kind="conv4", input_shape=(1, side, side), channels=4)
    out = Encoder(cfg, rng)(Tensor(rng.normal(size=(2, 1, side, side))))
    assert out.shape == (2, 4, expected, expected)


def test_conv4_rejects_tiny_inputs():
    with pytest.raises(ConfigError):
        EncoderConfig(kind="conv4", input_shape=(3, 15, 15))


def test_identity_returns_input(rng):
    enc = Encoder(EncoderConfig(kind="identity", input_shape=(16,), out_dim=16), rng)
    x = rng.normal(size=(1, 16))
    assert enc(Tensor(x)).data.tobytes() == x.tobytes()


def test_identity_requires_matching_width():
    with pytest.raises(ConfigError):
        EncoderConfig(kind="identity", input_shape=(16,), out_dim=8)


def test_mlp_zero_input_zero_bias_gives_zero(rng):
    enc = Encoder(EncoderConfig(kind="mlp", input_shape=(16,), mlp_dims=(32,), out_dim=16), rng)
    out = enc(Tensor(np.zeros((3, 16))))
    assert out.shape == (3, 16)
    assert not out.data.any()


def test_shape_mismatch(rng):
    enc = Encoder(EncoderConfig(kind="mlp", input_shape=(16,)), rng)
    with pytest.raises(ShapeError):
        encode(Tensor(np.zeros((2, 8))), enc)


def test_eval_mode_is_deterministic_per_sample(rng):
    enc = Encoder(EncoderConfig(kind="conv4", input_shape=(1, 16, 16), channels=4), rng)
    x = rng.normal(size=(4, 1, 16, 16))
    enc(Tensor(x))  # populate running statistics
    enc.eval()
    twice = np.concatenate([x[:1], x[:1]])
    out = enc(Tensor(twice)).data
    assert out[0].tobytes() == out[1].tobytes()
