import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mrn.episodes import (
    Dataset, SplitDataset, SynthSpec, hflip, load_dataset, sample_episode, split_counts, synth_dataset,
    write_dataset,
)
from mrn.errors import ConfigError, DatasetError, FormatError


@pytest.fixture(scope="module")
def synth():
    return synth_dataset(SynthSpec())


def test_one_shot_episode_size(synth):
    ep = sample_episode(synth.train, 5, 1, 15, np.random.default_rng(0))
    assert ep.support_x.shape[0] + ep.query_x.shape[0] == 80
    assert ep.support_y.tolist() == [0, 1, 2, 3, 4]


def test_five_shot_episode_size(synth):
    ep = sample_episode(synth.train, 5, 5, 10, np.random.default_rng(0))
    assert ep.support_x.shape[0] == 25 and ep.query_x.shape[0] == 50
    assert np.bincount(ep.support_y).tolist() == [5] * 5
    assert np.bincount(ep.query_y).tolist() == [10] * 5


def test_same_seed_same_episode(synth):
    a = sample_episode(synth.train, 5, 1, 15, np.random.default_rng(7))
    b = sample_episode(synth.train, 5, 1, 15, np.random.default_rng(7))
    assert a.class_map == b.class_map
    assert (a.support_idx == b.support_idx).all() and (a.query_idx == b.query_idx).all()
    assert a.query_x.tobytes() == b.query_x.tobytes()


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 10), st.integers(0, 5))
def test_support_query_disjoint(seed, k, q, u):
    data = synth_dataset(SynthSpec(classes=10, items_per_class=25, seed=1))
    ep = sample_episode(data.train, 5, k, q, np.random.default_rng(seed), n_unlabeled=u)
    parts = [set(ep.support_idx), set(ep.query_idx), set(ep.unlabeled_idx)]
    assert not (parts[0] & parts[1]) and not (parts[0] & parts[2]) and not (parts[1] & parts[2])
    assert len(ep.unlabeled_idx) == 5 * u
    global_labels = data.train.y[ep.support_idx]
    assert all(ep.class_map[int(g)] == l for g, l in zip(global_labels, ep.support_y))


def test_insufficient_data_errors(synth):
    with pytest.raises(DatasetError):
        sample_episode(synth.test, 5, 1, 15, np.random.default_rng(0))
    with pytest.raises(DatasetError):
        sample_episode(synth.train, 5, 30, 30, np.random.default_rng(0))


def test_synth_bookkeeping(synth):
    assert sum(len(synth.split(s)) for s in ("train", "val", "test")) == 1000
    assert [len(synth.split(s).classes) for s in ("train", "val", "test")] == [12, 4, 4]
    assert split_counts(20) == (12, 4, 4)
    assert len(synth.split("novel").classes) == 8
    labels = [set(synth.split(s).classes) for s in ("train", "val", "test")]
    assert not (labels[0] & labels[1] or labels[0] & labels[2] or labels[1] & labels[2])


def test_synth_deterministic():
    a, b = synth_dataset(SynthSpec(seed=5)), synth_dataset(SynthSpec(seed=5))
    assert a.train.x.tobytes() == b.train.x.tobytes()


def test_synth_degenerate_clusters():
    data = synth_dataset(SynthSpec(cluster_std=1e-14, seed=2))
    for ds in (data.train, data.val, data.test):
        for c, idx in ds.class_index.items():
            spread = np.abs(ds.x[idx] - ds.x[idx].mean(0)).max()
            assert spread < 1e-12


def test_synth_spec_validation():
    with pytest.raises(ConfigError):
        SynthSpec(cluster_std=0.0)


def test_nearest_centroid_oracle_on_separated_clusters():
    spec = SynthSpec(cluster_std=0.05, center_std=1.0, seed=4)
    data = synth_dataset(spec)
    # brute force: centroid from the generated items, classify every item
    x = np.concatenate([data.train.x, data.val.x, data.test.x])
    y = np.concatenate([data.train.y, data.val.y, data.test.y])
    classes = np.unique(y)
    cents = np.stack([x[y == c].mean(0) for c in classes])
    d = ((x[:, None] - cents[None]) ** 2).sum(-1)
    assert (classes[d.argmin(1)] == y).mean() >= 0.99


def test_binary_round_trip(tmp_path):
    data = synth_dataset(SynthSpec(classes=6, dim=5, items_per_class=4, seed=9))
    write_dataset(data, tmp_path)
    back = load_dataset(tmp_path)
    for s in ("train", "val", "test"):
        assert (back.split(s).y == data.split(s).y).all()
        np.testing.assert_array_equal(back.split(s).x, data.split(s).x.astype(np.float32).astype(np.float64))
    assert (tmp_path / "manifest.txt").read_text().splitlines()[0] == "train: 0 1 2 3"


def test_image_round_trip_and_flip_flag(tmp_path, rng):
    imgs = rng.normal(size=(6, 1, 2, 3)).astype(np.float32)
    y = np.array([0, 0, 1, 1, 2, 2])
    data = SplitDataset(*(Dataset(imgs[y == c], y[y == c], split=s, augment_flip=(s == "train"))
                          for c, s in enumerate(("train", "val", "test"))))
    write_dataset(data, tmp_path)
    back = load_dataset(tmp_path)
    assert back.train.augment_flip and not back.test.augment_flip
    np.testing.assert_array_equal(back.val.x, imgs[2:4])


def test_hflip_reverses_columns():
    img = np.arange(6.0).reshape(1, 2, 3)
    assert hflip(img).tolist() == [[[2, 1, 0], [5, 4, 3]]]


def test_empty_class_list(tmp_path):
    (tmp_path / "dataset.mrnd").write_bytes(b"MRND" + struct.pack("<II", 1, 0))
    (tmp_path / "manifest.txt").write_text("train:\nval:\ntest:\n")
    with pytest.raises(FormatError, match="empty class list"):
        load_dataset(tmp_path)


def test_bad_magic_and_truncation(tmp_path):
    data = synth_dataset(SynthSpec(classes=3, dim=2, items_per_class=2, seed=0))
    write_dataset(data, tmp_path)
    raw = (tmp_path / "dataset.mrnd").read_bytes()
    (tmp_path / "dataset.mrnd").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(FormatError, match="offset 0"):
        load_dataset(tmp_path)
    (tmp_path / "dataset.mrnd").write_bytes(raw[:-3])
    with pytest.raises(FormatError) as info:
        load_dataset(tmp_path)
    assert info.value.offset == len(raw) - 8
    (tmp_path / "dataset.mrnd").write_bytes(raw[:5])
    with pytest.raises(FormatError, match="truncated header"):
        load_dataset(tmp_path)
