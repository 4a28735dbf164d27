"""Datasets, K-shot C-way episode sampling, synthetic data and the MRND format."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DatasetError, FormatError

SPLITS = ("train", "val", "test")
MAGIC = b"MRND"
VERSION = 1
DATA_FILE = "dataset.mrnd"
MANIFEST_FILE = "manifest.txt"


@dataclass
class Dataset:
    """One split: items ``x`` with global class ids ``y``."""

    x: np.ndarray
    y: np.ndarray
    split: str = "train"
    augment_flip: bool = False
    class_index: dict[int, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.x.shape[0] != self.y.shape[0]:
            raise DatasetError(f"{self.x.shape[0]} items but {self.y.shape[0]} labels")
        self.class_index = {int(c): np.flatnonzero(self.y == c) for c in np.unique(self.y)}

    @property
    def classes(self) -> list[int]:
        return sorted(self.class_index)

    @property
    def item_shape(self) -> tuple[int, ...]:
        return self.x.shape[1:]

    def __len__(self) -> int:
        return self.x.shape[0]


@dataclass
class SplitDataset:
    train: Dataset
    val: Dataset
    test: Dataset

    def __post_init__(self):
        seen: dict[int, str] = {}
        for name in SPLITS:
            for c in getattr(self, name).classes:
                if c in seen:
                    raise DatasetError(f"class {c} appears in both {seen[c]} and {name}")
                seen[c] = name

    def split(self, name: str) -> Dataset:
        """A named split; ``novel`` merges val and test (every class unseen in training)."""
        if name in SPLITS:
            return getattr(self, name)
        if name == "novel":
            return Dataset(
                np.concatenate([self.val.x, self.test.x]),
                np.concatenate([self.val.y, self.test.y]),
                split="novel",
            )
        raise ConfigError(f"unknown split {name!r}")


@dataclass
class Episode:
    support_x: np.ndarray
    support_y: np.ndarray   # episode-local labels, grouped by class
    query_x: np.ndarray
    query_y: np.ndarray
    unlabeled_x: np.ndarray
    class_map: dict[int, int]  # global class id -> local label
    support_idx: np.ndarray
    query_idx: np.ndarray
    unlabeled_idx: np.ndarray
    seed: int | None = None

    @property
    def n_classes(self) -> int:
        return len(self.class_map)

    @property
    def shots(self) -> int:
        return self.support_x.shape[0] // self.n_classes


def hflip(x: np.ndarray) -> np.ndarray:
    """Mirror images along the last (width) axis."""
    return x[..., ::-1]


def sample_episode(
    dataset: Dataset,
    n_way: int,
    k_shot: int,
    n_query: int,
    rng: np.random.Generator,
    n_unlabeled: int = 0,
    seed: int | None = None,
) -> Episode:
    """Draw a K-shot C-way episode with ``n_query`` queries (and optionally
    ``n_unlabeled`` extra unlabeled items) per class, all without replacement."""
    classes = dataset.classes
    if len(classes) < n_way:
        raise DatasetError(f"{dataset.split} split has {len(classes)} classes, episode needs {n_way}")
    need = k_shot + n_query + n_unlabeled
    chosen = rng.choice(np.array(classes), size=n_way, replace=False)
    sup, qry, unl = [], [], []
    for c in chosen:
        items = dataset.class_index[int(c)]
        if items.size < need:
            raise DatasetError(f"class {int(c)} has {items.size} items, episode needs {need}")
        picked = rng.permutation(items)[:need]
        sup.append(picked[:k_shot])
        qry.append(picked[k_shot:k_shot + n_query])
        unl.append(picked[k_shot + n_query:])
    sup_idx, qry_idx, unl_idx = (np.concatenate(p) for p in (sup, qry, unl))
    if np.intersect1d(sup_idx, qry_idx).size:
        raise DatasetError("support and query sets overlap")

    x_all = dataset.x[np.concatenate([sup_idx, qry_idx, unl_idx])]
    if dataset.augment_flip and dataset.split == "train" and dataset.x.ndim >= 3:
        flip = rng.random(x_all.shape[0]) < 0.5
        x_all[flip] = hflip(x_all[flip])
    ns, nq = sup_idx.size, qry_idx.size
    local = np.arange(n_way)
    return Episode(
        support_x=x_all[:ns],
        support_y=np.repeat(local, k_shot),
        query_x=x_all[ns:ns + nq],
        query_y=np.repeat(local, n_query),
        unlabeled_x=x_all[ns + nq:],
        class_map={int(c): i for i, c in enumerate(chosen)},
        support_idx=sup_idx,
        query_idx=qry_idx,
        unlabeled_idx=unl_idx,
        seed=seed,
    )


def episode_rng(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


# -- synthetic Gaussian clusters --------------------------------------------

@dataclass
class SynthSpec:
    classes: int = 20
    dim: int = 16
    cluster_std: float = 0.6
    center_std: float = 1.0
    items_per_class: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.cluster_std <= 0 or self.center_std <= 0:
            raise ConfigError("cluster_std and center_std must be positive")
        if self.classes < 3:
            raise ConfigError("need at least 3 classes to form train/val/test splits")


def split_counts(n_classes: int) -> tuple[int, int, int]:
    """60/20/20 class partition."""
    n_val = max(1, round(0.2 * n_classes))
    n_test = max(1, round(0.2 * n_classes))
    return n_classes - n_val - n_test, n_val, n_test


def synth_dataset(spec: SynthSpec) -> SplitDataset:
    rng = np.random.default_rng(spec.seed)
    centers = rng.normal(0.0, spec.center_std, size=(spec.classes, spec.dim))
    noise = rng.normal(0.0, spec.cluster_std, size=(spec.classes, spec.items_per_class, spec.dim))
    x = (centers[:, None, :] + noise).reshape(-1, spec.dim)
    y = np.repeat(np.arange(spec.classes), spec.items_per_class)
    n_train, n_val, _ = split_counts(spec.classes)
    bounds = {"train": (0, n_train), "val": (n_train, n_train + n_val), "test": (n_train + n_val, spec.classes)}
    parts = {}
    for name, (lo, hi) in bounds.items():
        mask = (y >= lo) & (y < hi)
        parts[name] = Dataset(x[mask], y[mask], split=name)
    return SplitDataset(**parts)


# -- binary format -------------------------------------------------------------

def write_dataset(data: SplitDataset, path) -> Path:
    """Write ``dataset.mrnd`` plus ``manifest.txt`` into directory ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    all_classes = sorted(set().union(*(getattr(data, s).classes for s in SPLITS)))
    chunks = [MAGIC, struct.pack("<II", VERSION, len(all_classes))]
    for name in SPLITS:
        ds = getattr(data, name)
        for xi, yi in zip(ds.x, ds.y):
            xi = np.asarray(xi, dtype="<f4")
            chunks.append(struct.pack("<IB", int(yi), xi.ndim))
            chunks.append(struct.pack(f"<{xi.ndim}I", *xi.shape))
            chunks.append(xi.tobytes())
    (path / DATA_FILE).write_bytes(b"".join(chunks))
    lines = [f"{name}: " + " ".join(str(c) for c in getattr(data, name).classes) for name in SPLITS]
    lines.append(f"augment_flip: {int(data.train.augment_flip)}")
    (path / MANIFEST_FILE).write_text("\n".join(lines) + "\n")
    return path


def _parse_manifest(text: str) -> tuple[dict[str, list[int]], bool]:
    splits: dict[str, list[int]] = {}
    flip = False
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.partition(":")
        key = key.strip()
        if key == "augment_flip":
            flip = val.strip() not in ("", "0", "false", "False")
        elif key in SPLITS:
            splits[key] = [int(v) for v in val.split()]
        else:
            raise FormatError(f"manifest: unknown key {key!r}")
    missing = [s for s in SPLITS if s not in splits]
    if missing:
        raise FormatError(f"manifest: missing splits {missing}")
    return splits, flip


def _read_items(buf: bytes) -> tuple[int, list[tuple[int, np.ndarray]]]:
    if len(buf) < 12:
        raise FormatError("truncated header", len(buf))
    if buf[:4] != MAGIC:
        raise FormatError("bad dataset magic", 0)
    version, class_count = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise FormatError(f"unsupported dataset version {version}", 4)
    if class_count == 0:
        raise FormatError("empty class list", 8)
    pos, items = 12, []
    while pos < len(buf):
        start = pos
        if pos + 5 > len(buf):
            raise FormatError("truncated item header", pos)
        cid, rank = struct.unpack_from("<IB", buf, pos)
        pos += 5
        if pos + 4 * rank > len(buf):
            raise FormatError("truncated extents", pos)
        shape = struct.unpack_from(f"<{rank}I", buf, pos)
        pos += 4 * rank
        n = int(np.prod(shape)) if rank else 1
        if pos + 4 * n > len(buf):
            raise FormatError(f"truncated payload of item starting at {start}", pos)
        arr = np.frombuffer(buf, dtype="<f4", count=n, offset=pos).reshape(shape)
        pos += 4 * n
        items.append((cid, arr.astype(np.float64)))
    return class_count, items


def load_dataset(path, augment_flip: bool | None = None) -> SplitDataset:
    """Read a directory written by :func:`write_dataset` (or the .mrnd file inside one)."""
    path = Path(path)
    data_file = path / DATA_FILE if path.is_dir() else path
    manifest = data_file.parent / MANIFEST_FILE
    class_count, items = _read_items(data_file.read_bytes())
    splits, flip = _parse_manifest(manifest.read_text())
    if augment_flip is not None:
        flip = augment_flip
    ids = {cid for cid, _ in items}
    if len(ids) != class_count:
        raise FormatError(f"header declares {class_count} classes, items use {len(ids)}", 8)
    out = {}
    for name in SPLITS:
        members = set(splits[name])
        sel = [(c, a) for c, a in items if c in members]
        if not sel:
            raise FormatError(f"split {name} has no items")
        shapes = {a.shape for _, a in sel}
        if len(shapes) != 1:
            raise FormatError(f"split {name} mixes item shapes {sorted(shapes)}")
        out[name] = Dataset(
            np.stack([a for _, a in sel]), np.array([c for c, _ in sel]), split=name,
            augment_flip=flip and name == "train",
        )
    return SplitDataset(**out)
