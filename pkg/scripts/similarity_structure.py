"""Compare within-class and between-class similarity exp(-D_G) before and after
propagation for a trained checkpoint, averaged over several episodes.

    mrn train --config scripts/configs/benchmark.cfg --out bench.mrnc
    python scripts/similarity_structure.py bench.mrnc --episodes 50
"""
import argparse

import numpy as np

from mrn.engine import Checkpoint
from mrn.episodes import sample_episode, synth_dataset, load_dataset
from mrn.memory import memory_init, propagate, similarity_matrix
from mrn.numerics import Tensor, no_grad


def class_contrast(sim: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(len(labels), dtype=bool)
    return float(sim[same & off].mean()), float(sim[~same].mean())


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("checkpoint")
    ap.add_argument("--episodes", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ckpt = Checkpoint.load(args.checkpoint)
    cfg = ckpt.config
    data = load_dataset(cfg.data_path) if cfg.data_path else synth_dataset(cfg.synth)
    model = ckpt.build_model().eval()
    prop = cfg.resolved().propagation
    rng = np.random.default_rng(args.seed)
    before, after = [], []
    with no_grad():
        for _ in range(args.episodes):
            ep = sample_episode(data.split(cfg.eval_split), cfg.C, cfg.K, cfg.queries_at_eval, rng)
            labels = np.concatenate([ep.support_y, ep.query_y])
            feats = model.encoder(Tensor(np.concatenate([ep.support_x, ep.query_x])))
            ns = ep.support_x.shape[0]
            with memory_init(feats[:ns], feats[ns:], mode="transductive") as mem:
                before.append(class_contrast(similarity_matrix(mem, prop.metric, model.relation), labels))
                propagate(mem, prop, model.relation)
                after.append(class_contrast(similarity_matrix(mem, prop.metric, model.relation), labels))
    for name, vals in (("raw", before), ("propagated", after)):
        w, b = np.mean(vals, axis=0)
        print(f"{name:10s} within-class {w:.4f}  between-class {b:.4f}  ratio {w / b:.2f}")


if __name__ == "__main__":
    main()
