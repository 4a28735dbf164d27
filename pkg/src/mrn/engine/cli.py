"""Command-line entry point: ``mrn <command> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..episodes import SplitDataset, SynthSpec, load_dataset, sample_episode, synth_dataset, write_dataset
from ..errors import ConfigError, MRNError
from ..memory import export_similarity, memory_init, propagate
from ..numerics import Tensor, finite_diff_check, no_grad
from .ablation import SweepSpec, ablate, write_rows
from .config import RunConfig, parse_flat, parse_override
from .evaluation import evaluate
from .model import Checkpoint
from .training import train


def load_data(cfg: RunConfig) -> SplitDataset:
    if cfg.data_path:
        return load_dataset(cfg.data_path)
    return synth_dataset(cfg.synth)


def _config(path: str | None, overrides: list[str]) -> RunConfig:
    cfg = RunConfig.from_text(Path(path).read_text()) if path else RunConfig()
    return cfg.with_overrides(dict(parse_override(o) for o in overrides))


def cmd_train(args) -> None:
    cfg = _config(args.config, args.override)
    result = train(cfg, load_data(cfg), checkpoint_path=args.out)
    window = result.losses[-100:]
    print(f"trained {cfg.total_episodes} episodes; mean loss over the last {len(window)} episodes {np.mean(window):.4f}")
    print(f"checkpoint written to {args.out}")


def cmd_eval(args) -> None:
    ckpt = Checkpoint.load(args.checkpoint)
    data = load_dataset(args.data) if args.data else load_data(ckpt.config)
    report = evaluate(ckpt, data, n_episodes=args.episodes, seed=args.seed, split=args.split)
    print(f"accuracy {100 * report.mean_accuracy:.2f} +- {100 * report.ci95:.2f} % over {report.episodes} episodes")


def cmd_ablate(args) -> None:
    base = _config(args.config, [])
    sweep = SweepSpec.from_text(Path(args.sweep).read_text())
    rows = ablate(base, sweep, load_data(base))
    write_rows(rows, args.out)
    print(f"{len(rows)} rows written to {args.out}")


def cmd_export_similarity(args) -> None:
    ckpt = Checkpoint.load(args.checkpoint)
    cfg = ckpt.config
    data = load_data(cfg)
    model = ckpt.build_model().eval()
    prop = cfg.resolved().propagation
    episode = sample_episode(data.split(args.split or cfg.eval_split), cfg.C, cfg.K, cfg.queries_at_eval,
                             np.random.default_rng(args.episode_seed), n_unlabeled=cfg.U, seed=args.episode_seed)
    with no_grad():
        x = np.concatenate([episode.support_x, episode.query_x, episode.unlabeled_x])
        feats = model.encoder(Tensor(x))
        ns, nq = episode.support_x.shape[0], episode.query_x.shape[0]
        with memory_init(feats[:ns], feats[ns:ns + nq], feats[ns + nq:], prop.memory_mode,
                         episode_id=args.episode_seed) as memory:
            if not args.raw:
                propagate(memory, prop, model.relation)
            sim = export_similarity(memory, prop.metric, model.relation, args.out)
    print(f"{sim.shape[0]}x{sim.shape[1]} similarity matrix written to {args.out}")


def cmd_gen_synth(args) -> None:
    items = parse_flat(Path(args.spec).read_text())
    defaults = SynthSpec()
    unknown = sorted(set(items) - set(vars(defaults)))
    if unknown:
        raise ConfigError(f"unknown synthetic spec keys {unknown}")
    try:
        spec = SynthSpec(**{k: type(getattr(defaults, k))(v) for k, v in items.items()})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    write_dataset(synth_dataset(spec), args.out)
    print(f"synthetic dataset written to {args.out}")


def cmd_gradcheck(args) -> None:
    from ..encoder import EncoderConfig

    cfg = RunConfig(C=2, K=1, Q=2, encoder=EncoderConfig(kind="mlp", input_shape=(8,), mlp_dims=(8,), out_dim=8),
                    synth=SynthSpec(classes=6, dim=8, items_per_class=5, seed=args.seed))
    cfg = cfg.with_overrides({"propagation.k": str(args.k), "propagation.d": str(args.d), "seed": str(args.seed)})
    from .model import MRNModel

    model = MRNModel(cfg)
    data = synth_dataset(cfg.synth)
    episode = sample_episode(data.train, cfg.C, cfg.K, cfg.Q, np.random.default_rng(args.seed))
    prop = cfg.resolved().propagation
    err = finite_diff_check(lambda: model.loss(episode, prop), model.parameters(), h=args.h)
    status = "PASS" if err < 1e-4 else "FAIL"
    print(f"{status} max relative error {err:.3e} (k={args.k}, d={args.d}, {episode.query_x.shape[0] + episode.support_x.shape[0]} samples)")
    if err >= 1e-4:
        sys.exit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="episodic meta-training")
    p.add_argument("--config")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", default="checkpoint.mrnc")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split")
    p.add_argument("--data", help="dataset directory (default: from the checkpoint config)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="grid sweep to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--sweep", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("export-similarity", help="write exp(-D_G) over one episode's memory")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episode-seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--split")
    p.add_argument("--raw", action="store_true", help="export before propagation")
    p.set_defaults(func=cmd_export_similarity)

    p = sub.add_parser("gen-synth", help="generate a synthetic Gaussian-cluster dataset")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("gradcheck", help="finite-difference check of the full episode loss")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except MRNError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
