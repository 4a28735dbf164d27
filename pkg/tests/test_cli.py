import csv

import numpy as np
import pytest

from mrn.engine.ablation import COLUMNS
from mrn.engine.cli import main
from mrn.engine.model import Checkpoint
from mrn.memory import read_similarity

CONFIG = """\
C = 3
K = 1
Q = 3
total_episodes = 20
halve_every = 10
synth.dim = 8
synth.classes = 15
synth.items_per_class = 20
encoder.input_shape = 8
encoder.mlp_dims = 16
encoder.out_dim = 8
propagation.k = 3
"""


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(CONFIG)
    return path


def test_train_eval_export(tmp_path, config_file, capsys):
    ckpt = tmp_path / "m.mrnc"
    assert main(["train", "--config", str(config_file), "--override", "propagation.lam=0.5", "--out", str(ckpt)]) == 0
    assert Checkpoint.load(ckpt).config.propagation.lam == 0.5
    assert "mean loss over the last 20 episodes" in capsys.readouterr().out

    assert main(["eval", "--checkpoint", str(ckpt), "--episodes", "5", "--seed", "1"]) == 0
    first = capsys.readouterr().out
    main(["eval", "--checkpoint", str(ckpt), "--episodes", "5", "--seed", "1"])
    assert capsys.readouterr().out == first and "over 5 episodes" in first

    sim = tmp_path / "sim.csv"
    assert main(["export-similarity", "--checkpoint", str(ckpt), "--episode-seed", "4", "--out", str(sim)]) == 0
    tags, mat = read_similarity(sim)
    assert tags == ["s"] * 3 + ["q"] * 9 and mat.shape == (12, 12)
    assert np.allclose(mat, mat.T, atol=1.0) and (mat > 0).all() and (mat <= 1).all()


def test_ablate(tmp_path, config_file):
    sweep = tmp_path / "sweep.txt"
    sweep.write_text("seeds = 0, 1\nreuse_backbone = true\nvariant = mrn, mrn_zero\n")
    out = tmp_path / "rows.csv"
    base = tmp_path / "base.cfg"
    base.write_text(CONFIG + "eval_episodes = 3\n")
    assert main(["ablate", "--config", str(base), "--sweep", str(sweep), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == list(COLUMNS) and len(rows) == 4
    assert {r["variant"] for r in rows} == {"mrn", "mrn_zero"}


def test_gen_synth(tmp_path):
    spec = tmp_path / "spec.txt"
    spec.write_text("classes = 10\ndim = 4\nitems_per_class = 6\nseed = 3\n")
    assert main(["gen-synth", "--spec", str(spec), "--out", str(tmp_path / "data")]) == 0
    assert (tmp_path / "data" / "dataset.mrnd").read_bytes()[:4] == b"MRND"
    manifest = (tmp_path / "data" / "manifest.txt").read_text()
    assert manifest.startswith("train: 0 1 2 3 4 5\nval: 6 7\ntest: 8 9\n")


def test_eval_on_generated_dataset(tmp_path, config_file):
    spec = tmp_path / "spec.txt"
    spec.write_text("classes = 15\ndim = 8\nitems_per_class = 20\n")
    main(["gen-synth", "--spec", str(spec), "--out", str(tmp_path / "data")])
    ckpt = tmp_path / "m.mrnc"
    main(["train", "--config", str(config_file), "--override", f"data_path={tmp_path / 'data'}",
          "--override", "total_episodes=3", "--out", str(ckpt)])
    assert main(["eval", "--checkpoint", str(ckpt), "--episodes", "3", "--seed", "0"]) == 0


def test_gradcheck(capsys):
    assert main(["gradcheck"]) == 0
    assert capsys.readouterr().out.startswith("PASS")


def test_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("propagation.k = -2\n")
    assert main(["train", "--config", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err
    spec = tmp_path / "spec.txt"
    spec.write_text("clases = 4\n")
    assert main(["gen-synth", "--spec", str(spec), "--out", str(tmp_path / "d")]) == 2
    assert "clases" in capsys.readouterr().err
    junk = tmp_path / "junk.mrnc"
    junk.write_bytes(b"JUNK" + bytes(20))
    assert main(["eval", "--checkpoint", str(junk)]) == 2
    assert "offset 0" in capsys.readouterr().err
