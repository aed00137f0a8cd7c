import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from iedr.cli import main
from iedr.train import RunConfig

TINY = {
    "synthetic": {"n_users": 20, "n_items": 30, "n_contexts": 4, "records_per_user": 8},
    "encoder": {"embed_dim": 8, "hidden_dim": 16, "embed_init": "normal"},
    "factor": {"hidden_dim": 16},
    "cicl": {"num_negatives": 3},
    "dis": {"num_negatives": 3},
    "train": {"epochs": 2, "batch_size": 64},
    "split": {"eval_negatives": 20},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    (root / "tiny.json").write_text(json.dumps(TINY))
    assert main(["synth", "--config", str(root / "tiny.json"), "--out", str(root / "synth"), "--truth"]) == 0
    assert main(["train", "--config", str(root / "tiny.json"), "--data", str(root / "synth/data.tsv"),
                 "--out", str(root / "run"), "--seed", "0"]) == 0
    return root


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestTrainEval:
    def test_missing_data_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--out", "x"])
        assert exc.value.code == 2

    def test_train_outputs(self, workspace):
        run = workspace / "run"
        assert (run / "checkpoint" / "manifest.json").exists()
        assert (run / "checkpoint" / "vocab.json").exists()
        cfg = RunConfig.load(run / "config.json")
        manifest = json.loads((run / "checkpoint" / "manifest.json").read_text())
        assert cfg.hash() in json.dumps(manifest)
        log = rows(run / "train_log.csv")
        assert len(log) == 2 and "L_bi_appr_u" in log[0] and "wall_ms_per_batch" in log[0]

    def test_same_seed_same_log(self, workspace):
        again = workspace / "again"
        assert main(["train", "--config", str(workspace / "tiny.json"), "--data",
                     str(workspace / "synth/data.tsv"), "--out", str(again), "--seed", "0"]) == 0
        strip = lambda r: {k: v for k, v in r.items() if k != "wall_ms_per_batch"}
        assert [strip(r) for r in rows(again / "train_log.csv")] == \
               [strip(r) for r in rows(workspace / "run" / "train_log.csv")]
        assert (again / "metrics.json").read_text() == (workspace / "run" / "metrics.json").read_text()

    def test_eval_matches_train_metrics(self, workspace):
        out = workspace / "eval"
        assert main(["eval", "--checkpoint", str(workspace / "run/checkpoint"),
                     "--data", str(workspace / "synth/data.tsv"), "--out", str(out)]) == 0
        got = json.loads((out / "metrics.json").read_text())
        want = json.loads((workspace / "run" / "metrics.json").read_text())
        assert got == want
        assert 0 <= got["auc"] <= 1 and got["recall_at_5"] <= got["recall_at_10"]

    def test_set_override_and_bad_key(self, workspace, tmp_path):
        assert main(["train", "--config", str(workspace / "tiny.json"), "--set", "train.epochs=1",
                     "--data", str(workspace / "synth/data.tsv"), "--out", str(tmp_path / "r")]) == 0
        assert len(rows(tmp_path / "r" / "train_log.csv")) == 1
        assert main(["train", "--set", "train.nope=1", "--data", str(workspace / "synth/data.tsv"),
                     "--out", str(tmp_path / "r2")]) == 2

    def test_data_errors(self, workspace, tmp_path):
        bad = tmp_path / "bad.tsv"
        bad.write_text("not a valid line\n")
        assert main(["train", "--config", str(workspace / "tiny.json"), "--data", str(bad),
                     "--out", str(tmp_path / "r")]) == 3
        assert main(["eval", "--checkpoint", str(tmp_path / "missing"),
                     "--data", str(workspace / "synth/data.tsv"), "--out", str(tmp_path / "e")]) == 3


class TestAblate:
    def test_one_variant_one_seed(self, workspace, tmp_path):
        out = tmp_path / "ab.csv"
        assert main(["ablate", "--config", str(workspace / "tiny.json"), "--variants", "noCIED",
                     "--seeds", "1", "--out", str(out)]) == 0
        r = rows(out)
        assert len(r) == 1 and r[0]["variant"] == "noCIED"

    def test_distinct_hashes(self, workspace, tmp_path):
        out = tmp_path / "ab.csv"
        assert main(["ablate", "--config", str(workspace / "tiny.json"), "--data",
                     str(workspace / "synth/data.tsv"), "--set", "train.epochs=1",
                     "--variants", "IEDR,noCIED", "--out", str(out)]) == 0
        r = {row["variant"]: row for row in rows(out)}
        assert set(r) == {"IEDR", "noCIED"}
        assert r["IEDR"]["config_hash"] != r["noCIED"]["config_hash"]

    def test_unknown_variant(self, tmp_path):
        assert main(["ablate", "--variants", "IEDR,bogus", "--out", str(tmp_path / "x.csv")]) == 2


class TestSynthProbeExport:
    def test_synth_byte_identical(self, workspace, tmp_path):
        assert main(["synth", "--config", str(workspace / "tiny.json"), "--out", str(tmp_path), "--truth"]) == 0
        assert (tmp_path / "data.tsv").read_bytes() == (workspace / "synth/data.tsv").read_bytes()
        assert (tmp_path / "truth.json").read_bytes() == (workspace / "synth/truth.json").read_bytes()

    def test_probe_independent_gaussians(self, tmp_path):
        rng = np.random.default_rng(0)
        np.save(tmp_path / "a.npy", rng.standard_normal((3000, 2)))
        np.savetxt(tmp_path / "b.csv", rng.standard_normal((3000, 2)), delimiter=",")
        out = tmp_path / "p.csv"
        assert main(["probe", "--a", str(tmp_path / "a.npy"), "--b", str(tmp_path / "b.csv"),
                     "--epochs", "150", "--out", str(out)]) == 0
        est = {r["probe"]: float(r["estimate"]) for r in rows(out)}
        assert set(est) == {"mine", "club"}
        assert all(abs(v) < 0.05 for v in est.values())

    def test_probe_checkpoint(self, workspace, tmp_path):
        out = tmp_path / "p.csv"
        assert main(["probe", "--checkpoint", str(workspace / "run/checkpoint"), "--data",
                     str(workspace / "synth/data.tsv"), "--epochs", "20", "--probe", "mine",
                     "--out", str(out)]) == 0
        assert [r["pair"] for r in rows(out)] == ["o_in;c", "o_ex;c"]

    def test_probe_usage(self, tmp_path):
        assert main(["probe", "--a", "x.npy"]) == 2
        np.save(tmp_path / "a.npy", np.zeros((5, 1)))
        np.save(tmp_path / "b.npy", np.zeros((6, 1)))
        assert main(["probe", "--a", str(tmp_path / "a.npy"), "--b", str(tmp_path / "b.npy")]) == 3

    def test_export_representations(self, workspace, tmp_path):
        out = tmp_path / "rep.csv"
        assert main(["export", "--checkpoint", str(workspace / "run/checkpoint"), "--data",
                     str(workspace / "synth/data.tsv"), "--limit", "5", "--out", str(out)]) == 0
        body = out.read_text().splitlines()
        assert len(body) == 1 + 5 * 2
        assert len(body[0].split(",")) == 3 + TINY["encoder"]["embed_dim"]

    def test_export_matching_and_blocks(self, workspace, tmp_path):
        out = tmp_path / "m.csv"
        assert main(["export", "--checkpoint", str(workspace / "run/checkpoint"), "--data",
                     str(workspace / "synth/data.tsv"), "--what", "matching", "--k", "5",
                     "--max-contexts", "2", "--out", str(out)]) == 0
        assert len(rows(out)) == 2 * 2 * 5
        # the default nonlinear generator has no single weight matrix to split
        assert main(["export", "--checkpoint", str(workspace / "run/checkpoint"), "--what", "blocks",
                     "--out", str(tmp_path / "b.csv")]) == 3
        assert main(["train", "--config", str(workspace / "tiny.json"), "--set", "factor.variant=Linear",
                     "--set", "factor.combine=concat", "--set", "train.epochs=1",
                     "--data", str(workspace / "synth/data.tsv"), "--out", str(tmp_path / "lin")]) == 0
        assert main(["export", "--checkpoint", str(tmp_path / "lin/checkpoint"), "--what", "blocks",
                     "--out", str(tmp_path / "b.csv")]) == 0
        assert len(rows(tmp_path / "b.csv")) >= 1
        assert main(["export", "--checkpoint", str(workspace / "run/checkpoint"),
                     "--out", str(tmp_path / "r.csv")]) == 2

    def test_convert(self, tmp_path):
        src = tmp_path / "frappe.tsv"
        src.write_text("user\titem\tcnt\tdaytime\tweekday\tisweekend\thomework\tcost\tweather\tcountry\tcity\n"
                       "0\t5\t1\tmorning\tsunday\tweekend\tunknown\tfree\tsunny\tUS\t10\n")
        assert main(["convert", "--preset", "frappe", "--src", str(src), "--dst", str(tmp_path / "o.tsv")]) == 0
        assert (tmp_path / "o.tsv").read_text().count("\n") == 1
        assert main(["convert", "--preset", "frappe", "--src", str(tmp_path / "none.tsv"),
                     "--dst", str(tmp_path / "o2.tsv")]) == 3


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "iedr.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("iedr")
