"""End-to-end tests for the command line interface.

Every test drives `main(argv)` in process, so exit codes, stdout, and
written files are all observable without spawning subprocesses.
"""

from __future__ import annotations

import json
import logging
import os

import numpy as np
import pytest

from kgsem import load_checkpoint
from kgsem.cli import main
from kgsem.semstore import load_semvec
from kgsem.whitening import load_transform


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def run_ok(argv, capsys):
    """Invoke the CLI and assert success, returning captured output."""
    code = main(argv)
    captured = capsys.readouterr()
    assert code == 0, captured.err
    return captured


class TestManifest:
    def test_fields_and_sorted_config(self, toy_dataset_dir, tmp_path, capsys):
        out = str(tmp_path / "prep")
        run_ok(["prepare", "--dataset", toy_dataset_dir, "--out", out, "--seed", "7"], capsys)
        manifest = read_json(os.path.join(out, "manifest.json"))
        assert manifest["command"] == "prepare"
        assert isinstance(manifest["version"], str) and manifest["version"]
        assert manifest["seed"] == 7
        assert manifest["started"] <= manifest["finished"]
        keys = list(manifest["config"])
        assert keys == sorted(keys)
        assert manifest["config"]["dataset"] == toy_dataset_dir
        assert "func" not in manifest["config"]

    def test_every_command_writes_one(self, toy_dataset_dir, tmp_path, capsys):
        prep = str(tmp_path / "prep")
        vocab_file = str(tmp_path / "sub.vocab")
        semvec = str(tmp_path / "vecs.semvec")
        white = str(tmp_path / "white.semvec")
        ckpt = str(tmp_path / "ckpt")
        report = str(tmp_path / "report.json")
        run_ok(["prepare", "--dataset", toy_dataset_dir, "--out", prep], capsys)
        run_ok(["tokenize", "--dataset", toy_dataset_dir, "--target-size", "40", "--out", vocab_file], capsys)
        run_ok(["embed", "--dataset", toy_dataset_dir, "--dim", "16", "--target-size", "40", "--out", semvec], capsys)
        run_ok(["whiten", "--dataset", toy_dataset_dir, "--semvec", semvec, "--k", "4", "--out", white], capsys)
        run_ok(
            ["train", "--dataset", toy_dataset_dir, "--model", "transe", "--dim", "4",
             "--epochs", "2", "--out", ckpt],
            capsys,
        )
        run_ok(
            ["eval", "--dataset", toy_dataset_dir, "--checkpoint", ckpt, "--out", report],
            capsys,
        )
        for path, cmd in (
            (os.path.join(prep, "manifest.json"), "prepare"),
            (vocab_file + ".manifest.json", "tokenize"),
            (semvec + ".manifest.json", "embed"),
            (white + ".manifest.json", "whiten"),
            (os.path.join(ckpt, "manifest.json"), "train"),
            (report + ".manifest.json", "eval"),
        ):
            assert read_json(path)["command"] == cmd


class TestPrepare:
    def test_writes_vocab_files_and_stats(self, toy_dataset_dir, tmp_path, capsys):
        out = str(tmp_path / "prep")
        captured = run_ok(["prepare", "--dataset", toy_dataset_dir, "--out", out], capsys)
        assert "12 entities" in captured.out
        with open(os.path.join(out, "entities.txt"), encoding="utf-8") as fh:
            entities = fh.read().splitlines()
        with open(os.path.join(out, "relations.txt"), encoding="utf-8") as fh:
            relations = fh.read().splitlines()
        assert len(entities) == 12 and len(set(entities)) == 12
        assert len(relations) == 2
        stats = read_json(os.path.join(out, "stats.json"))
        assert stats["n_entities"] == 12
        assert stats["n_relations"] == 2
        assert stats["n_train"] + stats["n_valid"] + stats["n_test"] == 40
        assert set(stats["tph"]) == set(relations)
        assert all(v > 0 for v in stats["tph"].values())

    def test_missing_dataset_is_a_clean_error(self, tmp_path, capsys):
        code = main(["prepare", "--dataset", str(tmp_path / "nope"), "--out", str(tmp_path / "o")])
        captured = capsys.readouterr()
        assert code == 1
        lines = [l for l in captured.err.splitlines() if l]
        assert len(lines) == 1
        assert lines[0].startswith("error: ")


class TestTokenize:
    def test_vocab_file_round_trips(self, toy_dataset_dir, tmp_path, capsys):
        out = str(tmp_path / "sub.vocab")
        captured = run_ok(
            ["tokenize", "--dataset", toy_dataset_dir, "--target-size", "60", "--out", out], capsys
        )
        assert "trained subword vocab" in captured.out
        from kgsem.wordpiece import load_vocab

        sub = load_vocab(out)
        assert 0 < len(sub.tokens) <= 60


class TestEmbed:
    def test_fallback_embedder_writes_loadable_store(self, toy_dataset_dir, tmp_path, capsys):
        out = str(tmp_path / "vecs.semvec")
        run_ok(
            ["embed", "--dataset", toy_dataset_dir, "--dim", "24", "--target-size", "40", "--out", out],
            capsys,
        )
        from kgsem.data import load_dataset

        _, _, _, vocab = load_dataset(toy_dataset_dir, "hrt")
        store = load_semvec(out, vocab)
        assert store.dim == 24
        assert store.entity_vecs.shape == (12, 24)
        assert store.relation_vecs.shape == (2, 24)

    def test_external_file_is_validated_and_reemitted(self, toy_dataset_dir, tmp_path, capsys):
        first = str(tmp_path / "a.semvec")
        second = str(tmp_path / "b.semvec")
        run_ok(
            ["embed", "--dataset", toy_dataset_dir, "--dim", "8", "--target-size", "40", "--out", first],
            capsys,
        )
        captured = run_ok(
            ["embed", "--dataset", toy_dataset_dir, "--semvec", first, "--out", second], capsys
        )
        assert "validated" in captured.out
        from kgsem.data import load_dataset

        _, _, _, vocab = load_dataset(toy_dataset_dir, "hrt")
        a = load_semvec(first, vocab)
        b = load_semvec(second, vocab)
        np.testing.assert_array_equal(a.entity_vecs, b.entity_vecs)


class TestWhiten:
    def test_reduces_dim_and_saves_transform(self, toy_dataset_dir, tmp_path, capsys):
        semvec = str(tmp_path / "vecs.semvec")
        out = str(tmp_path / "white.semvec")
        run_ok(
            ["embed", "--dataset", toy_dataset_dir, "--dim", "16", "--target-size", "40", "--out", semvec],
            capsys,
        )
        run_ok(["whiten", "--dataset", toy_dataset_dir, "--semvec", semvec, "--k", "5", "--out", out], capsys)
        from kgsem.data import load_dataset

        _, _, _, vocab = load_dataset(toy_dataset_dir, "hrt")
        reduced = load_semvec(out, vocab)
        assert reduced.dim == 5
        transform = load_transform(out + ".transform")
        assert transform.source_dim == 16 and transform.target_dim == 5

    def test_transform_out_flag_is_respected(self, toy_dataset_dir, tmp_path, capsys):
        semvec = str(tmp_path / "vecs.semvec")
        out = str(tmp_path / "white.semvec")
        tpath = str(tmp_path / "custom.transform")
        run_ok(
            ["embed", "--dataset", toy_dataset_dir, "--dim", "12", "--target-size", "40", "--out", semvec],
            capsys,
        )
        run_ok(
            ["whiten", "--dataset", toy_dataset_dir, "--semvec", semvec, "--k", "3",
             "--out", out, "--transform-out", tpath],
            capsys,
        )
        assert os.path.exists(tpath)
        assert not os.path.exists(out + ".transform")


class TestTrain:
    def test_checkpoint_history_and_meta(self, toy_dataset_dir, tmp_path, capsys):
        ckpt = str(tmp_path / "ckpt")
        captured = run_ok(
            ["train", "--dataset", toy_dataset_dir, "--model", "transh", "--dim", "6",
             "--epochs", "3", "--batch-size", "16", "--out", ckpt],
            capsys,
        )
        assert "trained transh for 3 epochs" in captured.out
        params, model = load_checkpoint(ckpt)
        assert model == "transh"
        assert params.dim == 6
        assert params.n_entities == 12
        with open(os.path.join(ckpt, "loss.csv"), encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        assert lines[0] == "epoch,train_loss,valid_loss"
        assert len(lines) == 4

    def test_aesi_builds_and_whitens_vectors_in_process(self, toy_dataset_dir, tmp_path, capsys):
        # no --semvec given: the fallback embedder output at --sem-dim is
        # whitened down to the model dimension before training starts
        ckpt = str(tmp_path / "ckpt")
        run_ok(
            ["train", "--dataset", toy_dataset_dir, "--model", "aesi", "--dim", "4",
             "--sem-dim", "16", "--target-size", "40", "--epochs", "2",
             "--batch-size", "16", "--out", ckpt],
            capsys,
        )
        _, model = load_checkpoint(ckpt)
        assert model == "aesi"

    def test_aesi_accepts_prewhitened_semvec(self, toy_dataset_dir, tmp_path, capsys):
        semvec = str(tmp_path / "vecs.semvec")
        white = str(tmp_path / "white.semvec")
        ckpt = str(tmp_path / "ckpt")
        run_ok(
            ["embed", "--dataset", toy_dataset_dir, "--dim", "16", "--target-size", "40", "--out", semvec],
            capsys,
        )
        run_ok(["whiten", "--dataset", toy_dataset_dir, "--semvec", semvec, "--k", "4", "--out", white], capsys)
        run_ok(
            ["train", "--dataset", toy_dataset_dir, "--model", "aesi", "--dim", "4",
             "--semvec", white, "--epochs", "2", "--batch-size", "16", "--out", ckpt],
            capsys,
        )
        _, model = load_checkpoint(ckpt)
        assert model == "aesi"

    def test_threads_other_than_one_is_an_error(self, toy_dataset_dir, tmp_path, capsys):
        code = main(
            ["train", "--dataset", toy_dataset_dir, "--dim", "4", "--epochs", "1",
             "--threads", "2", "--out", str(tmp_path / "ckpt")]
        )
        captured = capsys.readouterr()
        assert code == 1
        assert "error:" in captured.err and "--threads 1" in captured.err

    def test_same_seed_runs_are_byte_identical(self, toy_dataset_dir, tmp_path, capsys):
        outs = []
        for name in ("a", "b"):
            ckpt = str(tmp_path / name)
            run_ok(
                ["train", "--dataset", toy_dataset_dir, "--model", "transe", "--dim", "4",
                 "--epochs", "3", "--batch-size", "16", "--seed", "11",
                 "--threads", "1", "--out", ckpt],
                capsys,
            )
            outs.append(ckpt)
        for fname in ("loss.csv", "meta", "entities.vec", "rel_trans.vec", "rel_normal.vec"):
            with open(os.path.join(outs[0], fname), "rb") as fh:
                first = fh.read()
            with open(os.path.join(outs[1], fname), "rb") as fh:
                second = fh.read()
            assert first == second, fname


class TestEval:
    @pytest.fixture
    def trained(self, toy_dataset_dir, tmp_path, capsys):
        ckpt = str(tmp_path / "ckpt")
        run_ok(
            ["train", "--dataset", toy_dataset_dir, "--model", "transe", "--dim", "4",
             "--epochs", "2", "--batch-size", "16", "--out", ckpt],
            capsys,
        )
        return ckpt

    def test_stdout_report_is_json(self, toy_dataset_dir, trained, capsys):
        captured = run_ok(["eval", "--dataset", toy_dataset_dir, "--checkpoint", trained], capsys)
        payload = json.loads(captured.out)
        assert set(payload) == {"mr_raw", "mr_filt", "hits10_raw", "hits10_filt", "n_test", "per_triple"}
        assert payload["n_test"] == len(payload["per_triple"])
        assert "MR raw" in captured.err

    def test_out_flag_writes_report_file(self, toy_dataset_dir, trained, tmp_path, capsys):
        report = str(tmp_path / "report.json")
        captured = run_ok(
            ["eval", "--dataset", toy_dataset_dir, "--checkpoint", trained, "--out", report], capsys
        )
        assert captured.out == ""
        payload = read_json(report)
        assert payload["mr_filt"] <= payload["mr_raw"]

    def test_shape_mismatch_is_a_clean_error(self, trained, tmp_path, capsys):
        from tests.conftest import make_kg, split_kg, write_dataset

        triples, vocab = make_kg(9, 2, 30, seed=5)
        other = write_dataset(tmp_path / "other", vocab, *split_kg(triples))
        code = main(["eval", "--dataset", str(other), "--checkpoint", trained])
        captured = capsys.readouterr()
        assert code == 1
        assert "does not match dataset" in captured.err


class TestArgumentErrors:
    def test_missing_required_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["prepare", "--out", "somewhere"])
        assert excinfo.value.code == 2

    def test_unknown_command_exits_two(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["frobnicate"])
        assert excinfo.value.code == 2

    def test_bad_choice_exits_two(self, toy_dataset_dir, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["train", "--dataset", toy_dataset_dir, "--model", "distmult", "--out", "x"])
        assert excinfo.value.code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
        assert capsys.readouterr().out.startswith("kgsem ")


class TestLogEnv:
    @pytest.mark.parametrize(
        "value,expected",
        [(None, logging.WARNING), ("debug", logging.DEBUG), ("INFO", logging.INFO), ("bogus", logging.WARNING)],
    )
    def test_kgc_log_sets_basicconfig_level(self, monkeypatch, capsys, value, expected):
        if value is None:
            monkeypatch.delenv("KGC_LOG", raising=False)
        else:
            monkeypatch.setenv("KGC_LOG", value)
        seen = {}
        monkeypatch.setattr(logging, "basicConfig", lambda **kw: seen.update(kw))
        with pytest.raises(SystemExit):
            main(["--version"])
        assert seen["level"] == expected
