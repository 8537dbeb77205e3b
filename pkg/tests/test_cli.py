import os

import pytest

from prottok.cli import main
from prottok.corpus import parse_fasta, to_fasta

from _synth import synthetic_corpus

FASTA = b">s1\nMKVLMKVLGGA\n>s2\nGGAMKVL\n>s3\nMKVLWWY\n"


@pytest.fixture()
def fasta_path(tmp_path):
    path = tmp_path / "corpus.fasta"
    path.write_bytes(FASTA)
    return str(path)


@pytest.fixture(scope="module")
def cli_corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "train.fasta"
    path.write_bytes(to_fasta(synthetic_corpus(400, seed=5)))
    return str(path)


def run(*argv):
    return main(list(argv))


class TestTrain:
    def test_train_is_byte_identical_across_runs(self, cli_corpus_path, tmp_path):
        out_a = str(tmp_path / "a.model")
        out_b = str(tmp_path / "b.model")
        for method, size in (("bpe", "60"), ("unigram", "45"), ("per-aa", "33")):
            assert run("train", "--method", method, "--vocab-size", size,
                       "--in", cli_corpus_path, "--out", out_a) == 0
            assert run("train", "--method", method, "--vocab-size", size,
                       "--in", cli_corpus_path, "--out", out_b) == 0
            assert open(out_a, "rb").read() == open(out_b, "rb").read()

    def test_vocab_size_floor(self, fasta_path, tmp_path, capsys):
        code = run("train", "--method", "bpe", "--vocab-size", "10",
                   "--in", fasta_path, "--out", str(tmp_path / "x.model"))
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_same_in_out_rejected(self, fasta_path):
        assert run("train", "--method", "per-aa", "--in", fasta_path,
                   "--out", fasta_path) == 1


class TestEncodeDecode:
    def test_round_trip(self, cli_corpus_path, fasta_path, tmp_path):
        model = str(tmp_path / "m.model")
        tokens = str(tmp_path / "tokens.tsv")
        decoded = str(tmp_path / "decoded.fasta")
        assert run("train", "--method", "bpe", "--vocab-size", "60",
                   "--in", cli_corpus_path, "--out", model) == 0
        assert run("encode", "--model", model, "--in", fasta_path, "--out", tokens) == 0
        text = open(tokens).read()
        assert text.startswith("# prottok tokens v1")
        assert "# seed: 42" in text
        assert run("decode", "--model", model, "--in", tokens, "--out", decoded) == 0
        original = parse_fasta(FASTA)
        roundtripped = parse_fasta(open(decoded, "rb").read())
        assert [s.residues for s in roundtripped] == [s.residues for s in original]
        assert [s.id for s in roundtripped] == [s.id for s in original]


class TestMask:
    def test_mask_deterministic_and_plan_consistent(self, fasta_path, tmp_path):
        model = str(tmp_path / "m.model")
        tokens = str(tmp_path / "tokens.tsv")
        assert run("train", "--method", "per-aa", "--in", fasta_path,
                   "--out", model) == 0
        assert run("encode", "--model", model, "--in", fasta_path, "--out", tokens) == 0
        masked_a = str(tmp_path / "masked_a.tsv")
        masked_b = str(tmp_path / "masked_b.tsv")
        plan_a = str(tmp_path / "plan_a.tsv")
        plan_b = str(tmp_path / "plan_b.tsv")
        for masked, plan in ((masked_a, plan_a), (masked_b, plan_b)):
            assert run("mask", "--model", model, "--in", tokens, "--rate", "0.3",
                       "--seed", "9", "--out", masked, "--plan", plan) == 0
        assert open(masked_a).read() == open(masked_b).read()
        assert open(plan_a).read() == open(plan_b).read()
        # Masked positions carry the mask id (4) and the plan holds originals.
        originals = {}
        for line in open(tokens):
            if not line.startswith("#"):
                sid, ids = line.rstrip("\n").split("\t")
                originals[sid] = ids.split()
        for line in open(plan_a):
            if line.startswith("#"):
                continue
            sid, pairs = line.rstrip("\n").split("\t")
            for pair in pairs.split():
                pos, orig = pair.split(":")
                assert originals[sid][int(pos)] == orig


class TestStatsAndSweep:
    def test_stats_per_aa(self, fasta_path, tmp_path, capsys):
        model = str(tmp_path / "m.model")
        run("train", "--method", "per-aa", "--in", fasta_path, "--out", model)
        assert run("stats", "--model", model, "--in", fasta_path, "--summary") == 0
        out = capsys.readouterr().out
        assert "tokens_per_residue\t1" in out
        assert "s1\t11" in out

    def test_sweep_row_count(self, cli_corpus_path, tmp_path, capsys):
        table_path = str(tmp_path / "sweep.tsv")
        report_path = str(tmp_path / "sweep_report.tsv")
        assert run("sweep", "--methods", "per-aa,bpe", "--sizes", "40,50",
                   "--in", cli_corpus_path, "--holdout", "80",
                   "--out", table_path, "--report", report_path) == 0
        lines = [l for l in open(table_path).read().splitlines() if not l.startswith("#")]
        assert len(lines) == 1 + 3  # header + per-aa + two bpe rows
        assert os.path.exists(report_path)

    def test_sweep_requires_corpus_choice(self, capsys):
        assert run("sweep") == 1


class TestManifestAndEval:
    def test_validate_shipped(self, tmp_path, capsys):
        from importlib import resources

        data = resources.files("prottok").joinpath("manifests/gb1_sampled.manifest").read_bytes()
        path = tmp_path / "m.manifest"
        path.write_bytes(data)
        assert run("manifest", "validate", str(path)) == 0
        assert "gb1_sampled" in capsys.readouterr().out

    def test_validate_rejects_mismatch(self, tmp_path, capsys):
        path = tmp_path / "bad.manifest"
        path.write_text(
            "prottok-manifest v1\ntask_name: x\ncategory: protein-wise\n"
            "kind: regression\nmetric: accuracy\nsplit_train: a\n"
            "split_validation: b\nsplit_test: c\n"
        )
        assert run("manifest", "validate", str(path)) == 1
        assert "error:" in capsys.readouterr().err

    def test_eval_spearman(self, tmp_path, capsys):
        manifest = tmp_path / "m.manifest"
        manifest.write_text(
            "prottok-manifest v1\ntask_name: x\ncategory: protein-wise\n"
            "kind: regression\nmetric: spearman\nsplit_train: a\n"
            "split_validation: b\nsplit_test: c\n"
        )
        preds = tmp_path / "preds.txt"
        labels = tmp_path / "labels.txt"
        preds.write_text("1.0\n2.0\n3.0\n")
        labels.write_text("10\n20\n30\n")
        assert run("eval", "--manifest", str(manifest), "--predictions", str(preds),
                   "--labels", str(labels)) == 0
        assert capsys.readouterr().out.strip() == "spearman\t1"


class TestSplit:
    def test_split_counts_and_seed_header(self, cli_corpus_path, tmp_path, capsys):
        train_out = str(tmp_path / "train.fasta")
        val_out = str(tmp_path / "val.fasta")
        assert run("split", "--in", cli_corpus_path, "--holdout", "50",
                   "--train-out", train_out, "--val-out", val_out) == 0
        out = capsys.readouterr().out
        assert "# seed: 42" in out
        assert len(parse_fasta(open(val_out, "rb").read())) == 50


def test_unknown_subcommand_exits_nonzero():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
