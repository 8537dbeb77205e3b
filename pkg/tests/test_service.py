import pytest
from fastapi.testclient import TestClient

from prottok.corpus import ProteinSequence, parse_fasta, to_fasta
from prottok.service import create_app
from prottok.tokenizers import load as load_tokenizer
from prottok.tokenizers import train as train_tokenizer

from _synth import synthetic_corpus

FASTA = ">s1\nMKVLMKVLGGA\n>s2\nGGAMKVL\n>s3\nMKVLWWY\n"


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def corpus_fasta():
    return to_fasta(synthetic_corpus(300, seed=21)).decode()


class TestCorpusEndpoint:
    def test_parse(self, client):
        r = client.post("/corpus/parse", json={"fasta_text": FASTA})
        assert r.status_code == 200
        body = r.json()
        assert body["count"] == 3
        assert body["summary"][0] == {"id": "s1", "length": 11}

    def test_parse_error_is_400(self, client):
        r = client.post("/corpus/parse", json={"fasta_text": ">a\nM1K\n"})
        assert r.status_code == 400
        assert "'1'" in r.json()["detail"]


class TestTokenizerLifecycle:
    def test_train_encode_decode_matches_library(self, client, corpus_fasta):
        r = client.post(
            "/tokenizers/train",
            json={"method": "bpe", "vocab_size": 60, "fasta_text": corpus_fasta},
        )
        assert r.status_code == 200
        body = r.json()
        tokenizer_id = body["tokenizer_id"]
        # The returned model file equals a library-side training run.
        lib_tok = train_tokenizer("bpe", parse_fasta(corpus_fasta), 60)
        assert body["model_text"].encode() == lib_tok.save()

        r = client.post(
            f"/tokenizers/{tokenizer_id}/encode",
            json={"sequences": [{"id": "s1", "residues": "MKVLMKVLGGA"}]},
        )
        assert r.status_code == 200
        ids = r.json()["tokens"][0]["ids"]
        assert ids == list(lib_tok.encode(ProteinSequence("s1", "MKVLMKVLGGA")).ids)

        r = client.post(
            f"/tokenizers/{tokenizer_id}/decode",
            json={"tokens": [{"id": "s1", "ids": ids}]},
        )
        assert r.json()["sequences"][0]["residues"] == "MKVLMKVLGGA"

    def test_load_gives_content_addressed_id(self, client, corpus_fasta):
        lib_tok = train_tokenizer("unigram", parse_fasta(corpus_fasta), 45)
        model_text = lib_tok.save().decode()
        a = client.post("/tokenizers/load", json={"model_text": model_text}).json()
        b = client.post("/tokenizers/load", json={"model_text": model_text}).json()
        assert a["tokenizer_id"] == b["tokenizer_id"]
        assert a["method"] == "unigram" and a["vocab_size"] == 45
        model = client.get(f"/tokenizers/{a['tokenizer_id']}/model").json()["model_text"]
        assert load_tokenizer(model.encode()).save() == lib_tok.save()

    def test_unknown_tokenizer_404(self, client):
        r = client.post("/tokenizers/zzz/encode", json={"sequences": []})
        assert r.status_code == 404

    def test_encode_from_fasta_matches_inline(self, client, corpus_fasta):
        r = client.post(
            "/tokenizers/train",
            json={"method": "bpe", "vocab_size": 50, "fasta_text": corpus_fasta},
        )
        tid = r.json()["tokenizer_id"]
        by_fasta = client.post(
            f"/tokenizers/{tid}/encode", json={"fasta_text": FASTA}
        ).json()["tokens"]
        inline = [{"id": s.id, "residues": s.residues} for s in parse_fasta(FASTA)]
        by_list = client.post(
            f"/tokenizers/{tid}/encode", json={"sequences": inline}
        ).json()["tokens"]
        assert by_fasta == by_list
        both = client.post(
            f"/tokenizers/{tid}/encode", json={"sequences": inline, "fasta_text": FASTA}
        )
        assert both.status_code == 422

    def test_mask_deterministic(self, client, corpus_fasta):
        r = client.post(
            "/tokenizers/train",
            json={"method": "per-aa", "vocab_size": 33, "fasta_text": corpus_fasta},
        )
        tid = r.json()["tokenizer_id"]
        enc = client.post(
            f"/tokenizers/{tid}/encode",
            json={"sequences": [{"id": "s1", "residues": "MKVLMKVLGGA"}]},
        ).json()["tokens"]
        payload = {"tokens": enc, "rate": 0.4, "seed": 11}
        a = client.post(f"/tokenizers/{tid}/mask", json=payload).json()
        b = client.post(f"/tokenizers/{tid}/mask", json=payload).json()
        assert a == b
        plan = a["plans"][0]
        for pos, orig in zip(plan["positions"], plan["original_ids"]):
            assert enc[0]["ids"][pos] == orig
            assert a["masked"][0]["ids"][pos] == 4

    def test_stats(self, client, corpus_fasta):
        r = client.post(
            "/tokenizers/train",
            json={"method": "per-aa", "vocab_size": 33, "fasta_text": corpus_fasta},
        )
        tid = r.json()["tokenizer_id"]
        r = client.post(f"/tokenizers/{tid}/stats", json={"fasta_text": FASTA})
        assert r.json()["tokens_per_residue"] == 1.0

    def test_delete(self, client, corpus_fasta):
        r = client.post(
            "/tokenizers/train",
            json={"method": "per-aa", "vocab_size": 33, "fasta_text": FASTA},
        )
        tid = r.json()["tokenizer_id"]
        assert client.delete(f"/tokenizers/{tid}").status_code == 200
        assert client.get(f"/tokenizers/{tid}").status_code == 404


class TestSweepEndpoint:
    def test_small_sweep(self, client, corpus_fasta):
        corpus = parse_fasta(corpus_fasta)
        train_fasta = to_fasta(
            corpus.__class__(corpus.sequences[:240], source="t")
        ).decode()
        val_fasta = to_fasta(corpus.__class__(corpus.sequences[240:], source="v")).decode()
        r = client.post(
            "/sweep",
            json={
                "train_fasta": train_fasta,
                "val_fasta": val_fasta,
                "specs": [{"method": "per-aa", "vocab_size": 33},
                          {"method": "bpe", "vocab_size": 50}],
            },
        )
        assert r.status_code == 200
        rows = r.json()["rows"]
        assert [row["method"] for row in rows] == ["per-aa", "bpe"]
        assert rows[0]["tokens_per_residue"] == 1.0


class TestManifestEndpoints:
    MANIFEST = (
        "prottok-manifest v1\ntask_name: x\ncategory: protein-wise\n"
        "kind: regression\nmetric: spearman\nsplit_train: a\n"
        "split_validation: b\nsplit_test: c\n"
    )

    def test_validate(self, client):
        r = client.post("/manifests/validate", json={"manifest_text": self.MANIFEST})
        assert r.status_code == 200
        assert r.json()["metric"] == "spearman"

    def test_validate_rejects_mismatch(self, client):
        bad = self.MANIFEST.replace("metric: spearman", "metric: accuracy")
        r = client.post("/manifests/validate", json={"manifest_text": bad})
        assert r.status_code == 400

    def test_evaluate_matches_library(self, client):
        r = client.post(
            "/evaluate",
            json={
                "manifest_text": self.MANIFEST,
                "predictions": ["1.0", "2.0", "3.0"],
                "labels": ["3.0", "2.0", "1.0"],
            },
        )
        assert r.status_code == 200
        assert r.json() == {"metric": "spearman", "value": -1.0}


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}
