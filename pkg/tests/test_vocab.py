import numpy as np
import pytest

from prottok.corpus import ProteinSequence
from prottok.errors import VocabError
from prottok.vocab import (
    SPECIAL_TOKENS,
    TokenSequence,
    base_vocabulary,
    decode,
    encode_per_aa,
    load_vocab,
    make_subword_vocabulary,
    save_vocab,
    single_char_pieces,
)


class TestBaseVocabulary:
    def test_size_is_33(self):
        assert base_vocabulary().size == 33

    def test_specials_present_with_valid_ids(self):
        v = base_vocabulary()
        for tok in SPECIAL_TOKENS:
            assert 0 <= v.id_of(tok) < 33
        assert v.mask_id == 4

    def test_specials_occupy_leading_ids(self):
        v = base_vocabulary()
        assert all(v.is_special_id(i) for i in range(5))
        assert not any(v.is_special_id(i) for i in range(5, 33))

    def test_canonical_residues_distinct(self):
        v = base_vocabulary()
        ids = [v.id_of(ch) for ch in "ACDEFGHIKLMNPQRSTVWY"]
        assert len(set(ids)) == 20

    def test_id_piece_mutually_inverse(self):
        v = base_vocabulary()
        for i in range(v.size):
            assert v.id_of(v.piece_of(i)) == i

    def test_single_char_pieces_count(self):
        assert len(single_char_pieces()) == 28


class TestPerAaEncoding:
    def test_encodes_in_order(self):
        v = base_vocabulary()
        ts = encode_per_aa(v, ProteinSequence("x", "MKV"))
        assert ts.ids == (v.id_of("M"), v.id_of("K"), v.id_of("V"))

    def test_length_equals_residue_count(self):
        v = base_vocabulary()
        rng = np.random.default_rng(5)
        letters = list("ACDEFGHIKLMNPQRSTVWYXBZUOJ")
        for _ in range(1000):
            s = "".join(rng.choice(letters, size=rng.integers(1, 60)))
            assert len(encode_per_aa(v, ProteinSequence("x", s))) == len(s)

    def test_round_trip(self):
        v = base_vocabulary()
        ts = encode_per_aa(v, ProteinSequence("x", "MKV"))
        assert decode(v, ts) == "MKV"


class TestDecode:
    def test_specials_stripped(self):
        v = base_vocabulary()
        assert decode(v, TokenSequence((v.mask_id,), v.size)) == ""

    def test_out_of_range_id(self):
        v = base_vocabulary()
        with pytest.raises(VocabError):
            TokenSequence((99,), v.size)

    def test_vocab_size_mismatch(self):
        v = base_vocabulary()
        with pytest.raises(VocabError, match="vocab size"):
            decode(v, TokenSequence((5,), 50))


class TestSerialization:
    def test_base_round_trip(self):
        v = base_vocabulary()
        assert load_vocab(save_vocab(v)) == v

    def test_trained_round_trip_preserves_order(self):
        v = make_subword_vocabulary([f"A{ch}" for ch in "CDEFGHIKLMNPQRSTVWY"])
        loaded = load_vocab(save_vocab(v))
        assert loaded.pieces == v.pieces
        assert save_vocab(loaded) == save_vocab(v)

    def test_truncated_bytes_error(self):
        data = save_vocab(base_vocabulary())
        with pytest.raises(VocabError):
            load_vocab(data[:10])

    def test_version_mismatch(self):
        with pytest.raises(VocabError, match="version"):
            load_vocab(b"prottok-vocab v999\nA\tpiece\n")

    def test_duplicate_piece_rejected(self):
        data = save_vocab(base_vocabulary()) + b"A\tpiece\n"
        with pytest.raises(VocabError, match="duplicate"):
            load_vocab(data)

    def test_missing_special_rejected(self):
        lines = save_vocab(base_vocabulary()).decode().splitlines()
        pruned = "\n".join(line for line in lines if not line.startswith("<mask>"))
        with pytest.raises(VocabError, match="mask"):
            load_vocab(pruned.encode())
