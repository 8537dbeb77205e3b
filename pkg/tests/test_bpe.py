from collections import Counter

import numpy as np
import pytest

from prottok.bpe import MIN_PAIR_FREQUENCY, encode_bpe, load_bpe, save_bpe, train_bpe
from prottok.corpus import Corpus, ProteinSequence, corpus_from_strings
from prottok.errors import ModelError
from prottok.vocab import base_vocabulary, decode


def oracle_train_bpe(strings, target_size):
    """Reference trainer: full pair recount from scratch every iteration."""
    base_size = base_vocabulary().size
    tokenized = [list(s) for s in strings]
    known = {p for p in base_vocabulary().pieces}
    merges = []
    vocab_count = base_size
    while vocab_count < target_size:
        counts = Counter()
        for toks in tokenized:
            for a, b in zip(toks, toks[1:]):
                counts[(a, b)] += 1
        eligible = {p: c for p, c in counts.items() if c >= MIN_PAIR_FREQUENCY}
        if not eligible:
            break
        best = min(eligible, key=lambda p: (-eligible[p], p))
        merges.append(best)
        merged = best[0] + best[1]
        new_tokenized = []
        for toks in tokenized:
            out = []
            i = 0
            while i < len(toks):
                if i + 1 < len(toks) and (toks[i], toks[i + 1]) == best:
                    out.append(merged)
                    i += 2
                else:
                    out.append(toks[i])
                    i += 1
            new_tokenized.append(out)
        tokenized = new_tokenized
        if merged not in known:
            known.add(merged)
            vocab_count += 1
    return merges, tokenized


class TestTrainExamples:
    def test_single_pair_type(self):
        model = train_bpe(corpus_from_strings(["AAAA"]), 34)
        assert model.merges == (("A", "A"),)

    def test_abab_two_merges(self):
        model = train_bpe(corpus_from_strings(["ABAB", "ABAB"]), 35)
        assert model.merges == (("A", "B"), ("AB", "AB"))

    def test_target_base_size_empty_merges(self):
        model = train_bpe(corpus_from_strings(["MKVLGG"]), 33)
        assert model.merges == ()

    def test_target_below_base_rejected(self):
        with pytest.raises(ModelError, match="base vocabulary"):
            train_bpe(corpus_from_strings(["MK"]), 10)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ModelError, match="empty"):
            train_bpe(Corpus(()), 40)

    def test_exhaustion_flags_incomplete(self):
        # Every pair unique: nothing reaches the minimum frequency of 2.
        model = train_bpe(corpus_from_strings(["ACDEFG"]), 40)
        assert model.incomplete and model.vocab.size == 33

    def test_min_frequency_respected(self):
        # "AB" occurs once, "CD" twice: only ("C","D") is mergeable.
        model = train_bpe(corpus_from_strings(["ABQ", "CDW", "CDY"]), 40)
        assert model.merges == (("C", "D"),)
        assert model.incomplete

    def test_pairs_never_span_sequences(self):
        # "AB" only appears across the boundary of adjacent sequences.
        model = train_bpe(corpus_from_strings(["CA", "BC", "CA", "BC"]), 40)
        assert ("A", "B") not in model.merges


class TestOracleEquivalence:
    @pytest.mark.parametrize("seed", range(20))
    def test_matches_full_recount(self, seed):
        rng = np.random.default_rng(seed)
        strings = [
            "".join(rng.choice(list("ACDEF"), size=rng.integers(1, 40)))
            for _ in range(int(rng.integers(1, 50)))
        ]
        target = 33 + int(rng.integers(1, 30))
        model = train_bpe(corpus_from_strings(strings), target)
        merges, oracle_tokens = oracle_train_bpe(strings, target)
        assert list(model.merges) == merges
        # Encoding agrees with the oracle's final tokenization too.
        for s, toks in zip(strings, oracle_tokens):
            encoded = encode_bpe(model, ProteinSequence("x", s))
            assert [model.vocab.piece_of(i) for i in encoded.ids] == toks


class TestEncode:
    def test_single_merge_application(self):
        model = train_bpe(corpus_from_strings(["ABAB", "ABAB"]), 34)
        assert model.merges == (("A", "B"),)
        ts = encode_bpe(model, ProteinSequence("x", "ABAB"))
        assert [model.vocab.piece_of(i) for i in ts.ids] == ["AB", "AB"]

    def test_no_merges_reduces_to_per_aa(self):
        model = train_bpe(corpus_from_strings(["MKVMKV"]), 33)
        ts = encode_bpe(model, ProteinSequence("x", "MKV"))
        assert [model.vocab.piece_of(i) for i in ts.ids] == ["M", "K", "V"]

    def test_leftmost_first_overlap(self):
        model = train_bpe(corpus_from_strings(["AAAA"]), 34)
        ts = encode_bpe(model, ProteinSequence("x", "AAA"))
        assert [model.vocab.piece_of(i) for i in ts.ids] == ["AA", "A"]

    def test_round_trip_random(self):
        corpus = corpus_from_strings(
            "".join(np.random.default_rng(i).choice(list("ACDEFGHIKLMNPQRSTVWY"), size=30))
            for i in range(200)
        )
        model = train_bpe(corpus, 80)
        rng = np.random.default_rng(1)
        letters = list("ACDEFGHIKLMNPQRSTVWYXBZUOJ")
        for _ in range(500):
            s = "".join(rng.choice(letters, size=rng.integers(1, 100)))
            ts = encode_bpe(model, ProteinSequence("x", s))
            assert decode(model.vocab, ts) == s

    def test_token_count_monotone_in_merges(self):
        corpus = corpus_from_strings(
            "".join(np.random.default_rng(i).choice(list("ACDE"), size=40)) for i in range(50)
        )
        big = train_bpe(corpus, 60)
        rng = np.random.default_rng(2)
        sequences = [
            ProteinSequence("x", "".join(rng.choice(list("ACDE"), size=50))) for _ in range(20)
        ]
        previous = None
        for target in range(33, 61):
            model = train_bpe(corpus, target)
            total = sum(len(encode_bpe(model, s)) for s in sequences)
            if previous is not None:
                assert total <= previous
            previous = total
        assert not big.incomplete


class TestDeterminismAndSerialization:
    def test_double_train_identical(self, small_corpus):
        a = train_bpe(small_corpus, 100)
        b = train_bpe(small_corpus, 100)
        assert a.merges == b.merges
        assert save_bpe(a) == save_bpe(b)

    def test_save_load_encodes_identically(self, small_corpus):
        model = train_bpe(small_corpus, 120)
        loaded = load_bpe(save_bpe(model))
        assert loaded.merges == model.merges
        assert loaded.vocab == model.vocab
        for seq in list(small_corpus)[:50]:
            assert encode_bpe(loaded, seq).ids == encode_bpe(model, seq).ids

    def test_load_rejects_garbage(self):
        with pytest.raises(ModelError):
            load_bpe(b"not a model")

    def test_load_rejects_missing_sections(self):
        with pytest.raises(ModelError, match="vocab"):
            load_bpe(b"prottok-bpe v1\n[merges]\n")
