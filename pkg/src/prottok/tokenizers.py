"""Uniform front-end over the three tokenization methods.

A `Tokenizer` bundles a trained model (or the base vocabulary for per-AA)
with encode/decode and serialization, so the sweep, CLI and service can
treat all methods alike.
"""

from __future__ import annotations

from dataclasses import dataclass

from prottok import bpe as bpe_mod
from prottok import unigram as uni_mod
from prottok import vocab as vocab_mod
from prottok.corpus import Corpus, ProteinSequence
from prottok.errors import ModelError
from prottok.vocab import TokenSequence, Vocabulary, base_vocabulary

METHODS = ("per-aa", "bpe", "unigram")


@dataclass(frozen=True)
class Tokenizer:
    method: str
    model: object | None  # BpeModel | UnigramModel | None for per-aa

    @property
    def vocab(self) -> Vocabulary:
        if self.method == "per-aa":
            return base_vocabulary()
        return self.model.vocab

    @property
    def vocab_size(self) -> int:
        return self.vocab.size

    def encode(self, sequence: ProteinSequence) -> TokenSequence:
        if self.method == "per-aa":
            return vocab_mod.encode_per_aa(base_vocabulary(), sequence)
        if self.method == "bpe":
            return bpe_mod.encode_bpe(self.model, sequence)
        return uni_mod.viterbi_encode(self.model, sequence)

    def decode(self, tokens: TokenSequence) -> str:
        return vocab_mod.decode(self.vocab, tokens)

    def save(self) -> bytes:
        if self.method == "per-aa":
            return vocab_mod.save_vocab(self.vocab)
        if self.method == "bpe":
            return bpe_mod.save_bpe(self.model)
        return uni_mod.save_unigram(self.model)


def train(method: str, corpus: Corpus, vocab_size: int) -> Tokenizer:
    if method == "per-aa":
        if vocab_size not in (None, base_vocabulary().size):
            raise ModelError("per-aa always has the base vocabulary size of 33")
        return Tokenizer("per-aa", None)
    if method == "bpe":
        return Tokenizer("bpe", bpe_mod.train_bpe(corpus, vocab_size))
    if method == "unigram":
        return Tokenizer("unigram", uni_mod.train_unigram(corpus, vocab_size))
    raise ModelError(f"unknown tokenization method {method!r} (expected one of {METHODS})")


def load(data: bytes) -> Tokenizer:
    """Load any model file by its magic header."""
    head = data.split(b"\n", 1)[0].split(b" ")[0].decode("utf-8", "replace")
    if head == bpe_mod.BPE_MAGIC:
        return Tokenizer("bpe", bpe_mod.load_bpe(data))
    if head == uni_mod.UNIGRAM_MAGIC:
        return Tokenizer("unigram", uni_mod.load_unigram(data))
    if head == vocab_mod.VOCAB_MAGIC:
        vocab = vocab_mod.load_vocab(data)
        if vocab != base_vocabulary():
            raise ModelError("bare vocabulary files must hold the base inventory")
        return Tokenizer("per-aa", None)
    raise ModelError(f"unrecognized model file (header {head!r})")
