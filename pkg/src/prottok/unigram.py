"""Unigram language-model tokenizers: EM training with lattice expected
counts, likelihood-loss pruning, and Viterbi segmentation.

All probability arithmetic is done in log space.  Piece probabilities always
sum to one (within 1e-9); pieces with zero expected count are floored at
probability 1e-12 before renormalization so the lattice stays connected
mid-training.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from prottok import _lattice
from prottok.corpus import Corpus, ProteinSequence
from prottok.errors import ModelError
from prottok.vocab import (
    NUM_SPECIALS,
    TokenSequence,
    Vocabulary,
    base_vocabulary,
    load_vocab,
    make_subword_vocabulary,
    save_vocab,
    single_char_pieces,
)

UNIGRAM_MAGIC = "prottok-unigram"
UNIGRAM_VERSION = "v1"
DEFAULT_MAX_PIECE_LEN = 8
SEED_FACTOR = 4
PRUNE_KEEP_FRACTION = 0.8
PROB_FLOOR = 1e-12

_N_SINGLES = 28

_CODE_OF_CHAR = np.full(256, -1, np.int64)
for _i, _ch in enumerate(single_char_pieces()):
    _CODE_OF_CHAR[ord(_ch)] = _i


def _residues_to_codes(residues: str) -> np.ndarray:
    raw = np.frombuffer(residues.encode("ascii"), np.uint8)
    codes = _CODE_OF_CHAR[raw]
    if np.any(codes < 0):
        bad = residues[int(np.argmax(codes < 0))]
        raise ModelError(f"residue {bad!r} outside the base inventory")
    return codes


def _corpus_to_codes(corpus: Corpus) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(corpus) + 1, np.int64)
    for i, seq in enumerate(corpus):
        offsets[i + 1] = offsets[i] + len(seq.residues)
    codes = np.empty(int(offsets[-1]), np.int64)
    for i, seq in enumerate(corpus):
        codes[offsets[i] : offsets[i + 1]] = _residues_to_codes(seq.residues)
    return codes, offsets


@dataclass(frozen=True)
class UnigramModel:
    """Piece set with log-probabilities; single-character coverage is total.

    Pieces are ordered: the 28 base single characters first (inventory
    order), then multi-character pieces sorted lexicographically.  Piece i
    corresponds to vocabulary id i + 5 (after the specials).
    """

    pieces: tuple[tuple[str, float], ...]
    vocab: Vocabulary
    incomplete: bool = field(default=False, compare=False)

    def __post_init__(self):
        strings = [p for p, _ in self.pieces]
        if len(set(strings)) != len(strings):
            raise ModelError("duplicate pieces in unigram model")
        if tuple(strings[:_N_SINGLES]) != single_char_pieces():
            raise ModelError("unigram model must contain all base single-character pieces")
        logps = np.array([lp for _, lp in self.pieces])
        if not np.all(np.isfinite(logps)):
            raise ModelError("non-finite piece log-probability")
        total = float(np.exp(logps - logps.max()).sum() * np.exp(logps.max()))
        if abs(total - 1.0) > 1e-9:
            raise ModelError(f"piece probabilities sum to {total!r}, not 1")
        if tuple(self.vocab.pieces[NUM_SPECIALS:]) != tuple(strings):
            raise ModelError("vocabulary does not match the piece table")

    @property
    def max_piece_len(self) -> int:
        return max(len(p) for p, _ in self.pieces)

    @cached_property
    def _tables(self):
        """(packed-key -> piece index, logp array, len array, lex ranks)."""
        piece_of_key = _lattice.new_int_dict()
        logp = np.empty(len(self.pieces), np.float64)
        lens = np.empty(len(self.pieces), np.int64)
        for i, (piece, lp) in enumerate(self.pieces):
            piece_of_key[_lattice.pack_piece(_residues_to_codes(piece))] = i
            logp[i] = lp
            lens[i] = len(piece)
        order = sorted(range(len(self.pieces)), key=lambda i: self.pieces[i][0])
        lex_rank = np.empty(len(self.pieces), np.int64)
        for rank, i in enumerate(order):
            lex_rank[i] = rank
        return piece_of_key, logp, lens, lex_rank


@dataclass(frozen=True)
class SegmentationLattice:
    """All in-model substrings of a sequence as (start, end, piece id, logp)."""

    length: int
    edges: tuple[tuple[int, int, int, float], ...]


def build_lattice(model: UnigramModel, sequence: ProteinSequence) -> SegmentationLattice:
    residues = sequence.residues
    max_len = model.max_piece_len
    by_string = {p: (i, lp) for i, (p, lp) in enumerate(model.pieces)}
    edges = []
    for start in range(len(residues)):
        for end in range(start + 1, min(start + max_len, len(residues)) + 1):
            hit = by_string.get(residues[start:end])
            if hit is not None:
                edges.append((start, end, hit[0], hit[1]))
    return SegmentationLattice(len(residues), tuple(edges))


def _normalize(counts: np.ndarray) -> np.ndarray:
    """Counts -> log-probabilities with the zero-count floor applied."""
    total = counts.sum()
    if total <= 0:
        raise ModelError("no piece received any probability mass")
    probs = counts / total
    probs[probs < PROB_FLOOR] = PROB_FLOOR
    probs /= probs.sum()
    return np.log(probs)


def _build_model(strings: list[str], logps: np.ndarray, incomplete: bool = False) -> UnigramModel:
    vocab = make_subword_vocabulary(strings[_N_SINGLES:])
    pieces = tuple((s, float(lp)) for s, lp in zip(strings, logps))
    return UnigramModel(pieces, vocab, incomplete=incomplete)


def seed_pieces(
    corpus: Corpus, seed_size: int, max_piece_len: int = DEFAULT_MAX_PIECE_LEN
) -> UnigramModel:
    """Initial piece inventory: all single characters plus the substrings of
    length <= max_piece_len with the best count*length scores.

    `seed_size` counts like a vocabulary size (specials included), so the
    seed holds seed_size - 33 multi-character pieces.  A corpus too small to
    supply that many distinct substrings yields a smaller seed with
    `incomplete=True`.
    """
    base_size = base_vocabulary().size
    if seed_size < base_size:
        raise ModelError(f"seed_size {seed_size} below base vocabulary size {base_size}")
    if not 2 <= max_piece_len <= _lattice.MAX_PACKED_LEN:
        raise ModelError(f"max_piece_len must be in [2, {_lattice.MAX_PACKED_LEN}]")
    if len(corpus) == 0:
        raise ModelError("cannot seed pieces from an empty corpus")
    codes, offsets = _corpus_to_codes(corpus)

    counts = _lattice.new_int_dict()
    _lattice.count_substrings(codes, offsets, max_piece_len, counts)
    n = len(counts)
    keys = np.empty(n, np.int64)
    vals = np.empty(n, np.int64)
    lens = np.empty(n, np.int64)
    if n:
        _lattice.export_counts(counts, keys, vals, lens)

    n_multi = seed_size - base_size
    scores = vals * lens
    order = np.argsort(-scores, kind="stable")
    chosen_idx: list[int] = []
    if n_multi >= n:
        chosen_idx = list(order)
    elif n_multi > 0:
        cutoff = scores[order[n_multi - 1]]
        above = [int(i) for i in order if scores[i] > cutoff]
        at = sorted(
            (int(i) for i in order if scores[i] == cutoff),
            key=lambda i: _key_to_string(int(keys[i])),
        )
        chosen_idx = above + at[: n_multi - len(above)]
    incomplete = len(chosen_idx) < n_multi

    multis = sorted(
        (_key_to_string(int(keys[i])), int(vals[i])) for i in chosen_idx
    )
    single_counts = np.bincount(codes, minlength=_N_SINGLES).astype(np.float64)
    strings = list(single_char_pieces()) + [s for s, _ in multis]
    raw = np.concatenate([single_counts, np.array([c for _, c in multis], np.float64)])
    return _build_model(strings, _normalize(raw), incomplete=incomplete)


def _key_to_string(key: int) -> str:
    digits = []
    while key > 0:
        digits.append(key % _lattice.KEY_BASE - 1)
        key //= _lattice.KEY_BASE
    singles = single_char_pieces()
    return "".join(singles[d] for d in reversed(digits))


def em_step(model: UnigramModel, corpus: Corpus) -> tuple[UnigramModel, float]:
    """One EM iteration: lattice expected counts, then renormalization.

    Returns the updated model and the corpus log-likelihood under the
    pre-update probabilities.
    """
    codes, offsets = _corpus_to_codes(corpus)
    return _em_step_arrays(model, codes, offsets)


def _em_step_arrays(model, codes, offsets) -> tuple[UnigramModel, float]:
    piece_of_key, logp, _, _ = model._tables
    counts = np.zeros(len(model.pieces), np.float64)
    ll = float(_lattice.em_pass(codes, offsets, piece_of_key, logp, model.max_piece_len, counts))
    if not math.isfinite(ll):
        raise ModelError("non-finite corpus log-likelihood (probability underflow)")
    strings = [p for p, _ in model.pieces]
    return _build_model(strings, _normalize(counts), incomplete=model.incomplete), ll


def expected_counts(model: UnigramModel, corpus: Corpus) -> tuple[np.ndarray, float]:
    """Expected piece counts and corpus log-likelihood, without updating."""
    codes, offsets = _corpus_to_codes(corpus)
    piece_of_key, logp, _, _ = model._tables
    counts = np.zeros(len(model.pieces), np.float64)
    ll = float(_lattice.em_pass(codes, offsets, piece_of_key, logp, model.max_piece_len, counts))
    return counts, ll


def log_likelihood(model: UnigramModel, corpus: Corpus) -> float:
    codes, offsets = _corpus_to_codes(corpus)
    piece_of_key, logp, _, _ = model._tables
    return float(
        _lattice.corpus_log_likelihood(codes, offsets, piece_of_key, logp, model.max_piece_len)
    )


def removal_losses(model: UnigramModel, corpus: Corpus) -> np.ndarray:
    """Corpus log-likelihood loss from removing each piece, others fixed."""
    codes, offsets = _corpus_to_codes(corpus)
    return _removal_losses_arrays(model, codes, offsets)


def _removal_losses_arrays(model, codes, offsets) -> np.ndarray:
    piece_of_key, logp, lens, _ = model._tables
    return _lattice.loo_losses(
        codes, offsets, piece_of_key, logp, lens, model.max_piece_len, len(model.pieces)
    )


def prune(model: UnigramModel, keep_target: int, corpus: Corpus) -> UnigramModel:
    """Drop the lowest-impact multi-character pieces.

    Removes pieces in order of increasing likelihood loss (ties broken by
    piece string) until the table holds max(keep_target, 80% of the current
    size) pieces.  Single-character pieces are never removed.
    """
    codes, offsets = _corpus_to_codes(corpus)
    return _prune_arrays(model, keep_target, codes, offsets)


def _prune_arrays(model, keep_target, codes, offsets) -> UnigramModel:
    current = len(model.pieces)
    if keep_target < _N_SINGLES:
        raise ModelError(f"keep_target {keep_target} below single-character floor {_N_SINGLES}")
    if keep_target >= current:
        return model
    new_count = max(keep_target, math.ceil(PRUNE_KEEP_FRACTION * current), _N_SINGLES)
    if new_count >= current:
        return model
    losses = _removal_losses_arrays(model, codes, offsets)
    removable = sorted(
        range(_N_SINGLES, current), key=lambda i: (losses[i], model.pieces[i][0])
    )
    dropped = set(removable[: current - new_count])
    strings = [p for i, (p, _) in enumerate(model.pieces) if i not in dropped]
    kept_logp = np.array(
        [lp for i, (_, lp) in enumerate(model.pieces) if i not in dropped], np.float64
    )
    shift = kept_logp.max()
    log_total = shift + math.log(np.exp(kept_logp - shift).sum())
    return _build_model(strings, kept_logp - log_total, incomplete=model.incomplete)


def train_unigram(corpus: Corpus, target_size: int) -> UnigramModel:
    """Seed at 4x the target, then alternate two EM steps with a 20% prune
    until the piece table reaches target_size - 5, then two final EM steps."""
    base_size = base_vocabulary().size
    if target_size < base_size:
        raise ModelError(f"target_size {target_size} below base vocabulary size {base_size}")
    target_pieces = target_size - NUM_SPECIALS
    model = seed_pieces(corpus, SEED_FACTOR * target_size)
    codes, offsets = _corpus_to_codes(corpus)
    while len(model.pieces) > target_pieces:
        model, _ = _em_step_arrays(model, codes, offsets)
        model, _ = _em_step_arrays(model, codes, offsets)
        model = _prune_arrays(model, target_pieces, codes, offsets)
    model, _ = _em_step_arrays(model, codes, offsets)
    model, _ = _em_step_arrays(model, codes, offsets)
    return model


def viterbi_encode(model: UnigramModel, sequence: ProteinSequence) -> TokenSequence:
    """Maximum-log-probability segmentation (single-character coverage
    guarantees a path exists for every valid sequence)."""
    piece_of_key, logp, _, lex_rank = model._tables
    codes = _residues_to_codes(sequence.residues)
    path = _lattice.viterbi_path(codes, piece_of_key, logp, lex_rank, model.max_piece_len)
    if path.size == 0 and len(sequence.residues) > 0:
        raise ModelError(f"no segmentation for sequence {sequence.id!r}")
    ids = tuple(int(i) + NUM_SPECIALS for i in path)
    return TokenSequence(ids, model.vocab.size, sequence.id)


def save_unigram(model: UnigramModel) -> bytes:
    out = io.StringIO()
    out.write(f"{UNIGRAM_MAGIC} {UNIGRAM_VERSION}\n")
    if model.incomplete:
        out.write("incomplete true\n")
    out.write("[vocab]\n")
    out.write(save_vocab(model.vocab).decode("utf-8"))
    out.write("[pieces]\n")
    for piece, lp in model.pieces:
        out.write(f"{piece}\t{lp:.17g}\n")
    return out.getvalue().encode("utf-8")


def load_unigram(data: bytes) -> UnigramModel:
    lines = data.decode("utf-8").splitlines()
    if not lines or lines[0].split() != [UNIGRAM_MAGIC, UNIGRAM_VERSION]:
        raise ModelError("bad unigram model header")
    incomplete = False
    i = 1
    if i < len(lines) and lines[i].startswith("incomplete"):
        incomplete = lines[i].split()[1] == "true"
        i += 1
    if i >= len(lines) or lines[i] != "[vocab]":
        raise ModelError("unigram model missing [vocab] section")
    try:
        pieces_at = lines.index("[pieces]")
    except ValueError:
        raise ModelError("unigram model missing [pieces] section") from None
    vocab = load_vocab("\n".join(lines[i + 1 : pieces_at]).encode("utf-8"))
    pieces = []
    for n, line in enumerate(lines[pieces_at + 1 :], start=pieces_at + 2):
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise ModelError(f"bad piece line {n}: {line!r}")
        try:
            pieces.append((cols[0], float(cols[1])))
        except ValueError:
            raise ModelError(f"bad log-probability at line {n}: {cols[1]!r}") from None
    model = UnigramModel(tuple(pieces), vocab, incomplete=incomplete)
    return model
