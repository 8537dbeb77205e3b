"""Byte-pair-encoding training over residue corpora and merge-based encoding.

Training greedily merges the most frequent adjacent symbol pair (ties broken
toward the lexicographically smallest pair), never across sequence
boundaries, and only while the best pair occurs at least twice.  Pair counts
are maintained incrementally with a lazy max-heap; the result is identical to
a full recount every iteration.
"""

from __future__ import annotations

import heapq
import io
from collections import Counter
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
)

BPE_MAGIC = "prottok-bpe"
BPE_VERSION = "v1"
MIN_PAIR_FREQUENCY = 2


@dataclass(frozen=True)
class BpeModel:
    """Ordered merge list plus the vocabulary it generates."""

    merges: tuple[tuple[str, str], ...]
    vocab: Vocabulary
    incomplete: bool = field(default=False, compare=False)

    def __post_init__(self):
        for left, right in self.merges:
            try:
                self.vocab.id_of(left + right)
            except Exception:
                raise ModelError(f"merge output {left + right!r} missing from vocabulary")

    @cached_property
    def _encode_tables(self):
        """(pair-key -> rank dict, rank -> merged id array) for the kernel."""
        pair_rank = _lattice.new_int_dict()
        rank_new_id = np.empty(max(len(self.merges), 1), np.int64)
        for rank, (left, right) in enumerate(self.merges):
            key = (self.vocab.id_of(left) << 21) | self.vocab.id_of(right)
            # Only the earliest rank for a pair can ever fire.
            if key not in pair_rank:
                pair_rank[key] = rank
            rank_new_id[rank] = self.vocab.id_of(left + right)
        return pair_rank, rank_new_id


def train_bpe(corpus: Corpus, target_size: int) -> BpeModel:
    """Train a merge table until the vocabulary reaches `target_size`.

    Stops early (with `incomplete=True`) when no pair occurs at least
    twice.  Deterministic given the corpus order and target.
    """
    base = base_vocabulary()
    if target_size < base.size:
        raise ModelError(f"target_size {target_size} below base vocabulary size {base.size}")
    if len(corpus) == 0:
        raise ModelError("cannot train BPE on an empty corpus")

    pieces: list[str] = list(base.pieces[NUM_SPECIALS:])
    piece_ids: dict[str, int] = {p: i for i, p in enumerate(pieces)}

    # One node per residue; chains never link across sequence boundaries.
    sym: list[int] = []
    nxt: list[int] = []
    prv: list[int] = []
    for seq in corpus:
        start = len(sym)
        n = len(seq.residues)
        sym.extend(piece_ids[ch] for ch in seq.residues)
        prv.extend([-1] + list(range(start, start + n - 1)))
        nxt.extend(list(range(start + 1, start + n)) + [-1])
    alive = bytearray([1]) * len(sym) if sym else bytearray()

    counts: Counter[tuple[int, int]] = Counter()
    positions: dict[tuple[int, int], set[int]] = {}
    for i in range(len(sym)):
        j = nxt[i]
        if j != -1:
            pair = (sym[i], sym[j])
            counts[pair] += 1
            positions.setdefault(pair, set()).add(i)

    # Lazy max-heap keyed by (-count, left piece, right piece); entries are
    # pushed on creation and on increment, refreshed when popped stale.
    heap: list[tuple[int, str, str]] = [
        (-c, pieces[a], pieces[b]) for (a, b), c in counts.items() if c >= MIN_PAIR_FREQUENCY
    ]
    heapq.heapify(heap)

    def bump(pair: tuple[int, int], delta: int, node: int):
        c = counts[pair] + delta
        if c:
            counts[pair] = c
        else:
            del counts[pair]
        if delta > 0:
            positions.setdefault(pair, set()).add(node)
            if c >= MIN_PAIR_FREQUENCY:
                heapq.heappush(heap, (-c, pieces[pair[0]], pieces[pair[1]]))
        else:
            positions[pair].discard(node)

    merges: list[tuple[str, str]] = []
    vocab_count = base.size
    incomplete = False
    while vocab_count < target_size:
        pair = None
        while heap:
            neg_c, left, right = heapq.heappop(heap)
            cand = (piece_ids[left], piece_ids[right])
            live = counts.get(cand, 0)
            if live < MIN_PAIR_FREQUENCY:
                continue
            if -neg_c != live:
                heapq.heappush(heap, (-live, left, right))
                continue
            pair = cand
            break
        if pair is None:
            incomplete = True
            break
        a, b = pair
        left, right = pieces[a], pieces[b]
        merged = left + right
        if merged in piece_ids:
            new_id = piece_ids[merged]
        else:
            new_id = len(pieces)
            pieces.append(merged)
            piece_ids[merged] = new_id
            vocab_count += 1
        merges.append((left, right))
        for i in sorted(positions[pair]):
            if not alive[i] or sym[i] != a:
                continue
            j = nxt[i]
            if j == -1 or sym[j] != b:
                continue
            p, n = prv[i], nxt[j]
            if p != -1:
                bump((sym[p], a), -1, p)
            bump((a, b), -1, i)
            if n != -1:
                bump((b, sym[n]), -1, j)
            sym[i] = new_id
            alive[j] = 0
            nxt[i] = n
            if n != -1:
                prv[n] = i
                bump((new_id, sym[n]), +1, i)
            if p != -1:
                bump((sym[p], new_id), +1, p)

    learned = [p for p in pieces[len(base.pieces) - NUM_SPECIALS :]]
    vocab = make_subword_vocabulary(learned)
    return BpeModel(tuple(merges), vocab, incomplete=incomplete)


def encode_bpe(model: BpeModel, sequence: ProteinSequence) -> TokenSequence:
    """Start from per-character symbols and apply merges in training order."""
    vocab = model.vocab
    unk = vocab.unk_id
    table = vocab._piece_to_id
    ids = np.fromiter(
        (table.get(ch, unk) for ch in sequence.residues), np.int64, len(sequence.residues)
    )
    if model.merges:
        pair_rank, rank_new_id = model._encode_tables
        ids = _lattice.bpe_apply_merges(ids, pair_rank, rank_new_id)
    return TokenSequence(tuple(int(i) for i in ids), vocab.size, sequence.id)


def save_bpe(model: BpeModel) -> bytes:
    out = io.StringIO()
    out.write(f"{BPE_MAGIC} {BPE_VERSION}\n")
    if model.incomplete:
        out.write("incomplete true\n")
    out.write("[vocab]\n")
    out.write(save_vocab(model.vocab).decode("utf-8"))
    out.write("[merges]\n")
    for left, right in model.merges:
        out.write(f"{left} {right}\n")
    return out.getvalue().encode("utf-8")


def load_bpe(data: bytes) -> BpeModel:
    lines = data.decode("utf-8").splitlines()
    if not lines or lines[0].split() != [BPE_MAGIC, BPE_VERSION]:
        raise ModelError("bad BPE model header")
    incomplete = False
    i = 1
    if i < len(lines) and lines[i].startswith("incomplete"):
        incomplete = lines[i].split()[1] == "true"
        i += 1
    if i >= len(lines) or lines[i] != "[vocab]":
        raise ModelError("BPE model missing [vocab] section")
    try:
        merges_at = lines.index("[merges]")
    except ValueError:
        raise ModelError("BPE model missing [merges] section") from None
    vocab = load_vocab("\n".join(lines[i + 1 : merges_at]).encode("utf-8"))
    merges = []
    for n, line in enumerate(lines[merges_at + 1 :], start=merges_at + 2):
        if not line:
            continue
        cols = line.split(" ")
        if len(cols) != 2:
            raise ModelError(f"bad merge line {n}: {line!r}")
        merges.append((cols[0], cols[1]))
    return BpeModel(tuple(merges), vocab, incomplete=incomplete)
