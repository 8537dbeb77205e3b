"""Vocabularies: the 33-token base inventory, id/piece maps and serialization.

Every vocabulary produced by this package starts with the same five special
tokens at ids 0..4, followed by the 28 single-character pieces of the base
inventory, followed by any learned multi-character pieces.  That fixed layout
is what lets masking and decoding identify specials from ids alone.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable

from prottok.errors import VocabError

VOCAB_MAGIC = "prottok-vocab"
VOCAB_VERSION = "v1"

PAD, UNK, CLS, SEP, MASK = "<pad>", "<unk>", "<cls>", "<sep>", "<mask>"
SPECIAL_TOKENS = (PAD, UNK, CLS, SEP, MASK)
NUM_SPECIALS = len(SPECIAL_TOKENS)

# Letters that may appear in a validated protein sequence: 20 canonical
# residues plus the ambiguous/nonstandard codes.  '.' and '-' are reserved
# single-character pieces of the inventory but are never valid residues.
CANONICAL_RESIDUES = "ACDEFGHIKLMNPQRSTVWY"
AMBIGUOUS_RESIDUES = "XBZUOJ"
RESIDUE_ALPHABET = frozenset(CANONICAL_RESIDUES + AMBIGUOUS_RESIDUES)


@dataclass(frozen=True)
class Vocabulary:
    """Dense bidirectional token-id <-> piece map with marked specials."""

    pieces: tuple[str, ...]
    special_tokens: frozenset[str]
    _piece_to_id: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if len(set(self.pieces)) != len(self.pieces):
            raise VocabError("duplicate pieces in vocabulary")
        for tok in SPECIAL_TOKENS:
            if tok not in self.special_tokens or tok not in self.pieces:
                raise VocabError(f"missing special token {tok!r}")
        for tok in self.special_tokens:
            if not (tok.startswith("<") and tok.endswith(">")):
                raise VocabError(f"special token {tok!r} overlaps the piece alphabet")
        object.__setattr__(self, "_piece_to_id", {p: i for i, p in enumerate(self.pieces)})

    @property
    def size(self) -> int:
        return len(self.pieces)

    def id_of(self, piece: str) -> int:
        try:
            return self._piece_to_id[piece]
        except KeyError:
            raise VocabError(f"piece {piece!r} not in vocabulary") from None

    def piece_of(self, token_id: int) -> str:
        if not 0 <= token_id < self.size:
            raise VocabError(f"token id {token_id} out of range [0, {self.size})")
        return self.pieces[token_id]

    def is_special_id(self, token_id: int) -> bool:
        return self.pieces[token_id] in self.special_tokens

    @property
    def mask_id(self) -> int:
        return self._piece_to_id[MASK]

    @property
    def unk_id(self) -> int:
        return self._piece_to_id[UNK]

    @property
    def pad_id(self) -> int:
        return self._piece_to_id[PAD]


@dataclass(frozen=True)
class TokenSequence:
    """Encoded token ids plus provenance (source sequence id)."""

    ids: tuple[int, ...]
    vocab_size: int
    source_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(int(i) for i in self.ids))
        for i in self.ids:
            if not 0 <= i < self.vocab_size:
                raise VocabError(f"token id {i} out of range for vocab size {self.vocab_size}")

    def __len__(self) -> int:
        return len(self.ids)


@lru_cache(maxsize=1)
def base_vocabulary() -> Vocabulary:
    """The fixed 33-piece inventory shipped with the package."""
    text = resources.files("prottok").joinpath("data/base_vocab.txt").read_text("utf-8")
    vocab = load_vocab(text.encode("utf-8"))
    if vocab.size != 33:
        raise VocabError(f"shipped base vocabulary has size {vocab.size}, expected 33")
    return vocab


def single_char_pieces() -> tuple[str, ...]:
    """The 28 single-character pieces of the base inventory, in id order."""
    return base_vocabulary().pieces[NUM_SPECIALS:]


def make_subword_vocabulary(learned_pieces: Iterable[str]) -> Vocabulary:
    """Specials + the 28 base singles + learned pieces, in that id order."""
    base = base_vocabulary()
    pieces = list(base.pieces)
    seen = set(pieces)
    for piece in learned_pieces:
        if piece in seen:
            continue
        pieces.append(piece)
        seen.add(piece)
    return Vocabulary(tuple(pieces), frozenset(SPECIAL_TOKENS))


def encode_per_aa(vocab: Vocabulary, sequence) -> TokenSequence:
    """One token per residue; characters outside the inventory map to <unk>."""
    unk = vocab.unk_id
    table = vocab._piece_to_id
    ids = tuple(table.get(ch, unk) for ch in sequence.residues)
    return TokenSequence(ids, vocab.size, sequence.id)


def decode(vocab: Vocabulary, tokens: TokenSequence) -> str:
    """Concatenation of the non-special pieces, in order."""
    if tokens.vocab_size != vocab.size:
        raise VocabError(
            f"token sequence vocab size {tokens.vocab_size} != vocabulary size {vocab.size}"
        )
    parts = []
    for i in tokens.ids:
        piece = vocab.piece_of(i)
        if piece not in vocab.special_tokens:
            parts.append(piece)
    return "".join(parts)


def save_vocab(vocab: Vocabulary) -> bytes:
    """Versioned text listing, in id order, one piece per line."""
    out = io.StringIO()
    out.write(f"{VOCAB_MAGIC} {VOCAB_VERSION}\n")
    for piece in vocab.pieces:
        marker = "special" if piece in vocab.special_tokens else "piece"
        out.write(f"{piece}\t{marker}\n")
    return out.getvalue().encode("utf-8")


def load_vocab(data: bytes) -> Vocabulary:
    return _parse_vocab_lines(data.decode("utf-8").splitlines())


def _parse_vocab_lines(lines: list[str]) -> Vocabulary:
    if not lines:
        raise VocabError("empty vocabulary data")
    header = lines[0].split()
    if len(header) != 2 or header[0] != VOCAB_MAGIC:
        raise VocabError(f"bad vocabulary header: {lines[0]!r}")
    if header[1] != VOCAB_VERSION:
        raise VocabError(f"unsupported vocabulary version {header[1]!r}")
    pieces: list[str] = []
    specials: set[str] = set()
    for n, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 2 or cols[1] not in ("special", "piece"):
            raise VocabError(f"bad vocabulary line {n}: {line!r}")
        piece, marker = cols
        if piece in pieces:
            raise VocabError(f"duplicate piece {piece!r} at line {n}")
        pieces.append(piece)
        if marker == "special":
            specials.add(piece)
    if not pieces:
        raise VocabError("vocabulary data holds no pieces (truncated?)")
    return Vocabulary(tuple(pieces), frozenset(specials))
