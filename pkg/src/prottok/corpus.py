"""FASTA ingestion, validation, dedup and hold-out splitting for protein corpora.

Sequences are uppercased on ingest, '*' (stop) and '-' (gap) characters are
stripped with a warning, and sequences longer than the configured maximum are
truncated rather than rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from prottok.errors import CorpusError, FastaError
from prottok.vocab import RESIDUE_ALPHABET

DEFAULT_MAX_LEN = 1024
_STRIPPED_CHARS = "*-"


@dataclass(frozen=True)
class ProteinSequence:
    """A validated protein sequence: identifier plus uppercase residues."""

    id: str
    residues: str

    def __post_init__(self):
        if not self.residues:
            raise CorpusError(f"sequence {self.id!r} has an empty residue string")
        for ch in self.residues:
            if ch not in RESIDUE_ALPHABET:
                raise FastaError(
                    f"record {self.id!r} contains invalid residue {ch!r}", record_id=self.id
                )

    def __len__(self) -> int:
        return len(self.residues)


@dataclass(frozen=True)
class Corpus:
    """An ordered, immutable collection of sequences with unique ids."""

    sequences: tuple[ProteinSequence, ...]
    source: str = ""
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sequences", tuple(self.sequences))
        seen = set()
        for seq in self.sequences:
            if seq.id in seen:
                raise CorpusError(f"duplicate sequence id {seq.id!r} in corpus")
            seen.add(seq.id)

    def __len__(self) -> int:
        return len(self.sequences)

    def __iter__(self) -> Iterator[ProteinSequence]:
        return iter(self.sequences)

    def total_residues(self) -> int:
        return sum(len(s) for s in self.sequences)


@dataclass(frozen=True)
class SplitSpec:
    """Hold-out size and RNG seed for a reproducible validation split."""

    holdout_count: int
    seed: int = 42

    def __post_init__(self):
        if self.holdout_count < 0:
            raise CorpusError("holdout_count must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise CorpusError("seed must fit in an unsigned 64-bit integer")


def parse_fasta(raw: bytes | str, source: str = "", max_len: int = DEFAULT_MAX_LEN) -> Corpus:
    """Parse FASTA text into a validated Corpus.

    Raises FastaError for sequence data before any header, empty record
    bodies, or residues outside the accepted alphabet (the error names the
    record and the offending character).
    """
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    records: list[tuple[str, list[str]]] = []
    current: list[str] | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith(">"):
            header = line[1:].strip()
            record_id = header.split()[0] if header else f"record{len(records) + 1}"
            records.append((record_id, []))
            current = records[-1][1]
        else:
            if current is None:
                raise FastaError(
                    f"line {lineno}: sequence data before any '>' header", line=lineno
                )
            current.append(line)

    sequences: list[ProteinSequence] = []
    truncated = 0
    stripped = 0
    for record_id, chunks in records:
        body = "".join("".join(chunks).split()).upper()
        if not body:
            raise FastaError(f"record {record_id!r} has an empty sequence body", record_id)
        cleaned = []
        for ch in body:
            if ch in _STRIPPED_CHARS:
                stripped += 1
                continue
            if ch not in RESIDUE_ALPHABET:
                raise FastaError(
                    f"record {record_id!r} contains invalid residue {ch!r}", record_id
                )
            cleaned.append(ch)
        if not cleaned:
            raise FastaError(
                f"record {record_id!r} is empty after stripping gap/stop characters", record_id
            )
        if len(cleaned) > max_len:
            cleaned = cleaned[:max_len]
            truncated += 1
        sequences.append(ProteinSequence(record_id, "".join(cleaned)))

    warnings = []
    if stripped:
        warnings.append(f"stripped {stripped} gap/stop characters")
    if truncated:
        warnings.append(f"truncated {truncated} sequences to {max_len} residues")
    return Corpus(tuple(sequences), source=source, warnings=tuple(warnings))


def to_fasta(corpus: Corpus, width: int = 60) -> bytes:
    """Serialize a corpus back to FASTA (wrapped at `width` columns)."""
    lines = []
    for seq in corpus:
        lines.append(f">{seq.id}")
        for i in range(0, len(seq.residues), width):
            lines.append(seq.residues[i : i + width])
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def corpus_summary(corpus: Corpus) -> str:
    """Line-delimited (id, length) records."""
    return "".join(f"{s.id}\t{len(s)}\n" for s in corpus)


def split_holdout(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Reserve `spec.holdout_count` sequences, drawn uniformly without
    replacement by a generator seeded with `spec.seed`.

    Both halves preserve the corpus iteration order; repeated calls with
    identical inputs yield identical splits.
    """
    n = len(corpus)
    if spec.holdout_count > n:
        raise CorpusError(f"holdout_count {spec.holdout_count} exceeds corpus size {n}")
    rng = np.random.default_rng(spec.seed)
    chosen = np.sort(rng.permutation(n)[: spec.holdout_count])
    chosen_set = set(int(i) for i in chosen)
    val = tuple(corpus.sequences[i] for i in sorted(chosen_set))
    train = tuple(s for i, s in enumerate(corpus.sequences) if i not in chosen_set)
    return (
        Corpus(train, source=f"{corpus.source}[train]"),
        Corpus(val, source=f"{corpus.source}[validation]"),
    )


def dedup(corpus: Corpus) -> Corpus:
    """Keep the first occurrence of each residue string, preserving order."""
    seen: set[str] = set()
    kept = []
    for seq in corpus:
        if seq.residues in seen:
            continue
        seen.add(seq.residues)
        kept.append(seq)
    return Corpus(tuple(kept), source=corpus.source)


def corpus_from_strings(residue_strings: Iterable[str], source: str = "") -> Corpus:
    """Build a corpus from bare residue strings (ids are generated)."""
    seqs = tuple(
        ProteinSequence(f"seq{i}", s.upper()) for i, s in enumerate(residue_strings)
    )
    return Corpus(seqs, source=source)
