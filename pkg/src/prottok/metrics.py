"""Language-modeling and downstream-task metrics.

All logarithms are natural-base: perplexity is exp of the mean negative
log-likelihood per token, and normalized perplexity rescales the exponent by
the vocabulary size (equivalently, perplexity ** (1/V)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from prottok.corpus import Corpus
from prottok.errors import MetricError

REPORT_PRECISION = 17


@dataclass(frozen=True)
class ScoredTokens:
    """Per-token natural-log probabilities assigned to the true tokens."""

    log_probs: tuple[float, ...]
    vocab_size: int

    def __post_init__(self):
        object.__setattr__(self, "log_probs", tuple(float(x) for x in self.log_probs))
        for lp in self.log_probs:
            if not math.isfinite(lp) or lp > 0:
                raise MetricError(f"log probability {lp!r} is not a finite value <= 0")
        if self.vocab_size < 1:
            raise MetricError("vocab_size must be positive")

    @property
    def token_count(self) -> int:
        return len(self.log_probs)


@dataclass(frozen=True)
class PredictionBatch:
    """Aligned predictions and labels for one evaluation run."""

    predictions: tuple
    labels: tuple
    kind: str  # "regression" | "classification"
    class_count: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "predictions", tuple(self.predictions))
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.kind not in ("regression", "classification"):
            raise MetricError(f"unknown prediction kind {self.kind!r}")
        if len(self.predictions) != len(self.labels):
            raise MetricError("predictions and labels must have equal length")
        if self.kind == "classification" and self.class_count is not None:
            for y in self.labels:
                ids = y if isinstance(y, frozenset) else (y,)
                for c in ids:
                    if not 0 <= int(c) < self.class_count:
                        raise MetricError(f"class id {c} outside [0, {self.class_count})")


def mlm_loss(
    masked_true_ids: Sequence[int], predicted_log_distributions: Sequence[Sequence[float]]
) -> float:
    """Mean over masked positions of -log p(true token).

    Each distribution must be normalized within 1e-6 (checked via
    log-sum-exp); zero iff every true token has probability one.
    """
    if len(masked_true_ids) == 0:
        raise MetricError("empty mask set")
    if len(masked_true_ids) != len(predicted_log_distributions):
        raise MetricError("one distribution required per masked position")
    total = 0.0
    for true_id, dist in zip(masked_true_ids, predicted_log_distributions):
        d = np.asarray(dist, np.float64)
        shift = d.max()
        log_z = shift + math.log(np.exp(d - shift).sum())
        if abs(log_z) > 1e-6:
            raise MetricError(f"distribution not normalized (log sum {log_z!r})")
        if not 0 <= true_id < d.size:
            raise MetricError(f"true token id {true_id} outside the distribution")
        total += -float(d[true_id])
    return total / len(masked_true_ids)


def perplexity(scored: ScoredTokens) -> float:
    """exp of the mean negative log-probability per token."""
    if scored.token_count == 0:
        raise MetricError("cannot compute perplexity of zero tokens")
    return math.exp(-math.fsum(scored.log_probs) / scored.token_count)


def normalized_perplexity(scored: ScoredTokens) -> float:
    """Perplexity rescaled by the vocabulary size: exp(-sum/(N*V))."""
    if scored.token_count == 0:
        raise MetricError("cannot compute perplexity of zero tokens")
    if scored.vocab_size < 2:
        raise MetricError("normalized perplexity needs vocab_size >= 2")
    return math.exp(-math.fsum(scored.log_probs) / (scored.token_count * scored.vocab_size))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Fractional ranks (1-based); tied values share the average rank."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation of average-ranked values."""
    x = np.asarray(xs, np.float64)
    y = np.asarray(ys, np.float64)
    if x.size != y.size or x.size < 2:
        raise MetricError("spearman needs two equal-length lists of size >= 2")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise MetricError("spearman undefined for constant input")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    return float((dx * dy).sum() / math.sqrt((dx * dx).sum() * (dy * dy).sum()))


def accuracy(batch: PredictionBatch) -> float:
    """Fraction of exact matches."""
    if batch.kind != "classification":
        raise MetricError("accuracy requires a classification batch")
    hits = sum(1 for p, y in zip(batch.predictions, batch.labels) if p == y)
    return hits / len(batch.predictions)


def mse(batch: PredictionBatch) -> float:
    """Mean of squared differences."""
    if batch.kind != "regression":
        raise MetricError("mse requires a regression batch")
    p = np.asarray(batch.predictions, np.float64)
    y = np.asarray(batch.labels, np.float64)
    return float(np.mean((p - y) ** 2))


@dataclass(frozen=True)
class CompressionStats:
    tokens_per_residue: float
    mean_piece_length: float
    piece_length_histogram: dict[int, int]


def compression_stats(tokenizer, corpus: Corpus) -> CompressionStats:
    """Corpus-level fertility: emitted tokens per input residue, its
    reciprocal, and a histogram of emitted piece lengths."""
    if len(corpus) == 0:
        raise MetricError("cannot compute compression statistics of an empty corpus")
    vocab = tokenizer.vocab
    histogram: dict[int, int] = {}
    total_tokens = 0
    total_residues = 0
    for seq in corpus:
        tokens = tokenizer.encode(seq)
        total_tokens += len(tokens)
        total_residues += len(seq.residues)
        for i in tokens.ids:
            n = len(vocab.piece_of(i))
            histogram[n] = histogram.get(n, 0) + 1
    tpr = total_tokens / total_residues
    return CompressionStats(tpr, 1.0 / tpr, dict(sorted(histogram.items())))


def metric_report_line(name: str, value: float, token_count: int, vocab_size: int) -> str:
    """One line of the machine-readable metric report."""
    return f"{name}\t{value:.{REPORT_PRECISION}g}\t{token_count}\t{vocab_size}"
