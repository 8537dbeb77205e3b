"""Masking for the MLM objective plus a smoothed token-frequency language
model used as the desk-scale probability source for perplexity sweeps.

Masking is plain replacement with the mask token by default; the BERT-style
80/10/10 corruption split is available behind a flag but off by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from prottok.corpus import Corpus
from prottok.errors import MetricError, ModelError
from prottok.metrics import ScoredTokens, compression_stats, metric_report_line
from prottok.tokenizers import METHODS, Tokenizer, train
from prottok.vocab import NUM_SPECIALS, TokenSequence, base_vocabulary

DEFAULT_MASK_RATE = 0.15
DEFAULT_ALPHA = 1.0
_MASK_ID = 4  # <mask> sits at id 4 in every vocabulary this package builds


@dataclass(frozen=True)
class MaskPlan:
    """Which positions were masked and what they held."""

    masked_positions: tuple[int, ...]
    original_ids: tuple[int, ...]
    mask_rate: float

    def __post_init__(self):
        if len(self.masked_positions) != len(self.original_ids):
            raise MetricError("positions and original ids must align")
        if any(b <= a for a, b in zip(self.masked_positions, self.masked_positions[1:])):
            raise MetricError("masked positions must be strictly increasing")
        if not len(self.masked_positions) >= 1:
            raise MetricError("a mask plan must cover at least one position")


def mask_tokens(
    tokens: TokenSequence, rate: float, seed: int, bert_style: bool = False
) -> tuple[TokenSequence, MaskPlan]:
    """Mask each non-special position independently with probability `rate`.

    Guaranteed-minimum rule: if the draw selects nothing, one maskable
    position (chosen uniformly) is masked, so every sequence with at least
    one maskable token contributes to the objective.  With `bert_style`,
    selected positions get mask/random/unchanged at 80/10/10.
    """
    if not 0 < rate <= 1:
        raise MetricError(f"mask rate {rate!r} outside (0, 1]")
    maskable = [i for i, t in enumerate(tokens.ids) if t >= NUM_SPECIALS]
    if not maskable:
        raise MetricError(f"sequence {tokens.source_id!r} has no maskable tokens")
    rng = np.random.default_rng(seed)
    draws = rng.random(len(maskable))
    selected = [pos for pos, d in zip(maskable, draws) if d < rate]
    if not selected:
        selected = [maskable[int(rng.integers(len(maskable)))]]
    new_ids = list(tokens.ids)
    originals = []
    for pos in selected:
        originals.append(tokens.ids[pos])
        if bert_style:
            roll = rng.random()
            if roll < 0.8:
                new_ids[pos] = _MASK_ID
            elif roll < 0.9:
                new_ids[pos] = int(rng.integers(NUM_SPECIALS, tokens.vocab_size))
        else:
            new_ids[pos] = _MASK_ID
    masked = TokenSequence(tuple(new_ids), tokens.vocab_size, tokens.source_id)
    return masked, MaskPlan(tuple(selected), tuple(originals), rate)


@dataclass(frozen=True)
class FreqLM:
    """Laplace-smoothed token-frequency model over a fixed vocabulary."""

    token_log_probs: tuple[float, ...]
    smoothing_alpha: float
    vocab_size: int

    def __post_init__(self):
        object.__setattr__(self, "token_log_probs", tuple(float(x) for x in self.token_log_probs))
        if len(self.token_log_probs) != self.vocab_size:
            raise ModelError("log-probability table must cover the whole vocabulary")
        if self.smoothing_alpha <= 0:
            raise ModelError("smoothing alpha must be positive")
        total = float(np.exp(np.asarray(self.token_log_probs)).sum())
        if abs(total - 1.0) > 1e-9:
            raise ModelError(f"token probabilities sum to {total!r}, not 1")


def fit_freq_lm(tokenized: list[TokenSequence], alpha: float = DEFAULT_ALPHA) -> FreqLM:
    """p(token) = (count + alpha) / (total + alpha * V), stored in log space."""
    if alpha <= 0:
        raise ModelError("smoothing alpha must be positive")
    if not tokenized:
        raise ModelError("cannot fit a frequency model with no token sequences")
    vocab_size = tokenized[0].vocab_size
    counts = np.zeros(vocab_size, np.float64)
    total = 0
    for ts in tokenized:
        if ts.vocab_size != vocab_size:
            raise ModelError("token sequences come from different vocabularies")
        for i in ts.ids:
            counts[i] += 1.0
        total += len(ts.ids)
    if total == 0:
        raise ModelError("cannot fit a frequency model with zero tokens")
    log_probs = np.log(counts + alpha) - math.log(total + alpha * vocab_size)
    return FreqLM(tuple(float(x) for x in log_probs), alpha, vocab_size)


def score(lm: FreqLM, tokens: TokenSequence) -> ScoredTokens:
    """Per-token log probability of each true (non-special) token."""
    if tokens.vocab_size != lm.vocab_size:
        raise ModelError(
            f"token vocab size {tokens.vocab_size} != model vocab size {lm.vocab_size}"
        )
    content = [i for i in tokens.ids if i >= NUM_SPECIALS]
    if not content:
        raise MetricError(f"sequence {tokens.source_id!r} is empty after special stripping")
    return ScoredTokens(tuple(lm.token_log_probs[i] for i in content), lm.vocab_size)


def score_corpus(lm: FreqLM, tokenized: list[TokenSequence]) -> ScoredTokens:
    """Concatenated scores over many sequences (fixed summation order)."""
    log_probs: list[float] = []
    for ts in tokenized:
        log_probs.extend(score(lm, ts).log_probs)
    if not log_probs:
        raise MetricError("no tokens to score")
    return ScoredTokens(tuple(log_probs), lm.vocab_size)


@dataclass(frozen=True)
class SweepRow:
    method: str
    vocab_size: int
    perplexity: float
    normalized_perplexity: float
    tokens_per_residue: float
    val_token_count: int = 0


def perplexity_sweep(
    c_train: Corpus,
    c_val: Corpus,
    tokenizer_specs: list[tuple[str, int]],
    alpha: float = DEFAULT_ALPHA,
) -> list[SweepRow]:
    """Train each spec'd tokenizer on c_train, fit the frequency model on the
    tokenized training corpus, and score the validation corpus.

    Tokens-per-residue is reported on the validation corpus.  BPE models over
    the same corpus share one training run: a smaller target is an exact
    prefix of a larger one, so the largest requested size is trained once and
    sliced.
    """
    from prottok import metrics as metrics_mod

    train_ids = {s.id for s in c_train}
    if any(s.id in train_ids for s in c_val):
        raise MetricError("train and validation corpora must be disjoint")
    for method, size in tokenizer_specs:
        if method not in METHODS:
            raise ModelError(f"unknown method {method!r} in sweep spec")
        if method != "per-aa" and size < base_vocabulary().size:
            raise ModelError(f"vocab size {size} below the base inventory")

    bpe_sizes = [size for method, size in tokenizer_specs if method == "bpe"]
    shared_bpe = train("bpe", c_train, max(bpe_sizes)) if bpe_sizes else None

    rows = []
    for method, size in tokenizer_specs:
        if method == "per-aa":
            tok = Tokenizer("per-aa", None)
        elif method == "bpe":
            tok = Tokenizer("bpe", _bpe_prefix(shared_bpe.model, size))
        else:
            tok = train("unigram", c_train, size)
        train_tokens = [tok.encode(s) for s in c_train]
        val_tokens = [tok.encode(s) for s in c_val]
        lm = fit_freq_lm(train_tokens, alpha)
        scored = score_corpus(lm, val_tokens)
        stats = compression_stats(tok, c_val)
        rows.append(
            SweepRow(
                method=method,
                vocab_size=tok.vocab_size,
                perplexity=metrics_mod.perplexity(scored),
                normalized_perplexity=metrics_mod.normalized_perplexity(scored),
                tokens_per_residue=stats.tokens_per_residue,
                val_token_count=scored.token_count,
            )
        )
    return rows


def _bpe_prefix(model, target_size):
    """The BPE model a training run stopped at `target_size` would produce."""
    from prottok.bpe import BpeModel
    from prottok.vocab import make_subword_vocabulary

    base_size = base_vocabulary().size
    if target_size >= model.vocab.size:
        if target_size > model.vocab.size and not model.incomplete:
            raise ModelError(f"shared BPE run never reached size {target_size}")
        return model
    seen: set[str] = set()
    merges = []
    vocab_count = base_size
    for left, right in model.merges:
        if vocab_count >= target_size:
            break
        merges.append((left, right))
        if left + right not in seen:
            seen.add(left + right)
            vocab_count += 1
    return BpeModel(tuple(merges), make_subword_vocabulary([l + r for l, r in merges]))


def sweep_table(rows: list[SweepRow], seed_note: str = "") -> str:
    """Delimited sweep table, one row per spec."""
    lines = []
    if seed_note:
        lines.append(f"# {seed_note}")
    lines.append("method\tvocab_size\tperplexity\tnormalized_perplexity\ttokens_per_residue")
    for r in rows:
        lines.append(
            f"{r.method}\t{r.vocab_size}\t{r.perplexity:.17g}"
            f"\t{r.normalized_perplexity:.17g}\t{r.tokens_per_residue:.17g}"
        )
    return "\n".join(lines) + "\n"


def sweep_metric_reports(rows: list[SweepRow]) -> str:
    """Machine-readable copy in the metric-report line format."""
    lines = []
    for r in rows:
        prefix = f"{r.method}@{r.vocab_size}"
        n = r.val_token_count
        lines.append(metric_report_line(f"{prefix}/perplexity", r.perplexity, n, r.vocab_size))
        lines.append(
            metric_report_line(
                f"{prefix}/normalized_perplexity", r.normalized_perplexity, n, r.vocab_size
            )
        )
        lines.append(
            metric_report_line(
                f"{prefix}/tokens_per_residue", r.tokens_per_residue, n, r.vocab_size
            )
        )
    return "\n".join(lines) + "\n"
