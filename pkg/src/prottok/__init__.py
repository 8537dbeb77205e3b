"""Sub-word tokenizer training and evaluation for protein sequence corpora.

Provides per-amino-acid, BPE and Unigram tokenizers over a fixed 33-symbol
base inventory, masking and perplexity evaluation utilities, pooling and
rotary kernels, and benchmark-task manifest plumbing.  A FastAPI service
(`prottok.service`) and a CLI (`prottok.cli`) wrap the same core package.
"""

from prottok.corpus import Corpus, ProteinSequence, SplitSpec, dedup, parse_fasta, split_holdout
from prottok.vocab import (
    TokenSequence,
    Vocabulary,
    base_vocabulary,
    decode,
    encode_per_aa,
    load_vocab,
    save_vocab,
)
from prottok.bpe import BpeModel, encode_bpe, load_bpe, save_bpe, train_bpe
from prottok.unigram import (
    UnigramModel,
    em_step,
    load_unigram,
    prune,
    save_unigram,
    seed_pieces,
    train_unigram,
    viterbi_encode,
)
from prottok.metrics import (
    PredictionBatch,
    ScoredTokens,
    accuracy,
    compression_stats,
    mlm_loss,
    mse,
    normalized_perplexity,
    perplexity,
    spearman,
)
from prottok.mlm import FreqLM, MaskPlan, fit_freq_lm, mask_tokens, perplexity_sweep, score

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "ProteinSequence",
    "SplitSpec",
    "parse_fasta",
    "split_holdout",
    "dedup",
    "Vocabulary",
    "TokenSequence",
    "base_vocabulary",
    "encode_per_aa",
    "decode",
    "save_vocab",
    "load_vocab",
    "BpeModel",
    "train_bpe",
    "encode_bpe",
    "save_bpe",
    "load_bpe",
    "UnigramModel",
    "seed_pieces",
    "em_step",
    "prune",
    "train_unigram",
    "viterbi_encode",
    "save_unigram",
    "load_unigram",
    "ScoredTokens",
    "PredictionBatch",
    "mlm_loss",
    "perplexity",
    "normalized_perplexity",
    "spearman",
    "accuracy",
    "mse",
    "compression_stats",
    "MaskPlan",
    "FreqLM",
    "mask_tokens",
    "fit_freq_lm",
    "score",
    "perplexity_sweep",
]
