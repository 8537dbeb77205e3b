import os

import pytest

from prottok.corpus import SplitSpec, parse_fasta, split_holdout

from _synth import synthetic_corpus


@pytest.fixture(scope="session")
def sweep_split():
    """Training/validation corpora for the perplexity-trend experiment.

    Defaults to the deterministic synthetic generator; set
    PROTTOK_SWEEP_FASTA to run against a real FASTA corpus instead.
    """
    path = os.environ.get("PROTTOK_SWEEP_FASTA")
    if path:
        with open(path, "rb") as fh:
            corpus = parse_fasta(fh.read(), source=path)
    else:
        corpus = synthetic_corpus(12000, seed=1234)
    holdout = max(1, len(corpus) // 6)
    return split_holdout(corpus, SplitSpec(holdout, seed=7))


@pytest.fixture(scope="session")
def small_corpus():
    """A few thousand sequences: enough structure to train all methods."""
    return synthetic_corpus(3000, seed=99)
