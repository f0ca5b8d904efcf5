from __future__ import annotations

import pytest

from talarescore.core import (
    DeviationConfig,
    builtin_tala,
    default_vocabulary,
    generate_sequence,
)
from talarescore.model import train_model


@pytest.fixture(scope="session")
def vocab():
    return default_vocabulary()


@pytest.fixture(scope="session")
def tintal(vocab):
    return builtin_tala("tintal", vocab)


@pytest.fixture(scope="session")
def jhaptal(vocab):
    return builtin_tala("jhaptal", vocab)


@pytest.fixture(scope="session")
def small_corpus(vocab, tintal, jhaptal):
    """Two-tala labeled corpus with mild deviations."""
    dev = DeviationConfig(p_tihai=0.3, p_sub=0.05)
    seqs = [generate_sequence(tintal, 3, dev, seed, vocab) for seed in range(8)]
    seqs += [generate_sequence(jhaptal, 3, dev, 100 + seed, vocab) for seed in range(8)]
    return seqs


@pytest.fixture(scope="session")
def small_model(small_corpus, vocab):
    return train_model(small_corpus, vocab)
