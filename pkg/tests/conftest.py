import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import softaug as sa
from softaug.rng import SplitMix64, derive


def random_corpus(seed, n_sentences, vocab_size, max_len=12):
    """Random id sentences over a synthetic vocabulary of given size."""
    rng = SplitMix64(seed)
    surfaces = [f"w{i}" for i in range(vocab_size)]
    vocab = sa.build_vocab("\n".join(" ".join(surfaces) for _ in range(2)))
    sents = []
    for _ in range(n_sentences):
        length = 1 + rng.randint(max_len)
        sents.append([4 + rng.randint(vocab_size) for _ in range(length)])
    return sents, vocab


@pytest.fixture(scope="session")
def tiny_lm():
    """Small bigram model over a 10-word vocabulary, shared by read-only tests."""
    sents, vocab = random_corpus(11, 120, 10)
    return sa.train_lm(sents, vocab, order=2), sents, vocab


@pytest.fixture(scope="session")
def small_task():
    """Small synthetic task plus its sweep language model."""
    task = sa.make_synthetic_task(60, 12, 240, 8, SplitMix64(derive(5, 0xDA7A)))
    spec = sa.SweepSpec(strategies=("base",), reps=1, steps=400, test_fraction=0.25)
    lm = sa.train_task_lm(spec, task)
    return task, lm
