import hashlib
import math

import numpy as np
import pytest

import softaug as sa
from softaug import lm as lmm
from softaug.corpus import BOS, EOS
from softaug.rng import SplitMix64

from conftest import random_corpus
from oracles import BruteNGram


def toy_vocab(words):
    return sa.build_vocab(" ".join(words))


class TestTraining:
    def test_unigram_counts_include_eos(self):
        vocab = toy_vocab(["a"])
        model = sa.train_lm([[vocab.id_of("a")]], vocab, order=1)
        assert model.counts[0][()] == {vocab.id_of("a"): 1, EOS: 1}

    def test_bigram_counts(self):
        vocab = toy_vocab(["a", "b", "c"])
        a, b, c = (vocab.id_of(x) for x in "abc")
        model = sa.train_lm([[a, b], [a, c]], vocab, order=2)
        assert model.counts[1][(a,)] == {b: 1, c: 1}
        assert sum(model.counts[1][(a,)].values()) == 2

    def test_discount_bounds(self):
        vocab = toy_vocab(["a"])
        with pytest.raises(ValueError):
            sa.train_lm([[4]], vocab, order=2, discount=1.0)
        with pytest.raises(ValueError):
            sa.train_lm([[4]], vocab, order=2, discount=0.0)

    def test_empty_corpus(self):
        with pytest.raises(ValueError, match="empty corpus"):
            sa.train_lm([], toy_vocab(["a"]), order=2)

    def test_counts_monotone_under_new_sentence(self):
        vocab = toy_vocab(["a", "b", "c"])
        a, b, c = (vocab.id_of(x) for x in "abc")
        small = sa.train_lm([[a, b]], vocab, order=2)
        grown = sa.train_lm([[a, b], [a, b, c]], vocab, order=2)
        for k in range(2):
            for hist, table in small.counts[k].items():
                for w, cnt in table.items():
                    assert grown.counts[k][hist][w] >= cnt


class TestNextDist:
    def test_matches_hand_computed_example(self):
        vocab = toy_vocab(["a", "b", "c"])
        a, b, c = (vocab.id_of(x) for x in "abc")
        model = sa.train_lm([[a, b], [a, c]], vocab, order=2, discount=0.75, alpha=0.1)
        dist = model.next_dist([a])
        # c(a)=2, both continuations seen once; lam = 0.75*2/2
        p0_b = (1 + 0.1) / (6 + 0.1 * len(vocab))
        expected = (1 - 0.75) / 2 + 0.75 * p0_b
        assert dist[b] == pytest.approx(expected, abs=1e-15)
        assert dist[b] == dist[c]

    def test_sums_to_one_on_random_prefixes(self, tiny_lm):
        model, _, vocab = tiny_lm
        rng = SplitMix64(5)
        for _ in range(1000):
            prefix = [4 + rng.randint(len(vocab) - 4) for _ in range(rng.randint(4))]
            assert abs(model.next_dist(prefix).sum() - 1.0) <= 1e-9

    def test_unigram_model_ignores_prefix(self):
        vocab = toy_vocab(["a"])
        model = sa.train_lm([[vocab.id_of("a")]], vocab, order=1)
        assert np.array_equal(model.next_dist([]), model.next_dist([vocab.id_of("a")]))

    def test_matches_brute_force_recursion(self):
        rng = SplitMix64(99)
        for trial in range(5):
            vocab_size = 6 + rng.randint(12)
            order = 1 + rng.randint(3)
            sents, vocab = random_corpus(1000 + trial, 3 + rng.randint(40), vocab_size)
            model = sa.train_lm(sents, vocab, order=order, discount=0.6, alpha=0.05)
            brute = BruteNGram(sents, len(vocab), order, 0.6, 0.05)
            for _ in range(20):
                plen = rng.randint(order + 1)
                prefix = [4 + rng.randint(vocab_size) for _ in range(plen)]
                mine = model.next_dist(prefix)
                theirs = brute.next_dist(prefix)
                assert np.max(np.abs(mine - np.array(theirs))) <= 1e-12


class TestScoring:
    def test_floor_only_model_is_uniform(self):
        vocab = toy_vocab(["a", "b", "c", "d"])
        model = lmm.NGramLM(2, 0.75, 0.1, vocab, [dict(), dict()])
        m = len(vocab)
        sents = [[vocab.id_of("a"), vocab.id_of("b")]]
        assert lmm.perplexity(model, sents) == pytest.approx(m, rel=1e-12)

    def test_training_perplexity_beats_uniform(self, tiny_lm):
        model, sents, vocab = tiny_lm
        assert lmm.perplexity(model, sents) <= len(vocab)

    def test_logprob_consistent_with_next_dist(self, tiny_lm):
        model, _, vocab = tiny_lm
        prefix = [5, 6]
        dist = model.next_dist(prefix)
        for token in (4, 7, EOS):
            assert math.exp(model.logprob(prefix, token)) == pytest.approx(
                dist[token], abs=1e-12
            )

    def test_logprob_range_check(self, tiny_lm):
        model, _, vocab = tiny_lm
        with pytest.raises(ValueError, match="id out of range"):
            model.logprob([], len(vocab))


class TestSample:
    def test_point_mass_always_returned(self):
        vocab = toy_vocab(["a", "b"])
        a = vocab.id_of("a")
        model = lmm.NGramLM(1, 0.5, 0.0, vocab, [{(): {a: 5}}])
        rng = SplitMix64(0)
        assert all(model.sample([], rng) == a for _ in range(200))

    def test_empirical_frequencies_match_next_dist(self, tiny_lm):
        model, _, vocab = tiny_lm
        prefix = [6]
        dist = model.next_dist(prefix)
        counts = np.zeros(len(vocab))
        rng = SplitMix64(123)
        n = 100_000
        for _ in range(n):
            counts[model.sample(prefix, rng)] += 1
        assert np.max(np.abs(counts / n - dist)) <= 0.01

    def test_specials_never_emitted(self, tiny_lm):
        model, _, _ = tiny_lm
        rng = SplitMix64(9)
        draws = {model.sample([4], rng) for _ in range(2000)}
        assert not draws & {BOS, sa.UNK, sa.BLANK}

    def test_seeded_determinism(self, tiny_lm):
        model, _, _ = tiny_lm
        a = SplitMix64(42)
        b = SplitMix64(42)
        assert [model.sample([5], a) for _ in range(50)] == [
            model.sample([5], b) for _ in range(50)
        ]


class TestSerialization:
    def test_round_trip_is_bit_exact(self, tiny_lm):
        model, sents, _ = tiny_lm
        again = lmm.parse_lm(lmm.dump_lm(model))
        assert again.counts == model.counts
        assert again.vocab.surfaces == model.vocab.surfaces
        for prefix in ([], [5], [6, 7]):
            assert np.array_equal(again.next_dist(prefix), model.next_dist(prefix))

    def test_reload_perplexity_within_1e9(self, tmp_path, tiny_lm):
        model, sents, _ = tiny_lm
        path = tmp_path / "model.arpa"
        lmm.save_lm(model, path)
        again = lmm.load_lm(path)
        assert lmm.perplexity(again, sents) == pytest.approx(
            lmm.perplexity(model, sents), abs=1e-9
        )

    def test_trigram_round_trip(self):
        sents, vocab = random_corpus(7, 60, 8)
        model = sa.train_lm(sents, vocab, order=3)
        again = lmm.parse_lm(lmm.dump_lm(model))
        assert again.counts == model.counts

    def test_dump_is_deterministic(self, tiny_lm):
        model, _, _ = tiny_lm
        assert lmm.dump_lm(model) == lmm.dump_lm(model)

    def test_oversized_corpus_rejected(self):
        vocab = toy_vocab(["a"])
        a = vocab.id_of("a")
        model = lmm.NGramLM(1, 0.5, 0.1, vocab, [{(): {a: lmm.MAX_EXACT_EVENTS}}])
        with pytest.raises(ValueError, match="too large"):
            lmm.dump_lm(model)


class TestImmutability:
    def test_queries_do_not_mutate_serialized_state(self, tiny_lm):
        model, sents, _ = tiny_lm
        before = hashlib.sha256(lmm.dump_lm(model).encode()).hexdigest()
        rng = SplitMix64(4)
        for _ in range(200):
            model.next_dist([4 + rng.randint(8)])
            model.sample([5], rng)
        model.logprob([6], 4)
        lmm.perplexity(model, sents[:10])
        after = hashlib.sha256(lmm.dump_lm(model).encode()).hexdigest()
        assert before == after
