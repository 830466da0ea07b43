"""Interpolated absolute-discounting n-gram language model.

The conditional distribution over the next token is

    P(w | h) = max(c(h,w) - D, 0) / c(h) + lam(h) * P(w | h')
    lam(h)   = D * N1plus(h) / c(h)

where h' drops the oldest token of h and the recursion bottoms out at the
additively smoothed unigram P0(w) = (c(w) + alpha) / (C + alpha * |V|).
Unseen histories fall through unchanged (lam = 1, no discounted mass), so
every history yields a proper distribution over the full vocabulary.

Sentences are padded with n-1 BOS symbols and terminated by a predicted
EOS.  Models are immutable once built; queries are pure and cache dense
distributions per history.

Serialization is an ARPA-style text file whose unigram section lists every
vocabulary entry in id order.  Log10 probabilities are written with six
decimals; reload recovers the exact integer count tables by inverting the
printed values (the writer enforces a corpus-size bound under which the
rounding is provably exact), so a reloaded model is bit-identical.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .corpus import BLANK, BOS, EOS, UNK, Sentence, Vocabulary, read_text
from .rng import SplitMix64

# Largest total event count for which 6-decimal log10 probabilities invert
# to exact integer counts: the relative quantization error of a 6-decimal
# log10 value is 1.16e-6, so every recovered count stays within 0.23 of the
# true integer below this bound (the reader rejects residues above 0.3).
MAX_EXACT_EVENTS = 200_000

_DUMMY_LOG10 = -99.0
_CACHE_LIMIT = 4096

# History -> {token: count} tables, indexed by history length.
CountTables = list[dict[tuple, dict[int, int]]]


class NGramLM:
    """Immutable next-token model over a fixed vocabulary."""

    def __init__(
        self,
        order: int,
        discount: float,
        alpha: float,
        vocab: Vocabulary,
        counts: CountTables,
    ):
        if order < 1:
            raise ValueError("order must be >= 1")
        if not 0.0 < discount < 1.0:
            raise ValueError("discount must lie strictly between 0 and 1")
        if alpha < 0.0:
            raise ValueError("alpha must be >= 0")
        if len(counts) != order:
            raise ValueError("count tables must cover history lengths 0..order-1")
        self.order = order
        self.discount = discount
        self.alpha = alpha
        self.vocab = vocab
        self.counts = counts
        self._freeze()

    def _freeze(self) -> None:
        size = len(self.vocab)
        c1 = np.zeros(size, dtype=np.float64)
        for w, c in self.counts[0].get((), {}).items():
            c1[w] = c
        self.total_events = int(c1.sum())
        denom = self.total_events + self.alpha * size
        if denom <= 0.0:
            raise ValueError("model has no counts and no smoothing floor")
        self._p0 = (c1 + self.alpha) / denom
        # Per history: (ids, (count - D) / c(h), lam(h)).
        self._tables: list[dict[tuple, tuple[np.ndarray, np.ndarray, float]]] = [{}]
        for k in range(1, self.order):
            level = {}
            for hist, table in self.counts[k].items():
                ids = np.array(sorted(table), dtype=np.int64)
                cnts = np.array([table[int(i)] for i in ids], dtype=np.float64)
                total = float(cnts.sum())
                level[hist] = (ids, (cnts - self.discount) / total, self.discount * len(ids) / total)
            self._tables.append(level)
        self._cache: dict[tuple, np.ndarray] = {}

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_cache"] = {}
        return state

    # -- queries ---------------------------------------------------------

    def pad_prefix(self, prefix: Sequence[int]) -> tuple:
        """The last order-1 tokens of *prefix*, BOS-padded on the left."""
        n = self.order - 1
        padded = (BOS,) * n + tuple(prefix)
        return padded[len(padded) - n :] if n else ()

    def _dist_for_history(self, hist: tuple) -> np.ndarray:
        p = self._p0.copy()
        for k in range(1, len(hist) + 1):
            entry = self._tables[k].get(hist[len(hist) - k :])
            if entry is not None:
                ids, add, lam = entry
                p *= lam
                p[ids] += add
        return p

    def next_dist(self, prefix: Sequence[int]) -> np.ndarray:
        """Dense distribution over the vocabulary after *prefix*.

        Returns a fresh array; internal per-history results are cached.
        """
        hist = self.pad_prefix(prefix)
        cached = self._cache.get(hist)
        if cached is None:
            cached = self._dist_for_history(hist)
            if len(self._cache) < _CACHE_LIMIT:
                self._cache[hist] = cached
        return cached.copy()

    def logprob(self, prefix: Sequence[int], token: int) -> float:
        if not 0 <= token < len(self.vocab):
            raise ValueError(f"id out of range: {token}")
        return float(np.log(self.next_dist(prefix)[token]))

    def sample(self, prefix: Sequence[int], rng: SplitMix64) -> int:
        """Inverse-CDF draw in id order; BOS/UNK/BLANK are never emitted."""
        p = self.next_dist(prefix)
        p[[BOS, UNK, BLANK]] = 0.0
        cum = np.cumsum(p)
        u = rng.random() * cum[-1]
        idx = int(np.searchsorted(cum, u, side="right"))
        return min(idx, len(p) - 1)


def train_lm(
    sentences: Iterable[Sentence],
    vocab: Vocabulary,
    order: int = 3,
    discount: float = 0.75,
    alpha: float = 0.1,
) -> NGramLM:
    """Collect k-gram counts for all k <= order and freeze the model."""
    sentences = list(sentences)
    if not sentences:
        raise ValueError("empty corpus")
    counts: CountTables = [dict() for _ in range(order)]
    for sent in sentences:
        padded = [BOS] * (order - 1) + list(sent) + [EOS]
        for t in range(order - 1, len(padded)):
            w = padded[t]
            for k in range(order):
                hist = tuple(padded[t - k : t])
                table = counts[k].get(hist)
                if table is None:
                    table = counts[k][hist] = {}
                table[w] = table.get(w, 0) + 1
    return NGramLM(order, discount, alpha, vocab, counts)


def perplexity(lm: NGramLM, sentences: Iterable[Sentence]) -> float:
    """exp of mean negative log-likelihood per token, EOS included."""
    total = 0.0
    n = 0
    for sent in sentences:
        prefix: list[int] = []
        for token in list(sent) + [EOS]:
            total += lm.logprob(prefix, token)
            prefix.append(token)
            n += 1
    if n == 0:
        raise ValueError("empty corpus")
    return math.exp(-total / n)


# -- ARPA-style serialization ---------------------------------------------


def _lambda_of(lm: NGramLM, gram: tuple) -> float | None:
    if 1 <= len(gram) < lm.order:
        entry = lm._tables[len(gram)].get(gram)
        if entry is not None:
            return entry[2]
    return None


def dump_lm(lm: NGramLM) -> str:
    """Render the model as ARPA-style text (see module docstring)."""
    size = len(lm.vocab)
    if lm.total_events + lm.alpha * size >= MAX_EXACT_EVENTS:
        raise ValueError(
            f"corpus too large for exact serialization "
            f"({lm.total_events} events, limit {MAX_EXACT_EVENTS})"
        )
    sections: list[list[str]] = []

    lines = []
    for w in range(size):
        # alpha = 0 leaves unseen tokens at probability zero; the dummy
        # value inverts back to a zero count on reload.
        p0 = float(lm._p0[w])
        parts = [f"{math.log10(p0) if p0 > 0 else _DUMMY_LOG10:.6f}", lm.vocab.surface(w)]
        lam = _lambda_of(lm, (w,))
        if lam is not None:
            parts.append(f"{math.log10(lam):.6f}")
        lines.append("\t".join(parts))
    sections.append(lines)

    for k in range(2, lm.order + 1):
        grams: list[tuple[tuple, float | None]] = []
        for hist in lm.counts[k - 1]:
            dist = lm._dist_for_history(hist)
            for w in sorted(lm.counts[k - 1][hist]):
                grams.append((hist + (w,), float(dist[w])))
        if k < lm.order:
            all_bos = (BOS,) * k
            if all_bos in lm.counts[k] and all_bos not in {g for g, _ in grams}:
                grams.append((all_bos, None))
        grams.sort(key=lambda gp: gp[0])
        lines = []
        for gram, prob in grams:
            text = " ".join(lm.vocab.surface(t) for t in gram)
            log10p = _DUMMY_LOG10 if prob is None else math.log10(prob)
            parts = [f"{log10p:.6f}", text]
            lam = _lambda_of(lm, gram)
            if lam is not None:
                parts.append(f"{math.log10(lam):.6f}")
            lines.append("\t".join(parts))
        sections.append(lines)

    out = [
        "# interpolated absolute-discount ngram model",
        f"# order: {lm.order}",
        f"# discount: {lm.discount!r}",
        f"# alpha: {lm.alpha!r}",
        f"# events: {lm.total_events}",
        "",
        "\\data\\",
    ]
    for k, lines in enumerate(sections, 1):
        out.append(f"ngram {k}={len(lines)}")
    for k, lines in enumerate(sections, 1):
        out.append("")
        out.append(f"\\{k}-grams:")
        out.extend(lines)
    out.append("")
    out.append("\\end\\")
    out.append("")
    return "\n".join(out)


def save_lm(lm: NGramLM, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_lm(lm))


def _count_prob(counts: CountTables, p0: np.ndarray, discount: float, hist: tuple, w: int) -> float:
    """Recursion evaluated on partially reconstructed count tables."""
    if not hist:
        return float(p0[w])
    table = counts[len(hist)].get(hist) if len(hist) < len(counts) else None
    if not table:
        return _count_prob(counts, p0, discount, hist[1:], w)
    total = sum(table.values())
    disc = max(table.get(w, 0) - discount, 0.0) / total
    lam = discount * len(table) / total
    return disc + lam * _count_prob(counts, p0, discount, hist[1:], w)


def _round_count(raw: float, context: str) -> int:
    c = round(raw)
    if abs(raw - c) > 0.3 or c < 0:
        raise ValueError(f"corrupt model file: non-integral count {raw!r} for {context}")
    return int(c)


def parse_lm(text: str, path: str = "<string>") -> NGramLM:
    """Rebuild the exact model from ARPA-style text."""
    header: dict[str, str] = {}
    declared: dict[int, int] = {}
    sections: dict[int, list[tuple[float, list[str], float | None]]] = {}
    current: int | None = None
    for line in text.splitlines():
        if line.startswith("#"):
            if ":" in line:
                key, _, value = line[1:].partition(":")
                header[key.strip()] = value.strip()
            continue
        if not line or line == "\\data\\":
            continue
        if line == "\\end\\":
            break
        if line.startswith("ngram "):
            k, _, count = line[len("ngram ") :].partition("=")
            declared[int(k)] = int(count)
            continue
        if line.endswith("-grams:") and line.startswith("\\"):
            current = int(line[1 : -len("-grams:")])
            sections[current] = []
            continue
        if current is None:
            raise ValueError(f"unexpected line outside sections in {path}: {line!r}")
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise ValueError(f"bad gram line in {path}: {line!r}")
        bow = float(fields[2]) if len(fields) == 3 else None
        sections[current].append((float(fields[0]), fields[1].split(" "), bow))

    try:
        order = int(header["order"])
        discount = float(header["discount"])
        alpha = float(header["alpha"])
        events = int(header["events"])
    except KeyError as exc:
        raise ValueError(f"missing header field in {path}: {exc}") from exc
    if sorted(sections) != list(range(1, order + 1)):
        raise ValueError(f"sections do not match order {order} in {path}")
    for k, lines in sections.items():
        if declared.get(k) != len(lines):
            raise ValueError(f"section {k} length mismatch in {path}")

    unigrams = sections[1]
    surfaces = [gram[0] for _, gram, _ in unigrams]
    size = len(surfaces)
    denom = events + alpha * size
    c1: dict[int, int] = {}
    backoffs: dict[tuple, float] = {}
    for w, (log10p, _, bow) in enumerate(unigrams):
        c = _round_count(10.0**log10p * denom - alpha, f"unigram {surfaces[w]}")
        if c:
            c1[w] = c
        if bow is not None:
            backoffs[(w,)] = 10.0**bow
    if sum(c1.values()) != events:
        raise ValueError(f"unigram counts do not sum to declared events in {path}")
    vocab = Vocabulary(surfaces, [0] * 4 + [c1.get(w, 0) for w in range(4, size)])
    index = {s: i for i, s in enumerate(surfaces)}

    counts: CountTables = [{(): c1}] + [dict() for _ in range(order - 1)]
    p0 = (np.array([c1.get(w, 0) for w in range(size)], dtype=np.float64) + alpha) / denom
    for k in range(2, order + 1):
        groups: dict[tuple, list[tuple[float, int]]] = {}
        level_bows: dict[tuple, float] = {}
        for log10p, gram_text, bow in sections[k]:
            gram = tuple(index[s] for s in gram_text)
            if bow is not None:
                level_bows[gram] = 10.0**bow
            hist, w = gram[:-1], gram[-1]
            groups.setdefault(hist, []).append((log10p, w))
        for hist, entries in groups.items():
            real = [(lp, w) for lp, w in entries if lp > _DUMMY_LOG10 + 1.0]
            if not real:
                continue
            lam_stored = backoffs.get(hist)
            if lam_stored is None:
                raise ValueError(f"history without backoff weight in {path}: {hist}")
            total = _round_count(discount * len(real) / lam_stored, f"history {hist}")
            lam = discount * len(real) / total
            table = {}
            for log10p, w in real:
                plow = _count_prob(counts, p0, discount, hist[1:], w)
                c = _round_count((10.0**log10p - lam * plow) * total + discount, f"gram {hist}+{w}")
                table[w] = c
            if sum(table.values()) != total:
                raise ValueError(f"inconsistent counts for history {hist} in {path}")
            counts[k - 1][hist] = table
        backoffs = level_bows
    return NGramLM(order, discount, alpha, vocab, counts)


def load_lm(path: str) -> NGramLM:
    return parse_lm(read_text(path), path)
