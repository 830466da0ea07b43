"""Corpus ingestion: vocabulary construction and byte-pair subword segmentation.

Corpora are UTF-8 text files, one whitespace-tokenized sentence per line.
A :class:`Vocabulary` maps token strings to dense integer ids with four
reserved specials in the fixed order ``<s> </s> <unk> <blank>``.  Byte-pair
merges are learned greedily on word counts with a ``</w>`` marker attached
to the final symbol of every word; segmented output carries ``@@`` on
non-final subwords so that detokenization is an exact inverse.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

BOS, EOS, UNK, BLANK = 0, 1, 2, 3
BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, BLANK_TOKEN = "<s>", "</s>", "<unk>", "<blank>"
SPECIAL_TOKENS = (BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, BLANK_TOKEN)
NUM_SPECIALS = len(SPECIAL_TOKENS)

WORD_END = "</w>"
CONT_MARKER = "@@"

# A tokenized sentence is a plain list of vocabulary ids.
Sentence = list


def read_text(path: str) -> str:
    """Read a UTF-8 file, reporting the byte offset of any encoding error."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValueError(f"malformed UTF-8 at byte {exc.start} in {path}") from exc


def _as_lines(corpus: str | Iterable[str]) -> list[str]:
    if isinstance(corpus, str):
        return corpus.splitlines()
    return [line.rstrip("\n") for line in corpus]


class Vocabulary:
    """Bijection between token strings and dense ids in [0, |V|).

    Ids 0..3 are the specials; remaining entries are sorted by corpus count
    descending with lexicographic tie-break, which makes id assignment a
    pure function of the corpus bytes.
    """

    def __init__(self, surfaces: list[str], counts: list[int]):
        if len(surfaces) != len(counts):
            raise ValueError("surfaces and counts length mismatch")
        if list(surfaces[:NUM_SPECIALS]) != list(SPECIAL_TOKENS):
            raise ValueError("vocabulary must start with the reserved specials")
        if len(set(surfaces)) != len(surfaces):
            raise ValueError("duplicate surface in vocabulary")
        if any(c < 0 for c in counts):
            raise ValueError("negative count in vocabulary")
        self.surfaces = list(surfaces)
        self.counts = list(counts)
        self._index = {s: i for i, s in enumerate(self.surfaces)}

    @classmethod
    def from_counts(cls, counts: dict[str, int], max_size: int | None = None) -> "Vocabulary":
        words = [
            (s, c) for s, c in counts.items() if s not in SPECIAL_TOKENS and c > 0
        ]
        words.sort(key=lambda sc: (-sc[1], sc[0]))
        if max_size is not None:
            if max_size < 1:
                raise ValueError("max_size must be >= 1")
            words = words[: max(0, max_size - NUM_SPECIALS)]
        surfaces = list(SPECIAL_TOKENS) + [s for s, _ in words]
        cnts = [0] * NUM_SPECIALS + [c for _, c in words]
        return cls(surfaces, cnts)

    def __len__(self) -> int:
        return len(self.surfaces)

    def __contains__(self, surface: str) -> bool:
        return surface in self._index

    def id_of(self, surface: str) -> int:
        """Id for *surface*, or UNK when out of vocabulary."""
        return self._index.get(surface, UNK)

    def surface(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.surfaces):
            raise ValueError(f"id out of range: {token_id}")
        return self.surfaces[token_id]

    def encode_tokens(self, tokens: Iterable[str]) -> Sentence:
        return [self.id_of(t) for t in tokens]

    def decode_tokens(self, sentence: Sentence) -> list[str]:
        return [self.surface(t) for t in sentence]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for s, c in zip(self.surfaces, self.counts):
                fh.write(f"{s}\t{c}\n")

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        surfaces, counts = [], []
        for lineno, line in enumerate(read_text(path).splitlines(), 1):
            if not line:
                continue
            try:
                surface, count = line.split("\t")
                surfaces.append(surface)
                counts.append(int(count))
            except ValueError as exc:
                raise ValueError(f"bad vocab line {lineno} in {path}: {line!r}") from exc
        return cls(surfaces, counts)


def build_vocab(corpus: str | Iterable[str], max_size: int | None = None) -> Vocabulary:
    """Count whitespace tokens and build a Vocabulary.

    An input with no lines at all is rejected; lines without tokens yield a
    vocabulary holding only the four specials.  Tokens ranked beyond
    *max_size* (specials included in the budget) are dropped and map to UNK
    at encode time.
    """
    lines = _as_lines(corpus)
    if not lines:
        raise ValueError("empty corpus")
    counts: Counter[str] = Counter()
    for line in lines:
        counts.update(line.split())
    return Vocabulary.from_counts(counts, max_size=max_size)


def count_words(corpus: str | Iterable[str]) -> dict[str, int]:
    """Whitespace word counts over a corpus, for BPE learning."""
    lines = _as_lines(corpus)
    if not lines:
        raise ValueError("empty corpus")
    counts: Counter[str] = Counter()
    for line in lines:
        counts.update(line.split())
    return dict(counts)


@dataclass(frozen=True)
class MergeTable:
    """Ordered byte-pair merges; application order equals list order."""

    merges: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if len(set(self.merges)) != len(self.merges):
            raise ValueError("duplicate pair in merge table")

    def __len__(self) -> int:
        return len(self.merges)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#bpe v1 {len(self.merges)}\n")
            for left, right in self.merges:
                fh.write(f"{left} {right}\n")

    @classmethod
    def load(cls, path: str) -> "MergeTable":
        lines = read_text(path).splitlines()
        if not lines or not lines[0].startswith("#bpe v1"):
            raise ValueError(f"not a merges file: {path}")
        merges = []
        for lineno, line in enumerate(lines[1:], 2):
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise ValueError(f"bad merge line {lineno} in {path}: {line!r}")
            merges.append((parts[0], parts[1]))
        return cls(tuple(merges))


def _word_symbols(word: str) -> list[str]:
    syms = list(word)
    syms[-1] += WORD_END
    return syms


def _merge_once(syms: list[str], pair: tuple[str, str]) -> list[str]:
    left, right = pair
    out = []
    i = 0
    while i < len(syms):
        if i + 1 < len(syms) and syms[i] == left and syms[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return out


def learn_bpe(word_counts: dict[str, int], num_merges: int) -> MergeTable:
    """Greedy most-frequent-pair merges over end-marked words.

    At each step the pair with the highest weighted count is merged;
    count ties break lexicographically ascending on (left, right).  Stops
    early when no adjacent pair remains.
    """
    if num_merges < 1:
        raise ValueError("num_merges must be >= 1")
    words = {w: c for w, c in word_counts.items() if w}
    if not words:
        raise ValueError("empty word counts")
    pieces = {w: _word_symbols(w) for w in words}
    merges: list[tuple[str, str]] = []
    for _ in range(num_merges):
        pairs: Counter[tuple[str, str]] = Counter()
        for w, syms in pieces.items():
            c = words[w]
            for a, b in zip(syms, syms[1:]):
                pairs[(a, b)] += c
        if not pairs:
            break
        best = min(pairs.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        merges.append(best)
        pieces = {w: _merge_once(syms, best) for w, syms in pieces.items()}
    return MergeTable(tuple(merges))


def _render_subwords(syms: list[str]) -> list[str]:
    out = [s + CONT_MARKER for s in syms[:-1]]
    last = syms[-1]
    if last.endswith(WORD_END):
        last = last[: -len(WORD_END)]
    out.append(last)
    return out


def apply_bpe(sentence_text: str, merges: MergeTable, _cache: dict | None = None) -> list[str]:
    """Segment each whitespace word of *sentence_text* into subword strings.

    Non-final subwords carry the ``@@`` continuation marker; joining the
    output with spaces and deleting ``@@ `` restores the input exactly.
    """
    subwords: list[str] = []
    for word in sentence_text.split():
        if _cache is not None and word in _cache:
            subwords.extend(_cache[word])
            continue
        syms = _word_symbols(word)
        for pair in merges.merges:
            if len(syms) == 1:
                break
            syms = _merge_once(syms, pair)
        rendered = _render_subwords(syms)
        if _cache is not None:
            _cache[word] = rendered
        subwords.extend(rendered)
    return subwords


def encode(sentence_text: str, merges: MergeTable, vocab: Vocabulary) -> Sentence:
    """BPE-segment then map subwords to ids; unknown subwords become UNK."""
    return vocab.encode_tokens(apply_bpe(sentence_text, merges))


def decode(sentence: Sentence, vocab: Vocabulary) -> str:
    """Inverse of :func:`encode` for UNK-free sentences."""
    return detokenize(vocab.decode_tokens(sentence))


def detokenize(subwords: Iterable[str]) -> str:
    return " ".join(subwords).replace(CONT_MARKER + " ", "")
