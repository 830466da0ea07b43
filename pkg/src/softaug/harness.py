"""Synthetic benchmark task and the strategy-by-gamma sweep protocol.

The synthetic task partitions the content vocabulary into synonym classes
(surface form ``c<class>w<member>`` makes the assignment recoverable from
text alone).  Sentences follow a class chain that repeats the previous
class half the time, then realize each class as a uniformly chosen member,
so a next-token model spreads probability mass across members of the
locally likely classes.  The binary label is whether any marker-class
token occurs, which a mean-pool linear classifier can separate.

The sweep trains one model per (strategy, gamma, repetition) cell on the
augmented training split and reports clean-test accuracy.  Cell seeds
derive from (base seed, gamma, repetition) only, so at gamma = 0 every
strategy runs the exact same computation, and any cell can be recomputed
in isolation.
"""

from __future__ import annotations

import csv
import io
import multiprocessing
import os
import time
from dataclasses import dataclass

from .augment import AugmentConfig, augment_corpus, unigram_dist
from .corpus import Sentence, Vocabulary, build_vocab
from .lm import NGramLM, train_lm
from .rng import SplitMix64, derive
from .softmix import evaluate, init_model, train_toy

DEFAULT_GAMMAS = (0.0, 0.05, 0.1, 0.15, 0.2)
MARKER_FRACTION = 0.12
CLASS_REPEAT_PROB = 0.75


@dataclass
class SyntheticTask:
    """Generated classification corpus with its vocabulary and class map."""

    sentences: list[Sentence]
    labels: list[int]
    vocab: Vocabulary
    num_classes: int
    marker_classes: frozenset[int]

    def class_of_surface(self, surface: str) -> int:
        return int(surface[1 : surface.index("w")])


def make_synthetic_task(
    vocab_size: int,
    num_synonym_classes: int,
    sentences_n: int,
    length: int,
    rng: SplitMix64,
    repeat_prob: float = CLASS_REPEAT_PROB,
) -> SyntheticTask:
    """Generate (corpus, labels) plus the vocabulary and class assignment.

    *vocab_size* counts content words (specials come on top).  Word r of
    class q has surface ``c{q}w{r}``; the label is 1 when any marker-class
    word appears.  Classes repeat the previous position with probability
    *repeat_prob*, which is what gives a next-token model contextual
    evidence about the local class.
    """
    if vocab_size < num_synonym_classes:
        raise ValueError("vocab_size must be >= num_synonym_classes")
    if num_synonym_classes < 1 or sentences_n < 1 or length < 1:
        raise ValueError("task dimensions must be >= 1")
    members: list[list[str]] = [[] for _ in range(num_synonym_classes)]
    for word in range(vocab_size):
        cls = word % num_synonym_classes
        members[cls].append(f"c{cls}w{word // num_synonym_classes}")
    n_markers = max(1, round(MARKER_FRACTION * num_synonym_classes))
    markers = frozenset(range(n_markers))

    lines = []
    labels = []
    for _ in range(sentences_n):
        classes = []
        for t in range(length):
            if t > 0 and rng.random() < repeat_prob:
                classes.append(classes[-1])
            else:
                classes.append(rng.randint(num_synonym_classes))
        words = [members[c][rng.randint(len(members[c]))] for c in classes]
        lines.append(" ".join(words))
        labels.append(int(any(c in markers for c in classes)))

    vocab = build_vocab(lines)
    sentences = [vocab.encode_tokens(line.split()) for line in lines]
    return SyntheticTask(sentences, labels, vocab, num_synonym_classes, markers)


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition plus the fixed training recipe for every cell."""

    strategies: tuple[str, ...]
    gammas: tuple[float, ...] = DEFAULT_GAMMAS
    reps: int = 5
    seed: int = 0
    dim: int = 32
    lr: float = 0.5
    steps: int = 12000
    topk: int = 32
    window: int = 3
    test_fraction: float = 0.5
    lm_order: int = 3
    lm_discount: float = 0.35
    lm_alpha: float = 0.1

    def validate(self) -> None:
        if not self.strategies:
            raise ValueError("empty strategy list")
        if any(not 0.0 <= g <= 1.0 for g in self.gammas):
            raise ValueError("gammas must lie in [0, 1]")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class CellResult:
    strategy: str
    gamma: float
    rep: int
    accuracy: float
    seconds: float


@dataclass
class SweepResult:
    rows: list[CellResult]

    def accuracies(self, strategy: str, gamma: float) -> list[float]:
        return [r.accuracy for r in self.rows if r.strategy == strategy and r.gamma == gamma]

    def mean_sd(self, strategy: str, gamma: float) -> tuple[float, float]:
        accs = self.accuracies(strategy, gamma)
        if not accs:
            raise KeyError(f"no cells for ({strategy}, {gamma})")
        mean = sum(accs) / len(accs)
        var = sum((a - mean) ** 2 for a in accs) / len(accs)
        return mean, var**0.5

    @property
    def strategies(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.rows:
            seen.setdefault(r.strategy, None)
        return list(seen)

    @property
    def gammas(self) -> list[float]:
        seen: dict[float, None] = {}
        for r in self.rows:
            seen.setdefault(r.gamma, None)
        return list(seen)


def split_task(task: SyntheticTask, test_fraction: float):
    """Deterministic train/test split: the last fraction is held out."""
    n_test = max(1, int(round(len(task.sentences) * test_fraction)))
    n_train = len(task.sentences) - n_test
    if n_train < 1:
        raise ValueError("task too small for the requested test fraction")
    return (
        task.sentences[:n_train],
        task.labels[:n_train],
        task.sentences[n_train:],
        task.labels[n_train:],
    )


def _cell_seed(base_seed: int, gamma: float, rep: int) -> int:
    # Keyed on the gamma value itself (not its grid index) so a cell can be
    # recomputed under any grid; strategy is deliberately excluded so all
    # strategies coincide exactly at gamma = 0.
    return derive(base_seed, round(gamma * 1_000_000), rep)


def run_cell(
    spec: SweepSpec,
    task: SyntheticTask,
    lm: NGramLM,
    strategy: str,
    gamma: float,
    rep: int,
) -> CellResult:
    """Augment, train and evaluate one grid cell."""
    start = time.perf_counter()
    train_x, train_y, test_x, test_y = split_task(task, spec.test_fraction)
    seed = _cell_seed(spec.seed, gamma, rep)
    config = AugmentConfig(
        strategy=strategy,
        gamma=gamma,
        window_k=spec.window,
        topk=spec.topk,
        seed=derive(seed, 1),
    )
    unigram = unigram_dist(train_x, len(task.vocab)) if strategy == "smooth" else None
    augmented = augment_corpus(train_x, config, lm=lm, unigram=unigram)
    model = init_model(len(task.vocab), spec.dim, 2, derive(seed, 2))
    train_toy(model, augmented, train_y, spec.lr, spec.steps, SplitMix64(derive(seed, 3)))
    accuracy = evaluate(model, test_x, test_y)
    return CellResult(strategy, gamma, rep, accuracy, round(time.perf_counter() - start, 3))


_SWEEP_STATE: tuple | None = None


def _init_sweep_worker(spec, task, lm):
    global _SWEEP_STATE
    _SWEEP_STATE = (spec, task, lm)


def _run_cell_job(args: tuple[str, float, int]) -> CellResult:
    spec, task, lm = _SWEEP_STATE
    return run_cell(spec, task, lm, *args)


def run_sweep(spec: SweepSpec, task: SyntheticTask, lm: NGramLM, threads: int = 1) -> SweepResult:
    """Train and evaluate every (strategy, gamma, repetition) cell."""
    spec.validate()
    jobs = [
        (strategy, gamma, rep)
        for strategy in spec.strategies
        for gamma in spec.gammas
        for rep in range(spec.reps)
    ]
    if threads <= 1:
        rows = [run_cell(spec, task, lm, *job) for job in jobs]
    else:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(threads, initializer=_init_sweep_worker, initargs=(spec, task, lm)) as pool:
            rows = pool.map(_run_cell_job, jobs)
    return SweepResult(rows)


# -- reports ----------------------------------------------------------------

SWEEP_HEADER = ("strategy", "gamma", "rep", "accuracy", "seconds")


def format_sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in result.rows:
        writer.writerow([r.strategy, f"{r.gamma:g}", r.rep, f"{r.accuracy:.6f}", f"{r.seconds:.3f}"])
    return buf.getvalue()


def parse_sweep_csv(text: str) -> SweepResult:
    rows = []
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != SWEEP_HEADER:
        raise ValueError(f"unexpected sweep csv header: {header}")
    for rec in reader:
        strategy, gamma, rep, accuracy, seconds = rec
        rows.append(CellResult(strategy, float(gamma), int(rep), float(accuracy), float(seconds)))
    return SweepResult(rows)


def format_pivot_csv(result: SweepResult) -> str:
    """Strategy-by-gamma table of mean accuracies over repetitions.

    Grid cells without results render empty, so filtered row sets still
    produce a valid table.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    gammas = result.gammas
    writer.writerow(["strategy"] + [f"{g:g}" for g in gammas])
    for strategy in result.strategies:
        cells = []
        for g in gammas:
            accs = result.accuracies(strategy, g)
            cells.append(f"{sum(accs) / len(accs):.6f}" if accs else "")
        writer.writerow([strategy] + cells)
    return buf.getvalue()


def emit_report(result: SweepResult, outdir: str) -> tuple[str, str]:
    """Write sweep.csv and pivot.csv under *outdir*; returns their paths."""
    sweep_path = os.path.join(outdir, "sweep.csv")
    pivot_path = os.path.join(outdir, "pivot.csv")
    with open(sweep_path, "w", encoding="utf-8") as fh:
        fh.write(format_sweep_csv(result))
    with open(pivot_path, "w", encoding="utf-8") as fh:
        fh.write(format_pivot_csv(result))
    return sweep_path, pivot_path


# -- sweep spec files --------------------------------------------------------

TASK_KEYS = ("vocab_size", "classes", "sentences", "length")


def parse_spec_file(text: str) -> dict:
    """Parse a key=value sweep spec; '#' starts a comment line."""
    known_int = {"reps", "seed", "dim", "steps", "topk", "window", "lm_order", *TASK_KEYS}
    known_float = {"lr", "test_fraction", "discount", "alpha"}
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ValueError(f"bad spec line {lineno}: {raw!r}")
        if key == "strategies":
            out[key] = tuple(s.strip() for s in value.split(",") if s.strip())
        elif key == "gammas":
            out[key] = tuple(float(g) for g in value.split(",") if g.strip())
        elif key in known_int:
            out[key] = int(value)
        elif key in known_float:
            out[key] = float(value)
        else:
            raise ValueError(f"unknown spec key on line {lineno}: {key!r}")
    return out


DEFAULT_TASK_PARAMS = {"vocab_size": 500, "classes": 50, "sentences": 2000, "length": 12}


def task_from_params(params: dict, seed: int) -> SyntheticTask:
    merged = dict(DEFAULT_TASK_PARAMS)
    merged.update({k: v for k, v in params.items() if k in TASK_KEYS})
    return make_synthetic_task(
        merged["vocab_size"],
        merged["classes"],
        merged["sentences"],
        merged["length"],
        SplitMix64(derive(seed, 0xDA7A)),
    )


def sweep_spec_from_params(params: dict) -> SweepSpec:
    renames = {"lm_order": "lm_order", "discount": "lm_discount", "alpha": "lm_alpha"}
    kwargs = {
        k: v
        for k, v in params.items()
        if k in ("strategies", "gammas", "reps", "seed", "dim", "lr", "steps", "topk", "window", "test_fraction")
    }
    for src, dst in renames.items():
        if src in params:
            kwargs[dst] = params[src]
    if "strategies" not in kwargs:
        raise ValueError("spec file must list strategies")
    return SweepSpec(**kwargs)


def train_task_lm(spec: SweepSpec, task: SyntheticTask) -> NGramLM:
    """The sweep's language model, trained on the training split only."""
    train_x, _, _, _ = split_task(task, spec.test_fraction)
    return train_lm(train_x, task.vocab, spec.lm_order, spec.lm_discount, spec.lm_alpha)
