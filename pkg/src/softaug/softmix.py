"""Embedding mixtures and a hand-differentiated downstream consumer.

The core operation realizes the expected embedding of a soft position:
a hard id j contributes row E_j, a soft position contributes
sum_j p_j * E_j over its distribution's support.  A minimal mean-pool
linear classifier (softmax cross-entropy) sits on top so that gradient
flow through the mixture into multiple embedding rows can be verified
against central finite differences.

All arithmetic is float64; a hard token and a point-mass soft word take
numerically identical paths, so their forward values and gradients agree
bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .augment import SoftSentence, SoftWord
from .rng import SplitMix64

GRAD_TOLERANCE = 1e-4
GRAD_STEP = 1e-5


@dataclass
class ToyModel:
    """Embedding matrix plus a linear classifier over mean-pooled inputs."""

    emb: np.ndarray  # |V| x d
    w: np.ndarray    # c x d
    b: np.ndarray    # c

    def copy(self) -> "ToyModel":
        return ToyModel(self.emb.copy(), self.w.copy(), self.b.copy())

    @property
    def num_classes(self) -> int:
        return len(self.b)


def init_model(vocab_size: int, dim: int, classes: int, seed: int) -> ToyModel:
    """Embedding uniform in [-0.1, 0.1); classifier zero-initialized."""
    rng = SplitMix64(seed)
    emb = np.empty((vocab_size, dim), dtype=np.float64)
    for i in range(vocab_size):
        for j in range(dim):
            emb[i, j] = rng.random() * 0.2 - 0.1
    return ToyModel(emb, np.zeros((classes, dim)), np.zeros(classes))


def mix_embedding(word: int | SoftWord, emb: np.ndarray) -> np.ndarray:
    """Embedding of a hard or soft position.

    Hard ids return the embedding row itself; soft words return the
    probability-weighted sum of rows over the distribution's support.
    """
    if isinstance(word, SoftWord):
        dist = word.dist
        if dist.ids is None:
            if len(dist.probs) != len(emb):
                raise ValueError("dense distribution length does not match embedding rows")
            return dist.probs @ emb
        if np.any(dist.ids < 0) or np.any(dist.ids >= len(emb)):
            raise ValueError("id out of range in soft word")
        return dist.probs @ emb[dist.ids]
    if not 0 <= word < len(emb):
        raise ValueError(f"id out of range: {word}")
    return emb[word]


def _pooled(model: ToyModel, sentence: SoftSentence) -> np.ndarray:
    if not sentence:
        raise ValueError("empty sentence")
    acc = np.zeros(model.emb.shape[1], dtype=np.float64)
    for item in sentence:
        acc = acc + mix_embedding(item, model.emb)
    return acc / len(sentence)


def forward(model: ToyModel, sentence: SoftSentence) -> np.ndarray:
    """Class probabilities softmax(W @ meanpool(mixed) + b)."""
    logits = model.w @ _pooled(model, sentence) + model.b
    z = np.exp(logits - logits.max())
    return z / z.sum()


def loss(model: ToyModel, sentence: SoftSentence, label: int) -> float:
    if not 0 <= label < model.num_classes:
        raise ValueError(f"label out of range: {label}")
    return -float(np.log(forward(model, sentence)[label]))


def _loss_grads(
    model: ToyModel, sentence: SoftSentence, label: int
) -> tuple[float, dict[int, np.ndarray], np.ndarray, np.ndarray]:
    if not 0 <= label < model.num_classes:
        raise ValueError(f"label out of range: {label}")
    pooled = _pooled(model, sentence)
    logits = model.w @ pooled + model.b
    z = np.exp(logits - logits.max())
    probs = z / z.sum()

    dlogits = probs.copy()
    dlogits[label] -= 1.0
    dw = np.outer(dlogits, pooled)
    db = dlogits
    dpos = (model.w.T @ dlogits) / len(sentence)

    demb: dict[int, np.ndarray] = {}
    for item in sentence:
        if isinstance(item, SoftWord):
            entries = (
                enumerate(item.dist.probs)
                if item.dist.ids is None
                else zip(item.dist.ids, item.dist.probs)
            )
            for i, p in entries:
                i = int(i)
                g = p * dpos
                demb[i] = demb[i] + g if i in demb else g
        else:
            demb[item] = demb[item] + dpos if item in demb else dpos.copy()
    return -float(np.log(probs[label])), demb, dw, db


def backward(
    model: ToyModel, sentence: SoftSentence, label: int
) -> tuple[dict[int, np.ndarray], np.ndarray, np.ndarray]:
    """Analytic gradients of the cross-entropy loss.

    Returns (embedding-row gradients keyed by id, dW, db).  A soft
    position spreads its pooled gradient over every row in its support,
    scaled by that row's probability.
    """
    _, demb, dw, db = _loss_grads(model, sentence, label)
    return demb, dw, db


@dataclass
class GradCheckReport:
    """Worst relative error per parameter block, analytic vs numeric."""

    errors: dict[str, float]
    step: float
    tolerance: float

    @property
    def max_error(self) -> float:
        return max(self.errors.values())

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance


def _batch_loss(model: ToyModel, batch: list[tuple[SoftSentence, int]]) -> float:
    return sum(loss(model, s, y) for s, y in batch) / len(batch)


def grad_check(
    model: ToyModel,
    batch: list[tuple[SoftSentence, int]],
    step: float = GRAD_STEP,
    tolerance: float = GRAD_TOLERANCE,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences."""
    if not batch:
        raise ValueError("empty batch")
    demb = np.zeros_like(model.emb)
    dw = np.zeros_like(model.w)
    db = np.zeros_like(model.b)
    for sentence, label in batch:
        rows, gw, gb = backward(model, sentence, label)
        for i, g in rows.items():
            demb[i] += g
        dw += gw
        db += gb
    demb /= len(batch)
    dw /= len(batch)
    db /= len(batch)

    def numeric(param: np.ndarray) -> np.ndarray:
        out = np.zeros_like(param)
        flat = param.ravel()
        for idx in range(flat.size):
            keep = flat[idx]
            flat[idx] = keep + step
            up = _batch_loss(model, batch)
            flat[idx] = keep - step
            down = _batch_loss(model, batch)
            flat[idx] = keep
            out.ravel()[idx] = (up - down) / (2.0 * step)
        return out

    errors = {}
    for name, analytic, param in (
        ("embedding", demb, model.emb),
        ("classifier_w", dw, model.w),
        ("classifier_b", db, model.b),
    ):
        num = numeric(param)
        denom = np.maximum(np.abs(analytic) + np.abs(num), 1e-6)
        errors[name] = float(np.max(np.abs(analytic - num) / denom)) if param.size else 0.0
    return GradCheckReport(errors, step, tolerance)


def train_toy(
    model: ToyModel,
    corpus: list[SoftSentence],
    labels: list[int],
    lr: float,
    steps: int,
    rng: SplitMix64,
) -> tuple[ToyModel, list[float]]:
    """Plain SGD, one uniformly drawn sample per step.

    Updates the model in place and records the pre-update loss of each
    visited sample.
    """
    if len(corpus) != len(labels):
        raise ValueError("corpus and labels length mismatch")
    trace = []
    for _ in range(steps):
        i = rng.randint(len(corpus))
        step_loss, rows, dw, db = _loss_grads(model, corpus[i], labels[i])
        trace.append(step_loss)
        for j, g in rows.items():
            model.emb[j] -= lr * g
        model.w -= lr * dw
        model.b -= lr * db
    return model, trace


def evaluate(model: ToyModel, corpus: list[SoftSentence], labels: list[int]) -> float:
    """Fraction of sentences whose argmax class matches the label."""
    if len(corpus) != len(labels):
        raise ValueError("corpus and labels length mismatch")
    if not corpus:
        raise ValueError("empty corpus")
    hits = 0
    for sentence, label in zip(corpus, labels):
        if not 0 <= label < model.num_classes:
            raise ValueError(f"label out of range: {label}")
        if int(np.argmax(forward(model, sentence))) == label:
            hits += 1
    return hits / len(corpus)


def save_loss_trace(path: str, trace: list[float]) -> None:
    """CSV of the per-step training loss: "step,loss"."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("step,loss\n")
        for step, value in enumerate(trace):
            fh.write(f"{step},{value:.12g}\n")


def save_accuracy_csv(path: str, rows: list[tuple[float, str, float]]) -> None:
    """CSV of evaluation results: "gamma,strategy,accuracy"."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("gamma,strategy,accuracy\n")
        for gamma, strategy, accuracy in rows:
            fh.write(f"{gamma:g},{strategy},{accuracy:.6f}\n")


def save_embedding(path: str, emb: np.ndarray) -> None:
    """Text format: "|V| d" header, one row per line, 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{emb.shape[0]} {emb.shape[1]}\n")
        for row in emb:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def load_embedding(path: str) -> np.ndarray:
    from .corpus import read_text

    lines = read_text(path).splitlines()
    if not lines:
        raise ValueError(f"empty embedding file: {path}")
    rows, dim = (int(x) for x in lines[0].split())
    emb = np.empty((rows, dim), dtype=np.float64)
    for i in range(rows):
        values = lines[1 + i].split()
        if len(values) != dim:
            raise ValueError(f"bad embedding row {i} in {path}")
        emb[i] = [float(v) for v in values]
    return emb
