"""Linear classification heads with optional low-rank adapters.

The trainable core: a linear layer with softmax over classes, a low-rank
adapter (frozen base weights, trainable factors A and B scaled by alpha/r),
cross-entropy gradients, first-subtoken aggregation for word-level
predictions, and the softmax-over-words numeric trigger head.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import FeatureVector
from .metrics import Attributions


@dataclass
class LinearModel:
    W0: np.ndarray  # (C, F)
    b: np.ndarray  # (C,)

    @property
    def num_classes(self) -> int:
        return self.W0.shape[0]

    @property
    def num_features(self) -> int:
        return self.W0.shape[1]

    @classmethod
    def zeros(cls, num_classes: int, num_features: int) -> LinearModel:
        return cls(W0=np.zeros((num_classes, num_features)), b=np.zeros(num_classes))


@dataclass
class LoraAdapter:
    """Low-rank update W0 + (alpha/rank) * B @ A with B zero-initialized."""

    A: np.ndarray  # (rank, F)
    B: np.ndarray  # (C, rank)
    rank: int
    alpha: float

    @property
    def scaling(self) -> float:
        return self.alpha / self.rank

    @classmethod
    def init(
        cls,
        num_classes: int,
        num_features: int,
        rank: int = 64,
        alpha: float = 16.0,
        rng: np.random.Generator | None = None,
    ) -> LoraAdapter:
        if rank < 1:
            raise ValueError(f"rank must be >= 1, got {rank}")
        rng = rng if rng is not None else np.random.default_rng(0)
        return cls(
            A=rng.normal(0.0, 0.02, size=(rank, num_features)),
            B=np.zeros((num_classes, rank)),
            rank=rank,
            alpha=alpha,
        )

    def delta(self) -> np.ndarray:
        """Dense effective weight update, for merging and for test oracles."""
        return self.scaling * (self.B @ self.A)


def forward(model: LinearModel, adapter: LoraAdapter | None, x: FeatureVector) -> np.ndarray:
    """Logits for one sparse input: W0 x + b, plus the adapter path if present."""
    if x.dim != model.num_features:
        raise ValueError(f"feature dim mismatch: {x.dim} vs {model.num_features}")
    logits = model.W0[:, x.indices] @ x.values + model.b
    if adapter is not None:
        u = adapter.A[:, x.indices] @ x.values
        logits = logits + adapter.scaling * (adapter.B @ u)
    return logits


def softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def loss_and_grads(
    model: LinearModel,
    adapter: LoraAdapter | None,
    batch: list[tuple[FeatureVector, int]],
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy and gradients for the trainable parameters.

    With an adapter the base weights are frozen: gradients cover only A, B,
    and the bias. Without one they cover W0 and the bias.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    n = len(batch)
    grads: dict[str, np.ndarray] = {"b": np.zeros_like(model.b)}
    if adapter is not None:
        grads["A"] = np.zeros_like(adapter.A)
        grads["B"] = np.zeros_like(adapter.B)
    else:
        grads["W0"] = np.zeros_like(model.W0)
    total = 0.0
    for x, label in batch:
        probs = softmax(forward(model, adapter, x))
        total -= float(np.log(probs[label]))
        dlogits = probs.copy()
        dlogits[label] -= 1.0
        grads["b"] += dlogits
        if adapter is not None:
            u = adapter.A[:, x.indices] @ x.values
            grads["B"] += adapter.scaling * np.outer(dlogits, u)
            grads["A"][:, x.indices] += adapter.scaling * np.outer(
                adapter.B.T @ dlogits, x.values
            )
        else:
            grads["W0"][:, x.indices] += np.outer(dlogits, x.values)
    for key in grads:
        grads[key] /= n
    return total / n, grads


@dataclass
class SubwordAlignment:
    """Maps each word to a contiguous half-open range of subtoken indices."""

    word_to_subtokens: list[tuple[int, int]]

    def validate(self, num_subtokens: int) -> None:
        cursor = 0
        for start, end in self.word_to_subtokens:
            if start != cursor or end <= start:
                raise ValueError(
                    f"alignment ranges must be non-empty, contiguous and ordered; "
                    f"got ({start}, {end}) at cursor {cursor}"
                )
            cursor = end
        if cursor != num_subtokens:
            raise ValueError(
                f"alignment covers {cursor} subtokens but sequence has {num_subtokens}"
            )


def chunk_alignment(words: list[str], max_chunk: int = 3) -> tuple[list[str], SubwordAlignment]:
    """Synthetic subword split: each word becomes character chunks of <= max_chunk."""
    subtokens: list[str] = []
    ranges: list[tuple[int, int]] = []
    for word in words:
        start = len(subtokens)
        for i in range(0, len(word), max_chunk):
            subtokens.append(word[i:i + max_chunk])
        ranges.append((start, len(subtokens)))
    return subtokens, SubwordAlignment(ranges)


def first_subtoken_aggregate(
    subtoken_logits: list[np.ndarray] | np.ndarray, align: SubwordAlignment
) -> list[np.ndarray]:
    """Per-word logits: each word is represented by its first subtoken only."""
    align.validate(len(subtoken_logits))
    return [np.asarray(subtoken_logits[start]) for start, _ in align.word_to_subtokens]


def predict_binary(word_logits: list[np.ndarray] | np.ndarray) -> list[int]:
    """Argmax per word; ties resolve to class 0 (not a trigger)."""
    return [int(np.argmax(np.asarray(logits))) for logits in word_logits]


def numeric_from_logits(word_logits: list[np.ndarray] | np.ndarray) -> Attributions:
    """Softmax across words of the trigger-class logits; sums to one per sentence."""
    arr = np.asarray(word_logits, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] != 2:
        raise ValueError(f"expected shape (L, 2) logits, got {arr.shape}")
    return Attributions(values=softmax(arr[:, 1]).tolist())
