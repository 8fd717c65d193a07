"""Hashed character n-gram features for tokens and sentences.

Stands in for a pretrained encoder: deterministic, dependency-free, and
fast enough to train linear heads on a laptop. Token vectors combine the
token's own character n-grams with whole-word context features from a
window of two tokens on each side; the sentence variant pools token
features over the whole sentence. All vectors are L2-normalized.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from math import sqrt

import numpy as np

DEFAULT_FEATURE_DIM = 2**18
DEFAULT_SALT = "xlproject-features-v1"


@dataclass
class FeatureVector:
    """Sparse vector: sorted unique indices with their values."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[self.indices] = self.values
        return dense


def _hash_feature(feature: str, salt: str, dim: int) -> int:
    digest = hashlib.blake2b(f"{salt}\x1f{feature}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


@dataclass(frozen=True)
class HashedNgramFeaturizer:
    dim: int = DEFAULT_FEATURE_DIM
    ngram_min: int = 3
    ngram_max: int = 5
    window: int = 2
    salt: str = DEFAULT_SALT

    def _token_raw_features(self, tokens: list[str], i: int) -> list[str]:
        feats = [f"w={tokens[i]}"]
        padded = f"^{tokens[i]}$"
        for n in range(self.ngram_min, self.ngram_max + 1):
            feats.extend(padded[j:j + n] for j in range(len(padded) - n + 1))
        for offset in range(-self.window, self.window + 1):
            if offset == 0:
                continue
            j = i + offset
            if 0 <= j < len(tokens):
                feats.append(f"ctx{offset:+d}={tokens[j]}")
        return feats

    def _vectorize(self, raw_features: list[str]) -> FeatureVector:
        accum: dict[int, float] = {}
        for feature in raw_features:
            index = _hash_feature(feature, self.salt, self.dim)
            accum[index] = accum.get(index, 0.0) + 1.0
        indices = np.array(sorted(accum), dtype=np.int64)
        values = np.array([accum[i] for i in indices], dtype=np.float64)
        norm = sqrt(float(values @ values))
        if norm > 0.0:
            values /= norm
        return FeatureVector(indices=indices, values=values, dim=self.dim)

    def token_features(self, tokens: list[str]) -> list[FeatureVector]:
        """One vector per token, in token order."""
        if not tokens:
            raise ValueError("tokens must be non-empty")
        return [self._vectorize(self._token_raw_features(tokens, i)) for i in range(len(tokens))]

    def sentence_features(self, tokens: list[str]) -> FeatureVector:
        """Single vector pooling every token's features."""
        if not tokens:
            raise ValueError("tokens must be non-empty")
        raw: list[str] = []
        for i in range(len(tokens)):
            raw.extend(self._token_raw_features(tokens, i))
        return self._vectorize(raw)
