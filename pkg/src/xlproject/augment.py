"""Trigger-word switching and training-set combination assembly."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

from .corpus import AnnotatedSentence, Corpus, DatasetTag
from .projection import Projected, TriggerSpan, spans_from_mask

TAG_ORDER = (DatasetTag.D_S, DatasetTag.D_T, DatasetTag.D_ST, DatasetTag.D_TS)


@dataclass
class AlignedPair:
    """A source sentence and its projection with spans matched by marker index."""

    source: AnnotatedSentence
    target: AnnotatedSentence
    source_spans: list[TriggerSpan]
    target_spans: list[TriggerSpan]

    def validate(self) -> None:
        if len(self.source_spans) != len(self.target_spans):
            raise ValueError(
                f"pair {self.source.id!r}: span count mismatch "
                f"({len(self.source_spans)} vs {len(self.target_spans)})"
            )
        src_keys = {s.marker_index for s in self.source_spans}
        tgt_keys = {s.marker_index for s in self.target_spans}
        if src_keys != tgt_keys:
            raise ValueError(f"pair {self.source.id!r}: marker indices differ")


def make_aligned_pair(source: AnnotatedSentence, projected: Projected) -> AlignedPair:
    pair = AlignedPair(
        source=source,
        target=projected.sentence,
        source_spans=spans_from_mask(source.trigger_mask or []),
        target_spans=list(projected.spans),
    )
    pair.validate()
    return pair


def _substitute(
    host: AnnotatedSentence,
    host_spans: list[TriggerSpan],
    donor: AnnotatedSentence,
    donor_spans: list[TriggerSpan],
    origin: DatasetTag,
) -> AnnotatedSentence:
    donor_by_index = {s.marker_index: s for s in donor_spans}
    tokens: list[str] = []
    mask: list[int] = []
    cursor = 0
    for span in sorted(host_spans, key=lambda s: s.start):
        tokens.extend(host.tokens[cursor:span.start])
        mask.extend([0] * (span.start - cursor))
        replacement = donor_by_index[span.marker_index]
        tokens.extend(donor.tokens[replacement.start:replacement.end])
        mask.extend([1] * (replacement.end - replacement.start))
        cursor = span.end
    tokens.extend(host.tokens[cursor:])
    mask.extend([0] * (len(host.tokens) - cursor))
    return AnnotatedSentence(
        id=host.id,
        tokens=tokens,
        language=host.language,
        origin=origin,
        emotion=host.emotion,
        trigger_mask=mask,
        bilingual=True,
    )


def switch_triggers(pair: AlignedPair) -> tuple[AnnotatedSentence, AnnotatedSentence]:
    """Swap trigger spans between a sentence and its translation.

    Returns the source-host sentence with target-language triggers and the
    target-host sentence with source-language triggers. Both keep the host
    language code and are flagged bilingual.
    """
    src_keys = {s.marker_index for s in pair.source_spans}
    tgt_keys = {s.marker_index for s in pair.target_spans}
    if src_keys != tgt_keys:
        raise ValueError(f"corrupt pair {pair.source.id!r}: marker indices differ")
    x_st = _substitute(pair.source, pair.source_spans, pair.target, pair.target_spans, DatasetTag.D_ST)
    x_ts = _substitute(pair.target, pair.target_spans, pair.source, pair.source_spans, DatasetTag.D_TS)
    return x_st, x_ts


def switch_corpus(pairs: list[AlignedPair]) -> tuple[Corpus, Corpus]:
    """Apply trigger switching to every pair, yielding the two switched corpora.

    Both switched sentences take the pair's target id (which carries the
    language suffix), so corpora switched against several target languages
    stay mergeable.
    """
    st_sentences = []
    ts_sentences = []
    for pair in pairs:
        x_st, x_ts = switch_triggers(pair)
        st_sentences.append(replace(x_st, id=pair.target.id))
        ts_sentences.append(x_ts)
    return (
        Corpus(sentences=st_sentences, provenance={"augmentation": "trigger_switch"}),
        Corpus(sentences=ts_sentences, provenance={"augmentation": "trigger_switch"}),
    )


@dataclass(frozen=True)
class CombinationSpec:
    """Which corpora to concatenate for training; the original English set is mandatory."""

    include: frozenset[DatasetTag]

    def __post_init__(self) -> None:
        if DatasetTag.D_S not in self.include:
            raise ValueError("every combination must include D_S")

    @classmethod
    def parse(cls, text: str) -> CombinationSpec:
        parts = [p.strip() for p in text.split("+") if p.strip()]
        if not parts:
            raise ValueError("empty combination string")
        return cls(include=frozenset(DatasetTag.from_string(p) for p in parts))

    def __str__(self) -> str:
        return "+".join(tag.value for tag in TAG_ORDER if tag in self.include)


def build_dataset(spec: CombinationSpec, corpora: Mapping[DatasetTag, Corpus]) -> Corpus:
    """Concatenate the requested corpora in tag order, suffixing ids by tag."""
    missing = [tag.value for tag in spec.include if tag not in corpora]
    if missing:
        raise ValueError(f"missing corpora for tags: {sorted(missing)}")
    sentences: list[AnnotatedSentence] = []
    for tag in TAG_ORDER:
        if tag not in spec.include:
            continue
        for sent in corpora[tag].sentences:
            sentences.append(replace(sent, id=f"{sent.id}#{tag.value}"))
    return Corpus(sentences=sentences, provenance={"combination": str(spec)})
