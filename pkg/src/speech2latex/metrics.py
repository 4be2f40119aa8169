"""Evaluation metrics for generated LaTeX.

The primary score is the normalized edit distance between canonicalized
strings (``el_distance``): both sides pass through the normalizer, the
character-level Levenshtein distance is computed, and the result is divided
by the longer normalized length so it always lands in [0, 1].  Scores bucket
into Match (1), Almost Match (0), and Not Match (-1) for comparison with
human annotations.

Corpus-level BLEU-4 (over LaTeX surface tokens) and chrF (character n-grams,
n = 1..6, beta = 2) are reported alongside, both on a 0-100 scale.
"""

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .normalizer import NormalizationConfig, default_config, normalize

BUCKET_MATCH = 1
BUCKET_ALMOST = 0
BUCKET_NOT = -1

_LABELS = (-1, 0, 1)


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class ElScore:
    value: float
    raw_edits: int
    hyp_norm_len: int
    ref_norm_len: int


@dataclass(frozen=True)
class HumanLabel:
    pair_id: str
    label: int

    def __post_init__(self):
        if self.label not in _LABELS:
            raise MetricError(f"label must be -1, 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class AgreementReport:
    agreement: float
    confusion: dict  # (human_label, predicted_label) -> count
    n_items: int


def _codes(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)


def levenshtein(a: str, b: str) -> int:
    """Minimum single-character edits (insert/delete/substitute) a -> b.

    Strings are compared as sequences of Unicode scalar values.
    """
    return _kernels.levenshtein_codes(_codes(a), _codes(b))


def el_distance(hyp: str, ref: str, config: NormalizationConfig = None) -> ElScore:
    """Normalized edit distance between canonicalized LaTeX strings."""
    config = config or default_config()
    hyp_norm = normalize(hyp, config)
    ref_norm = normalize(ref, config)
    edits = levenshtein(hyp_norm, ref_norm)
    longer = max(len(hyp_norm), len(ref_norm))
    value = edits / longer if longer else 0.0
    return ElScore(
        value=value,
        raw_edits=edits,
        hyp_norm_len=len(hyp_norm),
        ref_norm_len=len(ref_norm),
    )


def _ngrams(tokens: Sequence, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]]) -> float:
    """Corpus BLEU-4 over token lists, scaled to [0, 100].

    Geometric mean of modified n-gram precisions for n = 1..4, times the
    brevity penalty.  Zero correct counts at orders >= 2 take add-one
    smoothing (including the 0/0 case of hypotheses shorter than n), so an
    identical corpus scores exactly 100 regardless of sentence lengths.
    """
    if len(hypotheses) != len(references):
        raise MetricError("hypothesis and reference corpora differ in length")
    if not hypotheses:
        raise MetricError("empty corpus")
    precisions = []
    for n in range(1, 5):
        correct = 0
        total = 0
        for hyp, ref in zip(hypotheses, references):
            hyp_counts = _ngrams(hyp, n)
            if hyp_counts:
                ref_counts = _ngrams(ref, n)
                correct += sum(
                    min(c, ref_counts.get(g, 0)) for g, c in hyp_counts.items()
                )
                total += sum(hyp_counts.values())
        if n >= 2 and correct == 0:
            precisions.append((correct + 1) / (total + 1))
        elif total == 0:
            precisions.append(0.0)
        else:
            precisions.append(correct / total)
    if any(p == 0.0 for p in precisions):
        return 0.0
    hyp_len = sum(len(h) for h in hypotheses)
    ref_len = sum(len(r) for r in references)
    if hyp_len == 0:
        brevity = 0.0
    elif hyp_len < ref_len:
        brevity = math.exp(1 - ref_len / hyp_len)
    else:
        brevity = 1.0
    return 100.0 * brevity * math.exp(sum(math.log(p) for p in precisions) / 4)


def _char_ngrams(s: str, n: int) -> Counter:
    return Counter(s[i : i + n] for i in range(len(s) - n + 1))


def chrf(
    hypotheses: Sequence[str],
    references: Sequence[str],
    order: int = 6,
    beta: float = 2.0,
) -> float:
    """Character n-gram F-beta score, scaled to [0, 100].

    Whitespace is removed first.  For each pair, precision and recall are
    macro-averaged over the orders 1..``order`` where both sides contribute
    at least one n-gram; the F-beta of those averages is the pair score
    (recall weighted by beta = 2), and pair scores are averaged over the
    corpus.  A pair with no usable order scores 1 when both strings are
    empty and 0 otherwise.
    """
    if len(hypotheses) != len(references):
        raise MetricError("hypothesis and reference corpora differ in length")
    if not hypotheses:
        raise MetricError("empty corpus")
    total = 0.0
    for hyp, ref in zip(hypotheses, references):
        hyp = "".join(hyp.split())
        ref = "".join(ref.split())
        p_sum = r_sum = 0.0
        used = 0
        for n in range(1, order + 1):
            hyp_grams = _char_ngrams(hyp, n)
            ref_grams = _char_ngrams(ref, n)
            hyp_total = sum(hyp_grams.values())
            ref_total = sum(ref_grams.values())
            if hyp_total == 0 or ref_total == 0:
                continue
            overlap = sum((hyp_grams & ref_grams).values())
            p_sum += overlap / hyp_total
            r_sum += overlap / ref_total
            used += 1
        if used == 0:
            total += 1.0 if hyp == ref else 0.0
            continue
        p = p_sum / used
        r = r_sum / used
        if p + r > 0:
            total += (1 + beta * beta) * p * r / (beta * beta * p + r)
    return 100.0 * total / len(hypotheses)


def _score_value(score) -> float:
    return score.value if isinstance(score, ElScore) else float(score)


def threshold_rates(scores: Sequence, low: float = 0.1, high: float = 0.4) -> tuple:
    """Percentages of scores strictly below ``low`` and strictly above ``high``."""
    if not scores:
        raise MetricError("empty score list")
    values = [_score_value(s) for s in scores]
    below = sum(1 for v in values if v < low)
    above = sum(1 for v in values if v > high)
    return 100.0 * below / len(values), 100.0 * above / len(values)


def el_bucket(score, low: float = 0.1, high: float = 0.4) -> int:
    """Match (1) below ``low``, Not Match (-1) above ``high``, Almost (0) between."""
    value = _score_value(score)
    if value < low:
        return BUCKET_MATCH
    if value > high:
        return BUCKET_NOT
    return BUCKET_ALMOST


def annotation_agreement(
    predicted: Sequence[tuple], human: Sequence[HumanLabel]
) -> AgreementReport:
    """Exact agreement and 3x3 confusion between machine buckets and labels.

    ``predicted`` holds (pair_id, bucket) tuples and must cover every id
    referenced by ``human``.
    """
    by_id = {}
    for pair_id, bucket in predicted:
        by_id[pair_id] = bucket
    confusion = {(h, p): 0 for h in _LABELS for p in _LABELS}
    matches = 0
    for label in human:
        if label.pair_id not in by_id:
            raise MetricError(f"annotation references unknown pair_id {label.pair_id!r}")
        bucket = by_id[label.pair_id]
        confusion[(label.label, bucket)] += 1
        if bucket == label.label:
            matches += 1
    n = len(human)
    return AgreementReport(
        agreement=matches / n if n else 0.0,
        confusion=confusion,
        n_items=n,
    )
