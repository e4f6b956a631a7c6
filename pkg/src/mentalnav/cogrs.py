"""Cognition-guided rejection sampling (CogRS).

A training trajectory is scored by the perplexity of its decision-critical
tokens, the ones that pick a landmark or state a spatial relation. Samples
inside a moderate band are kept: lower perplexity means the model already
handles the sample, higher usually means label noise.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_keys, check_list, check_number, check_str
from .errors import ConfigError, EmptySpans, SchemaError

CHAIN_KEYS = ("lm", "sem", "dir", "dist", "h")


@dataclass(frozen=True)
class Token:
    text: str
    logprob: float


@dataclass(frozen=True)
class TokenLogProbRecord:
    sample_id: str
    tokens: tuple[Token, ...]
    critical_spans: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prev_end = 0
        for i, (s, e) in enumerate(self.critical_spans):
            if not 0 <= s <= e <= len(self.tokens):
                raise SchemaError(f"span [{s}, {e}) outside 0..{len(self.tokens)}", f"critical_spans[{i}]")
            if s < prev_end:
                raise SchemaError("spans must be sorted and non-overlapping", f"critical_spans[{i}]")
            prev_end = e
        for i, t in enumerate(self.tokens):
            if not math.isfinite(t.logprob) or t.logprob > 0:
                raise SchemaError(f"logprob must be finite and <= 0, got {t.logprob}", f"tokens[{i}].logprob")

    def critical_logprobs(self) -> list[float]:
        return [self.tokens[i].logprob for s, e in self.critical_spans for i in range(s, e)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "sample_id": self.sample_id,
            "tokens": [{"text": t.text, "logprob": t.logprob} for t in self.tokens],
            "critical_spans": [list(s) for s in self.critical_spans],
        }


def record_from_dict(doc: Any) -> TokenLogProbRecord:
    check_keys(doc, "", ("sample_id", "tokens", "critical_spans"))
    sid = check_str(doc["sample_id"], "sample_id")
    tokens = []
    for i, t in enumerate(check_list(doc["tokens"], "tokens")):
        check_keys(t, f"tokens[{i}]", ("text", "logprob"))
        tokens.append(Token(check_str(t["text"], f"tokens[{i}].text"), check_number(t["logprob"], f"tokens[{i}].logprob")))
    spans = []
    for i, sp in enumerate(check_list(doc["critical_spans"], "critical_spans")):
        check_list(sp, f"critical_spans[{i}]", length=2)
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in sp):
            raise SchemaError("span bounds must be integers", f"critical_spans[{i}]")
        spans.append((sp[0], sp[1]))
    return TokenLogProbRecord(sid, tuple(tokens), tuple(spans))


def read_records(lines: Iterable[str]) -> tuple[list[TokenLogProbRecord], list[str]]:
    """Parse JSON lines; malformed lines become issue strings, not errors."""
    records, issues = [], []
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            records.append(record_from_dict(json.loads(line)))
        except json.JSONDecodeError as exc:
            issues.append(f"line {n}: invalid JSON ({exc.msg})")
        except SchemaError as exc:
            issues.append(f"line {n}: {exc.path or '<root>'}: {exc.message}")
    return records, issues


def _mean(xs: Sequence[float]) -> float:
    # fsum mean plus one residual pass, so n copies of x average to exactly x
    n = len(xs)
    m = math.fsum(xs) / n
    return m + math.fsum(x - m for x in xs) / n


def span_perplexity(record: TokenLogProbRecord) -> float:
    """``exp(-mean logprob)`` over the tokens of all critical spans.

    Raises:
        EmptySpans: the spans cover no token.
    """
    lp = record.critical_logprobs()
    if not lp:
        raise EmptySpans(f"sample {record.sample_id!r} has no critical tokens", "critical_spans")
    return math.exp(-_mean(lp))


@dataclass(frozen=True)
class PerplexityBand:
    tau_min: float
    tau_max: float

    def __post_init__(self):
        if not (self.tau_min > 0 and self.tau_max > 0):
            raise ConfigError("band limits must be positive", "band")
        if not self.tau_min < self.tau_max:
            raise ConfigError(f"need tau_min < tau_max, got [{self.tau_min}, {self.tau_max}]", "band")

    def __contains__(self, ppl: float) -> bool:
        return self.tau_min <= ppl <= self.tau_max


@dataclass
class BandResult:
    band: PerplexityBand
    kept: list[str]
    perplexities: dict[str, float]
    below: int = 0
    above: int = 0
    skipped: list[str] = field(default_factory=list)

    def summary(self) -> dict[str, Any]:
        return {
            "band": [self.band.tau_min, self.band.tau_max],
            "below": self.below,
            "kept": len(self.kept),
            "above": self.above,
            "skipped": len(self.skipped),
        }


def filter_band(records: Iterable[TokenLogProbRecord], band: PerplexityBand) -> BandResult:
    """Keep records with ``tau_min <= ppl <= tau_max``; ids come out sorted.

    Records without critical tokens are listed under ``skipped``.
    """
    ppl: dict[str, float] = {}
    skipped = []
    for r in records:
        try:
            ppl[r.sample_id] = span_perplexity(r)
        except EmptySpans:
            skipped.append(r.sample_id)
    kept = sorted(sid for sid, v in ppl.items() if v in band)
    below = sum(1 for v in ppl.values() if v < band.tau_min)
    above = sum(1 for v in ppl.values() if v > band.tau_max)
    return BandResult(band, kept, dict(sorted(ppl.items())), below, above, sorted(skipped))


def percentile_band(perplexities: Sequence[float], lower: float = 40.0, upper: float = 90.0) -> PerplexityBand:
    """Band between two percentiles (linear interpolation) of the corpus."""
    if len(perplexities) == 0:
        raise ConfigError("cannot derive a band from an empty corpus", "band")
    lo, hi = np.percentile(np.asarray(perplexities, dtype=float), [lower, upper])
    return PerplexityBand(float(lo), float(hi))


class CogRSFilter(BaseEstimator):
    """Perplexity-band filter over token log-probability records.

    Parameters
    ----------
    band : tuple of (tau_min, tau_max) or None
        Fixed band; ``None`` derives it from the fitted corpus.
    lower_percentile, upper_percentile : float
        Percentiles used for the derived band.

    Attributes
    ----------
    band_ : PerplexityBand
    perplexities_ : dict of sample id to perplexity
    """

    def __init__(self, band=None, lower_percentile=40.0, upper_percentile=90.0):
        self.band = band
        self.lower_percentile = lower_percentile
        self.upper_percentile = upper_percentile

    def fit(self, records, y=None):
        records = list(records)
        self.perplexities_ = {}
        for r in records:
            try:
                self.perplexities_[r.sample_id] = span_perplexity(r)
            except EmptySpans:
                pass
        if self.band is not None:
            self.band_ = PerplexityBand(*self.band)
        else:
            if not 0 <= self.lower_percentile < self.upper_percentile <= 100:
                raise ConfigError("need 0 <= lower_percentile < upper_percentile <= 100", "band")
            self.band_ = percentile_band(list(self.perplexities_.values()), self.lower_percentile, self.upper_percentile)
        return self

    def transform(self, records) -> BandResult:
        check_is_fitted(self, "band_")
        return filter_band(records, self.band_)

    def fit_transform(self, records, y=None) -> BandResult:
        records = list(records)
        return self.fit(records).transform(records)


_KEY_VALUE = re.compile(r'"(%s)"\s*:\s*("(?:[^"\\]|\\.)*"|[-+0-9.eE]+)' % "|".join(CHAIN_KEYS))


def mark_critical_spans(tokens: Sequence[str], keys: Sequence[str] = CHAIN_KEYS) -> list[tuple[int, int]]:
    """Best-effort spans over tokens that carry chain-step values.

    The detokenized text is scanned for ``"key": value`` pairs; every token
    overlapping a value is critical. Adjacent hits merge into one span.
    """
    text = "".join(tokens)
    starts = np.cumsum([0] + [len(t) for t in tokens])
    hit = [False] * len(tokens)
    for m in _KEY_VALUE.finditer(text):
        if m.group(1) not in keys:
            continue
        a, b = m.span(2)
        lo = int(np.searchsorted(starts, a, side="right")) - 1
        for i in range(max(lo, 0), len(tokens)):
            if starts[i] >= b:
                break
            if starts[i + 1] > a:
                hit[i] = True
    spans: list[tuple[int, int]] = []
    for i, h in enumerate(hit):
        if not h:
            continue
        if spans and spans[-1][1] == i:
            spans[-1] = (spans[-1][0], i + 1)
        else:
            spans.append((i, i + 1))
    return spans
