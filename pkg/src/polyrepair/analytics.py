"""Quantitative outputs: Pass@k, iteration-ranking metrics, statistical tests,
translation transition matrices, and back-translation accounting.

All functions are pure computations over immutable inputs.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from polyrepair.core import OUTCOME_ORDER, CampaignState, LanguageSet, Outcome
from polyrepair.ledger import IterationRecord, TranslationEvent


# ---------------------------------------------------------------------------
# Pass@k


def pass_at_k(n: int, c: int, k: int) -> float:
    """Probability that at least one of k samples drawn from n is correct,
    given c of the n are correct: 1 - C(n-c, k)/C(n, k).

    Evaluated via the complement product prod(1 - k/i) for i in
    (n-c, n], which never forms large intermediate binomials.
    """
    if not 0 <= c <= n:
        raise ValueError(f"need 0 <= c <= n, got n={n}, c={c}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if n - c < k:
        return 1.0
    miss = 1.0
    for i in range(n - c + 1, n + 1):
        miss *= 1.0 - k / i
    return 1.0 - miss


# ---------------------------------------------------------------------------
# Ranking metrics over valid-iteration lists
#
# A rel list holds one binary flag per translation iteration: 1 at position
# j-1 iff iteration j fixed at least one previously-unfixed bug of the query
# language.


def _check_rel(rel: list[int], k: int) -> None:
    if not 1 <= k <= len(rel):
        raise ValueError(f"need 1 <= k <= {len(rel)}, got k={k}")
    if any(r not in (0, 1) for r in rel):
        raise ValueError(f"relevance flags must be binary, got {rel}")


def precision_at_k(rel: list[int], k: int) -> float:
    """Fraction of the first k iterations that were valid."""
    _check_rel(rel, k)
    return sum(rel[:k]) / k


def recall_at_k(rel: list[int], k: int) -> float | None:
    """Fraction of all valid iterations found in the first k.

    None when the list has no valid iterations (denominator undefined).
    """
    _check_rel(rel, k)
    total = sum(rel)
    if total == 0:
        return None
    return sum(rel[:k]) / total


def f1_at_k(rel: list[int], k: int) -> float:
    """Harmonic mean of precision and recall; 0 when both vanish."""
    p = precision_at_k(rel, k)
    r = recall_at_k(rel, k)
    if r is None or p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def ndcg_at_k(rel: list[int], k: int) -> float:
    """Discounted cumulative gain at k over the ideal ordering; 0 when the
    ideal gain is 0 (no valid iterations)."""
    _check_rel(rel, k)
    dcg = sum(r / math.log2(j + 2) for j, r in enumerate(rel[:k]))
    ideal = sorted(rel, reverse=True)
    idcg = sum(r / math.log2(j + 2) for j, r in enumerate(ideal[:k]))
    if idcg == 0:
        return 0.0
    return dcg / idcg


def average_precision_at_k(rel: list[int], k: int) -> float | None:
    """Inner per-query term of MAP@k: mean precision over valid positions in
    the top k, normalized by min(#valid, k). None when no position is valid."""
    _check_rel(rel, k)
    total = sum(rel)
    if total == 0:
        return None
    score = sum(precision_at_k(rel, j + 1) for j in range(k) if rel[j])
    return score / min(total, k)


def map_at_k(
    lists: dict[str, list[int]], k: int, empty_as_zero: bool = False
) -> float | None:
    """Mean average precision over per-language rel lists.

    Languages with no valid iterations are excluded from the mean by default
    (their normalizer is undefined); empty_as_zero=True counts them as 0
    instead. None when every list is excluded.
    """
    terms: list[float] = []
    for rel in lists.values():
        ap = average_precision_at_k(rel, k)
        if ap is None:
            if empty_as_zero:
                terms.append(0.0)
        else:
            terms.append(ap)
    if not terms:
        return None
    return sum(terms) / len(terms)


def validity_lists(
    state: CampaignState, languages: LanguageSet, num_translation_iterations: int
) -> dict[str, list[int]]:
    """Per-source-language binary rel lists over translation iterations 1..J.

    Position j-1 is 1 iff some bug of that language was first fixed at
    iteration j. Languages without bugs do not appear.
    """
    if num_translation_iterations < 1:
        raise ValueError("need at least one translation iteration position")
    lists: dict[str, list[int]] = {}
    for bug_id in state.bug_ids():
        camp = state.campaign(bug_id)
        rel = lists.setdefault(camp.source_language, [0] * num_translation_iterations)
        j = camp.fixed_iteration
        if camp.fixed and j is not None and 1 <= j <= num_translation_iterations:
            rel[j - 1] = 1
    return {q: lists[q] for q in languages.sorted(lists)}


# ---------------------------------------------------------------------------
# Statistical tests


def _average_ranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2 + 1  # 1-based average rank of the tied block
        for t in range(i, j + 1):
            ranks[order[t]] = shared
        i = j + 1
    return ranks


def mww_test(x: list[float], y: list[float]) -> tuple[float, float]:
    """Two-sided Mann-Whitney rank test with normal approximation.

    Returns (U of the first sample, p). Ties shrink the variance via the
    t^3 - t correction; a 0.5 continuity correction is applied.
    """
    if not x or not y:
        raise ValueError("both samples must be non-empty")
    m, n = len(x), len(y)
    combined = list(x) + list(y)
    ranks = _average_ranks(combined)
    u1 = sum(ranks[:m]) - m * (m + 1) / 2
    u2 = m * n - u1
    total = m + n
    tie_term = sum(t**3 - t for t in Counter(combined).values())
    variance = m * n / 12 * ((total + 1) - tie_term / (total * (total - 1)))
    numerator = max(u1, u2) - m * n / 2 - 0.5
    if variance <= 0:
        return u1, 1.0
    z = numerator / math.sqrt(variance)
    p = 2 * 0.5 * math.erfc(z / math.sqrt(2))
    return u1, min(max(p, 0.0), 1.0)


def cliffs_delta(x: list[float], y: list[float]) -> float:
    """Probability-of-superiority difference: (#{x>y} - #{x<y}) / (m*n)."""
    if not x or not y:
        raise ValueError("both samples must be non-empty")
    greater = sum(1 for a in x for b in y if a > b)
    less = sum(1 for a in x for b in y if a < b)
    return (greater - less) / (len(x) * len(y))


# ---------------------------------------------------------------------------
# Transition consistency

_TRACKED = (Outcome.PASSED, Outcome.WRONG_ANSWER)


@dataclass(frozen=True)
class TransitionMatrix:
    """6x6 count of buggy-code outcome changes under translation.

    Axis order follows the outcome declaration order. Cells where both
    outcomes are PASSED or WRONG_ANSWER additionally carry per-test
    unchanged/changed tallies from aligned test pairs.
    """

    counts: tuple[tuple[int, ...], ...]
    test_unchanged: dict[tuple[Outcome, Outcome], int] = field(default_factory=dict)
    test_changed: dict[tuple[Outcome, Outcome], int] = field(default_factory=dict)

    def cell(self, pre: Outcome, post: Outcome) -> int:
        return self.counts[OUTCOME_ORDER.index(pre)][OUTCOME_ORDER.index(post)]

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


def transition_matrix(events: list[TranslationEvent]) -> TransitionMatrix:
    """Tally pre/post outcome transitions of translated buggy code."""
    index = {o: i for i, o in enumerate(OUTCOME_ORDER)}
    counts = [[0] * len(OUTCOME_ORDER) for _ in OUTCOME_ORDER]
    unchanged: dict[tuple[Outcome, Outcome], int] = {}
    changed: dict[tuple[Outcome, Outcome], int] = {}
    for event in events:
        counts[index[event.pre_outcome]][index[event.post_outcome]] += 1
        if event.pre_outcome in _TRACKED and event.post_outcome in _TRACKED:
            cell = (event.pre_outcome, event.post_outcome)
            same = sum(1 for a, b in event.per_test if a == b)
            unchanged[cell] = unchanged.get(cell, 0) + same
            changed[cell] = changed.get(cell, 0) + len(event.per_test) - same
    return TransitionMatrix(
        counts=tuple(tuple(row) for row in counts),
        test_unchanged=unchanged,
        test_changed=changed,
    )


# ---------------------------------------------------------------------------
# Back-translation accounting


@dataclass(frozen=True)
class BackTranslationAccount:
    """Per-language survival of repairs crossing back to the source language."""

    bugs_preserved: int
    bugs_lost: int
    samples_before: int
    samples_after: int


def back_translation_account(
    records: list[IterationRecord],
) -> dict[str, BackTranslationAccount]:
    """Tally repair survival through back-translation, keyed by the bug's
    source language (the language translated back into).

    A (bug, iteration) round with at least one target-correct sample counts
    as preserved if any back-translation passes in the source language, lost
    otherwise. Sample counts compare target-correct totals against
    source-correct totals.
    """
    tallies: dict[str, list[int]] = {}
    for record in records:
        trans = record.translation
        if trans is None or record.back_translation_outcomes is None:
            continue
        before = sum(1 for o in record.sample_outcomes if o is Outcome.PASSED)
        if before == 0:
            continue
        after = sum(1 for o in record.back_translation_outcomes if o is Outcome.PASSED)
        t = tallies.setdefault(trans.source_language, [0, 0, 0, 0])
        if after > 0:
            t[0] += 1
        else:
            t[1] += 1
        t[2] += before
        t[3] += after
    return {
        lang: BackTranslationAccount(*vals) for lang, vals in sorted(tallies.items())
    }


# ---------------------------------------------------------------------------
# Pass@k tables


@dataclass(frozen=True)
class PassRow:
    language: str
    iteration: int
    value: float
    bugs: int
    fixed: int


def pass_at_k_table(
    state: CampaignState,
    languages: LanguageSet,
    k: int,
    num_iterations: int,
) -> list[PassRow]:
    """Mean Pass@k per (source language, iteration), cumulative-best: a bug
    fixed at iteration i contributes its fixing tally from i onward."""
    by_language: dict[str, list[str]] = {}
    for bug_id in state.bug_ids():
        by_language.setdefault(state.campaign(bug_id).source_language, []).append(bug_id)
    rows: list[PassRow] = []
    for language in languages.sorted(by_language):
        bug_ids = by_language[language]
        for iteration in range(num_iterations):
            values = []
            fixed = 0
            for bug_id in bug_ids:
                camp = state.campaign(bug_id)
                j = camp.fixed_iteration
                if camp.fixed and j is not None and j <= iteration:
                    n, c = camp.tallies[j]
                    fixed += 1
                elif iteration in camp.tallies:
                    n, c = camp.tallies[iteration]
                else:
                    # exhausted or terminated before this iteration: still broken
                    n, c = 0, 0
                if c == 0 or n == 0:
                    values.append(0.0)
                else:
                    values.append(pass_at_k(n, c, min(k, n)))
            rows.append(
                PassRow(
                    language=language,
                    iteration=iteration,
                    value=sum(values) / len(values),
                    bugs=len(bug_ids),
                    fixed=fixed,
                )
            )
    return rows
