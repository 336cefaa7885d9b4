"""Paired comparison of seeding strategies: Wilcoxon signed-rank and Hodges-Lehmann."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import norm, rankdata

log = logging.getLogger(__name__)

EXACT_MAX_N = 25
# above this, Walsh averages are not materialized (n(n+1)/2 floats)
WALSH_ENUMERATION_MAX_N = 2000


@dataclass(frozen=True)
class TestReport:
    delta: float
    p_value: float
    n: int
    n_nonzero: int
    statistic: float = 0.0
    method: str = "exact"
    label: str = ""
    value: str = ""

    # keep pytest from collecting this as a test class
    __test__ = False


def _as_array(diffs) -> np.ndarray:
    d = np.asarray(list(diffs) if not isinstance(diffs, np.ndarray) else diffs, dtype=float).ravel()
    if d.size == 0:
        raise ValueError("need at least one difference")
    if not np.all(np.isfinite(d)):
        raise ValueError("differences must be finite")
    return d


def _kth_pair_sum(x: np.ndarray, k: int) -> float:
    """k-th smallest (1-based) of ``x[i] + x[j]`` over ``i <= j``; ``x`` sorted.

    Bisection on the value with an O(n log n) pair count, finishing on an
    attained sum so the result is exact.
    """
    n = len(x)
    idx = np.arange(n)

    def boundary(t: float) -> np.ndarray:
        # per i, first j with x[i] + x[j] > t, judged on the rounded sums
        j = np.searchsorted(x, t - x, side="right")
        while True:
            up = (j < n) & (x + x[np.minimum(j, n - 1)] <= t)
            down = (j > 0) & (x + x[np.maximum(j - 1, 0)] > t)
            if not (up.any() or down.any()):
                return j
            j = j + up - down

    def count_le(t: float) -> int:
        return int(np.maximum(boundary(t) - idx, 0).sum())

    def next_sum_above(t: float) -> float:
        j = np.maximum(boundary(t), idx)
        ok = j < n
        return float(np.min(x[ok] + x[j[ok]]))

    lo, hi = 2 * x[0], 2 * x[-1]
    if count_le(lo) >= k:
        return float(lo)
    # invariant: count_le(lo) < k <= count_le(hi)
    while True:
        cand = next_sum_above(lo)
        if count_le(cand) >= k:
            return cand
        lo = cand
        mid = lo + (hi - lo) / 2
        if lo < mid < hi:
            if count_le(mid) >= k:
                hi = mid
            else:
                lo = mid


def hodges_lehmann(diffs: Iterable[float], method: str = "auto") -> float:
    """Median of the Walsh averages ``(d_i + d_j) / 2`` for ``i <= j``.

    ``method`` is ``"enumerate"``, ``"select"`` or ``"auto"`` (enumerate up to
    ``WALSH_ENUMERATION_MAX_N`` values, select above).
    """
    d = np.sort(_as_array(diffs))
    n = len(d)
    if method == "auto":
        method = "enumerate" if n <= WALSH_ENUMERATION_MAX_N else "select"
    if method == "enumerate":
        i, j = np.triu_indices(n)
        return float(np.median((d[i] + d[j]) / 2))
    if method != "select":
        raise ValueError(f"unknown method {method!r}")
    total = n * (n + 1) // 2
    if total % 2:
        return _kth_pair_sum(d, total // 2 + 1) / 2
    return (_kth_pair_sum(d, total // 2) + _kth_pair_sum(d, total // 2 + 1)) / 4


def _exact_upper_tail(ranks2: np.ndarray, w2: int) -> float:
    """P(sum of a random signed subset of doubled ranks >= w2) by dynamic programming."""
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in ranks2.tolist():
        shifted = counts.copy()
        shifted[r:] += counts[:-r]
        counts = shifted
    return float(counts[w2:].sum() / 2.0 ** len(ranks2))


def wilcoxon_signed_rank(
    diffs: Iterable[float],
    alternative: str = "greater",
    method: str = "auto",
) -> TestReport:
    """Signed-rank test for location of paired differences.

    Zeros are dropped, tied magnitudes share average ranks.  The exact null
    distribution (conditional on the tie pattern) is used for at most
    ``EXACT_MAX_N`` nonzero differences, the normal approximation with tie
    and continuity correction above.  ``alternative`` is ``greater`` (location
    above zero), ``less`` or ``two-sided``.
    """
    d = _as_array(diffs)
    if alternative not in ("greater", "less", "two-sided"):
        raise ValueError(f"unknown alternative {alternative!r}")
    delta = hodges_lehmann(d)
    nz = d[d != 0]
    n_nz = len(nz)
    if n_nz == 0:
        return TestReport(delta, 1.0, len(d), 0, 0.0, "none")
    ranks = rankdata(np.abs(nz))
    w_plus = float(ranks[nz > 0].sum())
    if method == "auto":
        method = "exact" if n_nz <= EXACT_MAX_N else "normal"

    if method == "exact":
        ranks2 = np.rint(2 * ranks).astype(np.int64)
        total2 = int(ranks2.sum())
        w2 = int(round(2 * w_plus))
        p_greater = _exact_upper_tail(ranks2, w2)
        # lower tail P(W+ <= w) equals upper tail of W- = total - W+
        p_less = _exact_upper_tail(ranks2, total2 - w2)
    elif method == "normal":
        mean = n_nz * (n_nz + 1) / 4
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = n_nz * (n_nz + 1) * (2 * n_nz + 1) / 24 - np.sum(tie_counts**3 - tie_counts) / 48
        sd = math.sqrt(var)
        p_greater = float(norm.sf((w_plus - mean - 0.5) / sd))
        p_less = float(norm.cdf((w_plus - mean + 0.5) / sd))
    else:
        raise ValueError(f"unknown method {method!r}")

    if alternative == "greater":
        p = p_greater
    elif alternative == "less":
        p = p_less
    else:
        p = min(1.0, 2 * min(p_greater, p_less))
    return TestReport(delta, min(1.0, max(0.0, p)), len(d), n_nz, w_plus, method)


def paired_differences(records, baseline: str = "SS", treatment: str = "SQ") -> dict[tuple, float]:
    """Per-case ``coverage_pct(treatment) - coverage_pct(baseline)`` keyed by case."""
    base, treat = {}, {}
    for r in records:
        if r.error:
            continue
        key = r.pair_key
        if r.activation == baseline:
            base[key] = r.coverage_pct
        elif r.activation == treatment:
            treat[key] = r.coverage_pct
    return {k: treat[k] - base[k] for k in sorted(base.keys() & treat.keys())}


_AXIS_FIELD = {"pp": "pp", "sc": "sc", "selection": "selection", "network": "network"}


def grouped_reports(
    records: Sequence,
    axis: str,
    baseline: str = "SS",
    treatment: str = "SQ",
    alternative: str = "greater",
) -> list[TestReport]:
    """One Wilcoxon/Hodges-Lehmann report per value of ``axis`` (or one for ``all``)."""
    diffs = paired_differences(records, baseline, treatment)
    if axis == "all":
        if not diffs:
            log.warning("no paired cases; nothing to report")
            return []
        rep = wilcoxon_signed_rank(list(diffs.values()), alternative)
        return [_labelled(rep, "all", "all")]
    if axis not in _AXIS_FIELD:
        raise ValueError(f"unknown axis {axis!r}")
    pos = PAIR_KEY_FIELDS.index(_AXIS_FIELD[axis])
    groups: dict = {}
    for key, value in diffs.items():
        groups.setdefault(key[pos], []).append(value)
    values = _group_values(records, axis)
    reports = []
    for v in values:
        if v not in groups:
            log.warning("no paired cases for %s=%s; skipped", axis, v)
            continue
        reports.append(_labelled(wilcoxon_signed_rank(groups[v], alternative), axis, _fmt(v)))
    return reports


def _labelled(rep: TestReport, label: str, value: str) -> TestReport:
    return TestReport(rep.delta, rep.p_value, rep.n, rep.n_nonzero, rep.statistic, rep.method, label, value)


def _fmt(v) -> str:
    return f"{v:g}" if isinstance(v, float) else str(v)


def _group_values(records, axis: str) -> list:
    """Group values in first-seen order (network, selection) or ascending (pp, sc)."""
    seen = list(dict.fromkeys(getattr(r, _AXIS_FIELD[axis]) for r in records))
    return sorted(seen) if axis in ("pp", "sc") else seen


# case key shared by the SS/SQ/SQr rows of one paired comparison
PAIR_KEY_FIELDS = ("network", "pp", "instance", "sc", "selection")
