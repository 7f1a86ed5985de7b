"""Nonparametric statistics for within-subject condition comparisons.

Implements the analysis pipeline used on experiment datasets: Friedman
test (tie-corrected chi-square approximation, optional permutation
p-value) with Kendall's W effect size, Wilcoxon signed-rank (exact
enumeration up to 25 pairs, normal approximation with tie correction and
continuity correction beyond), Bonferroni-corrected pairwise posthoc,
and Pearson correlation with qualitative strength bands.

Input matrices are subjects x conditions; every test here is paired /
within-subject. Tail probabilities are two-sided unless stated.

References
----------
Conover, Practical Nonparametric Statistics, 3rd ed., ch. 5 (Friedman
with ties); Siegel & Castellan, Nonparametric Statistics, ch. 4
(signed-rank, normal approximation with tie correction).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .records import Dataset, TrialRecord
from .seeds import stream_seed
from .widget import Condition

ALL_METRICS = ("PM", "PX", "PY", "PZ", "RM", "RX", "RZ", "TT")

TLX_SCALES = ("mental", "physical", "temporal", "performance", "effort", "frustration")


class DegenerateDataError(ValueError):
    """All-zero differences or otherwise information-free input."""


class UndefinedCorrelationError(ValueError):
    """Correlation undefined because an input is constant."""


# ---------------------------------------------------------------------------
# tail probabilities (no external stats dependency; deterministic)
# ---------------------------------------------------------------------------

_IGAM_EPS = 1e-15
_IGAM_FPMIN = 1e-300


def _lower_gamma_series(a: float, x: float) -> float:
    # regularized P(a, x) by power series, for x < a + 1
    ap = a
    total = 1.0 / a
    term = total
    for _ in range(500):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _IGAM_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_gamma_cf(a: float, x: float) -> float:
    # regularized Q(a, x) by continued fraction (modified Lentz), x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _IGAM_FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _IGAM_FPMIN:
            d = _IGAM_FPMIN
        c = b + an / c
        if abs(c) < _IGAM_FPMIN:
            c = _IGAM_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _IGAM_EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def chi2_sf(x: float, df: int) -> float:
    """Survival function of the chi-square distribution."""
    if df < 1:
        raise ValueError("df must be >= 1")
    if x <= 0.0:
        return 1.0
    a, half = 0.5 * df, 0.5 * x
    if half < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_gamma_series(a, half)))
    return min(1.0, max(0.0, _upper_gamma_cf(a, half)))


def normal_sf(z: float) -> float:
    """Survival function of the standard normal distribution."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float | None
    effect_size: float | None
    method: str
    n: int
    detail: dict = field(default_factory=dict)

    def to_obj(self) -> dict:
        return {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "effect_size": self.effect_size,
            "method": self.method,
            "n": self.n,
            "detail": dict(self.detail),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "TestResult":
        return cls(obj["statistic"], obj["p_value"], obj["effect_size"],
                   obj["method"], obj["n"], dict(obj.get("detail", {})))


# ---------------------------------------------------------------------------
# ranking helpers
# ---------------------------------------------------------------------------


def _average_ranks(values: Sequence[float]) -> list[float]:
    """Ascending average ranks, ties share the mean rank (1-based)."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        for idx in order[i:j + 1]:
            ranks[idx] = avg
        i = j + 1
    return ranks


def _validate_matrix(matrix: Sequence[Sequence[float]]) -> tuple[int, int]:
    n = len(matrix)
    if n < 2:
        raise ValueError("need at least 2 subjects (rows)")
    k = len(matrix[0])
    for row in matrix:
        if len(row) != k:
            raise ValueError("all rows must have the same number of conditions")
        for v in row:
            if v is None or not math.isfinite(v):
                raise ValueError("matrix cells must be finite (no missing values)")
    return n, k


# ---------------------------------------------------------------------------
# Friedman
# ---------------------------------------------------------------------------


def _friedman_chi2(matrix: Sequence[Sequence[float]]) -> tuple[float, float, int, int]:
    """Tie-corrected Friedman statistic plus Kendall's W."""
    n, k = _validate_matrix(matrix)
    if k < 3:
        raise ValueError("Friedman needs >= 3 conditions; use the Wilcoxon "
                         "signed-rank test for 2")
    col_sums = [0.0] * k
    sq_sum = 0.0
    for row in matrix:
        ranks = _average_ranks(row)
        for j, r in enumerate(ranks):
            col_sums[j] += r
            sq_sum += r * r
    c = n * k * (k + 1.0) ** 2 / 4.0
    denom = sq_sum - c
    if denom <= 1e-12:
        return 0.0, 0.0, n, k  # every row fully tied
    mean_sum = n * (k + 1.0) / 2.0
    chi2 = (k - 1.0) * math.fsum((s - mean_sum) ** 2 for s in col_sums) / denom
    w = chi2 / (n * (k - 1.0))
    return chi2, w, n, k


def friedman(matrix: Sequence[Sequence[float]], *, p_method: str = "chi2",
             n_permutations: int = 100_000, seed: int = 0) -> TestResult:
    """Friedman test over a subjects x conditions matrix.

    p_method "chi2" uses the tie-corrected chi-square approximation with
    k-1 degrees of freedom; "permutation" estimates the p-value by
    permuting values within each subject row (add-one Monte Carlo
    estimator, seeded and reproducible). A matrix with every row fully
    tied carries no information: statistic 0, W 0, p 1.
    """
    if p_method not in ("chi2", "permutation"):
        raise ValueError(f"unknown p_method {p_method!r}")
    chi2, w, n, k = _friedman_chi2(matrix)
    detail: dict = {"k": k}
    if chi2 == 0.0 and w == 0.0:
        # degenerate all-tied input short-circuits either method
        return TestResult(0.0, 1.0, 0.0, f"friedman-{p_method}", n, detail)
    if p_method == "chi2":
        return TestResult(chi2, chi2_sf(chi2, k - 1), w, "friedman-chi2", n, detail)

    ranks = np.array([_average_ranks(row) for row in matrix], dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    mean_sum = n * (k + 1.0) / 2.0
    denom = float((ranks ** 2).sum()) - n * k * (k + 1.0) ** 2 / 4.0
    obs = chi2
    hits = 0
    block = 20_000  # bound memory: block x n x k doubles
    done = 0
    while done < n_permutations:
        b = min(block, n_permutations - done)
        perm = np.broadcast_to(ranks, (b, n, k)).copy()
        rng.permuted(perm, axis=2, out=perm)
        col = perm.sum(axis=1)
        stats = (k - 1.0) * ((col - mean_sum) ** 2).sum(axis=1) / denom
        hits += int((stats >= obs - 1e-9).sum())
        done += b
    p = (hits + 1.0) / (n_permutations + 1.0)
    detail["n_permutations"] = n_permutations
    return TestResult(chi2, p, w, "friedman-permutation", n, detail)


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank
# ---------------------------------------------------------------------------

EXACT_LIMIT = 25  # exact enumeration up to this many nonzero differences


def _signed_rank_parts(a: Sequence[float], b: Sequence[float]) -> tuple[list[float], list[float]]:
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    diffs = [x - y for x, y in zip(a, b)]
    for d in diffs:
        if not math.isfinite(d):
            raise ValueError("differences must be finite")
    nonzero = [d for d in diffs if d != 0.0]
    if not nonzero:
        raise DegenerateDataError("all paired differences are zero")
    if len(nonzero) < 5:
        raise ValueError(f"need >= 5 nonzero differences, got {len(nonzero)}")
    ranks = _average_ranks([abs(d) for d in nonzero])
    return nonzero, ranks


def _exact_signed_rank_cdf(doubled_ranks: list[int]) -> np.ndarray:
    """Counts of sign assignments per doubled rank-sum value."""
    total = sum(doubled_ranks)
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for dr in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[dr:] = counts[:-dr] if dr > 0 else counts
        counts += shifted
    return counts


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float], *,
                         alternative: str = "two-sided") -> TestResult:
    """Paired Wilcoxon signed-rank test.

    Zero differences are dropped; |differences| are ranked with average
    ranks for ties. The statistic is W+, the rank sum of positive
    differences. Up to 25 nonzero pairs the null distribution is
    enumerated exactly (ties included); beyond that a normal
    approximation with tie-corrected variance and continuity correction
    is used. The method tag records which path ran. Effect size is the
    rank-biserial correlation (W+ - W-) / (W+ + W-).

    alternative: "two-sided" (default), "less" (a below b), "greater".
    """
    if alternative not in ("two-sided", "less", "greater"):
        raise ValueError(f"unknown alternative {alternative!r}")
    diffs, ranks = _signed_rank_parts(a, b)
    n = len(diffs)
    w_plus = math.fsum(r for d, r in zip(diffs, ranks) if d > 0.0)
    total = n * (n + 1) / 2.0
    w_minus = total - w_plus
    effect = (w_plus - w_minus) / total
    detail = {"w_plus": w_plus, "w_minus": w_minus}

    if n <= EXACT_LIMIT:
        doubled = [round(2.0 * r) for r in ranks]
        counts = _exact_signed_rank_cdf(doubled)
        denom = 2.0 ** n
        target = round(2.0 * w_plus)
        p_le = float(counts[: target + 1].sum()) / denom
        p_ge = float(counts[target:].sum()) / denom
        if alternative == "less":
            p = p_le
        elif alternative == "greater":
            p = p_ge
        else:
            p = min(1.0, 2.0 * min(p_le, p_ge))
        return TestResult(w_plus, p, effect, "wilcoxon-exact", n, detail)

    mean = n * (n + 1) / 4.0
    tie_term = 0.0
    seen: dict[float, int] = {}
    for d in diffs:
        seen[abs(d)] = seen.get(abs(d), 0) + 1
    for t in seen.values():
        tie_term += t ** 3 - t
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    sd = math.sqrt(var)
    if alternative == "less":
        z = (w_plus - mean + 0.5) / sd
        p = min(1.0, max(0.0, 1.0 - normal_sf(z)))
    elif alternative == "greater":
        z = (w_plus - mean - 0.5) / sd
        p = normal_sf(z)
    else:
        z = (abs(w_plus - mean) - 0.5) / sd
        p = min(1.0, 2.0 * normal_sf(max(z, 0.0)))
    detail["z"] = z
    return TestResult(w_plus, p, effect, "wilcoxon-normal", n, detail)


# ---------------------------------------------------------------------------
# Pearson correlation
# ---------------------------------------------------------------------------


def correlation_strength(r: float) -> str:
    """Qualitative band for |r|: >= 0.6 strong, >= 0.4 moderate,
    >= 0.2 weak, below very weak."""
    a = abs(r)
    if a >= 0.6:
        return "strong"
    if a >= 0.4:
        return "moderate"
    if a >= 0.2:
        return "weak"
    return "very weak"


def pearson(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Pearson product-moment correlation.

    Requires length >= 3 and non-constant inputs. The p-value (two-sided)
    comes from the Fisher z transform, available for n >= 4; |r| is
    clipped into [-1, 1]. detail carries the strength band.
    """
    if len(x) != len(y):
        raise ValueError("inputs must have equal length")
    n = len(x)
    if n < 3:
        raise ValueError("need at least 3 points")
    for v in (*x, *y):
        if not math.isfinite(v):
            raise ValueError("inputs must be finite")
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    sxx = math.fsum((v - mx) ** 2 for v in x)
    syy = math.fsum((v - my) ** 2 for v in y)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for constant input")
    sxy = math.fsum((u - mx) * (v - my) for u, v in zip(x, y))
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    if n >= 4:
        if abs(r) >= 1.0:
            p: float | None = 0.0
        else:
            z = math.atanh(r) * math.sqrt(n - 3.0)
            p = min(1.0, 2.0 * normal_sf(abs(z)))
    else:
        p = None
    return TestResult(r, p, r, "pearson-fisher-z", n, {"strength": correlation_strength(r)})


# ---------------------------------------------------------------------------
# subject means and posthoc
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubjectMeans:
    """Per-subject mean of one metric under each condition."""

    metric: str
    conditions: tuple[str, ...]
    subjects: tuple[int, ...]
    matrix: tuple[tuple[float, ...], ...]  # len(subjects) x len(conditions)

    def column(self, condition: str) -> list[float]:
        j = self.conditions.index(condition)
        return [row[j] for row in self.matrix]

    def condition_mean(self, condition: str) -> float:
        col = self.column(condition)
        return math.fsum(col) / len(col)


def metric_value(record: TrialRecord, metric: str) -> float:
    e = record.error
    if metric == "PM":
        return e.pm
    if metric == "PX":
        return abs(e.pe_vec.x)
    if metric == "PY":
        return abs(e.pe_vec.y)
    if metric == "PZ":
        return abs(e.pe_vec.z)
    if metric == "RM":
        return e.rm
    if metric == "RX":
        return abs(e.re_x)
    if metric == "RZ":
        return abs(e.re_z)
    if metric == "TT":
        return record.task_time
    raise ValueError(f"unknown metric {metric!r}")


def subject_means(dataset: Dataset, metric: str) -> SubjectMeans:
    conditions = [c.value for c in dataset.conditions()]
    subjects = dataset.subject_ids()
    sums: dict[tuple[int, str], list[float]] = {}
    for r in dataset.records:
        sums.setdefault((r.subject_id, r.condition.value), []).append(metric_value(r, metric))
    rows = []
    for s in subjects:
        row = []
        for c in conditions:
            vals = sums.get((s, c))
            if not vals:
                raise ValueError(f"subject {s} has no trials under condition {c}")
            row.append(math.fsum(vals) / len(vals))
        rows.append(tuple(row))
    return SubjectMeans(metric, tuple(conditions), tuple(subjects), tuple(rows))


@dataclass(frozen=True)
class PairwiseResult:
    condition_a: str
    condition_b: str
    mean_a: float
    mean_b: float
    test: TestResult
    p_bonferroni: float

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_bonferroni <= alpha

    def to_obj(self) -> dict:
        return {
            "condition_a": self.condition_a,
            "condition_b": self.condition_b,
            "mean_a": self.mean_a,
            "mean_b": self.mean_b,
            "test": self.test.to_obj(),
            "p_bonferroni": self.p_bonferroni,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "PairwiseResult":
        return cls(obj["condition_a"], obj["condition_b"], obj["mean_a"],
                   obj["mean_b"], TestResult.from_obj(obj["test"]), obj["p_bonferroni"])


def bonferroni_posthoc(means: SubjectMeans) -> list[PairwiseResult]:
    """All pairwise Wilcoxon signed-rank tests, Bonferroni corrected by
    the number of pairs k(k-1)/2."""
    k = len(means.conditions)
    n_pairs = k * (k - 1) // 2
    out: list[PairwiseResult] = []
    for i in range(k):
        for j in range(i + 1, k):
            ca, cb = means.conditions[i], means.conditions[j]
            a, b = means.column(ca), means.column(cb)
            try:
                t = wilcoxon_signed_rank(a, b)
                p_b = min(1.0, t.p_value * n_pairs)
            except DegenerateDataError:
                t = TestResult(0.0, 1.0, 0.0, "wilcoxon-degenerate", len(a), {})
                p_b = 1.0
            except ValueError:
                # too few nonzero differences to test this pair
                t = TestResult(0.0, 1.0, 0.0, "wilcoxon-unavailable", len(a), {})
                p_b = 1.0
            out.append(PairwiseResult(
                ca, cb,
                math.fsum(a) / len(a), math.fsum(b) / len(b),
                t, p_b,
            ))
    return out


# ---------------------------------------------------------------------------
# full analysis
# ---------------------------------------------------------------------------

CORRELATION_PAIRS = (("RM", "TT"), ("PM", "TT"), ("RM", "PM"))


@dataclass
class MetricAnalysis:
    metric: str
    condition_means: dict[str, float]
    condition_sds: dict[str, float]
    friedman: TestResult
    posthoc: list[PairwiseResult]

    def to_obj(self) -> dict:
        return {
            "metric": self.metric,
            "condition_means": dict(self.condition_means),
            "condition_sds": dict(self.condition_sds),
            "friedman": self.friedman.to_obj(),
            "posthoc": [p.to_obj() for p in self.posthoc],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "MetricAnalysis":
        return cls(obj["metric"], dict(obj["condition_means"]), dict(obj["condition_sds"]),
                   TestResult.from_obj(obj["friedman"]),
                   [PairwiseResult.from_obj(p) for p in obj["posthoc"]])


@dataclass
class StatsReport:
    conditions: list[str]
    n_subjects: int
    alpha: float
    metrics: dict[str, MetricAnalysis]
    correlations: dict[str, dict[str, TestResult]]  # condition -> "RM~TT" -> result
    radar: dict[str, dict[str, int]]  # condition -> axis -> points
    demographics: dict[str, dict[str, TestResult]] | None = None
    tlx: dict[str, MetricAnalysis] | None = None

    def to_obj(self) -> dict:
        return {
            "conditions": list(self.conditions),
            "n_subjects": self.n_subjects,
            "alpha": self.alpha,
            "metrics": {m: a.to_obj() for m, a in self.metrics.items()},
            "correlations": {c: {p: t.to_obj() for p, t in pairs.items()}
                             for c, pairs in self.correlations.items()},
            "radar": {c: dict(axes) for c, axes in self.radar.items()},
            "demographics": (None if self.demographics is None else
                             {c: {p: t.to_obj() for p, t in pairs.items()}
                              for c, pairs in self.demographics.items()}),
            "tlx": None if self.tlx is None else {s: a.to_obj() for s, a in self.tlx.items()},
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "StatsReport":
        return cls(
            conditions=list(obj["conditions"]),
            n_subjects=obj["n_subjects"],
            alpha=obj["alpha"],
            metrics={m: MetricAnalysis.from_obj(a) for m, a in obj["metrics"].items()},
            correlations={c: {p: TestResult.from_obj(t) for p, t in pairs.items()}
                          for c, pairs in obj["correlations"].items()},
            radar={c: {a: int(v) for a, v in axes.items()} for c, axes in obj["radar"].items()},
            demographics=(None if obj.get("demographics") is None else
                          {c: {p: TestResult.from_obj(t) for p, t in pairs.items()}
                           for c, pairs in obj["demographics"].items()}),
            tlx=(None if obj.get("tlx") is None else
                 {s: MetricAnalysis.from_obj(a) for s, a in obj["tlx"].items()}),
        )


def _sd(values: Sequence[float]) -> float:
    n = len(values)
    if n < 2:
        return 0.0
    m = math.fsum(values) / n
    return math.sqrt(math.fsum((v - m) ** 2 for v in values) / (n - 1))


def _analyze_matrix(metric: str, means: SubjectMeans, *, p_method: str = "chi2",
                    n_permutations: int = 100_000, perm_seed: int = 0) -> MetricAnalysis:
    matrix = [list(row) for row in means.matrix]
    if len(means.conditions) >= 3:
        fr = friedman(matrix, p_method=p_method, n_permutations=n_permutations,
                      seed=stream_seed(perm_seed, f"friedman|{metric}"))
    else:
        # two conditions degenerate to a single signed-rank comparison
        try:
            fr = wilcoxon_signed_rank(means.column(means.conditions[0]),
                                      means.column(means.conditions[1]))
        except (DegenerateDataError, ValueError):
            fr = TestResult(0.0, 1.0, 0.0, "wilcoxon-degenerate", len(matrix), {})
    posthoc = bonferroni_posthoc(means) if len(means.conditions) >= 2 else []
    return MetricAnalysis(
        metric,
        {c: means.condition_mean(c) for c in means.conditions},
        {c: _sd(means.column(c)) for c in means.conditions},
        fr,
        posthoc,
    )


def _radar_scores(analyses: dict[str, MetricAnalysis], conditions: Sequence[str],
                  alpha: float) -> dict[str, dict[str, int]]:
    # +1 point on an axis for every rival the condition significantly
    # outperforms there (lower is better on every axis scored here)
    scores = {c: {m: 0 for m in analyses} for c in conditions}
    for m, analysis in analyses.items():
        for pair in analysis.posthoc:
            if not pair.significant(alpha):
                continue
            if pair.mean_a < pair.mean_b:
                scores[pair.condition_a][m] += 1
            elif pair.mean_b < pair.mean_a:
                scores[pair.condition_b][m] += 1
    return scores


def analyze(dataset: Dataset, *, tlx_rows: Sequence[dict] | None = None,
            demographics_rows: Sequence[dict] | None = None,
            alpha: float = 0.05, p_method: str = "chi2",
            n_permutations: int = 100_000, perm_seed: int = 0) -> StatsReport:
    """Run the full nonparametric pipeline over a dataset.

    Per metric: per-subject condition means, Friedman omnibus (chi-square
    p by default, seeded Monte Carlo with p_method="permutation"),
    Bonferroni-corrected pairwise Wilcoxon posthoc. Per condition:
    Pearson correlations between (RM, TT), (PM, TT), (RM, PM) on
    per-subject means. Optional NASA-TLX rows (per subject x condition
    scale scores) get the same Friedman treatment per scale; optional
    demographics rows (subject, age, gaming) are correlated against PM
    and RM per condition. Radar scores award +1 per significant
    pairwise win on each axis.
    """
    if not dataset.records:
        raise ValueError("dataset has no records")
    conditions = [c.value for c in dataset.conditions()]
    metrics: dict[str, MetricAnalysis] = {}
    means_by_metric: dict[str, SubjectMeans] = {}
    for m in ALL_METRICS:
        sm = subject_means(dataset, m)
        means_by_metric[m] = sm
        metrics[m] = _analyze_matrix(m, sm, p_method=p_method,
                                     n_permutations=n_permutations, perm_seed=perm_seed)

    correlations: dict[str, dict[str, TestResult]] = {}
    for c in conditions:
        pairs: dict[str, TestResult] = {}
        for ma, mb in CORRELATION_PAIRS:
            xa = means_by_metric[ma].column(c)
            xb = means_by_metric[mb].column(c)
            try:
                pairs[f"{ma}~{mb}"] = pearson(xa, xb)
            except (UndefinedCorrelationError, ValueError):
                continue
        correlations[c] = pairs

    demo = None
    if demographics_rows:
        demo = _analyze_demographics(demographics_rows, means_by_metric, conditions)

    tlx = None
    if tlx_rows:
        tlx = _analyze_tlx(tlx_rows, conditions)

    axes = dict(metrics)
    if tlx:
        axes.update({f"TLX_{s}": a for s, a in tlx.items()})
    radar = _radar_scores(axes, conditions, alpha)

    return StatsReport(
        conditions=conditions,
        n_subjects=len(dataset.subject_ids()),
        alpha=alpha,
        metrics=metrics,
        correlations=correlations,
        radar=radar,
        demographics=demo,
        tlx=tlx,
    )


def _analyze_demographics(rows: Sequence[dict], means_by_metric: dict[str, SubjectMeans],
                          conditions: Sequence[str]) -> dict[str, dict[str, TestResult]]:
    by_subject = {}
    for row in rows:
        by_subject[int(row["subject"])] = row
    out: dict[str, dict[str, TestResult]] = {}
    for c in conditions:
        pairs: dict[str, TestResult] = {}
        for trait in ("age", "gaming"):
            for metric in ("PM", "RM"):
                sm = means_by_metric[metric]
                xs, ys = [], []
                for s, row in zip(sm.subjects, sm.matrix):
                    info = by_subject.get(s)
                    if info is None or trait not in info:
                        continue
                    xs.append(float(info[trait]))
                    ys.append(row[sm.conditions.index(c)])
                if len(xs) >= 3:
                    try:
                        pairs[f"{trait}~{metric}"] = pearson(xs, ys)
                    except UndefinedCorrelationError:
                        continue
        out[c] = pairs
    return out


def _analyze_tlx(rows: Sequence[dict], conditions: Sequence[str]) -> dict[str, MetricAnalysis]:
    cell: dict[tuple[int, str], dict[str, float]] = {}
    subjects = sorted({int(r["subject"]) for r in rows})
    for r in rows:
        cell[(int(r["subject"]), str(r["condition"]))] = {
            s: float(r[s]) for s in TLX_SCALES
        }
    out: dict[str, MetricAnalysis] = {}
    for scale in TLX_SCALES:
        matrix = []
        for s in subjects:
            row = []
            for c in conditions:
                entry = cell.get((s, c))
                if entry is None:
                    raise ValueError(f"TLX rows missing subject {s} condition {c}")
                row.append(entry[scale])
            matrix.append(tuple(row))
        sm = SubjectMeans(f"TLX_{scale}", tuple(conditions), tuple(subjects), tuple(matrix))
        out[scale] = _analyze_matrix(f"TLX_{scale}", sm)
    return out


# ---------------------------------------------------------------------------
# text rendering
# ---------------------------------------------------------------------------


def report_to_text(report: StatsReport) -> str:
    lines = []
    lines.append(f"subjects: {report.n_subjects}   conditions: {', '.join(report.conditions)}"
                 f"   alpha: {report.alpha}")
    lines.append("")
    for m, a in report.metrics.items():
        fr = a.friedman
        lines.append(f"[{m}] friedman chi2={fr.statistic:.4f} p={fr.p_value:.3e} "
                     f"W={fr.effect_size:.4f}")
        for c in report.conditions:
            lines.append(f"  {c:<12} mean={a.condition_means[c]:.4f} sd={a.condition_sds[c]:.4f}")
        sig = [p for p in a.posthoc if p.significant(report.alpha)]
        for p in sig:
            better = p.condition_a if p.mean_a < p.mean_b else p.condition_b
            other = p.condition_b if better == p.condition_a else p.condition_a
            lines.append(f"  {better} < {other} (p_bonf={p.p_bonferroni:.3e})")
        lines.append("")
    lines.append("correlations (per condition, per-subject means):")
    for c, pairs in report.correlations.items():
        for name, t in pairs.items():
            p_txt = "n/a" if t.p_value is None else f"{t.p_value:.3e}"
            lines.append(f"  {c:<12} {name:<7} r={t.statistic:+.3f} p={p_txt} "
                         f"({t.detail.get('strength', '')})")
    lines.append("")
    lines.append("radar points (significant pairwise wins per axis):")
    for c in report.conditions:
        axes = report.radar[c]
        total = sum(axes.values())
        lines.append(f"  {c:<12} total={total} " +
                     " ".join(f"{m}={v}" for m, v in axes.items()))
    return "\n".join(lines) + "\n"
