"""Nonparametric tests used by the pipeline.

Mann-Whitney U (exact by enumeration for small samples, normal approximation
otherwise), Noether's power approximation for U, Pearson's chi-square and
Fisher's exact test (hypergeometric for 2x2, Monte Carlo with fixed margins
for larger tables).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .errors import ConfigError, ContractError
from .seeds import stream

log = logging.getLogger(__name__)

EXACT_MAX_N = 12
_STD_NORMAL = NormalDist()
_P_TOL = 1e-7


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


# ------------------------------------------------------------ Mann-Whitney

@dataclass(frozen=True)
class MannWhitneyResult:
    statistic: float
    pvalue: float
    method: str
    alternative: str


def u_statistic(xs: Sequence[float], ys: Sequence[float]) -> float:
    """``#{x > y} + 0.5 * #{x == y}`` over all pairs."""
    x = np.asarray(xs, dtype=float)[:, None]
    y = np.asarray(ys, dtype=float)[None, :]
    return float(np.count_nonzero(x > y) + 0.5 * np.count_nonzero(x == y))


def _tail(u_obs: float, u_null, mean: float, alternative: str) -> float:
    u_null = np.asarray(u_null, dtype=float)
    if alternative == "greater":
        hits = u_null >= u_obs - 1e-9
    elif alternative == "less":
        hits = u_null <= u_obs + 1e-9
    else:
        hits = np.abs(u_null - mean) >= abs(u_obs - mean) - 1e-9
    return float(np.count_nonzero(hits) / len(u_null))


def mann_whitney_u(xs: Sequence[float], ys: Sequence[float], alternative: str = "greater",
                   method: str = "auto") -> MannWhitneyResult:
    """Mann-Whitney U test of ``xs`` against ``ys``.

    ``alternative="greater"`` tests whether ``xs`` tend to exceed ``ys``.
    With ``method="auto"`` the permutation distribution is enumerated when
    the combined size is at most 12; otherwise the normal approximation with
    tie and continuity corrections is used.
    """
    if alternative not in ("greater", "less", "two-sided"):
        raise ContractError(f"unknown alternative {alternative!r}")
    xs, ys = list(xs), list(ys)
    n1, n2 = len(xs), len(ys)
    if n1 == 0 or n2 == 0:
        raise ContractError("both samples must be non-empty")
    u = u_statistic(xs, ys)
    mean = n1 * n2 / 2.0
    if method == "auto":
        method = "exact" if n1 + n2 <= EXACT_MAX_N else "asymptotic"
    if method == "exact":
        pooled = np.asarray(xs + ys, dtype=float)
        n = n1 + n2
        # pairwise comparison table: gt[a, b] = 1 if a > b, 0.5 on ties
        cmp = (pooled[:, None] > pooled[None, :]) + 0.5 * (pooled[:, None] == pooled[None, :])
        null = []
        everyone = set(range(n))
        for group in itertools.combinations(range(n), n1):
            rest = sorted(everyone.difference(group))
            null.append(cmp[np.ix_(group, rest)].sum())
        p = _tail(u, null, mean, alternative)
    elif method == "asymptotic":
        n = n1 + n2
        _, counts = np.unique(np.asarray(xs + ys, dtype=float), return_counts=True)
        ties = float(np.sum(counts.astype(float) ** 3 - counts))
        var = n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1)))
        if var <= 0:
            p = 1.0
        else:
            sd = math.sqrt(var)
            if alternative == "greater":
                p = _norm_sf((u - mean - 0.5) / sd)
            elif alternative == "less":
                p = _norm_sf((mean - u - 0.5) / sd)
            else:
                p = min(1.0, 2.0 * _norm_sf((abs(u - mean) - 0.5) / sd))
    else:
        raise ContractError(f"unknown method {method!r}")
    return MannWhitneyResult(u, min(1.0, max(0.0, p)), method, alternative)


def noether_power(n1: int, n2: int, effect: float = 0.75, alpha: float = 0.05,
                  alternative: str = "greater") -> float:
    """Approximate power of the U test for effect size ``P(X > Y)``.

    Normal approximation after Noether (1987):
    ``Phi(sqrt(12 n1 n2 / (n1 + n2 + 1)) * (effect - 0.5) - z_{1-alpha})``;
    the two-sided form uses ``z_{1-alpha/2}``.
    """
    if n1 < 1 or n2 < 1:
        raise ContractError("sample sizes must be positive")
    if not 0.5 <= effect < 1.0:
        raise ContractError("effect P(X>Y) must lie in [0.5, 1)")
    if not 0.0 < alpha < 1.0:
        raise ContractError("alpha must lie in (0, 1)")
    crit = _STD_NORMAL.inv_cdf(1 - (alpha / 2 if alternative == "two-sided" else alpha))
    shift = math.sqrt(12.0 * n1 * n2 / (n1 + n2 + 1)) * (effect - 0.5)
    return _STD_NORMAL.cdf(shift - crit)


# ---------------------------------------------------------- contingency

@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray
    row_labels: tuple[str, ...] = ()
    col_labels: tuple[str, ...] = ()

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise ContractError("contingency table must be two-dimensional")
        if (counts < 0).any() or not np.all(counts == np.round(counts)):
            raise ContractError("counts must be non-negative integers")
        counts = counts.astype(np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        rows = tuple(self.row_labels) or tuple(f"r{i}" for i in range(counts.shape[0]))
        cols = tuple(self.col_labels) or tuple(f"c{j}" for j in range(counts.shape[1]))
        if len(rows) != counts.shape[0] or len(cols) != counts.shape[1]:
            raise ContractError("label count does not match table shape")
        object.__setattr__(self, "row_labels", rows)
        object.__setattr__(self, "col_labels", cols)

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    def expected(self) -> np.ndarray:
        total = self.counts.sum()
        return np.outer(self.counts.sum(axis=1), self.counts.sum(axis=0)) / total

    def drop_empty(self) -> "ContingencyTable":
        """Remove rows and columns whose marginal total is zero."""
        rows = self.counts.sum(axis=1) > 0
        cols = self.counts.sum(axis=0) > 0
        if rows.all() and cols.all():
            return self
        log.warning("dropping %d empty row(s) and %d empty column(s)", (~rows).sum(), (~cols).sum())
        return ContingencyTable(
            self.counts[np.ix_(rows, cols)],
            tuple(l for l, k in zip(self.row_labels, rows) if k),
            tuple(l for l, k in zip(self.col_labels, cols) if k),
        )


def regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma ``Q(a, x)``.

    Series expansion of ``P`` below ``x = a + 1``, Lentz continued fraction
    above it.
    """
    if a <= 0:
        raise ContractError("shape must be positive")
    if x <= 0:
        return 1.0
    log_prefactor = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        term = total = 1.0 / a
        ap = a
        for _ in range(10_000):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return max(0.0, 1.0 - total * math.exp(log_prefactor))
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return min(1.0, math.exp(log_prefactor) * h)


def chi2_sf(statistic: float, df: int) -> float:
    return regularized_gamma_q(df / 2.0, statistic / 2.0)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    df: int
    pvalue: float
    expected: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    table: ContingencyTable = field(repr=False)


def chi_square(t: ContingencyTable) -> ChiSquareResult:
    """Pearson chi-square test of independence, no continuity correction."""
    t = t.drop_empty()
    r, c = t.shape
    if r < 2 or c < 2:
        raise ContractError(f"need at least a 2x2 table after dropping empty margins, got {r}x{c}")
    expected = t.expected()
    diff = t.counts - expected
    statistic = math.fsum((diff * diff / expected).ravel().tolist())
    df = (r - 1) * (c - 1)
    return ChiSquareResult(statistic, df, chi2_sf(statistic, df), expected, diff / np.sqrt(expected), t)


# ---------------------------------------------------------------- Fisher

@dataclass(frozen=True)
class FisherResult:
    pvalue: float
    method: str
    std_error: float = 0.0
    mc_samples: int = 0


def _log_hypergeom(x: int, row0: int, col0: int, total: int) -> float:
    def lchoose(n, k):
        return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
    return lchoose(col0, x) + lchoose(total - col0, row0 - x) - lchoose(total, row0)


def _fisher_2x2(counts: np.ndarray) -> float:
    (a, b), (c, d) = counts.tolist()
    row0, col0, total = a + b, a + c, a + b + c + d
    lo, hi = max(0, row0 + col0 - total), min(row0, col0)
    logp = {x: _log_hypergeom(x, row0, col0, total) for x in range(lo, hi + 1)}
    observed = logp[a]
    p = math.fsum(math.exp(v) for v in logp.values() if v <= observed + _P_TOL)
    return min(1.0, p)


def _table_score(counts: np.ndarray) -> float:
    """Log-probability of a table up to the margin-only constant."""
    return -float(np.sum([math.lgamma(v + 1) for v in counts.ravel().tolist()]))


def _sample_scores(rng: np.random.Generator, row_sums, col_sums, n: int) -> np.ndarray:
    scores = np.empty(n)
    lg = np.array([math.lgamma(k + 1) for k in range(int(sum(row_sums)) + 1)])
    for s in range(n):
        remaining = np.array(col_sums, dtype=np.int64)
        acc = 0.0
        for r in row_sums[:-1]:
            draw = rng.multivariate_hypergeometric(remaining, int(r))
            acc -= lg[draw].sum()
            remaining -= draw
        acc -= lg[remaining].sum()
        scores[s] = acc
    return scores


def fisher_exact(t: ContingencyTable, mc_samples: int = 10_000, seed: int = 0,
                 block_size: int = 1000) -> FisherResult:
    """Two-sided Fisher exact test.

    2x2 tables sum the hypergeometric probabilities no larger than the
    observed one. Larger tables draw ``mc_samples`` tables with the observed
    margins and report ``(1 + hits) / (1 + mc_samples)`` with its binomial
    standard error.
    """
    t = t.drop_empty()
    r, c = t.shape
    if r < 2 or c < 2:
        raise ContractError(f"need at least a 2x2 table, got {r}x{c}")
    if (r, c) == (2, 2):
        return FisherResult(_fisher_2x2(t.counts), "exact")
    if mc_samples < 1000:
        raise ConfigError("Monte Carlo Fisher test needs at least 1000 samples")
    row_sums = t.counts.sum(axis=1).tolist()
    col_sums = t.counts.sum(axis=0).tolist()
    observed = _table_score(t.counts)
    hits = 0
    for block, start in enumerate(range(0, mc_samples, block_size)):
        n = min(block_size, mc_samples - start)
        scores = _sample_scores(stream(seed, "fisher/mc", block), row_sums, col_sums, n)
        hits += int(np.count_nonzero(scores <= observed + _P_TOL))
    p = (1 + hits) / (1 + mc_samples)
    return FisherResult(p, "monte-carlo", math.sqrt(p * (1 - p) / mc_samples), mc_samples)


@dataclass(frozen=True)
class AssociationResult:
    test: str
    statistic: float | None
    df: int | None
    pvalue: float
    std_error: float
    sparse_fraction: float
    table: ContingencyTable = field(repr=False)
    expected: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)


def association_test(t: ContingencyTable, mc_samples: int = 10_000, seed: int = 0,
                     sparse_limit: float = 0.2) -> AssociationResult:
    """Chi-square unless more than ``sparse_limit`` of expected cells are below 5, else Fisher."""
    chi = chi_square(t)
    sparse_fraction = float(np.mean(chi.expected < 5))
    if sparse_fraction > sparse_limit:
        fisher = fisher_exact(chi.table, mc_samples, seed)
        log.info("%.0f%% of expected counts below 5; using Fisher's exact test", 100 * sparse_fraction)
        return AssociationResult("fisher-" + fisher.method, None, None, fisher.pvalue, fisher.std_error,
                                 sparse_fraction, chi.table, chi.expected, chi.residuals)
    return AssociationResult("chi-square", chi.statistic, chi.df, chi.pvalue, 0.0,
                             sparse_fraction, chi.table, chi.expected, chi.residuals)
