"""Within-subject ANOVA, F/t tail probabilities, and Bonferroni-corrected
pairwise comparisons for recognition-accuracy tables.

Tail probabilities are computed from the regularized incomplete beta
function (Lentz continued fraction), accurate to well below 1e-6 over the
degree-of-freedom ranges used here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np


class DomainError(ValueError):
    """Invalid distribution parameters (degrees of freedom, statistic sign)."""


class DesignError(ValueError):
    """Accuracy table is unbalanced, incomplete, or too small to analyze."""


# ---------------------------------------------------------------------------
# Regularized incomplete beta and derived tail probabilities
# ---------------------------------------------------------------------------

_MAX_CF_ITERATIONS = 300
_CF_EPS = 3e-16
_CF_TINY = 1e-300


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, evaluated by the modified
    Lentz method. Converges quickly for x < (a + 1) / (a + b + 2)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_CF_ITERATIONS + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise DomainError(f"incomplete beta failed to converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise DomainError(f"beta parameters must be positive, got a={a}, b={b}")
    if x < 0.0 or x > 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(1.0 - x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def f_survival(f_stat: float, df1: int, df2: int) -> float:
    """Upper-tail probability P(F >= f_stat) of the Fisher-Snedecor distribution."""
    if df1 < 1 or df2 < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got ({df1}, {df2})")
    if f_stat < 0:
        raise DomainError(f"F statistic must be non-negative, got {f_stat}")
    if f_stat == 0.0:
        return 1.0
    if math.isinf(f_stat):
        return 0.0
    x = df2 / (df2 + df1 * f_stat)
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, x)


def t_two_sided_p(t_stat: float, df: int) -> float:
    """Two-sided tail probability P(|T| >= |t_stat|) of Student's t."""
    if df < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {df}")
    if math.isinf(t_stat):
        return 0.0
    x = df / (df + t_stat * t_stat)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


# ---------------------------------------------------------------------------
# Repeated-measures ANOVA
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EffectResult:
    """One row of an ANOVA table: an effect with its subject-linked error term."""

    name: str
    ss_effect: float
    ss_error: float
    df_effect: int
    df_error: int
    f: float
    p: float
    partial_eta_sq: float

    @property
    def ms_effect(self) -> float:
        return self.ss_effect / self.df_effect

    @property
    def ms_error(self) -> float:
        return self.ss_error / self.df_error


@dataclass(frozen=True)
class AnovaTable:
    """Full within-subjects decomposition. `effects` preserves factor order."""

    effects: tuple[EffectResult, ...]
    ss_subject: float
    ss_total: float

    def effect(self, name: str) -> EffectResult:
        for eff in self.effects:
            if eff.name == name:
                return eff
        raise KeyError(name)

    @property
    def ss_components_sum(self) -> float:
        """Subject SS plus every effect and error SS; equals ss_total for a
        complete decomposition (conservation check)."""
        return self.ss_subject + sum(e.ss_effect + e.ss_error for e in self.effects)


def _effect_row(name: str, ss_effect: float, ss_error: float, df_effect: int, df_error: int) -> EffectResult:
    ms_effect = ss_effect / df_effect
    ms_error = ss_error / df_error
    if ms_error == 0.0:
        f_stat = 0.0 if ms_effect == 0.0 else math.inf
    else:
        f_stat = ms_effect / ms_error
    p = f_survival(f_stat, df_effect, df_error)
    denom = ss_effect + ss_error
    eta = ss_effect / denom if denom > 0.0 else 0.0
    return EffectResult(name, ss_effect, ss_error, df_effect, df_error, f_stat, p, eta)


def _validate_table(data: np.ndarray, expected_ndim: int) -> np.ndarray:
    table = np.asarray(data, dtype=np.float64)
    if table.ndim != expected_ndim:
        raise DesignError(f"expected a {expected_ndim}-D table, got shape {table.shape}")
    if table.shape[0] < 2:
        raise DesignError(f"need at least 2 subjects, got {table.shape[0]}")
    if any(s < 2 for s in table.shape[1:]):
        raise DesignError(f"every factor needs at least 2 levels, got shape {table.shape}")
    if not np.all(np.isfinite(table)):
        raise DesignError("table contains missing or non-finite cells")
    return table


def rm_anova(
    data: Sequence | np.ndarray,
    factor_names: tuple[str, str] = ("vibration", "temperature"),
) -> AnovaTable:
    """Two-way fully within-subjects ANOVA on a (subjects, a, b) table.

    Classical decomposition: each effect is tested against its own
    subject-by-effect interaction, F = MS_effect / MS_error with
    df (a-1, (a-1)(n-1)) and analogously for the second factor and the
    interaction. Partial eta squared is SS_effect / (SS_effect + SS_error).
    """
    y = _validate_table(data, 3)
    n, a, b = y.shape
    grand = y.mean()

    subj_means = y.mean(axis=(1, 2))
    a_means = y.mean(axis=(0, 2))
    b_means = y.mean(axis=(0, 1))
    ab_means = y.mean(axis=0)
    sa_means = y.mean(axis=2)  # (n, a)
    sb_means = y.mean(axis=1)  # (n, b)

    ss_subject = a * b * float(((subj_means - grand) ** 2).sum())
    ss_a = n * b * float(((a_means - grand) ** 2).sum())
    ss_b = n * a * float(((b_means - grand) ** 2).sum())
    ss_ab = n * float(((ab_means - a_means[:, None] - b_means[None, :] + grand) ** 2).sum())
    ss_as = b * float(
        ((sa_means - subj_means[:, None] - a_means[None, :] + grand) ** 2).sum()
    )
    ss_bs = a * float(
        ((sb_means - subj_means[:, None] - b_means[None, :] + grand) ** 2).sum()
    )
    # three-way residual computed directly so the decomposition is checkable
    resid = (
        y
        - sa_means[:, :, None]
        - sb_means[:, None, :]
        - ab_means[None, :, :]
        + subj_means[:, None, None]
        + a_means[None, :, None]
        + b_means[None, None, :]
        - grand
    )
    ss_abs = float((resid**2).sum())
    ss_total = float(((y - grand) ** 2).sum())

    effects = (
        _effect_row(factor_names[0], ss_a, ss_as, a - 1, (a - 1) * (n - 1)),
        _effect_row(factor_names[1], ss_b, ss_bs, b - 1, (b - 1) * (n - 1)),
        _effect_row(
            f"{factor_names[0]}*{factor_names[1]}",
            ss_ab,
            ss_abs,
            (a - 1) * (b - 1),
            (a - 1) * (b - 1) * (n - 1),
        ),
    )
    return AnovaTable(effects=effects, ss_subject=ss_subject, ss_total=ss_total)


def rm_anova_oneway(data: Sequence | np.ndarray, factor_name: str = "condition") -> AnovaTable:
    """One-way within-subjects ANOVA on a (subjects, k) table.

    Treating all presented conditions as levels of a single factor gives
    df (k-1, (k-1)(n-1)); with 10 conditions and 9 subjects that is (9, 72).
    """
    y = _validate_table(data, 2)
    n, k = y.shape
    grand = y.mean()
    subj_means = y.mean(axis=1)
    cond_means = y.mean(axis=0)
    ss_subject = k * float(((subj_means - grand) ** 2).sum())
    ss_cond = n * float(((cond_means - grand) ** 2).sum())
    resid = y - subj_means[:, None] - cond_means[None, :] + grand
    ss_error = float((resid**2).sum())
    ss_total = float(((y - grand) ** 2).sum())
    effects = (_effect_row(factor_name, ss_cond, ss_error, k - 1, (k - 1) * (n - 1)),)
    return AnovaTable(effects=effects, ss_subject=ss_subject, ss_total=ss_total)


# ---------------------------------------------------------------------------
# Pairwise comparisons
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairwiseComparison:
    """Paired t-test between two conditions, with Bonferroni correction.

    A zero-variance difference vector makes t undefined; such pairs are
    flagged degenerate and carry no p-values.
    """

    pair: tuple[str, str]
    t: float | None
    p_raw: float | None
    p_bonferroni: float | None
    degenerate: bool = False


def paired_t_tests(
    data: Sequence | np.ndarray,
    labels: Sequence[str],
) -> list[PairwiseComparison]:
    """All-pairs two-sided paired t-tests over the columns of a (subjects, k)
    table, Bonferroni-corrected by the number of comparisons."""
    y = _validate_table(data, 2)
    n, k = y.shape
    if len(labels) != k:
        raise DesignError(f"{k} columns but {len(labels)} labels")
    pairs = list(combinations(range(k), 2))
    n_comparisons = len(pairs)
    results = []
    for i, j in pairs:
        diff = y[:, i] - y[:, j]
        sd = float(diff.std(ddof=1))
        if sd == 0.0:
            results.append(
                PairwiseComparison((labels[i], labels[j]), None, None, None, degenerate=True)
            )
            continue
        t_stat = float(diff.mean()) / (sd / math.sqrt(n))
        p_raw = t_two_sided_p(t_stat, n - 1)
        results.append(
            PairwiseComparison(
                (labels[i], labels[j]),
                t_stat,
                p_raw,
                min(1.0, p_raw * n_comparisons),
            )
        )
    return results
