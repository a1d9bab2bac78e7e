"""Regression-based mediation analysis with a single mediator.

Letters: ``a`` is treatment -> mediator, ``c`` is mediator -> outcome given
the treatment, ``b`` is the direct treatment -> outcome slope given the
mediator and ``b_total`` the treatment -> outcome slope with the mediator
left out. The indirect effect is ``a * c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CausalError

# With an exactly zero standard error, slopes below this are read as zero.
ZERO_SLOPE = 1e-9
# Residuals this small relative to the outcome scale count as an exact fit.
EXACT_FIT = 1e-12


@dataclass(frozen=True)
class MediationFit:
    a: float
    b: float
    c: float
    b_total: float
    se_a: float
    se_b: float
    se_c: float
    se_b_total: float
    bias_mediator: float
    bias_outcome: float
    bias_total: float
    corr_tm: float       # sample correlation of treatment and mediator
    n: int

    @property
    def indirect(self) -> float:
        return self.a * self.c


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p: float
    degenerate: bool = False


@dataclass(frozen=True)
class StepsDecision:
    detected: bool
    a_significant: bool
    b_significant: bool
    c_significant: bool
    direct_smaller: bool
    p_a: float
    p_b: float
    p_c: float
    alpha: float


def two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def _ols(design: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, k = design.shape
    if np.linalg.matrix_rank(design) < k:
        raise CausalError("design matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    scale = max(1.0, float(np.max(np.abs(y))))
    if np.max(np.abs(resid)) <= EXACT_FIT * scale:
        sigma2 = 0.0
    else:
        sigma2 = float(resid @ resid) / (n - k)
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return beta, np.sqrt(np.clip(np.diag(cov), 0.0, None))


def fit_mediation(data: Sequence[Sequence[float]]) -> MediationFit:
    """Fit the three regressions on ``(t, mediator, y)`` triples."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise CausalError("mediation data must be (t, mediator, y) triples")
    n = arr.shape[0]
    if n < 4:
        raise CausalError(f"need at least 4 observations, got {n}")
    t, m, y = arr.T
    one = np.ones(n)
    (bm, a), (_, se_a) = _ols(np.column_stack([one, t]), m)
    (by, b, c), (_, se_b, se_c) = _ols(np.column_stack([one, t, m]), y)
    (bt, b_total), (_, se_bt) = _ols(np.column_stack([one, t]), y)
    corr = float(np.corrcoef(t, m)[0, 1])
    return MediationFit(float(a), float(b), float(c), float(b_total),
                        float(se_a), float(se_b), float(se_c), float(se_bt),
                        float(bm), float(by), float(bt), corr, n)


def _z(coef: float, se: float) -> TestResult:
    if se > 0:
        z = coef / se
        return TestResult(z, two_sided_p(z))
    if abs(coef) <= ZERO_SLOPE:
        return TestResult(0.0, 1.0, degenerate=True)
    return TestResult(math.copysign(math.inf, coef), 0.0, degenerate=True)


def causal_steps(fit: MediationFit, alpha: float = 0.05) -> StepsDecision:
    """Indirect causation iff a, b and c are all significant and |b| < |b_total|."""
    if not 0 < alpha < 1:
        raise CausalError(f"alpha must lie in (0, 1), got {alpha}")
    pa, pb, pc = (_z(k, s).p for k, s in ((fit.a, fit.se_a), (fit.b, fit.se_b), (fit.c, fit.se_c)))
    sa, sb, sc = pa < alpha, pb < alpha, pc < alpha
    smaller = abs(fit.b) < abs(fit.b_total)
    return StepsDecision(sa and sb and sc and smaller, sa, sb, sc, smaller, pa, pb, pc, alpha)


def difference_test(fit: MediationFit) -> TestResult:
    """Test b_total - b = 0.

    The two slopes come from nested regressions on the same sample, so their
    covariance is approximated as ``se_b * se_b_total * sqrt(1 - r^2)`` with
    ``r`` the treatment-mediator correlation.
    """
    diff = fit.b_total - fit.b
    r2 = min(1.0, fit.corr_tm ** 2)
    var = fit.se_b ** 2 + fit.se_b_total ** 2 - 2.0 * fit.se_b * fit.se_b_total * math.sqrt(1.0 - r2)
    return _z(diff, math.sqrt(max(var, 0.0)))


def sobel_test(fit: MediationFit) -> TestResult:
    """Product-of-slopes test of a * c = 0 with the first-order delta-method error."""
    if fit.a == 0 and fit.c == 0:
        return TestResult(0.0, 1.0)
    se = math.sqrt(fit.c ** 2 * fit.se_a ** 2 + fit.a ** 2 * fit.se_c ** 2)
    return _z(fit.a * fit.c, se)
