"""Confusion-matrix metrics and Welch's two-sample t-test."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

ALPHA = 0.05


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    precision_defined: bool = True
    recall_defined: bool = True
    f1_defined: bool = True

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    p_value: float
    degrees_of_freedom: float
    significant: bool


def confusion_and_metrics(predictions, labels) -> tuple[ConfusionMatrix, MetricsReport]:
    """Binary confusion matrix (positive class = 1) and the four usual scores.

    A ratio with a zero denominator is reported as 0.0 with its ``*_defined``
    flag cleared.
    """
    pred = np.asarray(predictions).astype(int).ravel()
    true = np.asarray(labels).astype(int).ravel()
    if pred.shape != true.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions vs {true.size} labels")
    if pred.size == 0:
        raise ValueError("no predictions to score")
    cm = ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (true == 1))),
        fp=int(np.sum((pred == 1) & (true == 0))),
        fn=int(np.sum((pred == 0) & (true == 1))),
        tn=int(np.sum((pred == 0) & (true == 0))),
    )
    accuracy = (cm.tp + cm.tn) / cm.total
    p_def = cm.tp + cm.fp > 0
    r_def = cm.tp + cm.fn > 0
    precision = cm.tp / (cm.tp + cm.fp) if p_def else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if r_def else 0.0
    f_def = p_def and r_def and precision + recall > 0
    f1 = 2 * precision * recall / (precision + recall) if f_def else 0.0
    return cm, MetricsReport(accuracy, precision, recall, f1, p_def, r_def, f_def)


def _betacf(a: float, b: float, x: float, max_iter: int = 500, eps: float = 1e-16) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(x: float, a: float, b: float) -> float:
    """Regularised incomplete beta function ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return float(x)
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return min(1.0, betainc_regularized(df / (df + t * t), 0.5 * df, 0.5))


def welch_t_test(samples_a: Sequence[float], samples_b: Sequence[float]) -> TTestResult:
    """Welch's unequal-variance t-test of ``mean(a) - mean(b)``.

    When both samples have zero variance the statistic is ``+-inf`` with
    ``p = 0`` if the means differ, and ``t = 0, p = 1`` if they agree.
    """
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two entries")
    na, nb = a.size, b.size
    ma = float(a[0]) if np.all(a == a[0]) else float(a.mean())
    mb = float(b[0]) if np.all(b == b[0]) else float(b.mean())
    # a constant sample has exactly zero variance; the mean's rounding would not
    va = 0.0 if np.all(a == a[0]) else float(a.var(ddof=1))
    vb = 0.0 if np.all(b == b[0]) else float(b.var(ddof=1))
    sa, sb = va / na, vb / nb
    se2 = sa + sb
    diff = ma - mb
    if se2 == 0.0:
        df = float(na + nb - 2)
        if diff == 0.0:
            return TTestResult(0.0, 1.0, df, False)
        t = math.copysign(math.inf, diff)
        return TTestResult(t, 0.0, df, True)
    t = diff / math.sqrt(se2)
    df = se2 * se2 / (sa * sa / (na - 1) + sb * sb / (nb - 1))
    p = student_t_two_sided_p(t, df)
    return TTestResult(t, p, df, p < ALPHA)


def ttest_to_dict(result: TTestResult) -> dict:
    """JSON-safe form: infinite statistics become the strings ``"inf"``/``"-inf"``."""
    t = result.t_statistic
    return {
        "t_statistic": ("inf" if t > 0 else "-inf") if math.isinf(t) else t,
        "p_value": result.p_value,
        "degrees_of_freedom": result.degrees_of_freedom,
        "significant": result.significant,
    }
