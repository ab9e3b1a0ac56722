"""Welch's unequal-variance two-sample t-test."""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import stats as _st


def welch_from_moments(mean_a, var_a, n_a, mean_b, var_b, n_b):
    """Vectorized Welch test from sample moments (``var`` uses n - 1).

    Returns ``(t, df, p)`` arrays.  Degenerate cells follow the harness rules:
    fewer than two samples on either side, or zero variance on both sides with
    equal means, give p = 1; zero variance with different means gives p = 0.
    """
    mean_a, var_a, n_a, mean_b, var_b, n_b = np.broadcast_arrays(
        *(np.asarray(x, dtype=np.float64) for x in (mean_a, var_a, n_a, mean_b, var_b, n_b))
    )
    t = np.zeros(mean_a.shape)
    df = np.zeros(mean_a.shape)
    p = np.ones(mean_a.shape)
    small = (n_a < 2) | (n_b < 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        sa = var_a / n_a
        sb = var_b / n_b
        se2 = sa + sb
        flat = ~small & (se2 == 0.0)
        ok = ~small & ~flat
        t[ok] = (mean_a[ok] - mean_b[ok]) / np.sqrt(se2[ok])
        df[ok] = se2[ok] ** 2 / (sa[ok] ** 2 / (n_a[ok] - 1) + sb[ok] ** 2 / (n_b[ok] - 1))
    p[ok] = 2.0 * _st.t.sf(np.abs(t[ok]), df[ok])
    differ = flat & (mean_a != mean_b)
    p[differ] = 0.0
    t[differ] = np.copysign(np.inf, mean_a[differ] - mean_b[differ])
    return t, df, p


def welch_statistic(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    t, df, _ = welch_from_moments(a.mean(), _var(a), len(a), b.mean(), _var(b), len(b))
    return float(t), float(df)


def _var(x: np.ndarray) -> float:
    return float(x.var(ddof=1)) if len(x) > 1 else 0.0


def welch_t_test(a: Sequence[float], b: Sequence[float], alpha: float = 0.05) -> tuple[float, bool]:
    """Two-tailed p-value and whether it falls below ``alpha``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        return 1.0, False
    _, _, p = welch_from_moments(a.mean(), _var(a), len(a), b.mean(), _var(b), len(b))
    p = float(p)
    return p, p < alpha
