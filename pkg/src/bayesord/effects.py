"""Average covariate effects on outcome probabilities.

The effect of moving covariate l from a to b on P(y = j) is averaged
over every observation and every retained draw (method of composition
carried out as the exact double average).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import DrawsStore, OrdinalDataset
from .errors import ValidationError


@dataclass(frozen=True)
class CovariateShift:
    """Move column ``index`` from ``value_a`` to ``value_b``.

    With ``increment`` set instead, each observation moves from its
    observed value x to x + increment (e.g. +5 income units of $10,000).
    """

    index: int
    value_a: float | None = None
    value_b: float | None = None
    increment: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.index == 0:
            raise ValidationError("the intercept column cannot be shifted")
        if self.increment is None and (self.value_a is None or self.value_b is None):
            raise ValidationError("give both value_a and value_b, or an increment")
        if self.increment is not None and (self.value_a is not None or self.value_b is not None):
            raise ValidationError("increment and explicit values are mutually exclusive")

    @classmethod
    def binary(cls, index: int, label: str = ""):
        return cls(index, 0.0, 1.0, label=label)

    def values(self, column: np.ndarray):
        """Per-observation (a, b) values for the shifted column."""
        if self.increment is not None:
            return column, column + self.increment
        n = column.shape[0]
        return np.full(n, float(self.value_a)), np.full(n, float(self.value_b))


@dataclass
class CovariateEffect:
    """Mean ΔP(y=j) over draws and observations, with Monte-Carlo standard errors."""

    mean: np.ndarray
    std_error: np.ndarray
    M: int
    n: int
    covariate: str = ""
    per_draw: np.ndarray | None = None


def _check_family(data: OrdinalDataset, shift: CovariateShift):
    name = data.covariate_names[shift.index]
    for family, members in data.families.items():
        if name not in members or shift.increment is not None:
            continue
        others = [data.column(m) for m in members if m != name]
        if not others:
            continue
        if max(shift.value_a, shift.value_b) > 0 and np.any(data.X[:, others].sum(axis=1) > 0):
            warnings.warn(
                f"shifting {name!r} leaves other {family} indicators fixed; some rows will have "
                "two levels of the same family switched on", stacklevel=3)


def average_covariate_effect(draws: DrawsStore, data: OrdinalDataset, shift: CovariateShift,
                             chunk: int = 64, keep_draws: bool = False) -> CovariateEffect:
    """ACE_j = (1/M)(1/n) Σ_m Σ_i [P(y_i=j | x_i^b, θ_m) − P(y_i=j | x_i^a, θ_m)].

    The link is read from ``draws.model_kind``. Draws are processed in
    blocks of ``chunk``; the result does not depend on the block size
    beyond floating-point summation order.
    """
    if draws.beta_draws.shape[1] != data.k or draws.delta_draws.shape[1] != data.J - 2:
        raise ValidationError("draws and dataset dimensions disagree")
    l = shift.index
    if not 0 < l < data.k:
        raise ValidationError(f"covariate index {l} is the intercept or out of range")
    _check_family(data, shift)

    kind = draws.model_kind
    X = data.X
    col_a, col_b = shift.values(X[:, l])
    M, J = draws.M, data.J
    per_draw = np.empty((M, J))
    gaps = np.exp(draws.delta_draws)
    gammas = np.hstack([np.zeros((M, 1)), np.cumsum(gaps, axis=1)])

    for start in range(0, M, chunk):
        stop = min(start + chunk, M)
        B = draws.beta_draws[start:stop]                       # (c, k)
        base = X @ B.T - np.outer(X[:, l], B[:, l])            # (n, c): x_{i,-l}' β_{-l}
        eta_a = base + np.outer(col_a, B[:, l])
        eta_b = base + np.outer(col_b, B[:, l])
        g = gammas[start:stop]                                 # (c, J-1)
        cdf_b = kind.cdf(g[None, :, :] - eta_b[:, :, None])    # (n, c, J-1)
        cdf_a = kind.cdf(g[None, :, :] - eta_a[:, :, None])
        dcdf = (cdf_b - cdf_a).mean(axis=0)                    # (c, J-1)
        zeros = np.zeros((stop - start, 1))
        per_draw[start:stop] = np.diff(np.hstack([zeros, dcdf, zeros]), axis=1)

    mean = per_draw.mean(axis=0)
    se = per_draw.std(axis=0, ddof=1) / np.sqrt(M) if M > 1 else np.zeros(J)
    return CovariateEffect(mean, se, M, data.n, data.covariate_names[l],
                           per_draw if keep_draws else None)


def credible_interval(samples, level: float = 0.95):
    if not 0.0 < level < 1.0:
        raise ValidationError("level must lie in (0, 1)")
    tail = 0.5 * (1.0 - level)
    lo, hi = np.quantile(np.asarray(samples, dtype=float), [tail, 1.0 - tail], axis=0)
    return lo, hi


def effect_significance_filter(draws: DrawsStore, shift, level: float = 0.95) -> bool:
    """True (keep) when the equal-tailed interval of β_l excludes zero."""
    index = shift.index if isinstance(shift, CovariateShift) else int(shift)
    lo, hi = credible_interval(draws.beta_draws[:, index], level)
    return not (lo <= 0.0 <= hi)
