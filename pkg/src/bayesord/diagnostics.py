"""Posterior summaries, inefficiency factors and synthetic data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import PROBIT, DrawsStore, ModelKind, OrdinalDataset, delta_from_gamma
from .errors import ValidationError


def autocorrelation(x) -> np.ndarray:
    """Sample autocorrelation at lags 0..M-1 (FFT, biased normalisation)."""
    x = np.asarray(x, dtype=float)
    m = x.size
    dev = x - x.mean()
    size = 1 << (2 * m - 1).bit_length()
    spec = np.fft.rfft(dev, size)
    acov = np.fft.irfft(spec * np.conj(spec), size)[:m] / m
    if acov[0] <= 0.0:
        return np.zeros(m)
    return acov / acov[0]


def inefficiency_factor(x) -> float:
    """1 + 2 Σ ρ_k, summed until the first non-positive autocorrelation.

    Constant chains return 1.
    """
    rho = autocorrelation(x)
    if rho[0] == 0.0:
        return 1.0
    nonpos = np.flatnonzero(rho[1:] <= 0.0)
    window = nonpos[0] if nonpos.size else rho.size - 1
    return float(1.0 + 2.0 * rho[1:window + 1].sum())


@dataclass
class PosteriorSummary:
    names: list
    mean: np.ndarray
    std: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    inefficiency: np.ndarray
    level: float
    acceptance_rate: float

    def rows(self):
        for i, name in enumerate(self.names):
            yield (name, self.mean[i], self.std[i], self.lower[i], self.upper[i],
                   self.inefficiency[i])


def summarize_draws(draws, level: float = 0.95, names=None,
                    acceptance_rate: float | None = None) -> PosteriorSummary:
    """Mean, std (M−1 denominator), equal-tailed interval and inefficiency per parameter.

    ``draws`` is a DrawsStore or an (M, p) array.
    """
    if isinstance(draws, DrawsStore):
        matrix = draws.matrix()
        names = names or draws.parameter_names
        acceptance_rate = draws.acceptance_rate if acceptance_rate is None else acceptance_rate
    else:
        matrix = np.asarray(draws, dtype=float)
        if matrix.ndim == 1:
            matrix = matrix[:, None]
        names = names or [f"theta{i}" for i in range(matrix.shape[1])]
    if matrix.shape[0] < 2:
        raise ValidationError("need at least two draws to summarise")
    if not 0.0 < level < 1.0:
        raise ValidationError("level must lie in (0, 1)")
    tail = 0.5 * (1.0 - level)
    lower, upper = np.quantile(matrix, [tail, 1.0 - tail], axis=0)
    ineff = np.array([inefficiency_factor(col) for col in matrix.T])
    return PosteriorSummary(list(names), matrix.mean(axis=0), matrix.std(axis=0, ddof=1),
                            lower, upper, ineff, level,
                            float("nan") if acceptance_rate is None else float(acceptance_rate))


def simulate_dataset(beta, gamma, n: int, model_kind: ModelKind = PROBIT,
                     design_law="normal", seed=0, names=None) -> OrdinalDataset:
    """Draw X from ``design_law``, z = Xβ + ε and y from the cut-points.

    ``design_law`` is ``"normal"`` (standard normal columns),
    ``"bernoulli"`` (fair 0/1 columns) or an explicit (n, k−1) array of
    non-intercept columns. ε is N(0, 1) or AL(0, 1, p) per ``model_kind``.
    """
    beta = np.asarray(beta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    delta_from_gamma(gamma)  # validates γ₁ = 0 and ordering
    rng = kernels.make_rng(seed)
    k = beta.size
    if isinstance(design_law, str):
        if design_law == "normal":
            cols = rng.standard_normal((n, k - 1))
        elif design_law == "bernoulli":
            cols = (rng.random((n, k - 1)) < 0.5).astype(float)
        else:
            raise ValidationError(f"unknown design law {design_law!r}")
    else:
        cols = np.asarray(design_law, dtype=float).reshape(n, k - 1)
    if k > 1 and np.any(cols.std(axis=0) == 0.0):
        raise ValidationError("design has a zero-variance covariate column")
    X = np.column_stack([np.ones(n), cols])
    u = rng.random(n)
    err = model_kind.quantile_fn(u)
    z = X @ beta + err
    y = np.searchsorted(gamma, z, side="left") + 1
    return OrdinalDataset(y, X, tuple(names) if names else (), J=gamma.size + 1)
