"""Scalar distribution functions, random variates and small SPD linear algebra.

Everything random takes an explicit ``numpy.random.Generator``; the
package never touches global RNG state.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg
from scipy.special import ndtr, ndtri

from .errors import DomainError, SingularityError

# Probability clamp used whenever a cdf difference feeds a logarithm.
PROB_FLOOR = 1e-300
PROB_CEIL = 1.0 - 1e-16

# Beyond this many standard deviations the inverse-cdf route loses
# precision and truncated normals switch to exponential rejection.
TAIL_SWITCH = 5.0


def make_rng(seed) -> np.random.Generator:
    """Return a PCG64 generator; ``seed`` may be an int or a SeedSequence."""
    return np.random.Generator(np.random.PCG64(seed))


def spawn_streams(seed, count: int) -> list[np.random.Generator]:
    """Fork ``count`` statistically independent generators from one seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [make_rng(child) for child in children]


# ---------------------------------------------------------------------------
# Normal and asymmetric Laplace laws
# ---------------------------------------------------------------------------

def normal_cdf(x):
    """Standard normal cdf. Raises DomainError on non-finite input."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"normal_cdf needs finite input, got {x!r}")
    out = ndtr(arr)
    return float(out) if out.ndim == 0 else out


def clamp_prob(prob):
    return np.clip(prob, PROB_FLOOR, PROB_CEIL)


def _check_quantile(p):
    if not (0.0 < p < 1.0):
        raise DomainError(f"quantile p must lie in (0, 1), got {p!r}")


def al_cdf(x, p: float):
    """Cdf of the asymmetric Laplace law AL(0, 1, p).

    ``F(x) = p exp((1-p) x)`` for ``x <= 0`` and ``1 - (1-p) exp(-p x)``
    otherwise, so that ``F(0) = p``. Infinite ``x`` is accepted.
    """
    _check_quantile(p)
    arr = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        neg = p * np.exp((1.0 - p) * np.minimum(arr, 0.0))
        pos = 1.0 - (1.0 - p) * np.exp(-p * np.maximum(arr, 0.0))
    out = np.where(arr <= 0.0, neg, pos)
    return float(out) if out.ndim == 0 else out


def al_pdf(x, p: float):
    _check_quantile(p)
    arr = np.asarray(x, dtype=float)
    check = np.where(arr < 0.0, (1.0 - p) * arr, -p * arr)
    with np.errstate(over="ignore"):
        out = p * (1.0 - p) * np.exp(check)
    out = np.where(np.isinf(arr), 0.0, out)
    return float(out) if out.ndim == 0 else out


def al_pdf_slope(x, p: float):
    """Derivative of the AL density (one-sided limit from the right at 0)."""
    arr = np.asarray(x, dtype=float)
    dens = al_pdf(arr, p)
    return np.where(arr < 0.0, (1.0 - p) * dens, -p * dens)


def al_quantile(u, p: float):
    """Inverse of :func:`al_cdf`."""
    _check_quantile(p)
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        low = np.log(u / p) / (1.0 - p)
        high = -np.log((1.0 - u) / (1.0 - p)) / p
    out = np.where(u <= p, low, high)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Random variates
# ---------------------------------------------------------------------------

def _upper_tail(a, b, rng):
    """Standard normal truncated to [a, b] with a >= TAIL_SWITCH.

    Exponential proposal with the optimal rate, truncated at b
    (Robert, 1995). Works for b = inf.
    """
    out = np.empty(a.shape)
    todo = np.arange(a.size)
    while todo.size:
        lo, hi = a[todo], b[todo]
        rate = 0.5 * (lo + np.sqrt(lo * lo + 4.0))
        span = -np.expm1(-rate * (hi - lo))
        u = rng.random(todo.size)
        x = lo - np.log1p(-u * span) / rate
        accept = rng.random(todo.size) <= np.exp(-0.5 * (x - rate) ** 2)
        out[todo[accept]] = x[accept]
        todo = todo[~accept]
    return out


def _standard_truncated(a, b, rng):
    out = np.empty(a.shape)
    upper = a >= TAIL_SWITCH
    lower = b <= -TAIL_SWITCH
    if upper.any():
        out[upper] = _upper_tail(a[upper], b[upper], rng)
    if lower.any():
        out[lower] = -_upper_tail(-b[lower], -a[lower], rng)

    central = ~(upper | lower)
    if central.any():
        ac, bc = a[central], b[central]
        u = rng.random(ac.size)
        # Invert on the side of zero that keeps the most precision.
        right = ac > 0.0
        x = np.empty(ac.size)
        if right.any():
            sa, sb = ndtr(-ac[right]), ndtr(-bc[right])
            x[right] = -ndtri(sb + u[right] * (sa - sb))
        left = ~right
        if left.any():
            ca, cb = ndtr(ac[left]), ndtr(bc[left])
            x[left] = ndtri(ca + u[left] * (cb - ca))
        out[central] = x
    return out


def sample_truncated_normal(mean, variance, lower, upper, rng):
    """Draw from N(mean, variance) restricted to the open interval (lower, upper).

    Arguments broadcast against each other; a scalar is returned when all
    inputs are scalars. Bounds may be infinite. The central regime uses
    inverse-cdf sampling and intervals further than five standard
    deviations out use exponential rejection, so intervals with
    vanishing mass still yield valid draws.
    """
    mean, variance, lower, upper = np.broadcast_arrays(
        np.asarray(mean, dtype=float), np.asarray(variance, dtype=float),
        np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))
    scalar = mean.ndim == 0
    if np.any(variance <= 0.0) or not np.all(np.isfinite(variance)):
        raise DomainError("truncated normal variance must be positive and finite")
    if np.any(lower >= upper):
        raise DomainError("truncated normal needs lower < upper")

    sd = np.sqrt(variance).ravel()
    mu = mean.ravel()
    lo, hi = lower.ravel(), upper.ravel()
    x = _standard_truncated((lo - mu) / sd, (hi - mu) / sd, rng)
    z = mu + sd * x
    # Rounding can land on a bound; pull back into the open interval.
    z = np.clip(z, np.nextafter(lo, np.inf), np.nextafter(hi, -np.inf))
    if scalar:
        return float(z[0])
    return z.reshape(mean.shape)


def sample_gig_half(a, b, rng):
    """Draw from GIG(1/2, a, b), density ∝ w^{-1/2} exp{-(a/w + b w)/2}.

    The reciprocal of such a draw is inverse Gaussian with mean
    sqrt(b/a) and shape b, which is sampled with the transformation
    method of Michael, Schucany and Haas written in a cancellation-free
    form. ``a = 0`` is the Gamma(1/2, rate b/2) limit.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float),
                               np.asarray(b, dtype=float))
    scalar = a.ndim == 0
    a, b = a.ravel(), b.ravel()
    if np.any(b <= 0.0) or not np.all(np.isfinite(b)):
        raise DomainError("GIG parameter b must be positive and finite")
    if np.any(a < 0.0) or not np.all(np.isfinite(a)):
        raise DomainError("GIG parameter a must be non-negative and finite")

    y = rng.standard_normal(a.size) ** 2
    u = rng.random(a.size)
    root_ab = np.sqrt(a) * np.sqrt(b)
    # the law differs from its a = 0 limit by O(sqrt(ab)); below 1e-100 the
    # transformation would overflow, so take the Gamma branch
    gamma_branch = root_ab < 1e-100

    w = np.empty(a.size)
    w[gamma_branch] = y[gamma_branch] / b[gamma_branch]
    ig = ~gamma_branch
    if ig.any():
        r = y[ig] / (2.0 * root_ab[ig])
        s = 1.0 + r + np.sqrt(r * (2.0 + r))
        scale = np.sqrt(a[ig] / b[ig])
        w[ig] = np.where(u[ig] * (s + 1.0) <= s, s * scale, scale / s)
    # a tiny chi-square draw can underflow w to zero
    w = np.maximum(w, np.finfo(float).tiny)
    if scalar:
        return float(w[0])
    return w


def gig_half_mean(a, b):
    """Mean of GIG(1/2, a, b) (Bessel ratio closed form)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a > 0, np.sqrt(a / b) * (1.0 + 1.0 / np.sqrt(a * b)), 1.0 / b)
    return out


# ---------------------------------------------------------------------------
# SPD linear algebra
# ---------------------------------------------------------------------------

def check_spd(matrix, source: str = "caller"):
    """Return ``matrix`` as a float array after checking symmetry and shape."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise SingularityError(f"matrix is not square: {m.shape}", source)
    if m.size and not np.all(np.isfinite(m)):
        raise SingularityError("matrix has non-finite entries", source)
    scale = max(np.abs(m).max(initial=0.0), 1.0)
    if m.size and np.abs(m - m.T).max() > 1e-12 * scale:
        raise SingularityError("matrix is not symmetric", source)
    return m


def cholesky_spd(matrix, source: str = "caller"):
    """Lower Cholesky factor; SingularityError names ``source`` on failure."""
    m = check_spd(matrix, source)
    if m.shape[0] == 0:
        return m.copy()
    try:
        return linalg.cholesky(m, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularityError(f"Cholesky factorization failed: {exc}", source) from None


def chol_solve_spd(matrix, rhs, source: str = "caller"):
    """Solve ``matrix @ x = rhs`` for SPD ``matrix``."""
    chol = cholesky_spd(matrix, source)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != chol.shape[0]:
        raise ValueError(f"rhs has leading dimension {rhs.shape[0]}, "
                         f"matrix is {chol.shape[0]}x{chol.shape[0]}")
    if chol.shape[0] == 0:
        return rhs.copy()
    return linalg.cho_solve((chol, True), rhs)


def spd_inverse(matrix, source: str = "caller"):
    m = check_spd(matrix, source)
    return chol_solve_spd(m, np.eye(m.shape[0]), source)


def sample_mvn(mean, covariance, rng, size=None, source: str = "caller"):
    """Multivariate normal draw via the Cholesky factor of ``covariance``."""
    mean = np.asarray(mean, dtype=float)
    chol = cholesky_spd(covariance, source)
    if chol.shape[0] != mean.shape[0]:
        raise ValueError("mean and covariance dimensions disagree")
    if size is None:
        return mean + chol @ rng.standard_normal(mean.shape[0])
    eps = rng.standard_normal((size, mean.shape[0]))
    return mean + eps @ chol.T


def mvn_logpdf(x, mean, covariance, source: str = "caller"):
    """Log density of N(mean, covariance) at ``x`` (rows of x if 2-D)."""
    chol = cholesky_spd(covariance, source)
    k = chol.shape[0]
    if k == 0:
        return 0.0 if np.ndim(x) <= 1 else np.zeros(np.shape(x)[0])
    dev = np.asarray(x, dtype=float) - mean
    sol = linalg.solve_triangular(chol, dev.T, lower=True)
    quad = np.sum(sol * sol, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (k * np.log(2.0 * np.pi) + logdet + quad)
