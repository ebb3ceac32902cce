"""Types and functions shared by the probit and quantile samplers."""

from __future__ import annotations

import hashlib
import io
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg
from scipy.special import ndtr, ndtri

from . import kernels
from .errors import DomainError, ValidationError

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class ModelKind:
    """Link family: ``probit`` (normal errors) or ``quantile`` (AL(0, 1, p) errors)."""

    name: str = "probit"
    p: float | None = None

    def __post_init__(self):
        if self.name == "probit":
            if self.p is not None:
                raise ValidationError("probit model takes no quantile")
        elif self.name == "quantile":
            if self.p is None or not (0.0 < self.p < 1.0):
                raise DomainError(f"quantile p must lie in (0, 1), got {self.p!r}")
        else:
            raise ValidationError(f"unknown model kind {self.name!r}")

    @classmethod
    def probit(cls):
        return cls("probit")

    @classmethod
    def quantile(cls, p: float):
        return cls("quantile", float(p))

    @classmethod
    def parse(cls, text: str) -> "ModelKind":
        """Inverse of ``str()``: ``"probit"`` or ``"quantile:0.25"``."""
        if text == "probit":
            return cls.probit()
        name, _, p = text.partition(":")
        if name != "quantile" or not p:
            raise ValidationError(f"cannot parse model kind {text!r}")
        return cls.quantile(float(p))

    def __str__(self):
        return "probit" if self.name == "probit" else f"quantile:{self.p:g}"

    @property
    def is_quantile(self) -> bool:
        return self.name == "quantile"

    # Vectorised error-law helpers; all accept infinite arguments.
    def cdf(self, x):
        if self.is_quantile:
            return kernels.al_cdf(x, self.p)
        return ndtr(x)

    def sf(self, x):
        if self.is_quantile:
            return _al_sf(x, self.p)
        return ndtr(-np.asarray(x, dtype=float))

    def pdf(self, x):
        if self.is_quantile:
            return kernels.al_pdf(x, self.p)
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return np.exp(-0.5 * x * x) / _SQRT_2PI

    def pdf_slope(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_quantile:
            out = kernels.al_pdf_slope(x, self.p)
        else:
            with np.errstate(invalid="ignore"):
                out = -x * self.pdf(x)
        return np.where(np.isinf(x), 0.0, out)

    def quantile_fn(self, u):
        if self.is_quantile:
            return kernels.al_quantile(u, self.p)
        return ndtri(u)


def _al_sf(x, p):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        pos = (1.0 - p) * np.exp(-p * np.maximum(x, 0.0))
        neg = 1.0 - p * np.exp((1.0 - p) * np.minimum(x, 0.0))
    return np.where(x > 0.0, pos, neg)


PROBIT = ModelKind.probit()


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OrdinalDataset:
    """Ordinal responses ``y`` in 1..J and a design matrix with an intercept column.

    ``families`` optionally groups dummy columns that encode one
    categorical variable (e.g. the two non-reference GACC levels); it is
    used to warn about inconsistent covariate shifts.

    An empty dataset (n = 0) is allowed when ``J`` is given explicitly;
    otherwise every category must be observed.
    """

    y: np.ndarray
    X: np.ndarray
    covariate_names: tuple = ()
    J: int | None = None
    families: dict = field(default_factory=dict)
    # simulation harnesses may regenerate data with empty categories
    require_all_categories: bool = True

    def __post_init__(self):
        y = np.asarray(self.y)
        X = np.asarray(self.X, dtype=float)
        if y.ndim != 1 or X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValidationError(f"y must be length n and X n-by-k; got {y.shape} and {X.shape}")
        if y.size and not np.all(np.equal(np.mod(y, 1), 0)):
            raise ValidationError("y must hold integer category codes")
        y = y.astype(np.int64)
        n, k = X.shape
        if k < 1:
            raise ValidationError("design matrix needs at least the intercept column")
        if n and not np.all(X[:, 0] == 1.0):
            raise ValidationError("first column of X must be the intercept (all ones)")
        if not np.all(np.isfinite(X)):
            raise ValidationError("design matrix has non-finite entries")
        J = self.J if self.J is not None else (int(y.max()) if n else None)
        if J is None or J < 2:
            raise ValidationError("need at least two response categories")
        if n:
            if n < k:
                raise ValidationError(f"need n >= k, got n={n}, k={k}")
            if y.min() < 1 or y.max() > J:
                raise ValidationError(f"responses must lie in 1..{J}")
            counts = np.bincount(y, minlength=J + 1)[1:]
            missing = [j + 1 for j in np.flatnonzero(counts == 0)]
            if missing and self.require_all_categories:
                raise ValidationError(
                    f"categories {missing} never observed; cut-points are not identified")
        names = tuple(self.covariate_names) or ("Intercept",) + tuple(
            f"x{i}" for i in range(1, k))
        if len(names) != k:
            raise ValidationError(f"{len(names)} covariate names for {k} columns")
        y.setflags(write=False)
        X = X.copy()
        X.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "J", int(J))
        object.__setattr__(self, "covariate_names", names)
        object.__setattr__(self, "families", {k_: tuple(v) for k_, v in self.families.items()})

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]

    def column(self, name: str) -> int:
        try:
            return self.covariate_names.index(name)
        except ValueError:
            raise ValidationError(
                f"unknown covariate {name!r}; known: {', '.join(self.covariate_names)}") from None

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.y, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.X, dtype="<f8").tobytes())
        h.update("\x1f".join(self.covariate_names).encode())
        h.update(str(self.J).encode())
        return h.hexdigest()[:16]

    def category_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.J + 1)[1:]


# ---------------------------------------------------------------------------
# Cut-points
# ---------------------------------------------------------------------------

_EXP_MAX = np.log(np.finfo(float).max)


def gamma_from_delta(delta) -> np.ndarray:
    """Cut-points (γ₁=0, γ₂, …, γ_{J−1}) from log gaps δ."""
    delta = np.asarray(delta, dtype=float).ravel()
    if not np.all(np.isfinite(delta)):
        raise DomainError("delta must be finite")
    big = np.flatnonzero(delta > _EXP_MAX)
    if big.size:
        raise OverflowError(f"exp(delta[{big[0]}]) overflows (delta = {delta[big[0]]:g})")
    gamma = np.concatenate(([0.0], np.cumsum(np.exp(delta))))
    if not np.all(np.isfinite(gamma)):
        bad = int(np.flatnonzero(~np.isfinite(gamma))[0])
        raise OverflowError(f"cut-point {bad + 1} overflows")
    return gamma


def delta_from_gamma(gamma) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float).ravel()
    if gamma.size == 0 or gamma[0] != 0.0:
        raise DomainError("first cut-point must equal 0")
    gaps = np.diff(gamma)
    if np.any(gaps <= 0.0):
        raise DomainError("cut-points must be strictly increasing")
    return np.log(gaps)


@dataclass(frozen=True, eq=False)
class CutpointMap:
    delta: np.ndarray
    gamma: np.ndarray

    @classmethod
    def from_delta(cls, delta):
        delta = np.asarray(delta, dtype=float).ravel()
        return cls(delta, gamma_from_delta(delta))

    @classmethod
    def from_gamma(cls, gamma):
        gamma = np.asarray(gamma, dtype=float).ravel()
        return cls(delta_from_gamma(gamma), gamma)

    @property
    def J(self) -> int:
        return self.gamma.size + 1

    def bounds(self) -> np.ndarray:
        """(γ₀, γ₁, …, γ_J) with the infinite end points."""
        return np.concatenate(([-np.inf], self.gamma, [np.inf]))


def cut_bounds(delta) -> np.ndarray:
    return np.concatenate(([-np.inf], gamma_from_delta(delta), [np.inf]))


# ---------------------------------------------------------------------------
# Priors, configuration and stored draws
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PriorSpec:
    """Independent normal priors β ~ N(β₀, B₀), δ ~ N(d₀, D₀)."""

    beta_mean: np.ndarray
    beta_cov: np.ndarray
    delta_mean: np.ndarray
    delta_cov: np.ndarray

    def __post_init__(self):
        for name in ("beta_mean", "delta_mean"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        for name, mean in (("beta_cov", self.beta_mean), ("delta_cov", self.delta_mean)):
            cov = np.asarray(getattr(self, name), dtype=float).reshape(mean.size, mean.size)
            kernels.cholesky_spd(cov, f"PriorSpec.{name}")
            object.__setattr__(self, name, cov)
        object.__setattr__(self, "_beta_prec", kernels.spd_inverse(self.beta_cov, "PriorSpec.beta_cov"))
        # the δ prior is evaluated twice per sweep; keep its factor
        chol = kernels.cholesky_spd(self.delta_cov, "PriorSpec.delta_cov")
        const = -0.5 * self.delta_mean.size * np.log(2.0 * np.pi) - np.sum(np.log(np.diag(chol)))
        object.__setattr__(self, "_delta_chol", chol)
        object.__setattr__(self, "_delta_const", float(const))

    @classmethod
    def default(cls, k: int, J: int, beta_var: float = 1.0, delta_var: float = 0.25):
        """Diffuse defaults: β ~ N(0, I_k), δ ~ N(0, 0.25 I_{J−2})."""
        return cls(np.zeros(k), beta_var * np.eye(k), np.zeros(J - 2), delta_var * np.eye(J - 2))

    @property
    def beta_precision(self) -> np.ndarray:
        return self._beta_prec

    def check(self, data: OrdinalDataset):
        if self.beta_mean.size != data.k:
            raise ValidationError(f"beta prior has dimension {self.beta_mean.size}, data has k={data.k}")
        if self.delta_mean.size != data.J - 2:
            raise ValidationError(
                f"delta prior has dimension {self.delta_mean.size}, data needs J-2={data.J - 2}")

    def log_beta(self, beta) -> float:
        return float(kernels.mvn_logpdf(beta, self.beta_mean, self.beta_cov, "PriorSpec.beta_cov"))

    def log_delta(self, delta) -> float:
        dev = np.asarray(delta, dtype=float) - self.delta_mean
        if dev.size == 0:
            return 0.0
        sol = linalg.solve_triangular(self._delta_chol, dev, lower=True, check_finite=False)
        return self._delta_const - 0.5 * float(sol @ sol)

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist()
                for k in ("beta_mean", "beta_cov", "delta_mean", "delta_cov")}

    @classmethod
    def from_dict(cls, spec: dict, k: int, J: int) -> "PriorSpec":
        """Build from a mapping; scalars expand to constant vectors / scaled identities."""
        d = J - 2

        def vec(value, size):
            arr = np.asarray(value, dtype=float)
            return np.full(size, float(arr)) if arr.ndim == 0 else arr

        def mat(value, size):
            arr = np.asarray(value, dtype=float)
            if arr.ndim == 0:
                return float(arr) * np.eye(size)
            if arr.ndim == 1:
                return np.diag(arr)
            return arr

        return cls(vec(spec.get("beta_mean", 0.0), k), mat(spec.get("beta_cov", 1.0), k),
                   vec(spec.get("delta_mean", 0.0), d), mat(spec.get("delta_cov", 0.25), d))


@dataclass
class SamplerConfig:
    """MCMC run settings. Defaults follow the published run (10,000 kept after 2,500 burn-in)."""

    iterations: int = 12_500
    burn_in: int = 2_500
    iota: float = 1.0
    seed: int = 0
    p: float | None = None
    chain_count: int = 1
    adapt_iota: bool = True
    target_acceptance: float = 0.30
    # "sweep": mode/Hessian of the cut-point likelihood recomputed every sweep;
    # "burn_in": frozen after burn-in.
    refresh: str = "sweep"
    # quantile model only. "marginal": δ step targets π(δ | y, β) as printed;
    # "conditional": targets π(δ | y, β, w), which makes (δ, z) an exact block.
    delta_target: str = "marginal"

    def __post_init__(self):
        if self.iterations < 1 or self.burn_in < 0 or self.burn_in >= self.iterations:
            raise ValidationError("need 0 <= burn_in < iterations")
        if not self.iota > 0:
            raise ValidationError("tuning iota must be positive")
        if self.p is not None and not (0.0 < self.p < 1.0):
            raise DomainError(f"quantile p must lie in (0, 1), got {self.p!r}")
        if self.chain_count < 1:
            raise ValidationError("chain_count must be >= 1")
        if self.refresh not in ("sweep", "burn_in"):
            raise ValidationError("refresh must be 'sweep' or 'burn_in'")
        if self.delta_target not in ("marginal", "conditional"):
            raise ValidationError("delta_target must be 'marginal' or 'conditional'")

    @property
    def retained(self) -> int:
        return self.iterations - self.burn_in


@dataclass(eq=False)
class DrawsStore:
    """Post burn-in draws of (β, δ) plus Metropolis bookkeeping."""

    beta_draws: np.ndarray
    delta_draws: np.ndarray
    mh_accept_count: int
    model_kind: ModelKind
    covariate_names: tuple = ()
    iota: float = 1.0
    fingerprint: str = ""
    proposal_cov: np.ndarray | None = None  # frozen D̂ when refresh="burn_in"

    def __post_init__(self):
        self.beta_draws = np.atleast_2d(np.asarray(self.beta_draws, dtype=float))
        m = self.beta_draws.shape[0]
        self.delta_draws = np.asarray(self.delta_draws, dtype=float).reshape(m, -1)
        if not 0 <= self.mh_accept_count <= max(m, 0):
            raise ValidationError("accept count must lie in [0, M]")
        if self.delta_draws.shape[1] and np.any(np.exp(self.delta_draws) <= 0.0):
            raise ValidationError("stored delta rows do not map to increasing cut-points")
        if not self.covariate_names:
            self.covariate_names = tuple(f"beta{i}" for i in range(self.beta_draws.shape[1]))
        self.covariate_names = tuple(self.covariate_names)

    @property
    def M(self) -> int:
        return self.beta_draws.shape[0]

    @property
    def acceptance_rate(self) -> float:
        return self.mh_accept_count / self.M if self.M else 0.0

    @property
    def parameter_names(self) -> list[str]:
        return list(self.covariate_names) + [f"delta{j + 1}" for j in range(self.delta_draws.shape[1])]

    def matrix(self) -> np.ndarray:
        return np.hstack([self.beta_draws, self.delta_draws])

    def save(self, path):
        """Write an .npz archive atomically, with fixed zip timestamps so equal
        draws give identical bytes."""
        path = Path(path)
        arrays = {
            "beta": self.beta_draws, "delta": self.delta_draws,
            "accept": np.int64(self.mh_accept_count), "kind": np.str_(str(self.model_kind)),
            "names": np.array(self.covariate_names, dtype=str), "iota": np.float64(self.iota),
            "fingerprint": np.str_(self.fingerprint),
            "proposal_cov": np.zeros((0, 0)) if self.proposal_cov is None else self.proposal_cov,
        }
        tmp = path.with_name(path.name + ".tmp")
        with zipfile.ZipFile(tmp, "w", zipfile.ZIP_STORED) as zf:
            for key, value in arrays.items():
                info = zipfile.ZipInfo(key + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
                buf = io.BytesIO()
                np.lib.format.write_array(buf, np.asanyarray(value), allow_pickle=False)
                zf.writestr(info, buf.getvalue())
        tmp.replace(path)

    @classmethod
    def load(cls, path) -> "DrawsStore":
        with np.load(path, allow_pickle=False) as z:
            cov = z["proposal_cov"] if "proposal_cov" in z.files else np.zeros((0, 0))
            return cls(z["beta"], z["delta"], int(z["accept"]), ModelKind.parse(str(z["kind"])),
                       tuple(str(s) for s in z["names"]), float(z["iota"]), str(z["fingerprint"]),
                       cov if cov.size else None)


# ---------------------------------------------------------------------------
# Probabilities and likelihood
# ---------------------------------------------------------------------------

def _bin_probability(upper, lower, kind: ModelKind):
    """F(upper) − F(lower), evaluated on the tail side that avoids cancellation."""
    right = lower > 0.0
    return np.where(right, kind.sf(lower) - kind.sf(upper), kind.cdf(upper) - kind.cdf(lower))


def outcome_probabilities(x, beta, cutpoints, model_kind: ModelKind = PROBIT) -> np.ndarray:
    """P(y = j | x, β, γ) for j = 1..J.

    ``x`` may be a single k-vector or an (n, k) matrix; ``cutpoints`` is a
    CutpointMap or a δ vector.
    """
    if not isinstance(cutpoints, CutpointMap):
        cutpoints = CutpointMap.from_delta(cutpoints)
    eta = np.asarray(x, dtype=float) @ np.asarray(beta, dtype=float)
    cdf = model_kind.cdf(cutpoints.gamma - np.asarray(eta)[..., None])
    lead = np.zeros(cdf.shape[:-1] + (1,))
    full = np.concatenate([lead, cdf, lead + 1.0], axis=-1)
    return np.diff(full, axis=-1)


def observation_probabilities(y, eta, delta, kind: ModelKind) -> np.ndarray:
    """P(y_i | η_i, δ) for each observation (unclamped)."""
    bounds = cut_bounds(delta)
    return _bin_probability(bounds[y] - eta, bounds[y - 1] - eta, kind)


def log_likelihood(data: OrdinalDataset, beta, delta, model_kind: ModelKind = PROBIT) -> float:
    """ln f(y | β, δ): sum of clamped log bin probabilities."""
    if data.n == 0:
        return 0.0
    eta = data.X @ np.asarray(beta, dtype=float)
    prob = observation_probabilities(data.y, eta, delta, model_kind)
    return float(np.sum(np.log(kernels.clamp_prob(prob))))


def loglik_delta_derivatives(y, eta, delta, kind: ModelKind, J: int):
    """Value, gradient and Hessian of ln f(y | β, δ) in δ at fixed η = Xβ.

    Derivatives are taken in γ-coordinates, where each observation only
    touches the two cut-points bounding its bin, and mapped to δ through
    γ_t = Σ_{m < t} exp(δ_m).
    """
    delta = np.asarray(delta, dtype=float)
    d = delta.size
    bounds = cut_bounds(delta)
    upper, lower = bounds[y] - eta, bounds[y - 1] - eta
    prob = np.maximum(_bin_probability(upper, lower, kind), kernels.PROB_FLOOR)
    value = float(np.sum(np.log(np.minimum(prob, kernels.PROB_CEIL))))
    if d == 0:
        return value, np.zeros(0), np.zeros((0, 0))

    f_up, f_lo = kind.pdf(upper) / prob, kind.pdf(lower) / prob
    s_up, s_lo = kind.pdf_slope(upper) / prob, kind.pdf_slope(lower) / prob
    # cut-point index (0-based over γ₁..γ_{J−1}) touched as upper / lower bound
    idx_up, idx_lo = y - 1, y - 2
    size = J - 1
    has_up, has_lo = y < J, y > 1

    grad_g = (np.bincount(idx_up[has_up], f_up[has_up], size)
              - np.bincount(idx_lo[has_lo], f_lo[has_lo], size))
    diag = (np.bincount(idx_up[has_up], s_up[has_up] - f_up[has_up] ** 2, size)
            + np.bincount(idx_lo[has_lo], -s_lo[has_lo] - f_lo[has_lo] ** 2, size))
    both = has_up & has_lo
    off = np.bincount(idx_lo[both], f_up[both] * f_lo[both], size)[: size - 1]
    hess_g = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)

    gaps = np.exp(delta)
    jac = np.tril(np.ones((size, d)), -1) * gaps  # dγ_t/dδ_m = e^{δ_m} for t > m
    grad = jac.T @ grad_g
    tail_sums = np.cumsum(grad_g[::-1])[::-1][1:]  # Σ_{t > m} grad_g[t]
    hess = jac.T @ hess_g @ jac + np.diag(gaps * tail_sums)
    return value, grad, hess


def _al_cdf_varp(x, p):
    """AL cdf with an elementwise quantile array ``p`` (no argument checks)."""
    with np.errstate(over="ignore"):
        neg = p * np.exp((1.0 - p) * np.minimum(x, 0.0))
        pos = 1.0 - (1.0 - p) * np.exp(-p * np.maximum(x, 0.0))
    return np.where(x <= 0.0, neg, pos)


def _al_cdf_fixed(x, p: float):
    with np.errstate(over="ignore"):
        return np.where(x <= 0.0, p * np.exp((1.0 - p) * np.minimum(x, 0.0)),
                        1.0 - (1.0 - p) * np.exp(-p * np.maximum(x, 0.0)))


class CutpointLikelihood:
    """Fast evaluation of ln f(y | β, δ) and its δ-derivatives for fixed y.

    Observations are grouped by category once so each bin only evaluates
    the finite bounds it has, and tail bins are evaluated on the side of
    zero that avoids cancellation. Agrees with ``loglik_delta_derivatives``.
    """

    def __init__(self, y, J: int, kind: ModelKind):
        y = np.asarray(y, dtype=np.int64)
        self.J, self.kind = J, kind
        self.order = np.argsort(y, kind="stable")
        counts = np.bincount(y, minlength=J + 1)[1:]
        self.edges = np.concatenate(([0], np.cumsum(counts)))

    def _bin(self, upper, lower):
        """Return (P, f(upper), f(lower), f'(upper), f'(lower)); None for absent bounds."""
        kind = self.kind
        if kind.is_quantile:
            p = kind.p
            if lower is None:
                prob = _al_cdf_fixed(upper, p)
            elif upper is None:
                prob = _al_cdf_fixed(-lower, 1.0 - p)
            else:
                flip = lower > 0.0
                q = np.where(flip, 1.0 - p, p)
                a = np.where(flip, -lower, upper)
                b = np.where(flip, -upper, lower)
                prob = _al_cdf_varp(a, q) - _al_cdf_varp(b, q)
        else:
            if lower is None:
                prob = ndtr(upper)
            elif upper is None:
                prob = ndtr(-lower)
            else:
                flip = lower > 0.0
                prob = (ndtr(np.where(flip, -lower, upper))
                        - ndtr(np.where(flip, -upper, lower)))
        return np.maximum(prob, kernels.PROB_FLOOR)

    def _density(self, x):
        # bounds passed here are always finite
        if self.kind.is_quantile:
            p = self.kind.p
            return p * (1.0 - p) * np.exp(np.where(x < 0.0, (1.0 - p) * x, -p * x))
        return np.exp(-0.5 * x * x) / _SQRT_2PI

    def _slope_ratio(self, x, ratio):
        # f'(x)/P given f(x)/P, without re-evaluating the density
        if self.kind.is_quantile:
            p = self.kind.p
            return np.where(x < 0.0, 1.0 - p, -p) * ratio
        return -x * ratio

    def value(self, eta, delta) -> float:
        gamma = gamma_from_delta(delta)
        eta = np.asarray(eta)[self.order]
        total = 0.0
        for j in range(1, self.J + 1):
            a, b = self.edges[j - 1], self.edges[j]
            e = eta[a:b]
            upper = gamma[j - 1] - e if j < self.J else None
            lower = gamma[j - 2] - e if j > 1 else None
            prob = self._bin(upper, lower)
            total += np.sum(np.log(np.minimum(prob, kernels.PROB_CEIL)))
        return float(total)

    def derivatives(self, eta, delta):
        """(value, gradient, Hessian) in δ."""
        delta = np.asarray(delta, dtype=float)
        d = delta.size
        gamma = gamma_from_delta(delta)
        eta = np.asarray(eta)[self.order]
        J, kind = self.J, self.kind
        size = J - 1
        total = 0.0
        grad_g = np.zeros(size)
        diag = np.zeros(size)
        off = np.zeros(max(size - 1, 0))
        for j in range(1, J + 1):
            a, b = self.edges[j - 1], self.edges[j]
            e = eta[a:b]
            upper = gamma[j - 1] - e if j < J else None
            lower = gamma[j - 2] - e if j > 1 else None
            prob = self._bin(upper, lower)
            total += np.sum(np.log(np.minimum(prob, kernels.PROB_CEIL)))
            if d == 0:
                continue
            if upper is not None:
                fu = self._density(upper) / prob
                su = self._slope_ratio(upper, fu)
                grad_g[j - 1] += fu.sum()
                diag[j - 1] += np.sum(su - fu * fu)
            if lower is not None:
                fl = self._density(lower) / prob
                sl = self._slope_ratio(lower, fl)
                grad_g[j - 2] -= fl.sum()
                diag[j - 2] += np.sum(-sl - fl * fl)
            if upper is not None and lower is not None:
                off[j - 2] += np.sum(fu * fl)
        if d == 0:
            return float(total), np.zeros(0), np.zeros((0, 0))
        hess_g = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
        gaps = np.exp(delta)
        jac = np.tril(np.ones((size, d)), -1) * gaps
        grad = jac.T @ grad_g
        tail_sums = np.cumsum(grad_g[::-1])[::-1][1:]
        hess = jac.T @ hess_g @ jac + np.diag(gaps * tail_sums)
        return float(total), grad, hess
