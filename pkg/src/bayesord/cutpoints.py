"""Random-walk Metropolis update for the cut-point log gaps δ.

Both samplers draw δ marginally of the latent data, with a proposal
scaled by the negative inverse Hessian of ln f(y | β, δ) at its mode.
The code here is link-agnostic; the link enters through ``ModelKind``.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .core import CutpointLikelihood, ModelKind, OrdinalDataset, PriorSpec
from .errors import ConvergenceError, SingularityError


def initial_delta(data: OrdinalDataset, kind: ModelKind) -> np.ndarray:
    """Cut-points matching the empirical cumulative category shares at η = 0.

    The shares are pushed through the error quantile function and shifted
    so that γ₁ = 0.
    """
    if data.J == 2:
        return np.zeros(0)
    counts = np.bincount(data.y, minlength=data.J + 1)[1:].astype(float)
    cum = np.cumsum(counts)[:-1] / counts.sum()
    cuts = kind.quantile_fn(cum)
    return np.log(np.diff(cuts))


def delta_mode_and_hessian(data: OrdinalDataset, beta, kind: ModelKind, start=None,
                           tol: float = 1e-6, max_iter: int = 100, eta=None, lik=None):
    """Maximise ln f(y | β, δ) over δ by damped Newton.

    Returns ``(delta_hat, D_hat)`` with ``D_hat`` the negative inverse
    Hessian at the mode. Raises ConvergenceError carrying the last
    iterate if the gradient norm does not fall below ``tol``.
    """
    d = data.J - 2
    if d == 0:
        return np.zeros(0), np.zeros((0, 0))
    if eta is None:
        eta = data.X @ np.asarray(beta, dtype=float)
    delta = initial_delta(data, kind) if start is None else np.array(start, dtype=float)
    if lik is None:
        lik = CutpointLikelihood(data.y, data.J, kind)

    value, grad, hess = lik.derivatives(eta, delta)
    for _ in range(max_iter):
        if np.max(np.abs(grad)) <= tol:
            break
        neg = -hess
        try:
            step = kernels.chol_solve_spd(neg, grad, "delta_mode_and_hessian")
        except SingularityError:
            # Off the concave region: fall back to a regularised step.
            w, v = np.linalg.eigh(0.5 * (neg + neg.T))
            w = np.maximum(np.abs(w), 1e-8 * max(1.0, np.abs(w).max()))
            step = v @ ((v.T @ grad) / w)
        step_len = 1.0
        for _ in range(60):
            trial = delta + step_len * step
            try:
                t_val, t_grad, t_hess = lik.derivatives(eta, trial)
            except OverflowError:
                t_val = -np.inf
            if t_val >= value - 1e-12 * abs(value) and np.isfinite(t_val):
                break
            step_len *= 0.5
        else:
            raise ConvergenceError("line search failed while locating the cut-point mode",
                                   delta, grad)
        delta, value, grad, hess = trial, t_val, t_grad, t_hess
    else:
        if np.max(np.abs(grad)) > tol:
            raise ConvergenceError(
                f"cut-point mode not found in {max_iter} Newton steps "
                f"(|grad| = {np.max(np.abs(grad)):.3g})", delta, grad)

    neg = -hess
    neg = 0.5 * (neg + neg.T)
    d_hat = kernels.spd_inverse(neg, "delta_mode_and_hessian")
    return delta, 0.5 * (d_hat + d_hat.T)


def mh_log_ratio(data: OrdinalDataset, beta, delta, proposal, priors: PriorSpec,
                 kind: ModelKind, eta=None, lik=None) -> float:
    """log of f(y|β,δ′)π(δ′) / f(y|β,δ)π(δ).

    The β prior cancels because the priors are independent.
    """
    if eta is None:
        eta = data.X @ np.asarray(beta, dtype=float)
    if lik is None:
        lik = CutpointLikelihood(data.y, data.J, kind)
    try:
        new = lik.value(eta, proposal)
    except OverflowError:
        return -np.inf
    old = lik.value(eta, delta)
    return (new + priors.log_delta(proposal)) - (old + priors.log_delta(delta))


def draw_delta_mh(data: OrdinalDataset, beta, delta, iota: float, d_hat, priors: PriorSpec,
                  rng, kind: ModelKind, step=None, eta=None, lik=None):
    """One random-walk step δ′ = δ + s, s ~ N(0, ι² D̂).

    ``step`` overrides the random increment (used in tests). Returns
    ``(delta_next, accepted)``.
    """
    delta = np.asarray(delta, dtype=float)
    if delta.size == 0:
        return delta, True
    if step is None:
        chol = kernels.cholesky_spd(d_hat, "delta_mode_and_hessian")
        step = iota * (chol @ rng.standard_normal(delta.size))
    proposal = delta + np.asarray(step, dtype=float)
    log_ratio = mh_log_ratio(data, beta, delta, proposal, priors, kind, eta=eta, lik=lik)
    # Always consume one uniform so the stream does not depend on the ratio.
    u = rng.random()
    if log_ratio >= 0.0 or np.log(u) < log_ratio:
        return proposal, True
    return delta, False


class IotaTuner:
    """Robbins–Monro tuning of ι toward a target acceptance rate.

    Only active during burn-in; ``freeze()`` fixes ι for the retained
    sweeps so the kernel is time-homogeneous there.
    """

    def __init__(self, iota: float, target: float = 0.30, active: bool = True):
        self.log_iota = float(np.log(iota))
        self.target = target
        self.active = active
        self._t = 0

    @property
    def iota(self) -> float:
        return float(np.exp(self.log_iota))

    def update(self, accepted: bool):
        if not self.active:
            return
        self._t += 1
        gain = min(0.5, 5.0 / (self._t + 10) ** 0.6)
        self.log_iota += gain * (float(accepted) - self.target)
        self.log_iota = float(np.clip(self.log_iota, np.log(1e-3), np.log(1e2)))

    def freeze(self):
        self.active = False


class ProposalCache:
    """Holds (δ̂, D̂) and refreshes it at the current β according to the policy."""

    def __init__(self, data: OrdinalDataset, kind: ModelKind, policy: str = "sweep"):
        self.data, self.kind, self.policy = data, kind, policy
        self.lik = CutpointLikelihood(data.y, data.J, kind)
        self.mode = None
        self.cov = None
        self.frozen = False

    def get(self, beta, eta=None):
        if self.cov is None or not self.frozen:
            self.mode, self.cov = delta_mode_and_hessian(
                self.data, beta, self.kind, start=self.mode, eta=eta, lik=self.lik)
        return self.mode, self.cov

    def end_burn_in(self):
        if self.policy == "burn_in":
            self.frozen = True
