"""Privacy-accounting conversions and closed-form hyperparameter calculators.

Everything here is a deterministic plug-in formula; randomized machinery
lives in the mechanism modules.  Deltas are carried in natural-log form
wherever they can underflow 64-bit floats (the purification deltas shrink
like (16 C d n^2)^-d), so every calculator that consumes a delta also
accepts ``log_delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "SgdHyperParams",
    "zcdp_to_dp",
    "subsampled_gaussian_zcdp",
    "sgd_hyperparams",
    "purify_hyperparams_sgd",
    "discrete_delta_threshold",
]


@dataclass(frozen=True)
class SgdHyperParams:
    """DP-SGD schedule: subsample rate, per-step Gaussian variance, iteration
    count, step size (or the strongly-convex schedule tag), and total zCDP."""

    gamma: float
    sigma2: float
    T: int
    eta: float
    rho: float
    strongly_convex: bool = False
    lam: float = 0.0  # strong-convexity modulus when strongly_convex
    valid: bool = True  # False when eps > (d ^ 8) log(1/delta)

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must be in (0,1], got {self.gamma}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if self.sigma2 < 0 or self.rho < 0:
            raise ValueError("sigma2 and rho must be >= 0")

    def batch_size(self, n: int) -> int:
        """Subsample size: gamma n rounded to nearest, at least 1."""
        return max(1, round(self.gamma * n))

    def step_size(self, t: int, n: int) -> float:
        """eta_t; constant for convex, 2/(n lam (t+1)) for strongly convex."""
        if self.strongly_convex:
            return 2.0 / (n * self.lam * (t + 1))
        return self.eta


def _resolve_log_delta(delta: float | None, log_delta: float | None) -> float:
    if log_delta is not None:
        return float(log_delta)
    if delta is None or not (0.0 < delta < 1.0):
        raise ValueError(f"delta must be in (0,1), got {delta}")
    return math.log(delta)


def zcdp_to_dp(rho: float, delta: float | None = None, log_delta: float | None = None) -> float:
    """rho-zCDP implies (rho + 2 sqrt(rho ln(1/delta)), delta)-DP."""
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    ld = _resolve_log_delta(delta, log_delta)
    if ld >= 0:
        raise ValueError("delta must be < 1")
    return rho + 2.0 * math.sqrt(rho * (-ld))


def subsampled_gaussian_zcdp(
    rho0: float,
    gamma: float,
    T: int,
    delta_target: float | None = None,
    log_delta_target: float | None = None,
) -> tuple[float, float | bool]:
    """Accounting value rho = 13 gamma^2 rho0 T for T steps of gamma-subsampled
    Gaussian noise, valid for Renyi orders alpha <= ln(1/gamma)/(4 rho0).

    With a target delta supplied, the second return is the boolean check that
    the conversion's optimizing order alpha* = 1 + sqrt(ln(1/delta)/rho) lies
    inside that range.  Without one, the alpha-range bound itself is returned
    for the caller to check.
    """
    if rho0 <= 0:
        raise ValueError(f"rho0 must be positive, got {rho0}")
    if not (0.0 < gamma < 1.0):
        raise ValueError(f"gamma must be in (0,1), got {gamma}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    rho = 13.0 * gamma * gamma * rho0 * T
    alpha_max = math.log(1.0 / gamma) / (4.0 * rho0)
    if delta_target is None and log_delta_target is None:
        return rho, alpha_max
    ld = _resolve_log_delta(delta_target, log_delta_target)
    alpha_star = 1.0 + math.sqrt(-ld / rho)
    return rho, alpha_star <= alpha_max


def sgd_hyperparams(
    n: int,
    d: int,
    eps: float,
    delta: float | None = None,
    L: float = 1.0,
    C: float = 1.0,
    lam: float | None = None,
    log_delta: float | None = None,
) -> SgdHyperParams:
    """DP-SGD schedule for an L-Lipschitz convex loss on an l2 domain of
    diameter C:

        gamma  = 2 sqrt(d ln(1/delta)) / (n sqrt(eps)),
        sigma2 = 416 L^2 ln(1/delta) / eps,
        T      = n^2 eps^2 / (d ln(1/delta))   (floored, min 1),
        eta    = sqrt(C^2 / (T (n^2 L^2 + d sigma2/gamma^2 + n L^2/gamma))).

    Passing ``lam`` switches to the strongly convex schedule
    eta_t = 2/(n lam (t+1)) with weighted iterate averaging.  The analysis
    needs eps <= (d ^ 8) ln(1/delta); violations set ``valid=False``.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    if eps <= 0 or L <= 0 or C <= 0:
        raise ValueError("eps, L and C must be positive")
    ld = _resolve_log_delta(delta, log_delta)
    log_inv = -ld
    if log_inv <= 0:
        raise ValueError("delta must be < 1")
    valid = eps <= min(d, 8) * log_inv

    gamma = 2.0 * math.sqrt(d * log_inv) / (n * math.sqrt(eps))
    gamma = min(gamma, 1.0)
    sigma2 = 416.0 * L * L * log_inv / eps
    T = max(1, math.floor(n * n * eps * eps / (d * log_inv)))
    # one step is a Gaussian release with sensitivity L, so rho0 = L^2/(2 sigma^2)
    rho0 = L * L / (2.0 * sigma2)
    rho = 13.0 * gamma * gamma * rho0 * T
    if lam is not None:
        return SgdHyperParams(
            gamma=gamma, sigma2=sigma2, T=T, eta=0.0, rho=rho,
            strongly_convex=True, lam=lam, valid=valid,
        )
    eta = math.sqrt(
        C * C / (T * (n * n * L * L + d * sigma2 / gamma**2 + n * L * L / gamma))
    )
    return SgdHyperParams(gamma=gamma, sigma2=sigma2, T=T, eta=eta, rho=rho, valid=valid)


def purify_hyperparams_sgd(n: int, d: int, C: float) -> tuple[float, float, float]:
    """Purification parameters for DP-SGD on an l2 domain of diameter C:

        omega = 1/n^2,   delta = 2 omega / (16 C d n^2)^d.

    Returns (omega, delta, log_delta); delta is 0.0 when it underflows, in
    which case log_delta is the usable representation.
    """
    if n < 2 or d < 1 or C <= 0:
        raise ValueError("need n >= 2, d >= 1, C > 0")
    omega = 1.0 / (n * n)
    base = 16.0 * C * d * n * n
    log_delta = math.log(2.0 * omega) - d * math.log(base)
    if log_delta > -700:
        # direct evaluation is exact where it does not underflow
        delta = 2.0 * omega / base**d
    else:
        delta = 0.0
    return omega, delta, log_delta


def discrete_delta_threshold(d: int, eps: float) -> tuple[float, float]:
    """Validity threshold eps^d / (2d)^(3d) of discrete purification's
    identity guarantee.  Returns (threshold, log_threshold); the float
    threshold is 0.0 when it underflows."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    log_thr = d * math.log(eps) - 3.0 * d * math.log(2.0 * d)
    if log_thr > -700 and d * math.log(eps) < 700 and 3 * d * math.log(2.0 * d) < 700:
        # direct evaluation is exact where no intermediate under/overflows
        thr = eps**d / (2.0 * d) ** (3 * d)
    elif log_thr > -700:
        thr = math.exp(log_thr)
    else:
        thr = 0.0
    return thr, log_thr
