"""DP-ERM solvers: DP-SGD, the Laplace noisy-GD pure baseline, and purified
DP-SGD, together with synthetic convex benchmark problems whose non-private
optima are available in closed form (for excess-risk oracles).

Conventions: the empirical risk is the mean loss L(theta) = (1/n) sum f; the
appendix analyses optimize the sum F = n L, which only changes reported risks
by the factor n and is absorbed in the step-size formulas below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .accounting import SgdHyperParams, purify_hyperparams_sgd, sgd_hyperparams
from .core import LqBall, PurifyParams, RngStream, clip_to_ball, purify

__all__ = [
    "ConvexProblem",
    "GdResult",
    "PurifiedResult",
    "mean_quadratic_problem",
    "logistic_problem",
    "dpsgd",
    "laplace_noisy_gd",
    "purified_dpsgd",
]


@dataclass(frozen=True)
class ConvexProblem:
    """Convex per-example loss with vectorized oracles.

    ``loss_batch(theta, data)`` returns per-example losses (n,);
    ``grad_batch(theta, data)`` returns per-example gradients (n, d).
    ``lipschitz`` bounds the per-example gradient norm on the domain (l2 for
    the SGD solvers; the Frank-Wolfe module reuses the field as the l_inf
    gradient bound L1 on l1 domains).
    """

    dim: int
    domain: LqBall
    loss_batch: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_batch: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lipschitz: float
    strong_convexity: float | None = None
    smoothness: float | None = None

    def risk(self, theta: np.ndarray, data: np.ndarray) -> float:
        """Empirical mean risk L(theta; D)."""
        return float(np.mean(self.loss_batch(theta, data)))


def mean_quadratic_problem(domain: LqBall, lipschitz: float | None = None) -> ConvexProblem:
    """Mean estimation: f(theta; x) = (1/2)||theta - x||_2^2.

    The empirical minimizer is the projected data mean, so excess risk is
    available in closed form.  Lipschitz constant defaults to the domain
    diameter plus the data radius bound (= 2 x diameter is safe when data
    lies in the domain).
    """
    L = lipschitz if lipschitz is not None else 2.0 * domain.diameter

    def loss_batch(theta, data):
        diff = theta[None, :] - data
        return 0.5 * np.sum(diff * diff, axis=1)

    def grad_batch(theta, data):
        return theta[None, :] - data

    return ConvexProblem(
        dim=domain.dim,
        domain=domain,
        loss_batch=loss_batch,
        grad_batch=grad_batch,
        lipschitz=L,
        strong_convexity=1.0,
        smoothness=1.0,
    )


def logistic_problem(domain: LqBall, feature_bound: float) -> ConvexProblem:
    """Binary logistic loss on bounded features.

    Data rows are (a_1..a_d, y) with y in {-1, +1} and ||a||_2 <= B; the
    per-example gradient norm is at most B, the smoothness at most B^2/4.
    """

    def loss_batch(theta, data):
        a, y = data[:, :-1], data[:, -1]
        z = -y * (a @ theta)
        # log(1 + e^z), stable for large |z|
        return np.logaddexp(0.0, z)

    def grad_batch(theta, data):
        a, y = data[:, :-1], data[:, -1]
        z = -y * (a @ theta)
        w = 1.0 / (1.0 + np.exp(-z))  # sigmoid(z)
        return (-y * w)[:, None] * a

    return ConvexProblem(
        dim=domain.dim,
        domain=domain,
        loss_batch=loss_batch,
        grad_batch=grad_batch,
        lipschitz=feature_bound,
        smoothness=feature_bound**2 / 4.0,
    )


def _clip_rows(g: np.ndarray, L: float) -> np.ndarray:
    norms = np.linalg.norm(g, axis=1)
    scale = np.minimum(1.0, L / np.maximum(norms, 1e-300))
    return g * scale[:, None]


def _subsample(gen: np.random.Generator, n: int, b: int) -> np.ndarray:
    if b >= n:
        return np.arange(n)
    return gen.choice(n, size=b, replace=False)


def dpsgd(
    problem: ConvexProblem,
    data: np.ndarray,
    params: SgdHyperParams,
    rng: RngStream,
    clip: bool = True,
    theta0: np.ndarray | None = None,
    noise_override: float | None = None,
) -> np.ndarray:
    """Differentially private SGD.

    Per iteration: subsample a gamma-fraction batch without replacement, sum
    per-example gradients (optionally l2-clipped at the Lipschitz constant,
    default on), add sigma N(0, I), scale by 1/gamma, take a projected step.
    Returns the uniform average of iterates, or the 2t/(T(T+1))-weighted
    average in the strongly convex regime.

    ``noise_override`` replaces sigma (e.g. 0.0 for deterministic oracles).
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    if n == 0:
        raise ValueError("empty dataset")
    gen = rng.generator()
    L = problem.lipschitz
    sigma = math.sqrt(params.sigma2) if noise_override is None else noise_override
    b = params.batch_size(n)
    theta = problem.domain.center.copy() if theta0 is None else np.asarray(theta0, float)
    avg = np.zeros_like(theta)
    wsum = 0.0
    for t in range(params.T):
        idx = _subsample(gen, n, b)
        g = problem.grad_batch(theta, data[idx])
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient encountered")
        if clip:
            g = _clip_rows(g, L)
        gsum = g.sum(axis=0)
        if sigma > 0:
            gsum = gsum + sigma * gen.standard_normal(problem.dim)
        ghat = gsum / params.gamma
        theta = clip_to_ball(theta - params.step_size(t, n) * ghat, problem.domain)
        w = 2.0 * (t + 1) / (params.T * (params.T + 1)) if params.strongly_convex else 1.0 / params.T
        avg += w * theta
        wsum += w
    return avg / wsum


@dataclass(frozen=True)
class GdResult:
    theta: np.ndarray
    T: int
    noise_scale: float
    t_clamped: bool  # True when the closed-form T came out below 1


def laplace_noisy_gd(
    problem: ConvexProblem,
    data: np.ndarray,
    eps: float,
    rng: RngStream,
    delta1: float | None = None,
    noise_override: float | None = None,
) -> GdResult:
    """Pure-DP full-batch gradient descent with per-iteration Laplace noise.

    The gradient sum has l1 sensitivity Delta_1 (default sqrt(d) L); the
    schedule is

        T = floor(eps n L / (Delta_1 sqrt(d))),  clamped to >= 1,
        sigma = Delta_1 T / eps                  (per-coordinate Laplace scale,
                                                  i.e. eps/T budget per step),
        eta = C / sqrt(T (n^2 L^2 + 2 d sigma^2)),

    with C the domain diameter.  Returns the uniform iterate average; the
    whole run is eps-pure-DP by composition of the T Laplace releases.
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    if n == 0:
        raise ValueError("empty dataset")
    d = problem.dim
    L = problem.lipschitz
    if delta1 is None:
        delta1 = math.sqrt(d) * L
    t_raw = math.floor(eps * n * L / (delta1 * math.sqrt(d)))
    T = max(1, t_raw)
    sigma = delta1 * T / eps
    noise = sigma if noise_override is None else noise_override
    C = problem.domain.diameter
    eta = C / math.sqrt(T * (n * n * L * L + 2.0 * d * sigma * sigma))

    gen = rng.generator()
    theta = problem.domain.center.copy()
    avg = np.zeros_like(theta)
    for _ in range(T):
        g = problem.grad_batch(theta, data)
        g = _clip_rows(g, L)
        gsum = g.sum(axis=0)
        if noise > 0:
            gsum = gsum + gen.laplace(0.0, noise, size=d)
        theta = clip_to_ball(theta - eta * gsum, problem.domain)
        avg += theta / T
    return GdResult(theta=avg, T=T, noise_scale=sigma, t_clamped=t_raw < 1)


@dataclass(frozen=True)
class PurifiedResult:
    theta_pure: np.ndarray
    theta_apx: np.ndarray
    params: PurifyParams
    hyper: SgdHyperParams
    mixed: bool


def purified_dpsgd(
    problem: ConvexProblem,
    data: np.ndarray,
    eps: float,
    rng: RngStream,
    clip: bool = True,
) -> PurifiedResult:
    """Pure DP SGD: run DP-SGD with the purification-matched delta, then
    purify the average iterate with eps' = eps.

    With omega = 1/n^2 and delta = 2 omega/(16 C d n^2)^d (C the l2 domain
    diameter) the composite is 2 eps-pure-DP and the purification step moves
    the output by at most 1/(n^2 eps) + C/n^2 in expectation.
    """
    if problem.domain.q != 2.0:
        raise ValueError("purified_dpsgd needs an l2 domain ball")
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    d = problem.dim
    C = problem.domain.diameter
    omega, _, log_delta = purify_hyperparams_sgd(n, d, C)
    hyper = sgd_hyperparams(
        n, d, eps, log_delta=log_delta, L=problem.lipschitz, C=C
    )
    theta_apx = dpsgd(problem, data, hyper, rng.child("sgd"), clip=clip)
    params = PurifyParams.calibrate(
        problem.domain, eps=eps, eps_prime=eps, omega=omega, log_delta=log_delta
    )
    theta_pure, info = purify(
        theta_apx, problem.domain, params, rng.child("purify"), return_info=True
    )
    return PurifiedResult(
        theta_pure=theta_pure,
        theta_apx=theta_apx,
        params=params,
        hyper=hyper,
        mixed=info.mixed,
    )
