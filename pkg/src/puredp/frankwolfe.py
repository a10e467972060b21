"""l1-constrained DP-ERM: private Frank-Wolfe, random projections with the
restricted isometry property, l1 sparse recovery by linear programming, and
the purified Frank-Wolfe pipeline (project - purify - recover).

The domain throughout is the l1 ball of radius ||C||_1 centered at the
origin, whose vertex set is {+- ||C||_1 e_i}.  ``ConvexProblem.lipschitz`` is
read as L1, the l_inf bound on per-example gradients (the Lipschitz constant
with respect to the l1 norm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LqBall, PurifyParams, RngStream, clip_to_ball, purify
from .erm import ConvexProblem
from .simplex import LpStatus, solve_lp

__all__ = [
    "RipMatrix",
    "FwResult",
    "PurifiedFwResult",
    "FeasibilityError",
    "dp_fw",
    "gen_rip_matrix",
    "sparse_recover",
    "sparse_recovery_error_bound",
    "purified_fw",
]


class FeasibilityError(RuntimeError):
    """The recovery LP has no feasible point within the noise tolerance."""


@dataclass(frozen=True)
class RipMatrix:
    """k x d random projection with i.i.d. N(0, 1/k) entries, sized for
    (e, s)-RIP; ``k_exceeds_d`` flags the regime where the projection does
    not actually reduce dimension (still usable)."""

    entries: np.ndarray
    k: int
    d: int
    s: int
    e: float
    k_exceeds_d: bool = False

    def __post_init__(self):
        if self.entries.shape != (self.k, self.d):
            raise ValueError("entry matrix shape does not match (k, d)")
        if self.k < 1:
            raise ValueError("k must be >= 1")


def gen_rip_matrix(
    s: int, d: int, e: float, zeta: float, rng: RngStream, const: float = 8.0
) -> RipMatrix:
    """Gaussian matrix satisfying (e, s)-RIP with probability >= 1 - zeta,

        k = ceil(const (s ln(d/s) + ln(1/zeta)) / e^2),

    entries i.i.d. N(0, 1/k).  (e, s)-RWC follows from (e/5, 25 s/e^2)-RIP
    when that is the property needed downstream.
    """
    if not 1 <= s <= d:
        raise ValueError("need 1 <= s <= d")
    if not (0.0 < e < 1.0) or not (0.0 < zeta < 1.0):
        raise ValueError("need e and zeta in (0,1)")
    k = math.ceil(const * (s * math.log(d / s) + math.log(1.0 / zeta)) / (e * e))
    k = max(1, k)
    gen = rng.generator()
    phi = gen.standard_normal((k, d)) / math.sqrt(k)
    return RipMatrix(entries=phi, k=k, d=d, s=s, e=e, k_exceeds_d=k > d)


@dataclass(frozen=True)
class FwResult:
    theta: np.ndarray
    T: int
    noise_scale: float


def dp_fw(
    problem: ConvexProblem,
    data: np.ndarray,
    eps: float,
    T: int,
    rng: RngStream,
    delta: float | None = None,
    log_delta: float | None = None,
    noise_override: float | None = None,
) -> FwResult:
    """Approximate-DP Frank-Wolfe over the l1 ball.

    Per iteration the 2d vertex scores <s, grad L(theta_t)> are perturbed by
    i.i.d. Laplace noise of scale

        L1 ||C||_1 sqrt(8 T ln(1/delta)) / (n eps)

    and the minimizing vertex is taken (ties to the lowest index); the step
    is theta_{t+1} = (1 - eta_t) theta_t + eta_t s with eta_t = 2/(t+2).
    Scores are formed from +-||C||_1 times the gradient coordinates in O(d),
    never materializing the 2d dot products.  theta_T is min(T, d)-sparse.
    """
    if problem.domain.q != 1.0 or np.any(problem.domain.center != 0.0):
        raise ValueError("dp_fw needs the l1 ball centered at the origin")
    if log_delta is None:
        if delta is None or not (0.0 < delta < 1.0):
            raise ValueError("provide delta in (0,1) or log_delta")
        log_delta = math.log(delta)
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    r = problem.domain.radius
    scale = (
        problem.lipschitz * r * math.sqrt(8.0 * T * (-log_delta)) / (n * eps)
        if noise_override is None
        else noise_override
    )
    gen = rng.generator()
    d = problem.dim
    theta = np.zeros(d)
    for t in range(T):
        g = problem.grad_batch(theta, data).mean(axis=0)
        scores = np.concatenate([r * g, -r * g])
        if scale > 0:
            scores = scores + gen.laplace(0.0, scale, size=2 * d)
        j = int(np.argmin(scores))  # np.argmin returns the lowest tied index
        vertex = np.zeros(d)
        vertex[j % d] = r if j < d else -r
        eta = 2.0 / (t + 2)
        theta = (1.0 - eta) * theta + eta * vertex
    return FwResult(theta=theta, T=T, noise_scale=scale)


def sparse_recover(b: np.ndarray, phi: RipMatrix, xi: float) -> np.ndarray:
    """l1-minimal solution of ||Phi theta - b||_1 <= xi.

    Solved as the explicit LP over (u+, u-, v) with theta = u+ - u-:

        min 1^T(u+ + u-)
        s.t.  Phi(u+ - u-) - v <= b,  -Phi(u+ - u-) - v <= -b,
              1^T v <= xi,   u+, u-, v >= 0.

    For an s-sparse truth theta* with b = Phi theta* + z, ||z||_1 <= xi, and
    (4s, e)-RWC Phi:  ||theta_hat - theta*||_1 <= 4 sqrt(s) xi / sqrt(1-e).
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (phi.k,):
        raise ValueError(f"b has shape {b.shape}, expected ({phi.k},)")
    if xi < 0:
        raise ValueError("xi must be >= 0")
    k, d = phi.k, phi.d
    P = phi.entries
    if xi > 0:
        # normalize so the tolerance becomes 1: keeps the v variables at the
        # same scale as the Phi rows and the LP away from the degenerate
        # xi -> 0 regime (theta is rescaled back below)
        scale = xi
        c = np.concatenate([np.ones(2 * d), np.zeros(k)])
        A = np.block(
            [
                [P, -P, -np.eye(k)],
                [-P, P, -np.eye(k)],
                [np.zeros((1, 2 * d)), np.ones((1, k))],
            ]
        )
        rhs = np.concatenate([b / scale, -b / scale, [1.0]])
    else:
        # exact interpolation: the inequality pair forces Phi theta = b
        scale = 1.0
        c = np.ones(2 * d)
        A = np.block([[P, -P], [-P, P]])
        rhs = np.concatenate([b, -b])
    res = solve_lp(c, A, rhs)
    if res.status is LpStatus.INFEASIBLE:
        raise FeasibilityError(f"no theta with ||Phi theta - b||_1 <= {xi}")
    if res.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"LP solver did not converge: {res.status.value}")
    theta = scale * (res.x[:d] - res.x[d : 2 * d])
    residual = float(np.sum(np.abs(P @ theta - b)))
    if residual > xi * (1.0 + 1e-8) + 1e-9 * max(1.0, float(np.sum(np.abs(b)))):
        raise RuntimeError(f"LP returned infeasible point, residual {residual}")
    return theta


def sparse_recovery_error_bound(s: int, xi: float, e: float) -> float:
    """The recovery lemma's l1 error bound 4 sqrt(s) xi / sqrt(1 - e)."""
    return 4.0 * math.sqrt(s) * xi / math.sqrt(1.0 - e)


@dataclass(frozen=True)
class PurifiedFwResult:
    theta: np.ndarray
    theta_fw: np.ndarray
    T: int
    k: int
    xi: float
    mixed: bool
    noise_within_tail: bool  # purification noise satisfied ||z||_1 <= xi
    recovery_feasible: bool

    @property
    def success_path(self) -> bool:
        """All probabilistic failure events avoided on this run."""
        return (not self.mixed) and self.noise_within_tail and self.recovery_feasible


def purified_fw(
    problem: ConvexProblem,
    data: np.ndarray,
    eps: float,
    rng: RngStream,
    rwc_e: float = 0.25,
) -> PurifiedFwResult:
    """Pure-DP Frank-Wolfe: run DP-FW, compress the iterate by a random
    projection, purify in the compressed space, and recover by the sparse LP.

    Schedule (tilde-Theta constants spelled out):

        T = ceil(sqrt(beta ||C||_1 n eps / L1)),
        k = ceil(2 (T ln(max(d/T, 2)) + ln n)),
        omega = 1/n,  delta = 2 omega / (n k)^k,  eps' = eps,
        xi = (4 Delta / eps)(k + ln n).

    The compressed iterate is l2-clipped to radius 2||C||_1 before
    purification and the recovered vector l1-clipped to ||C||_1.  The
    composite is 2 eps-pure-DP; on runs avoiding the mixing and noise-tail
    failure events, ||theta - theta_fw||_1 <= (4 sqrt(T)/sqrt(1-e)) xi.
    """
    if problem.smoothness is None:
        raise ValueError("purified_fw needs the smoothness constant beta")
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    d = problem.dim
    r = problem.domain.radius
    beta, L1 = problem.smoothness, problem.lipschitz

    T = max(1, math.ceil(math.sqrt(beta * r * n * eps / L1)))
    k = max(1, math.ceil(2.0 * (T * math.log(max(d / T, 2.0)) + math.log(n))))
    omega = 1.0 / n
    log_delta = math.log(2.0 * omega) - k * math.log(n * k)

    fw = dp_fw(problem, data, eps, T, rng.child("fw"), log_delta=log_delta)

    gen = rng.child("phi").generator()
    phi_entries = gen.standard_normal((k, d)) / math.sqrt(k)
    phi = RipMatrix(
        entries=phi_entries, k=k, d=d, s=min(T, d), e=rwc_e, k_exceeds_d=k > d
    )

    ball_k = LqBall.centered(q=2, radius=2.0 * r, dim=k)
    compressed = clip_to_ball(phi_entries @ fw.theta, ball_k)
    params = PurifyParams.calibrate(
        ball_k, eps=eps, eps_prime=eps, omega=omega, log_delta=log_delta
    )
    pure_k, info = purify(
        compressed, ball_k, params, rng.child("purify"), return_info=True
    )
    # equals the Laplace l1 tail bound laplace_l1_bound(k, 2 Delta/eps, 1/n)
    xi = 4.0 * params.delta_w8 / eps * (k + math.log(n))
    noise_l1 = float(np.sum(np.abs(pure_k - compressed))) if not info.mixed else math.inf
    within_tail = noise_l1 <= xi

    feasible = True
    try:
        theta_hat = sparse_recover(pure_k, phi, xi)
    except FeasibilityError:
        feasible = False
        theta_hat = np.zeros(d)
    theta = clip_to_ball(theta_hat, problem.domain)
    return PurifiedFwResult(
        theta=theta,
        theta_fw=fw.theta,
        T=T,
        k=k,
        xi=xi,
        mixed=info.mixed,
        noise_within_tail=within_tail,
        recovery_feasible=feasible,
    )
