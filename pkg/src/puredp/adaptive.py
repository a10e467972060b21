"""Data-dependent mechanisms built on purification: propose-test-release,
private local-sensitivity release, mode release over a finite universe, and
purified AdaSSP linear regression.

``QuerySpec`` packages the query together with its local sensitivity and the
distance-to-violation callback that PTR needs; the generic machinery treats
both as black boxes and the module ships one exact instantiation (1-D median
over a bounded grid).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    DiscretePurifyResult,
    LqBall,
    PurifyParams,
    RngStream,
    clip_to_ball,
    purify,
    purify_discrete,
    sample_uniform_ball,
)

__all__ = [
    "QuerySpec",
    "RegressionInstance",
    "PtrResult",
    "ReleaseResult",
    "ModeResult",
    "AdasspResult",
    "median_spec",
    "ptr",
    "pure_ptr",
    "private_local_sensitivity_release",
    "mode_release",
    "jacobi_min_eigenvalue",
    "pure_adassp",
]


@dataclass(frozen=True)
class QuerySpec:
    """A vector query with optional sensitivity structure.

    ``distance_to_violation(data, beta)`` is the Hamming distance from the
    dataset to the nearest one whose local sensitivity exceeds beta; it must
    be 0 exactly when ``local_sensitivity(data) > beta`` and 1-Lipschitz in
    the dataset for PTR's privacy argument.
    """

    query: Callable[[np.ndarray], np.ndarray]
    domain: LqBall
    local_sensitivity: Callable[[np.ndarray], float] | None = None
    distance_to_violation: Callable[[np.ndarray, float], int] | None = None


def median_spec(grid_lo: float, grid_hi: float) -> QuerySpec:
    """1-D median over the bounded grid [grid_lo, grid_hi].

    Local sensitivity is the larger adjacent gap around the median (with
    out-of-range order statistics clamped to the grid edges).  The distance
    to violation is computed by a direct scan over window sizes: changing k
    points can at best turn a window of k+1 consecutive order statistics
    straddling the median into a single adjacent gap, so

        D_beta(X) = min { k : max_t (x_(m+t) - x_(m+t-k-1)) > beta },

    t ranging so that the window covers the median position.
    """
    center = 0.5 * (grid_lo + grid_hi)
    radius = 0.5 * (grid_hi - grid_lo)
    domain = LqBall(q=2, center=np.array([center]), radius=radius, dim=1)

    def order_stat(xs: np.ndarray, i: int) -> float:
        if i < 0:
            return grid_lo
        if i >= len(xs):
            return grid_hi
        return float(xs[i])

    def query(data: np.ndarray) -> np.ndarray:
        xs = np.sort(np.asarray(data, dtype=float))
        return np.array([order_stat(xs, (len(xs) - 1) // 2)])

    def local_sensitivity(data: np.ndarray) -> float:
        xs = np.sort(np.asarray(data, dtype=float))
        m = (len(xs) - 1) // 2
        return max(
            order_stat(xs, m) - order_stat(xs, m - 1),
            order_stat(xs, m + 1) - order_stat(xs, m),
        )

    def distance_to_violation(data: np.ndarray, beta: float) -> int:
        xs = np.sort(np.asarray(data, dtype=float))
        n = len(xs)
        m = (n - 1) // 2
        for k in range(n + 1):
            width = k + 1
            for t in range(0, width + 1):
                hi = m + t
                lo = hi - width
                if order_stat(xs, hi) - order_stat(xs, lo) > beta:
                    return k
        return n + 1  # grid diameter <= beta: no dataset violates

    return QuerySpec(
        query=query,
        domain=domain,
        local_sensitivity=local_sensitivity,
        distance_to_violation=distance_to_violation,
    )


@dataclass(frozen=True)
class PtrResult:
    value: np.ndarray | None  # None encodes the bottom output
    released: bool
    distance: int


def ptr(
    spec: QuerySpec,
    data: np.ndarray,
    eps: float,
    delta: float,
    beta: float,
    rng: RngStream,
    test_noise_override: float | None = None,
    release_noise_override: float | None = None,
) -> PtrResult:
    """Propose-test-release: privately test that the dataset is far from any
    local-sensitivity violation of the proposed bound beta, then release the
    query with per-coordinate Laplace(beta/eps) noise.  (2 eps, delta)-DP.

    Returns the bottom output (``value=None``) when
    D_beta(X) + Lap(1/eps) <= ln(1/delta)/eps.  The overrides replace the
    respective noise draws for deterministic branch tests.
    """
    if spec.distance_to_violation is None:
        raise ValueError("spec must supply distance_to_violation for PTR")
    gen = rng.generator()
    dist = int(spec.distance_to_violation(data, beta))
    test_noise = (
        gen.laplace(0.0, 1.0 / eps)
        if test_noise_override is None
        else test_noise_override
    )
    if dist + test_noise <= math.log(1.0 / delta) / eps:
        return PtrResult(value=None, released=False, distance=dist)
    q = np.asarray(spec.query(data), dtype=float)
    scale = beta / eps if release_noise_override is None else release_noise_override
    noise = gen.laplace(0.0, scale, size=q.shape) if scale > 0 else np.zeros_like(q)
    return PtrResult(value=q + noise, released=True, distance=dist)


def pure_ptr(
    spec: QuerySpec,
    data: np.ndarray,
    eps: float,
    eps_prime: float,
    delta: float,
    omega: float,
    beta: float,
    rng: RngStream,
) -> tuple[np.ndarray, PtrResult]:
    """Pure-DP PTR: the bottom output is replaced by a uniform draw from the
    output domain and the result is purified with budget eps'.  Total
    (2 eps + eps')-pure DP."""
    base = ptr(spec, data, eps, delta, beta, rng.child("ptr"))
    if base.released:
        x_apx = base.value
    else:
        x_apx = sample_uniform_ball(spec.domain, rng.child("bottom"))
    params = PurifyParams.calibrate(
        spec.domain, eps=eps, eps_prime=eps_prime, omega=omega, delta=delta
    )
    x_pure = purify(x_apx, spec.domain, params, rng.child("purify"))
    return x_pure, base


@dataclass(frozen=True)
class ReleaseResult:
    value: np.ndarray
    beta_hat: float
    clamped: bool


def private_local_sensitivity_release(
    spec: QuerySpec,
    data: np.ndarray,
    eps: float,
    delta: float,
    omega: float,
    rng: RngStream,
) -> ReleaseResult:
    """Release a query with noise scaled to a privately estimated local
    sensitivity (3 eps-pure DP after purification):

        beta_hat = LS(D) + Lap(1/eps) + ln(2/delta)/eps        (floored),
        release   proj_domain(q(D) + Lap^d(beta_hat/eps)),
        then purify with eps' = eps.

    Requires LS to have global sensitivity <= 1 (declared by the spec).
    """
    if spec.local_sensitivity is None:
        raise ValueError("spec must supply local_sensitivity")
    gen = rng.child("beta").generator()
    floor = math.log(2.0 / delta) / eps
    beta_hat = float(spec.local_sensitivity(data)) + gen.laplace(0.0, 1.0 / eps) + floor
    clamped = beta_hat <= 0.0
    if clamped:
        beta_hat = floor
    q = np.asarray(spec.query(data), dtype=float)
    noisy = q + gen.laplace(0.0, beta_hat / eps, size=q.shape)
    projected = clip_to_ball(noisy, spec.domain)
    params = PurifyParams.calibrate(
        spec.domain, eps=eps, eps_prime=eps, omega=omega, delta=delta
    )
    value = purify(projected, spec.domain, params, rng.child("purify"))
    return ReleaseResult(value=value, beta_hat=beta_hat, clamped=clamped)


@dataclass(frozen=True)
class ModeResult:
    index: int
    test_passed: bool
    mode: int
    purify: DiscretePurifyResult


def mode_release(
    data: np.ndarray,
    universe_size: int,
    eps: float,
    rng: RngStream,
) -> ModeResult:
    """Pure-DP mode release over [0, universe_size) in O(n + log|X|).

    The distance to the nearest dataset with a different mode is
    ceil((occ_1 - occ_2)/2); an instability test with threshold
    ln(1/delta)/eps, ln(1/delta) = d ln(2 d^3/eps) and d = ceil(log2 |X|),
    gates the release (failing datasets emit index 0, a data-independent
    placeholder).  The gated index then passes through discrete purification
    with the same delta, for 2 eps-pure DP overall.
    """
    data = np.asarray(data).ravel()
    if data.size == 0:
        raise ValueError("empty dataset")
    if universe_size < 2:
        raise ValueError("universe_size must be >= 2")
    counts = Counter(int(v) for v in data)
    ranked = counts.most_common(2)
    occ1 = ranked[0][1]
    occ2 = ranked[1][1] if len(ranked) > 1 else 0
    mode = ranked[0][0]
    gap_dist = math.ceil((occ1 - occ2) / 2)

    d = max(1, math.ceil(math.log2(universe_size)))
    log_inv_delta = d * math.log(2.0 * d**3 / eps)
    gen = rng.child("test").generator()
    passed = gap_dist - 1 + gen.laplace(0.0, 1.0 / eps) > log_inv_delta / eps
    u_apx = mode if passed else 0
    res = purify_discrete(
        u_apx, universe_size, eps, delta=None, rng=rng.child("purify"),
        log_delta=-log_inv_delta,
    )
    return ModeResult(index=res.index, test_passed=passed, mode=mode, purify=res)


# ---------------------------------------------------------------------------
# purified AdaSSP regression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegressionInstance:
    """Fixed-design regression data with declared norm bounds: every row of X
    has l2 norm <= norm_x and every |y_i| <= norm_y."""

    X: np.ndarray
    y: np.ndarray
    norm_x: float
    norm_y: float

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("X must be (n, d) with matching y")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if np.max(np.linalg.norm(X, axis=1)) > self.norm_x * (1 + 1e-9):
            raise ValueError("a row of X exceeds the declared norm bound")
        if np.max(np.abs(y)) > self.norm_y * (1 + 1e-9):
            raise ValueError("a response exceeds the declared norm bound")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def jacobi_min_eigenvalue(A: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> float:
    """Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations,
    iterated until the off-diagonal Frobenius norm drops below ``tol``."""
    A = np.array(A, dtype=float)
    d = A.shape[0]
    if A.shape != (d, d):
        raise ValueError("matrix must be square")
    if not np.allclose(A, A.T, atol=1e-10 * max(1.0, float(np.abs(A).max()))):
        raise ValueError("matrix must be symmetric")
    if d == 1:
        return float(A[0, 0])
    for _ in range(max_sweeps):
        # the difference can round below zero once the sweep has converged
        off = math.sqrt(max(0.0, float(np.sum(A * A) - np.sum(np.diag(A) ** 2))))
        if off <= tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                diff = A[q, q] - A[p, p]
                # pivots this small rotate by an angle below float resolution
                if abs(apq) <= 1e-300 * max(1.0, abs(diff)):
                    continue
                tau = diff / (2.0 * apq)
                if abs(tau) > 1e150:
                    t = 0.5 / tau
                else:
                    t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot_p = c * A[:, p] - s * A[:, q]
                rot_q = s * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = rot_p, rot_q
                rot_p = c * A[p, :] - s * A[q, :]
                rot_q = s * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = rot_p, rot_q
    return float(np.min(np.diag(A)))


@dataclass(frozen=True)
class AdasspResult:
    theta_pure: np.ndarray
    theta_tilde: np.ndarray  # AdaSSP output before purification
    lam: float
    lam_min_hat: float
    trust_radius: float
    mixed: bool


def pure_adassp(
    instance: RegressionInstance,
    eps: float,
    delta: float,
    rng: RngStream,
    zeta: float = 0.05,
    noise_override: float | None = None,
    lam_override: float | None = None,
) -> AdasspResult:
    """Purified AdaSSP ridge regression, 2 eps-pure DP.

    AdaSSP stage (budget eps/3 per release, failure level zeta):

        lam_min_hat = max(lam_min(X^T X) + sqrt(ln(6/delta)) bx^2/(eps/3) Z
                          - ln(6/delta) bx^2/(eps/3), 0),
        lam   = max(0, sqrt(d ln(6/delta) ln(2 d^2/zeta)) bx^2/(eps/3)
                       - lam_min_hat),
        E2    ~ sqrt(ln(6/delta)) bx by/(eps/3) N(0, I_d),
        E1    symmetric, upper triangle i.i.d. N(0,1) scaled by
              sqrt(ln(6/delta)) bx^2/(eps/3),
        theta_tilde = (X^T X + lam I + E1)^-1 (X^T y + E2),

    with bx = ||X-rows|| bound and by = |y| bound.  The output is l2-clipped
    to the trust radius R = (by/bx)(1 + n eps / sqrt(d ln(6/delta))) and
    purified with omega = 1/n^2, delta' = 2 omega/(16 d^(3/2) R n^2)^d,
    eps' = eps.

    ``noise_override=0`` zeroes every noise draw including the purification
    stage (deterministic oracle path); ``lam_override`` pins the ridge term.
    """
    X, y = instance.X, instance.y
    n, d = instance.n, instance.d
    if n <= d:
        raise ValueError("need n > d")
    bx, by = instance.norm_x, instance.norm_y
    log6d = math.log(6.0 / delta)
    eps3 = eps / 3.0
    gen = rng.child("adassp").generator()
    deterministic = noise_override is not None and noise_override == 0.0

    xtx = X.T @ X
    xty = X.T @ y
    lam_min = jacobi_min_eigenvalue(xtx)
    z = 0.0 if deterministic else float(gen.standard_normal())
    lam_min_hat = max(
        lam_min + math.sqrt(log6d) * bx * bx / eps3 * z - log6d * bx * bx / eps3,
        0.0,
    )
    if lam_override is not None:
        lam = lam_override
    else:
        lam = max(
            0.0,
            math.sqrt(d * log6d * math.log(2.0 * d * d / zeta)) * bx * bx / eps3
            - lam_min_hat,
        )
    if deterministic:
        e1 = np.zeros((d, d))
        e2 = np.zeros(d)
    else:
        upper = np.triu(gen.standard_normal((d, d)))
        e1 = math.sqrt(log6d) * bx * bx / eps3 * (
            upper + np.triu(upper, 1).T
        )
        e2 = math.sqrt(log6d) * bx * by / eps3 * gen.standard_normal(d)
    theta_tilde = np.linalg.solve(xtx + lam * np.eye(d) + e1, xty + e2)

    radius = (by / bx) * (1.0 + n * eps / math.sqrt(d * log6d))
    ball = LqBall.centered(q=2, radius=radius, dim=d)
    clipped = clip_to_ball(theta_tilde, ball)

    if deterministic:
        return AdasspResult(
            theta_pure=clipped,
            theta_tilde=theta_tilde,
            lam=lam,
            lam_min_hat=lam_min_hat,
            trust_radius=radius,
            mixed=False,
        )
    omega = 1.0 / (n * n)
    log_delta_p = math.log(2.0 * omega) - d * math.log(16.0 * d**1.5 * radius * n * n)
    params = PurifyParams.calibrate(
        ball, eps=eps, eps_prime=eps, omega=omega, log_delta=log_delta_p
    )
    theta_pure, info = purify(
        clipped, ball, params, rng.child("purify"), return_info=True
    )
    return AdasspResult(
        theta_pure=theta_pure,
        theta_tilde=theta_tilde,
        lam=lam,
        lam_min_hat=lam_min_hat,
        trust_radius=radius,
        mixed=info.mixed,
    )
