"""Output domains, seeded randomness, and the purification primitives.

This module provides the bounded convex domains (``LqBall``), the seeded
counter-based randomness plumbing (``RngStream``), uniform ball samplers, and
the three conversion routes from approximate to pure differential privacy:

* ``purify``          -- continuous purification (uniform mixing + calibrated
                         Laplace noise on an l_q ball),
* ``purify_discrete`` -- binary-embedding purification for finite spaces,
* ``folklore_mix_discrete`` -- the classical uniform-mixing baseline that
                         trades delta for a worse pure epsilon.

Also here: the analytic Gaussian calibration used for the variance-crossover
figure, and ``clip_to_ball`` which every downstream solver uses for
projection/clipping.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

__all__ = [
    "LqBall",
    "PurifyParams",
    "RngStream",
    "PurifyInfo",
    "DiscretePurifyResult",
    "sample_uniform_ball",
    "calibrate_delta_w8",
    "purify",
    "purify_l1_bound",
    "bin_embed",
    "bin_decode",
    "purify_discrete",
    "purify_discrete_batch",
    "folklore_mix_discrete",
    "folklore_mix_apply",
    "analytic_gaussian_sigma",
    "clip_to_ball",
]

_VALID_Q = (1.0, 2.0, math.inf)


# ---------------------------------------------------------------------------
# domains and randomness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LqBall:
    """The ball {x : ||x - center||_q <= radius} in R^dim, q in {1, 2, inf}.

    ``radius`` is the l_q radius; the l_q diameter is ``2 * radius``.  The
    single place that needs the diameter (noise calibration) performs that
    conversion explicitly.
    """

    q: float
    center: np.ndarray
    radius: float
    dim: int

    def __post_init__(self):
        q = float(self.q)
        if q not in _VALID_Q:
            raise ValueError(f"q must be 1, 2 or inf, got {self.q}")
        object.__setattr__(self, "q", q)
        center = np.asarray(self.center, dtype=float)
        if center.shape != (self.dim,):
            raise ValueError(
                f"center has shape {center.shape}, expected ({self.dim},)"
            )
        object.__setattr__(self, "center", center)
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive, got {self.radius}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")

    @classmethod
    def centered(cls, q: float, radius: float, dim: int) -> "LqBall":
        """Ball of the given radius centered at the origin."""
        return cls(q=q, center=np.zeros(dim), radius=float(radius), dim=dim)

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def norm(self, x: np.ndarray) -> float:
        """l_q norm of ``x - center``."""
        v = np.asarray(x, dtype=float) - self.center
        if self.q == 1.0:
            return float(np.sum(np.abs(v)))
        if self.q == 2.0:
            return float(np.sqrt(np.sum(v * v)))
        return float(np.max(np.abs(v))) if v.size else 0.0

    def contains(self, x: np.ndarray) -> bool:
        """Membership test; exact for q = inf, 1e-12 relative for q in {1, 2}
        (radial projection onto those balls can overshoot by rounding)."""
        r = self.norm(x)
        if self.q == math.inf:
            return r <= self.radius
        return r <= self.radius * (1.0 + 1e-12)


@dataclass(frozen=True)
class RngStream:
    """Counter-based seeded randomness handle.

    ``generator()`` always returns a Philox generator freshly keyed by
    (seed, stream), so the same stream replays the same draw sequence.
    Derive independent substreams with ``child``; never reuse one stream
    for two different mechanisms inside a composite.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.seed & 0xFFFFFFFFFFFFFFFF, self.stream & 0xFFFFFFFFFFFFFFFF],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, tag) -> "RngStream":
        """Deterministically derived substream, tagged by a string or int."""
        h = hashlib.blake2b(
            f"{self.stream}/{tag}".encode(), digest_size=8
        ).digest()
        return RngStream(self.seed, int.from_bytes(h, "big"))


@dataclass(frozen=True)
class PurifyParams:
    """Calibration state of continuous purification.

    ``delta_w8`` is the W_infinity displacement bound Delta derived from
    (ball, delta, omega).  ``log_delta`` carries ln(delta) so that deltas far
    below float underflow remain representable; ``delta`` itself may then be
    a flushed-to-zero float and is kept for reporting only.
    """

    eps: float
    eps_prime: float
    delta: float
    omega: float
    delta_w8: float
    log_delta: float = field(default=math.nan)

    def __post_init__(self):
        if not (self.eps > 0 and self.eps_prime > 0):
            raise ValueError("eps and eps_prime must be positive")
        if not (0.0 < self.omega < 1.0):
            raise ValueError(f"omega must be in (0,1), got {self.omega}")
        if math.isnan(self.log_delta):
            if not (0.0 < self.delta < 1.0):
                raise ValueError(f"delta must be in (0,1), got {self.delta}")
            object.__setattr__(self, "log_delta", math.log(self.delta))
        if not math.isfinite(self.delta_w8) or self.delta_w8 < 0:
            raise ValueError(f"delta_w8 must be finite and >= 0, got {self.delta_w8}")

    @classmethod
    def calibrate(
        cls,
        ball: LqBall,
        eps: float,
        eps_prime: float,
        omega: float,
        delta: float | None = None,
        log_delta: float | None = None,
    ) -> "PurifyParams":
        """Build params with Delta computed from the ball geometry."""
        if log_delta is None:
            if delta is None:
                raise ValueError("provide delta or log_delta")
            log_delta = math.log(delta)
        dw8 = calibrate_delta_w8(ball, delta=None, omega=omega, log_delta=log_delta)
        return cls(
            eps=eps,
            eps_prime=eps_prime,
            delta=math.exp(log_delta) if log_delta > -700 else 0.0,
            omega=omega,
            delta_w8=dw8,
            log_delta=log_delta,
        )


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def sample_uniform_ball(ball: LqBall, rng: RngStream, size: int | None = None):
    """Uniform sample from an l_q ball in O(d) per draw.

    l_inf: i.i.d. uniform coordinates.  l_2: Gaussian direction scaled to a
    radius with density proportional to r^(d-1).  l_1: exponential magnitudes
    normalized onto the simplex, random signs, same radial law.

    With ``size=None`` returns one vector of shape (dim,); otherwise an array
    of shape (size, dim).
    """
    gen = rng.generator()
    return _sample_uniform_ball(ball, gen, size)


def _sample_uniform_ball(ball: LqBall, gen: np.random.Generator, size=None):
    d = ball.dim
    n = 1 if size is None else int(size)
    if ball.q == math.inf:
        pts = gen.uniform(-1.0, 1.0, size=(n, d))
    else:
        if ball.q == 2.0:
            g = gen.standard_normal((n, d))
            nrm = np.linalg.norm(g, axis=1, keepdims=True)
            nrm[nrm == 0] = 1.0
            dirs = g / nrm
        else:  # q == 1
            e = gen.standard_exponential((n, d))
            s = np.where(gen.uniform(size=(n, d)) < 0.5, -1.0, 1.0)
            dirs = s * e / np.sum(e, axis=1, keepdims=True)
        r = gen.uniform(size=(n, 1)) ** (1.0 / d)
        pts = dirs * r
    pts = ball.center + ball.radius * pts
    return pts[0] if size is None else pts


# ---------------------------------------------------------------------------
# continuous purification
# ---------------------------------------------------------------------------


def calibrate_delta_w8(
    ball: LqBall,
    delta: float | None,
    omega: float,
    log_delta: float | None = None,
) -> float:
    """W_infinity noise bound Delta = 2 d^(1-1/q) R_diam (delta/2 omega)^(1/d).

    ``R_diam`` is the l_q diameter, i.e. twice the stored radius.  The last
    factor is evaluated as exp((ln delta - ln 2 omega)/d) so that deltas far
    below 1e-300 (passed via ``log_delta``) do not underflow.
    """
    if not (0.0 < omega < 1.0):
        raise ValueError(f"omega must be in (0,1), got {omega}")
    if log_delta is None:
        if delta is None or delta <= 0:
            raise ValueError(f"delta must be positive, got {delta}")
        log_delta = math.log(delta)
    d = ball.dim
    dim_factor = d ** (1.0 - 1.0 / ball.q) if ball.q != math.inf else float(d)
    ratio = math.exp((log_delta - math.log(2.0 * omega)) / d)
    return 2.0 * dim_factor * ball.diameter * ratio


@dataclass(frozen=True)
class PurifyInfo:
    """What the purification step actually did on one call."""

    mixed: bool
    projected: bool


def purify(
    x_apx: np.ndarray,
    ball: LqBall,
    params: PurifyParams,
    rng: RngStream,
    return_info: bool = False,
):
    """Purification: uniform mixing + calibrated per-coordinate Laplace noise.

    With probability 1 - omega the input is kept; with probability omega it is
    replaced by a uniform draw from the ball.  Either way i.i.d.
    Laplace(2 Delta / eps') noise is added per coordinate.  If the upstream
    mechanism produced an (eps, delta)-DP output supported on the ball, the
    result is (eps + eps')-pure-DP.

    Draw order is fixed (mix uniform, optional ball sample, Laplace vector)
    so that seed-controlled tests can replay individual branches.

    Inputs outside the ball are projected onto it first (data-independent
    post-processing, so privacy is unaffected) and flagged in the info.
    """
    x_apx = np.asarray(x_apx, dtype=float)
    if x_apx.shape != (ball.dim,):
        raise ValueError(f"x_apx has shape {x_apx.shape}, expected ({ball.dim},)")
    gen = rng.generator()

    projected = not ball.contains(x_apx)
    base = clip_to_ball(x_apx, ball) if projected else x_apx

    mixed = bool(gen.uniform() < params.omega)
    if mixed:
        base = _sample_uniform_ball(ball, gen)
    scale = 2.0 * params.delta_w8 / params.eps_prime
    noise = gen.laplace(0.0, scale, size=ball.dim) if scale > 0 else np.zeros(ball.dim)
    x_pure = base + noise
    if return_info:
        return x_pure, PurifyInfo(mixed=mixed, projected=projected)
    return x_pure


def purify_l1_bound(ball: LqBall, params: PurifyParams) -> float:
    """Expected-l1-displacement bound of purification:

        E||x_pure - x_apx||_1 <= omega d^(1-1/q) R_diam + 2 d Delta / eps'.

    The mixing term uses ||.||_1 <= d^(1-1/q) ||.||_q on the l_q diameter; the
    noise term is d times the mean absolute value of one Laplace(2 Delta/eps')
    coordinate.  At q = 1 this collapses to the familiar
    omega R_diam + (4 R_diam d / eps') (delta/2 omega)^(1/d).
    """
    d = ball.dim
    dim_factor = d ** (1.0 - 1.0 / ball.q) if ball.q != math.inf else float(d)
    return (
        params.omega * dim_factor * ball.diameter
        + 2.0 * d * params.delta_w8 / params.eps_prime
    )


# ---------------------------------------------------------------------------
# discrete purification
# ---------------------------------------------------------------------------


def bin_embed(u: int, d: int) -> np.ndarray:
    """Big-endian binary embedding of u into {0,1}^d."""
    u = int(u)
    if not 0 <= u < 2**d:
        raise ValueError(f"index {u} out of range for {d} bits")
    return np.array([(u >> (d - 1 - i)) & 1 for i in range(d)], dtype=np.int64)


def bin_decode(bits: np.ndarray) -> int:
    """Inverse of :func:`bin_embed`."""
    bits = np.asarray(bits, dtype=np.int64)
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def _discrete_log_delta_threshold(d: int, eps: float) -> float:
    # ln of eps^d / (2d)^(3d); mirrors accounting.discrete_delta_threshold
    return d * math.log(eps) - 3.0 * d * math.log(2.0 * d)


def _unit_cube(d: int) -> LqBall:
    return LqBall(q=math.inf, center=np.full(d, 0.5), radius=0.5, dim=d)


@dataclass(frozen=True)
class DiscretePurifyResult:
    index: int
    delta_valid: bool  # False if delta >= eps^d/(2d)^(3d): identity bound void
    remapped: bool  # decoded index fell in the padding and was mapped to 0
    mixed: bool


def purify_discrete(
    u_apx: int,
    space_size: int,
    eps: float,
    delta: float | None,
    rng: RngStream,
    log_delta: float | None = None,
) -> DiscretePurifyResult:
    """Binary-embedding purification for a finite space of ``space_size`` items.

    Embeds the index into the cube [0,1]^d with d = ceil(log2(space_size)),
    purifies with omega = 2^-d and eps' = eps, rounds coordinates by
    1(x_i >= 0.5) (tie goes to 1), and decodes.  The result is 2 eps-pure-DP
    whenever the input mechanism was (eps, delta)-DP; the identity guarantee
    P[u_pure = u_apx] >= 1 - 2^-d - (d/2) e^-d additionally needs
    delta < eps^d/(2d)^(3d), reported via ``delta_valid``.

    Non-power-of-two spaces are padded; a decode landing in the padding is
    remapped to index 0 (flagged; negligible probability under the threshold).
    """
    if space_size < 2:
        raise ValueError(f"space_size must be >= 2, got {space_size}")
    if not 0 <= u_apx < space_size:
        raise ValueError(f"u_apx {u_apx} out of range [0, {space_size})")
    if log_delta is None:
        if delta is None or delta <= 0:
            raise ValueError("provide a positive delta or log_delta")
        log_delta = math.log(delta)
    # ceil(log2) via bit_length: exact even for spaces beyond float precision
    d = max(1, (int(space_size) - 1).bit_length())
    delta_valid = log_delta < _discrete_log_delta_threshold(d, eps)

    cube = _unit_cube(d)
    params = PurifyParams.calibrate(
        cube, eps=eps, eps_prime=eps, omega=2.0**-d, log_delta=log_delta
    )
    x = bin_embed(u_apx, d).astype(float)
    z, info = purify(x, cube, params, rng, return_info=True)
    bits = (z >= 0.5).astype(np.int64)
    idx = bin_decode(bits)
    remapped = idx >= space_size
    if remapped:
        idx = 0
    return DiscretePurifyResult(
        index=idx, delta_valid=delta_valid, remapped=remapped, mixed=info.mixed
    )


def purify_discrete_batch(
    u_apx: np.ndarray,
    space_size: int,
    eps: float,
    delta: float | None,
    rng: RngStream,
    log_delta: float | None = None,
) -> np.ndarray:
    """Vectorized :func:`purify_discrete` for high-volume audits.

    Same per-trial distribution as the scalar version (draw order inside a
    trial differs, which only matters for replaying one trial's branches).
    Returns the purified indices as an int64 array.
    """
    u_apx = np.asarray(u_apx, dtype=np.int64)
    if np.any((u_apx < 0) | (u_apx >= space_size)):
        raise ValueError("u_apx entries out of range")
    if log_delta is None:
        if delta is None or delta <= 0:
            raise ValueError("provide a positive delta or log_delta")
        log_delta = math.log(delta)
    d = max(1, (int(space_size) - 1).bit_length())
    if d > 62:
        raise ValueError("batch path is limited to int64-sized spaces")
    omega = 2.0**-d
    dw8 = calibrate_delta_w8(_unit_cube(d), delta=None, omega=omega, log_delta=log_delta)
    scale = 2.0 * dw8 / eps

    gen = rng.generator()
    n = u_apx.shape[0]
    shifts = np.arange(d - 1, -1, -1, dtype=np.int64)
    x = ((u_apx[:, None] >> shifts[None, :]) & 1).astype(float)
    mix = gen.uniform(size=n) < omega
    if np.any(mix):
        x[mix] = gen.uniform(size=(int(np.sum(mix)), d))
    z = x + gen.laplace(0.0, scale, size=(n, d))
    bits = (z >= 0.5).astype(np.int64)
    idx = (bits << shifts[None, :]).sum(axis=1)
    idx[idx >= space_size] = 0
    return idx


# ---------------------------------------------------------------------------
# folklore mixing baseline
# ---------------------------------------------------------------------------


def folklore_mix_discrete(
    space_size: int, eps: float, delta: float, omega: float
) -> float:
    """Pure-DP level of mixing an (eps, delta)-DP finite mechanism with the
    uniform distribution at level omega:

        eps_pure = eps + ln(1 + delta |Y| e^-eps / omega)
    """
    if not (0.0 < omega <= 1.0):
        raise ValueError(f"omega must be in (0,1], got {omega}")
    if delta < 0:
        raise ValueError(f"delta must be >= 0, got {delta}")
    if space_size < 1:
        raise ValueError(f"space_size must be >= 1, got {space_size}")
    return eps + math.log1p(delta * space_size * math.exp(-eps) / omega)


def folklore_mix_apply(
    u: np.ndarray | int, space_size: int, omega: float, rng: RngStream
):
    """The mixer itself: with probability omega replace the output by a
    uniform draw from [0, space_size).  Accepts a scalar index or an array."""
    if not (0.0 < omega <= 1.0):
        raise ValueError(f"omega must be in (0,1], got {omega}")
    gen = rng.generator()
    scalar = np.isscalar(u)
    arr = np.atleast_1d(np.asarray(u, dtype=np.int64)).copy()
    mix = gen.uniform(size=arr.shape[0]) < omega
    if np.any(mix):
        arr[mix] = gen.integers(0, space_size, size=int(np.sum(mix)))
    return int(arr[0]) if scalar else arr


# ---------------------------------------------------------------------------
# analytic Gaussian calibration
# ---------------------------------------------------------------------------


def _analytic_delta(sigma: float, eps: float, sensitivity: float) -> float:
    a = sensitivity / (2.0 * sigma)
    b = eps * sigma / sensitivity
    return float(norm.cdf(a - b) - math.exp(eps) * norm.cdf(-a - b))


def analytic_gaussian_sigma(eps: float, delta: float, sensitivity: float) -> float:
    """Smallest sigma making the Gaussian mechanism (eps, delta)-DP under the
    exact analytic condition

        delta(sigma) = Phi(D/2s - eps s/D) - e^eps Phi(-D/2s - eps s/D),

    found by bisection to 1e-9 relative accuracy.  delta(sigma) is strictly
    decreasing, so the root is the calibration.
    """
    if eps <= 0 or sensitivity <= 0 or not (0.0 < delta < 1.0):
        raise ValueError("need eps > 0, sensitivity > 0, delta in (0,1)")
    lo, hi = 1e-12 * sensitivity, sensitivity
    while _analytic_delta(hi, eps, sensitivity) > delta:
        hi *= 2.0
        if hi > 1e12 * sensitivity:
            raise RuntimeError("bisection bracket not found")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _analytic_delta(mid, eps, sensitivity) > delta:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-9 * hi:
            break
    return hi


# ---------------------------------------------------------------------------
# clipping / projection
# ---------------------------------------------------------------------------


def clip_to_ball(x: np.ndarray, ball: LqBall) -> np.ndarray:
    """Map x into the ball: identity inside; radial scaling onto the boundary
    for q in {1, 2}; coordinatewise clamp for q = inf.  Idempotent."""
    x = np.asarray(x, dtype=float)
    if ball.q == math.inf:
        return np.clip(x, ball.center - ball.radius, ball.center + ball.radius)
    r = ball.norm(x)
    if r <= ball.radius:
        return x
    return ball.center + (x - ball.center) * (ball.radius / r)
