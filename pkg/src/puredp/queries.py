"""Linear query release over a finite universe: MWEM, exponential-mechanism
selection, alias-method proportional sampling, and purified MWEM (synthetic
data subsampling + discrete purification).

The universe is {0, ..., 2^d - 1}; queries are tables of values in [0,1] and
Q(D) is the vector of query averages.  Multiplicative-weights state is kept
in log-space throughout so that sharp updates cannot underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import RngStream, purify_discrete

__all__ = [
    "QueryWorkload",
    "HistogramDataset",
    "AliasTable",
    "MwemResult",
    "PureMwemResult",
    "eval_queries",
    "exponential_mechanism",
    "mwem",
    "alias_sample",
    "encode_tuple",
    "decode_tuple",
    "pure_mwem",
]


@dataclass(frozen=True)
class QueryWorkload:
    """K linear queries as a (K, 2^d) table of values in [0, 1]."""

    values: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValueError("values must be a (K, cells) array with K >= 1")
        cells = values.shape[1]
        if cells < 2 or cells & (cells - 1) != 0:
            raise ValueError(f"universe size must be a power of two, got {cells}")
        if np.any((values < 0) | (values > 1)):
            raise ValueError("query values must lie in [0, 1]")
        object.__setattr__(self, "values", values)
        if self.names and len(self.names) != values.shape[0]:
            raise ValueError("names length does not match K")

    @property
    def K(self) -> int:
        return self.values.shape[0]

    @property
    def cells(self) -> int:
        return self.values.shape[1]

    @property
    def dim(self) -> int:
        return self.cells.bit_length() - 1


@dataclass(frozen=True)
class HistogramDataset:
    """Dataset as nonnegative integer counts over the universe cells."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or np.any(counts < 0):
            raise ValueError("counts must be a nonnegative vector")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(counts == np.floor(counts)):
                raise ValueError("counts must be integers")
            counts = counts.astype(np.int64)
        object.__setattr__(self, "counts", counts)
        if counts.sum() < 1:
            raise ValueError("dataset must contain at least one element")

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def distribution(self) -> np.ndarray:
        return self.counts / self.n


def eval_queries(workload: QueryWorkload, data) -> np.ndarray:
    """Query averages Q(D) for a dataset, or <q, p> for a distribution."""
    if isinstance(data, HistogramDataset):
        p = data.distribution
    else:
        p = np.asarray(data, dtype=float)
    if p.shape != (workload.cells,):
        raise ValueError(
            f"distribution has shape {p.shape}, expected ({workload.cells},)"
        )
    return workload.values @ p


def exponential_mechanism(
    scores: np.ndarray, eps0: float, sensitivity: float, rng: RngStream
) -> int:
    """Sample an index with P(i) proportional to exp(eps0 s_i / (2 sens)),
    computed max-subtracted in log-space."""
    scores = np.asarray(scores, dtype=float)
    if scores.size == 0 or np.all(np.isneginf(scores)):
        raise ValueError("need at least one finite score")
    if eps0 < 0 or sensitivity <= 0:
        raise ValueError("need eps0 >= 0 and sensitivity > 0")
    logits = eps0 * scores / (2.0 * sensitivity)
    logits = logits - np.max(logits[np.isfinite(logits)])
    p = np.exp(logits - logsumexp(logits))
    p = p / p.sum()
    gen = rng.generator()
    return int(gen.choice(scores.size, p=p))


@dataclass(frozen=True)
class MwemResult:
    synthetic: np.ndarray  # n * average of the p_t, as fractional counts
    p_final: np.ndarray
    selected: tuple[int, ...]
    T: int
    rho: float


def mwem(
    dataset: HistogramDataset,
    workload: QueryWorkload,
    T: int,
    rho: float,
    rng: RngStream,
    noise_override: float | None = None,
) -> MwemResult:
    """Multiplicative Weights Exponential Mechanism under a total zCDP budget.

    Per iteration with eps0 = sqrt(rho/T): select the worst-approximated
    query by the exponential mechanism on Score(q) = |<q, p> - <q, p_true>|
    (sensitivity 1/n), measure it with Laplace(1/(n eps0)) noise, and tilt

        p_t(x) proportional to p_{t-1}(x) exp(q(x) (m_t - <q, p_{t-1}>)/2).

    The output is n times the average of the T post-update distributions.
    For any target delta the release is (4 sqrt(rho ln(1/delta)), delta)-DP.
    """
    if T < 1 or rho <= 0:
        raise ValueError("need T >= 1 and rho > 0")
    n = dataset.n
    p_true = dataset.distribution
    answers = workload.values @ p_true
    eps0 = math.sqrt(rho / T)
    gen = rng.child("measure").generator()
    cells = workload.cells

    logp = np.full(cells, -math.log(cells))
    accum = np.zeros(cells)
    selected = []
    for t in range(T):
        p = np.exp(logp)
        scores = np.abs(workload.values @ p - answers)
        idx = exponential_mechanism(
            scores, eps0, 1.0 / n, rng.child(("select", t))
        )
        selected.append(idx)
        q = workload.values[idx]
        noise = (
            gen.laplace(0.0, 1.0 / (n * eps0))
            if noise_override is None
            else noise_override
        )
        m_t = answers[idx] + noise
        logp = logp + q * (m_t - float(q @ p)) / 2.0
        logp = logp - logsumexp(logp)
        accum += np.exp(logp)
    p_avg = accum / T
    return MwemResult(
        synthetic=n * p_avg,
        p_final=np.exp(logp),
        selected=tuple(selected),
        T=T,
        rho=rho,
    )


class AliasTable:
    """Walker/Vose alias table: O(N) construction, O(1) per draw.

    ``touches`` counts construction visits (one per cell, for the
    preprocessing-cost contract); ``reconstructed()`` folds the table back
    into the distribution it encodes.
    """

    def __init__(self, p: np.ndarray):
        p = np.asarray(p, dtype=float)
        if np.any(p < 0):
            raise ValueError("negative probability mass")
        total = p.sum()
        if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"distribution sums to {total}, expected 1")
        p = p / total
        n = p.size
        self.n = n
        self.prob = np.empty(n)
        self.alias = np.zeros(n, dtype=np.int64)
        self.touches = 0

        scaled = p * n
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            lo = small.pop()
            hi = large.pop()
            self.touches += 1
            self.prob[lo] = scaled[lo]
            self.alias[lo] = hi
            scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
            (small if scaled[hi] < 1.0 else large).append(hi)
        for rest in (large, small):
            while rest:
                i = rest.pop()
                self.touches += 1
                self.prob[i] = 1.0
                self.alias[i] = i

    def sample(self, rng: RngStream, size: int) -> np.ndarray:
        gen = rng.generator()
        cols = gen.integers(0, self.n, size=size)
        accept = gen.uniform(size=size) < self.prob[cols]
        return np.where(accept, cols, self.alias[cols])

    def reconstructed(self) -> np.ndarray:
        """The distribution implied by the table (equals the input to 1e-12)."""
        p = self.prob / self.n
        np.add.at(p, self.alias, (1.0 - self.prob) / self.n)
        return p


def alias_sample(p: np.ndarray, m: int, rng: RngStream) -> np.ndarray:
    """m i.i.d. draws from the finite distribution p via an alias table."""
    return AliasTable(p).sample(rng, m)


def encode_tuple(cells: np.ndarray, dim: int) -> int:
    """Pack m universe indices of ``dim`` bits each into one integer
    (big-endian: the first element occupies the highest bits)."""
    out = 0
    for c in cells:
        c = int(c)
        if not 0 <= c < 2**dim:
            raise ValueError(f"cell {c} out of range for {dim} bits")
        out = (out << dim) | c
    return out


def decode_tuple(u: int, m: int, dim: int) -> np.ndarray:
    """Inverse of :func:`encode_tuple`."""
    cells = np.empty(m, dtype=np.int64)
    mask = (1 << dim) - 1
    for i in range(m - 1, -1, -1):
        cells[i] = u & mask
        u >>= dim
    return cells


@dataclass(frozen=True)
class PureMwemResult:
    elements: np.ndarray  # m universe indices: the purified synthetic sample
    sampled: np.ndarray  # the pre-purification sample
    mwem_synthetic: np.ndarray
    T: int
    m: int
    rho: float
    purify_mixed: bool

    def distribution(self) -> np.ndarray:
        cells = int(self.mwem_synthetic.shape[0])
        return np.bincount(self.elements, minlength=cells) / self.m


def pure_mwem(
    dataset: HistogramDataset,
    workload: QueryWorkload,
    eps: float,
    rng: RngStream,
    bit_budget: int = 4096,
    t_cap: int = 500,
) -> PureMwemResult:
    """Pure-DP MWEM: run MWEM, subsample m synthetic elements proportionally,
    and purify the encoded m-tuple as one index of a 2^(md)-point space.

    Schedule (tilde-Theta constants spelled out):

        T = min(ceil((n eps)^(2/3) d^(1/3)), t_cap),
        m = max(1, ceil((n eps)^(2/3) d^(-2/3))),
        delta = eps^dt / (2 dt)^(3 dt) with dt = m d   (log-space),
        rho = eps^2 / (16 ln(1/delta)).

    The composite is 2 eps-pure DP; the query error adds a sampling term of
    order sqrt(ln(2 K n)/(2 m)) on top of MWEM's.
    """
    n = dataset.n
    d = workload.dim
    if dataset.counts.shape != (workload.cells,):
        raise ValueError("dataset and workload universe sizes differ")
    T = min(t_cap, max(1, math.ceil((n * eps) ** (2.0 / 3.0) * d ** (1.0 / 3.0))))
    m = max(1, math.ceil((n * eps) ** (2.0 / 3.0) * d ** (-2.0 / 3.0)))
    dt = m * d
    if dt > bit_budget:
        raise ValueError(
            f"encoded width m*d = {dt} bits exceeds the bit budget {bit_budget}"
        )
    log_delta = dt * math.log(eps) - 3.0 * dt * math.log(2.0 * dt)
    rho = eps * eps / (16.0 * (-log_delta))

    base = mwem(dataset, workload, T, rho, rng.child("mwem"))
    p_hat = base.synthetic / n
    sampled = alias_sample(p_hat, m, rng.child("sample"))
    u = encode_tuple(sampled, d)
    res = purify_discrete(
        u, 2**dt, eps, delta=None, rng=rng.child("purify"), log_delta=log_delta
    )
    elements = decode_tuple(res.index, m, d)
    return PureMwemResult(
        elements=elements,
        sampled=sampled,
        mwem_synthetic=base.synthetic,
        T=T,
        m=m,
        rho=rho,
        purify_mixed=res.mixed,
    )
