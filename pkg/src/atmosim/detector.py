"""Time-multiplexed click detector with ``N`` on/off bins.

The detector response is linear: a photon is registered with probability
``efficiency`` and lands in one of the ``N`` bins uniformly; each bin has an
independent dark exposure ``dark`` (mean dark events per bin and pulse).
With this response the normally ordered no-click moments are::

    <:m^l:> = exp(-l * dark) * sum_n p_n (1 - l * efficiency / N)^n

and the click statistics follow from them by an inverse binomial transform.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .errors import DomainError, EmptyInputError, ParameterDomainError, SchemaError
from .seeding import STREAM_MONTE_CARLO, STREAM_SAMPLE, derive_rng
from .source import PhotonNumberDistribution

MC_SHARD = 200_000


@dataclass(frozen=True)
class DetectorConfig:
    bins: int = 8
    efficiency: float = 0.22
    dark: float = 0.0

    def __post_init__(self):
        if int(self.bins) != self.bins or self.bins < 1:
            raise ParameterDomainError(f"number of bins must be a positive integer, got {self.bins}")
        if not 0 <= self.efficiency <= 1:
            raise ParameterDomainError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        if not (self.dark >= 0 and math.isfinite(self.dark)):
            raise ParameterDomainError(f"dark exposure must be >= 0, got {self.dark}")
        object.__setattr__(self, "bins", int(self.bins))

    def with_efficiency(self, efficiency):
        return DetectorConfig(self.bins, efficiency, self.dark)


@dataclass(frozen=True, eq=False)
class ClickStatistics:
    """Click-number distribution ``c_0..c_N``, optionally backed by counts."""

    probabilities: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self):
        c = np.array(self.probabilities, dtype=float)
        if c.ndim != 1 or c.size < 2:
            raise SchemaError("click statistics need N + 1 >= 2 probabilities")
        if np.any(~np.isfinite(c)) or np.any(c < 0) or abs(c.sum() - 1) > 1e-12:
            raise SchemaError(f"click probabilities must be nonnegative and sum to 1 (sum={c.sum()!r})")
        c.setflags(write=False)
        object.__setattr__(self, "probabilities", c)
        if self.counts is not None:
            k = np.array(self.counts, dtype=np.int64)
            if k.shape != c.shape or np.any(k < 0) or k.sum() < 1:
                raise SchemaError("counts must be nonnegative, match the probabilities and total >= 1")
            k.setflags(write=False)
            object.__setattr__(self, "counts", k)

    @classmethod
    def from_counts(cls, counts):
        k = np.asarray(counts, dtype=np.int64)
        total = k.sum()
        if total < 1:
            raise EmptyInputError("no trials recorded")
        return cls(k / total, k)

    @property
    def N(self):
        return self.probabilities.size - 1

    @property
    def M(self):
        """Number of trials, or ``None`` for probabilities without counts."""
        return None if self.counts is None else int(self.counts.sum())

    def __eq__(self, other):
        if not isinstance(other, ClickStatistics) or not np.array_equal(self.probabilities, other.probabilities):
            return False
        if self.counts is None or other.counts is None:
            return self.counts is None and other.counts is None
        return np.array_equal(self.counts, other.counts)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MomentVector:
    """Normally ordered moments ``<:m^l:>`` for ``l = 0..N``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def N(self):
        return self.values.size - 1

    def __getitem__(self, l):
        return float(self.values[l])


def normally_ordered_moments(pnd: PhotonNumberDistribution, cfg: DetectorConfig) -> MomentVector:
    """Analytic ``<:m^l:>`` of a photon-number distribution (normalized to ``l=0`` -> 1)."""
    p = pnd.probs / pnd.probs.sum()
    n = np.arange(p.size)
    out = np.empty(cfg.bins + 1)
    for l in range(cfg.bins + 1):
        x = 1.0 - l * cfg.efficiency / cfg.bins
        out[l] = math.exp(-l * cfg.dark) * float(p @ x**n)
    return MomentVector(out)


def clicks_from_moments(moments, N=None) -> np.ndarray:
    """Inverse binomial transform ``c_k = C(N,k) sum_j C(k,j) (-1)^j m_{N-k+j}``."""
    m = np.asarray(moments.values if isinstance(moments, MomentVector) else moments, dtype=float)
    N = m.size - 1 if N is None else N
    c = np.empty(N + 1)
    for k in range(N + 1):
        j = np.arange(k + 1)
        c[k] = comb(N, k, exact=True) * float(np.sum(comb(k, j) * (-1.0) ** j * m[N - k + j]))
    return c


def click_statistics(pnd: PhotonNumberDistribution, cfg: DetectorConfig) -> ClickStatistics:
    c = clicks_from_moments(normally_ordered_moments(pnd, cfg))
    # cancellation in the alternating sum leaves round-off of order 1e-16
    c = np.where(c < 0, 0.0, c)
    return ClickStatistics(c / c.sum())


def _moment_weights(N: int) -> np.ndarray:
    """Matrix ``T[l, k] = C(N-k, l) / C(N, l)`` mapping clicks to moments."""
    l = np.arange(N + 1)[:, None]
    k = np.arange(N + 1)[None, :]
    return comb(N - k, l) / comb(N, l)


_T_CACHE: dict = {}


def moment_weights(N: int) -> np.ndarray:
    if N not in _T_CACHE:
        t = _moment_weights(N)
        t.setflags(write=False)
        _T_CACHE[N] = t
    return _T_CACHE[N]


def moments_from_clicks(cs: ClickStatistics, l: int) -> float:
    """Sample ``<:m^l:> = sum_{k<=N-l} C(N-k, l)/C(N, l) c_k`` from click data."""
    N = cs.N
    if int(l) != l or not 0 <= l <= N:
        raise DomainError(f"moment order must be an integer in [0, {N}], got {l}")
    return float(moment_weights(N)[int(l)] @ cs.probabilities)


def moment_vector(cs: ClickStatistics) -> MomentVector:
    return MomentVector(moment_weights(cs.N) @ cs.probabilities)


def mean_clicks(cs: ClickStatistics) -> float:
    return float(np.arange(cs.N + 1) @ cs.probabilities)


def sample_clicks(cs: ClickStatistics, M: int, seed, stream_index=(0,)) -> ClickStatistics:
    """Draw ``M`` pulses from the click distribution (multinomial counts)."""
    if int(M) != M or M < 1:
        raise EmptyInputError(f"number of trials must be >= 1, got {M}")
    rng = derive_rng(seed, STREAM_SAMPLE, *stream_index)
    counts = rng.multinomial(int(M), cs.probabilities)
    return ClickStatistics.from_counts(counts)


def _mc_shard(p, cfg, size, rng):
    n = rng.choice(p.size, size=size, p=p)
    detected = rng.binomial(n, cfg.efficiency)
    occupancy = rng.multinomial(detected, np.full(cfg.bins, 1.0 / cfg.bins))
    fired = occupancy > 0
    if cfg.dark > 0:
        fired |= rng.random((size, cfg.bins)) < -math.expm1(-cfg.dark)
    return np.bincount(fired.sum(axis=1), minlength=cfg.bins + 1)


def monte_carlo_clicks(pnd: PhotonNumberDistribution, cfg: DetectorConfig, M: int, seed, threads: int = 1) -> ClickStatistics:
    """Photon-by-photon simulation of the detector; independent check of :func:`click_statistics`.

    Each trial draws a photon number, keeps each photon with probability
    ``efficiency``, drops survivors uniformly into the bins and adds dark
    clicks. Work is split into fixed-size shards with their own seed streams,
    so the result does not depend on ``threads``.
    """
    if int(M) != M or M < 1:
        raise EmptyInputError(f"number of trials must be >= 1, got {M}")
    p = pnd.probs / pnd.probs.sum()
    sizes = [MC_SHARD] * (int(M) // MC_SHARD)
    if M % MC_SHARD:
        sizes.append(int(M) % MC_SHARD)

    def run(i):
        return _mc_shard(p, cfg, sizes[i], derive_rng(seed, STREAM_MONTE_CARLO, i))

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    return ClickStatistics.from_counts(np.sum(parts, axis=0))
