"""Matrices of normally ordered moments and their minimal eigenvalues.

For classical light the Hankel matrix ``M[s, t] = <:m^(s+t):>``,
``s, t = 0..K/2``, is positive semidefinite; a significantly negative
minimal eigenvalue certifies nonclassicality. Uncertainties come from a
multinomial bootstrap of the per-attenuation count data.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .detector import ClickStatistics, MomentVector, moment_weights
from .errors import (
    ContractViolationError,
    CountsRequiredError,
    DomainError,
    IncompleteEnsembleError,
    ParameterDomainError,
    SchemaError,
)
from .pdt import DiscretePDT
from .seeding import STREAM_BOOTSTRAP, derive_rng, digest_words

EIG_TOL = 1e-14
ZERO_TOL = 1e-12  # |e| below this is numerically zero (eigensolver accuracy)
BOOT_SHARD = 250
DEFAULT_B = 1000


def jacobi_eigvalsh(a, tol: float = EIG_TOL, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues (ascending) of real symmetric matrices by cyclic Jacobi rotations.

    Works on a single ``(n, n)`` matrix or a stack ``(..., n, n)``. Sweeps stop
    once the off-diagonal Frobenius norm is below ``tol`` times the matrix
    Frobenius norm; eigenvalue errors are then of order ``tol**2 * ||A||``
    plus round-off.
    """
    a = np.array(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ContractViolationError(f"expected square matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractViolationError("matrix has non-finite entries")
    at = np.swapaxes(a, -1, -2)
    scale = np.sqrt(np.sum(a * a, axis=(-2, -1), keepdims=True))
    if np.any(np.abs(a - at) > 1e-12 * np.maximum(scale, 1e-300)):
        raise ContractViolationError("matrix is not symmetric")
    a = 0.5 * (a + at)
    n = a.shape[-1]
    if n == 1:
        return a[..., 0, :].copy()
    fro = np.sqrt(np.sum(a * a, axis=(-2, -1)))
    offmask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.where(offmask, a * a, 0.0), axis=(-2, -1)))
        if np.all(off <= tol * fro):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[..., p, q]
                app = a[..., p, p]
                aqq = a[..., q, q]
                active = np.abs(apq) > 1e-300
                theta = np.where(active, (aqq - app) / np.where(active, 2.0 * apq, 1.0), 0.0)
                t = np.where(
                    active,
                    np.sign(theta + (theta == 0)) / (np.abs(theta) + np.hypot(theta, 1.0)),
                    0.0,
                )
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                c_ = c[..., None]
                s_ = s[..., None]
                colp = a[..., :, p].copy()
                colq = a[..., :, q].copy()
                a[..., :, p] = c_ * colp - s_ * colq
                a[..., :, q] = s_ * colp + c_ * colq
                rowp = a[..., p, :].copy()
                rowq = a[..., q, :].copy()
                a[..., p, :] = c_ * rowp - s_ * rowq
                a[..., q, :] = s_ * rowp + c_ * rowq
    return np.sort(np.diagonal(a, axis1=-2, axis2=-1), axis=-1)


@dataclass(frozen=True, eq=False)
class MomentMatrix:
    K: int
    matrix: np.ndarray

    @property
    def size(self):
        return self.K // 2 + 1


def _hankel_index(K):
    h = K // 2 + 1
    return np.add.outer(np.arange(h), np.arange(h))


def _check_order(K, N):
    if int(K) != K or K < 2 or K % 2:
        raise DomainError(f"matrix order K must be an even integer >= 2, got {K}")
    if K > N:
        raise DomainError(f"matrix order K={K} exceeds the number of bins N={N}")


def moment_matrix(mv: MomentVector, K: int) -> MomentMatrix:
    """Hankel matrix of moments up to order ``K``."""
    _check_order(K, mv.N)
    m = mv.values[_hankel_index(K)]
    m.setflags(write=False)
    return MomentMatrix(int(K), m)


def min_eigenvalue(M) -> float:
    a = M.matrix if isinstance(M, MomentMatrix) else M
    return float(jacobi_eigvalsh(a)[0])


class Verdict(str, enum.Enum):
    NONCLASSICAL = "NONCLASSICAL"
    INCONCLUSIVE = "INCONCLUSIVE"
    CONSISTENT_CLASSICAL = "CONSISTENT_CLASSICAL"


@dataclass(frozen=True)
class NonclassicalityResult:
    e_min: float
    delta_e: float
    K: int
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def significance(self) -> float:
        # eigenvalues below the solver accuracy carry no sign information
        if abs(self.e_min) <= ZERO_TOL:
            return 0.0
        if self.delta_e > 0:
            return self.e_min / self.delta_e
        return math.copysign(math.inf, self.e_min)

    def to_dict(self):
        sig = self.significance
        return {
            "K": self.K,
            "e_min": self.e_min,
            "delta_e": self.delta_e,
            "significance": sig if math.isfinite(sig) else None,
            "classification": classify(self).value,
            **({"metadata": self.metadata} if self.metadata else {}),
        }


def classify(result: NonclassicalityResult, threshold: float = 3.0) -> Verdict:
    """NONCLASSICAL iff significance <= -threshold; a nonnegative e_min is classical."""
    if result.significance <= -threshold:
        return Verdict.NONCLASSICAL
    if result.e_min >= 0:
        return Verdict.CONSISTENT_CLASSICAL
    return Verdict.INCONCLUSIVE


def _pairs(ensemble) -> list:
    members = getattr(ensemble, "members", ensemble)
    return [(float(eta), cs) for eta, cs in members]


def _support_statistics(ensemble, pdt: DiscretePDT):
    """Click statistics for each support point of ``pdt``, in grid order."""
    pairs = _pairs(ensemble)
    if not pairs:
        raise IncompleteEnsembleError("empty ensemble")
    N = pairs[0][1].N
    by_index = {}
    for eta, cs in pairs:
        if cs.N != N:
            raise SchemaError(f"ensemble mixes N={N} and N={cs.N}")
        k = round(eta * pdt.n)
        if abs(k / pdt.n - eta) < 1e-9:
            by_index[k] = cs
    support = pdt.support
    missing = [k for k in support if k not in by_index]
    if missing:
        etas = ", ".join(f"{k / pdt.n:.2f}" for k in missing[:5])
        raise IncompleteEnsembleError(f"ensemble lacks click statistics at eta = {etas}")
    return support, [by_index[k] for k in support], N


def atmospheric_moment_vector(ensemble, pdt: DiscretePDT) -> MomentVector:
    """``<:m^l:>_atm = sum_j w_j sum_k C(N-k,l)/C(N,l) c_k(eta_j)`` for all ``l``."""
    support, stats, N = _support_statistics(ensemble, pdt)
    T = moment_weights(N)
    acc = np.zeros(N + 1)
    for k, cs in zip(support, stats):
        acc += pdt.weights[k] * (T @ cs.probabilities)
    return MomentVector(acc)


def atmospheric_moments(ensemble, pdt: DiscretePDT, l: int) -> float:
    mv = atmospheric_moment_vector(ensemble, pdt)
    if int(l) != l or not 0 <= l <= mv.N:
        raise DomainError(f"moment order must be an integer in [0, {mv.N}], got {l}")
    return mv[int(l)]


def point_estimate(ensemble, pdt: DiscretePDT, K: int) -> float:
    mv = atmospheric_moment_vector(ensemble, pdt)
    return min_eigenvalue(moment_matrix(mv, K))


def _boot_shard(ensemble_support, weights, Ks, size, rng, T):
    """Minimal eigenvalues of ``size`` bootstrap replicates for each K."""
    acc = np.zeros((size, T.shape[0]))
    for w, cs in zip(weights, ensemble_support):
        M = int(cs.counts.sum())
        reps = rng.multinomial(M, cs.probabilities, size=size) / M
        acc += w * reps
    mom = acc @ T.T
    return {K: jacobi_eigvalsh(mom[:, _hankel_index(K)])[:, 0] for K in Ks}


def bootstrap_errors(ensemble, pdt: DiscretePDT, Ks: Sequence[int], B: int = DEFAULT_B, seed=0, threads: int = 1):
    """Bootstrap results for several matrix orders sharing one set of replicates.

    Each replicate redraws every support level's counts from
    ``multinomial(M_j, c(eta_j))`` and recomputes the merged minimal
    eigenvalue. The seed stream is keyed by the PDT content, so equal PDTs
    (e.g. a post-selected PDT collapsing to a point mass) give identical
    replicates.
    """
    if int(B) != B or B < 100:
        raise ParameterDomainError(f"bootstrap needs B >= 100 resamples, got {B}")
    support, stats, N = _support_statistics(ensemble, pdt)
    for k, cs in zip(support, stats):
        if cs.counts is None:
            raise CountsRequiredError(f"click statistics at eta={k / pdt.n:.2f} carry no counts")
    Ks = [int(K) for K in Ks]
    for K in Ks:
        _check_order(K, N)
    T = moment_weights(N)
    weights = pdt.weights[support]
    key = digest_words(np.array([pdt.n]), support, weights)
    sizes = [BOOT_SHARD] * (B // BOOT_SHARD) + ([B % BOOT_SHARD] if B % BOOT_SHARD else [])

    def run(i):
        return _boot_shard(stats, weights, Ks, sizes[i], derive_rng(seed, STREAM_BOOTSTRAP, *key, i), T)

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(threads) as ex:
            shards = list(ex.map(run, range(len(sizes))))
    else:
        shards = [run(i) for i in range(len(sizes))]

    mv = atmospheric_moment_vector(list(zip(support / pdt.n, stats)), pdt)
    Ms = sorted({cs.M for cs in stats})
    meta = {"seed": seed, "B": int(B), "M": Ms[0] if len(Ms) == 1 else [Ms[0], Ms[-1]], "pdt": pdt.describe()}
    out = {}
    for K in Ks:
        reps = np.concatenate([s[K] for s in shards])
        delta = float(np.std(reps, ddof=1))
        out[K] = NonclassicalityResult(min_eigenvalue(moment_matrix(mv, K)), delta, K, meta)
    return out


def bootstrap_error(ensemble, pdt: DiscretePDT, K: int, B: int = DEFAULT_B, seed=0, threads: int = 1) -> NonclassicalityResult:
    return bootstrap_errors(ensemble, pdt, [K], B, seed, threads)[int(K)]


def analytic_result(ensemble, pdt: DiscretePDT, K: int) -> NonclassicalityResult:
    """Result for probability-only statistics: no sampling error (``delta_e = 0``)."""
    return NonclassicalityResult(point_estimate(ensemble, pdt, K), 0.0, int(K), {"pdt": pdt.describe()})
