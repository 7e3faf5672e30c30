"""Photon-number statistics of the light sources and deterministic loss.

Every distribution is truncated at some ``nmax`` and carries a certified
upper bound ``tail_bound`` on the probability discarded by the truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .errors import DomainError, ParameterDomainError, TruncationError

DEFAULT_TAIL_TOL = 1e-10

FAMILIES = ("coherent", "squeezed", "thermal", "binomial", "fock")


@dataclass(frozen=True, eq=False)
class PhotonNumberDistribution:
    """Probabilities ``p_0..p_nmax`` and a bound on the truncated tail mass."""

    probs: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ParameterDomainError("photon-number distribution needs a nonempty 1-d array")
        if np.any(~np.isfinite(p)) or np.any(p < 0):
            raise ParameterDomainError("probabilities must be finite and nonnegative")
        total = p.sum()
        if total > 1 + 1e-12 or total < 1 - self.tail_bound - 1e-12:
            raise ParameterDomainError(
                f"probabilities sum to {total!r}, outside [1 - {self.tail_bound}, 1]"
            )
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "tail_bound", float(self.tail_bound))

    @classmethod
    def from_probabilities(cls, probs, tail_bound=0.0):
        return cls(np.asarray(probs, dtype=float), tail_bound)

    @property
    def nmax(self):
        return self.probs.size - 1

    @property
    def mean(self):
        return float(np.arange(self.probs.size) @ self.probs)

    def __eq__(self, other):
        return (
            isinstance(other, PhotonNumberDistribution)
            and self.tail_bound == other.tail_bound
            and np.array_equal(self.probs, other.probs)
        )

    __hash__ = None


def _check_truncation(tail, tol, nmax, what):
    if tail > tol:
        raise TruncationError(f"{what}: nmax={nmax} leaves tail mass up to {tail:.3g} > {tol:.3g}")


def coherent(mean_photons: float, nmax: int | None = None, tol: float = DEFAULT_TAIL_TOL):
    """Poisson statistics of a coherent state."""
    mu = float(mean_photons)
    if not (mu >= 0 and math.isfinite(mu)):
        raise ParameterDomainError(f"mean photon number must be >= 0, got {mean_photons}")
    if mu == 0:
        return PhotonNumberDistribution(_vac(nmax))
    if nmax is None:
        nmax = int(stats.poisson.isf(tol, mu))
        while stats.poisson.sf(nmax, mu) > tol:
            nmax += 1
        while nmax > 0 and stats.poisson.sf(nmax - 1, mu) <= tol:
            nmax -= 1
    tail = float(stats.poisson.sf(nmax, mu))
    _check_truncation(tail, tol, nmax, "coherent")
    n = np.arange(nmax + 1)
    p = np.exp(n * math.log(mu) - mu - gammaln(n + 1))
    return PhotonNumberDistribution(p, tail)


def _vac(nmax):
    v = np.zeros(1 if nmax is None else nmax + 1)
    v[0] = 1.0
    return v


def squeezed_vacuum(squeeze: float, nmax: int | None = None, tol: float = DEFAULT_TAIL_TOL):
    """Single-mode squeezed vacuum; only even photon numbers are populated.

    ``p_2m = (2m)! / (2^m m!)^2 * tanh(r)^(2m) / cosh(r)``.
    """
    r = float(squeeze)
    if not (r >= 0 and math.isfinite(r)):
        raise ParameterDomainError(f"squeezing parameter must be >= 0, got {squeeze}")
    if r == 0:
        return PhotonNumberDistribution(_vac(nmax))
    t2 = math.tanh(r) ** 2
    log_cosh = math.log(math.cosh(r))

    # (2m)!/(4^m m!^2) <= 1, hence tail beyond 2M is at most t^(2(M+1)) * cosh(r)
    def tail_after(m_last):
        return math.exp((m_last + 1) * math.log(t2) + log_cosh)

    if nmax is None:
        m_last = max(0, math.ceil((math.log(tol) - log_cosh) / math.log(t2)) - 1)
        while tail_after(m_last) > tol:
            m_last += 1
        nmax = 2 * m_last
    m_last = nmax // 2
    tail = tail_after(m_last)
    _check_truncation(tail, tol, nmax, "squeezed vacuum")
    m = np.arange(m_last + 1)
    logp = gammaln(2 * m + 1) - 2 * gammaln(m + 1) - 2 * m * math.log(2) + m * math.log(t2) - log_cosh
    p = np.zeros(nmax + 1)
    p[0::2] = np.exp(logp)
    return PhotonNumberDistribution(p, tail)


def multimode_squeezed(squeezes: Sequence[float], nmax: int | None = None, tol: float = DEFAULT_TAIL_TOL):
    """Independent squeezed-vacuum modes detected together (discrete convolution)."""
    rs = list(squeezes)
    if not rs:
        raise ParameterDomainError("need at least one squeezing parameter")
    per_mode_tol = tol / (2 * len(rs))
    parts = [squeezed_vacuum(r, tol=per_mode_tol) for r in rs]
    p = parts[0].probs
    for part in parts[1:]:
        p = np.convolve(p, part.probs)
    tail = sum(part.tail_bound for part in parts)
    if nmax is not None and nmax < p.size - 1:
        tail += float(p[nmax + 1:].sum())
        p = p[: nmax + 1]
    elif nmax is not None:
        p = np.concatenate([p, np.zeros(nmax + 1 - p.size)])
    _check_truncation(tail, tol, p.size - 1, "multimode squeezed")
    return PhotonNumberDistribution(p, tail)


def thermal(mean_photons: float, nmax: int | None = None, tol: float = DEFAULT_TAIL_TOL):
    """Geometric (Bose-Einstein) statistics."""
    nb = float(mean_photons)
    if not (nb >= 0 and math.isfinite(nb)):
        raise ParameterDomainError(f"mean photon number must be >= 0, got {mean_photons}")
    if nb == 0:
        return PhotonNumberDistribution(_vac(nmax))
    ratio = nb / (1 + nb)
    if nmax is None:
        nmax = max(0, math.ceil(math.log(tol) / math.log(ratio)) - 1)
        while ratio ** (nmax + 1) > tol:
            nmax += 1
    tail = ratio ** (nmax + 1)
    _check_truncation(tail, tol, nmax, "thermal")
    n = np.arange(nmax + 1)
    p = np.exp(n * math.log(ratio) - math.log1p(nb))
    return PhotonNumberDistribution(p, tail)


def binomial_state(n_emitters: int, q: float):
    """``n_emitters`` independent single-photon emitters, each firing with probability ``q``.

    Sub-Poissonian for ``q > 0`` (Mandel Q = -q); no truncation is needed.
    """
    if int(n_emitters) != n_emitters or n_emitters < 0:
        raise ParameterDomainError(f"n_emitters must be a nonnegative integer, got {n_emitters}")
    if not 0 <= q <= 1:
        raise ParameterDomainError(f"emission probability must lie in [0, 1], got {q}")
    p = stats.binom.pmf(np.arange(n_emitters + 1), int(n_emitters), q)
    return PhotonNumberDistribution(p / p.sum())


def fock(photons: int):
    if int(photons) != photons or photons < 0:
        raise ParameterDomainError(f"photon number must be a nonnegative integer, got {photons}")
    p = np.zeros(int(photons) + 1)
    p[-1] = 1.0
    return PhotonNumberDistribution(p)


def apply_loss(pnd: PhotonNumberDistribution, eta: float) -> PhotonNumberDistribution:
    """Binomial (beam-splitter) loss with intensity transmittance ``eta``.

    ``p'_m = sum_{n>=m} p_n C(n, m) eta^m (1-eta)^(n-m)``.
    """
    if not (0 <= eta <= 1):
        raise DomainError(f"transmittance must lie in [0, 1], got {eta}")
    p = pnd.probs
    if eta == 1:
        return pnd
    if eta == 0:
        out = np.zeros_like(p)
        out[0] = p.sum()
        return PhotonNumberDistribution(out, pnd.tail_bound)
    n = np.arange(p.size)
    m = n[:, None]
    valid = m <= n[None, :]
    logc = gammaln(n[None, :] + 1) - gammaln(m + 1) - gammaln(np.maximum(n[None, :] - m, 0) + 1)
    logk = logc + m * math.log(eta) + np.maximum(n[None, :] - m, 0) * math.log1p(-eta)
    kernel = np.where(valid, np.exp(np.where(valid, logk, 0.0)), 0.0)
    return PhotonNumberDistribution(kernel @ p, pnd.tail_bound)


@dataclass(frozen=True)
class SourceConfig:
    """Description of a source state, resolvable to a photon-number distribution.

    ``family`` selects which fields matter: ``coherent``/``thermal`` use
    ``mean_photons``; ``squeezed`` uses ``squeezes`` (one entry per effective
    mode); ``binomial`` uses ``n_emitters`` and ``emission_probability``;
    ``fock`` uses ``photons``.
    """

    family: str
    mean_photons: float = 0.0
    squeezes: tuple = ()
    n_emitters: int = 0
    emission_probability: float = 0.0
    photons: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterDomainError(f"unknown source family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "squeezes", tuple(float(r) for r in self.squeezes))
        if self.family == "squeezed" and not self.squeezes:
            raise ParameterDomainError("squeezed source needs at least one squeezing parameter")

    def distribution(self, tol: float = DEFAULT_TAIL_TOL) -> PhotonNumberDistribution:
        f = self.family
        if f == "coherent":
            return coherent(self.mean_photons, tol=tol)
        if f == "thermal":
            return thermal(self.mean_photons, tol=tol)
        if f == "squeezed":
            if len(self.squeezes) == 1:
                return squeezed_vacuum(self.squeezes[0], tol=tol)
            return multimode_squeezed(self.squeezes, tol=tol)
        if f == "binomial":
            return binomial_state(self.n_emitters, self.emission_probability)
        return fock(self.photons)

    def generating_function(self, x: float) -> float:
        """Closed form of ``sum_n p_n x^n`` for ``x`` in [0, 1] (untruncated)."""
        f = self.family
        if f == "coherent":
            return math.exp(self.mean_photons * (x - 1))
        if f == "thermal":
            return 1.0 / (1.0 + self.mean_photons * (1 - x))
        if f == "squeezed":
            g = 1.0
            for r in self.squeezes:
                g /= math.cosh(r) * math.sqrt(1 - (math.tanh(r) * x) ** 2)
            return g
        if f == "binomial":
            return (1 - self.emission_probability + self.emission_probability * x) ** self.n_emitters
        return x**self.photons

    def to_dict(self):
        d = {"family": self.family}
        if self.family in ("coherent", "thermal"):
            d["mean_photons"] = self.mean_photons
        elif self.family == "squeezed":
            d["squeezes"] = list(self.squeezes)
        elif self.family == "binomial":
            d["n_emitters"] = self.n_emitters
            d["emission_probability"] = self.emission_probability
        else:
            d["photons"] = self.photons
        return d
