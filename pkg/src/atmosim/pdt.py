"""Probability distributions of transmittance (PDTs).

Continuous models live on [0, 1]. :func:`discretize` turns them into a
:class:`DiscretePDT`, a mass function on the equidistant grid ``eta_k = k/n``
(``k = 0..n``) obtained by evaluating the density on the grid and
renormalizing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy import integrate
from scipy.special import betaln, gammaln

from .errors import (
    DegenerateDistributionError,
    DomainError,
    EmptyInputError,
    EmptyPostSelectionError,
    NotAvailableError,
    ParameterDomainError,
    UndefinedStatisticError,
)

LOG_NORMAL = "LOG_NORMAL"
WEIBULL_BW = "WEIBULL_BW"
TABULATED = "TABULATED"

NORMALIZATION_TOL = 1e-12
_GRID_TOL = 1e-9


@dataclass(frozen=True)
class LogNormalPDT:
    """Log-normal PDT with location ``mu`` and scale ``sigma`` of ``ln(eta)``."""

    mu: float
    sigma: float
    family: str = field(default=LOG_NORMAL, init=False)

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ParameterDomainError(f"mu must be finite, got {self.mu}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ParameterDomainError(f"sigma must be > 0, got {self.sigma}")

    @classmethod
    def from_variance(cls, mu, sigma2):
        if not sigma2 > 0:
            raise ParameterDomainError(f"sigma^2 must be > 0, got {sigma2}")
        return cls(mu, math.sqrt(sigma2))

    def _density(self, eta):
        pos = eta > 0
        x = np.where(pos, eta, 1.0)
        z = (np.log(x) - self.mu) / self.sigma
        val = np.exp(-0.5 * z * z) / (x * self.sigma * math.sqrt(2 * math.pi))
        return np.where(pos, val, 0.0)


@dataclass(frozen=True)
class BeamWanderingPDT:
    """Log-negative Weibull PDT of a wandering Gaussian beam.

    The beam centre is displaced by a Rayleigh distributed distance ``r``
    (variance ``wander_variance`` per transverse axis) and the aperture
    transmittance follows ``eta0 * exp(-(r/scale)**shape)``. Changing
    variables gives, for ``0 < eta < eta0`` and ``L = ln(eta0/eta)``::

        P(eta) = scale**2 / (wander_variance * shape * eta)
                 * L**(2/shape - 1) * exp(-scale**2 * L**(2/shape) / (2 * wander_variance))
    """

    eta0: float
    shape: float
    scale: float
    wander_variance: float
    family: str = field(default=WEIBULL_BW, init=False)

    def __post_init__(self):
        if not 0 < self.eta0 <= 1:
            raise ParameterDomainError(f"eta0 must be in (0, 1], got {self.eta0}")
        for name in ("shape", "scale", "wander_variance"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ParameterDomainError(f"{name} must be > 0, got {v}")

    def _density(self, eta):
        inside = (eta > 0) & (eta < self.eta0)
        x = np.where(inside, eta, self.eta0 * 0.5)
        L = np.log(self.eta0 / x)
        a = 2.0 / self.shape
        k = self.scale**2 / (2.0 * self.wander_variance)
        val = 2.0 * k / (self.shape * x) * L ** (a - 1.0) * np.exp(-k * L**a)
        out = np.where(inside, val, 0.0)
        at_peak = eta == self.eta0
        if np.any(at_peak):
            # limit L -> 0 of L**(a-1)
            if a < 1:
                edge = math.inf
            elif a == 1:
                edge = 2.0 * k / (self.shape * self.eta0)
            else:
                edge = 0.0
            out = np.where(at_peak, edge, out)
        return out

    def sample(self, size, rng):
        """Draw transmittances by sampling the beam displacement."""
        r = rng.rayleigh(math.sqrt(self.wander_variance), size)
        return self.eta0 * np.exp(-((r / self.scale) ** self.shape))


@dataclass(frozen=True, eq=False)
class TabulatedPDT:
    """Density given by (eta, value) pairs, linearly interpolated, zero outside.

    A single pair describes a point mass at that transmittance.
    """

    eta: tuple
    values: tuple
    family: str = field(default=TABULATED, init=False)

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        val = np.asarray(self.values, dtype=float)
        if eta.ndim != 1 or eta.shape != val.shape or eta.size == 0:
            raise ParameterDomainError("tabulated PDT needs matching, nonempty eta/value lists")
        if np.any(np.diff(eta) <= 0):
            raise ParameterDomainError("tabulated eta values must be strictly increasing")
        if eta[0] < 0 or eta[-1] > 1:
            raise ParameterDomainError("tabulated eta values must lie in [0, 1]")
        if np.any(val < 0) or not np.all(np.isfinite(val)):
            raise ParameterDomainError("tabulated densities must be finite and >= 0")
        object.__setattr__(self, "eta", tuple(eta.tolist()))
        object.__setattr__(self, "values", tuple(val.tolist()))

    def __eq__(self, other):
        return isinstance(other, TabulatedPDT) and self.eta == other.eta and self.values == other.values

    def __hash__(self):
        return hash((self.eta, self.values))

    @classmethod
    def from_discrete(cls, pdt: "DiscretePDT"):
        return cls(tuple(pdt.etas.tolist()), tuple(pdt.weights.tolist()))

    @property
    def is_point_mass(self):
        return len(self.eta) == 1

    def _density(self, eta):
        return np.interp(eta, self.eta, self.values, left=0.0, right=0.0)


TransmittanceModel = Union[LogNormalPDT, BeamWanderingPDT, TabulatedPDT]


def uniform_density():
    """Constant density 1 on [0, 1]."""
    return TabulatedPDT((0.0, 1.0), (1.0, 1.0))


def density(model: TransmittanceModel, eta):
    """Evaluate the PDT density; scalars in, scalar out."""
    arr = np.asarray(eta, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise DomainError(f"transmittance must lie in [0, 1], got {eta}")
    out = model._density(arr)
    return float(out) if np.ndim(eta) == 0 else out


def closed_moment(model: TransmittanceModel, s: int) -> float:
    """Untruncated closed-form moment ``exp(s*mu + s^2 sigma^2 / 2)`` (log-normal only).

    Integrates over (0, inf), so it ignores that a transmittance cannot exceed 1.
    """
    if not isinstance(model, LogNormalPDT):
        raise NotAvailableError(f"no closed-form moments for family {model.family}")
    if s < 1 or int(s) != s:
        raise DomainError(f"moment order must be a positive integer, got {s}")
    return math.exp(s * model.mu + 0.5 * s * s * model.sigma**2)


def continuous_moments(model: TransmittanceModel, max_order: int = 3, truncated: bool = True):
    """Raw moments ``<eta^s>``, ``s = 1..max_order`` of the continuous model.

    With ``truncated`` the density is restricted to [0, 1] and renormalized;
    moments are then obtained by adaptive quadrature. ``truncated=False`` is
    only meaningful for the log-normal family and returns the closed form.
    """
    orders = range(1, max_order + 1)
    if not truncated:
        return np.array([closed_moment(model, s) for s in orders])

    if isinstance(model, TabulatedPDT):
        return _tabulated_moments(model, max_order)
    if isinstance(model, BeamWanderingPDT):
        return _beam_wandering_moments(model, max_order)

    # log-normal: split at the mode region so quad sees the peak
    peak = min(max(math.exp(model.mu - model.sigma**2), 1e-12), 1.0)
    pts = sorted({p for p in (peak, math.exp(model.mu)) if 0 < p < 1})

    def integral(s):
        f = (lambda x: model._density(x)) if s == 0 else (lambda x: x**s * model._density(x))
        val, _ = integrate.quad(f, 0.0, 1.0, points=pts, limit=400, epsabs=0.0, epsrel=1e-13)
        return val

    norm = integral(0)
    if norm <= 0:
        raise DegenerateDistributionError("density has no mass on [0, 1]")
    return np.array([integral(s) / norm for s in orders])


def _tabulated_moments(model: TabulatedPDT, max_order):
    x = np.asarray(model.eta)
    y = np.asarray(model.values)
    if model.is_point_mass:
        if y[0] <= 0:
            raise DegenerateDistributionError("point-mass table has zero weight")
        return np.array([x[0] ** s for s in range(1, max_order + 1)])

    def integral(s):
        # exact integral of x^s times the linear interpolant on each segment
        x0, x1, y0, y1 = x[:-1], x[1:], y[:-1], y[1:]
        b = (y1 - y0) / (x1 - x0)
        a = y0 - b * x0
        prim = lambda t: a * t ** (s + 1) / (s + 1) + b * t ** (s + 2) / (s + 2)
        return float(np.sum(prim(x1) - prim(x0)))

    norm = integral(0)
    if norm <= 0:
        raise DegenerateDistributionError("tabulated density has no mass")
    return np.array([integral(s) / norm for s in range(1, max_order + 1)])


def _beam_wandering_moments(model: BeamWanderingPDT, max_order):
    # r^2 / (2 sigma^2) is Exp(1): integrate over that variable, no endpoint singularity
    c = 2.0 * model.wander_variance / model.scale**2
    out = []
    for s in range(1, max_order + 1):
        f = lambda e: math.exp(-e - s * (c * e) ** (model.shape / 2.0))
        val, _ = integrate.quad(f, 0.0, math.inf, limit=400, epsabs=0.0, epsrel=1e-13)
        out.append(model.eta0**s * val)
    return np.array(out)


@dataclass(frozen=True, eq=False)
class DiscretePDT:
    """Probability mass on the grid ``eta_k = k/n``, ``k = 0..n``."""

    n: int
    weights: np.ndarray

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ParameterDomainError(f"grid resolution n must be a positive integer, got {self.n}")
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.n + 1,):
            raise ParameterDomainError(f"expected {self.n + 1} weights, got shape {w.shape}")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise ParameterDomainError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > NORMALIZATION_TOL:
            raise ParameterDomainError(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_unnormalized(cls, values):
        v = np.asarray(values, dtype=float)
        total = v.sum()
        if not total > 0:
            raise DegenerateDistributionError("all weights vanish")
        return cls(v.size - 1, v / total)

    @property
    def etas(self):
        return np.arange(self.n + 1) / self.n

    @property
    def support(self):
        """Indices ``k`` with nonzero weight."""
        return np.flatnonzero(self.weights > 0)

    @property
    def mean(self):
        return float(self.weights @ self.etas)

    def __eq__(self, other):
        return isinstance(other, DiscretePDT) and self.n == other.n and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash((self.n, self.weights.tobytes()))

    def describe(self):
        return {"n": self.n, "support": len(self.support), "mean": self.mean}


def point_mass(n: int, eta: float) -> DiscretePDT:
    k = grid_index(n, eta)
    w = np.zeros(n + 1)
    w[k] = 1.0
    return DiscretePDT(n, w)


def grid_index(n: int, eta: float) -> int:
    """Index of ``eta`` on the grid k/n; raises if it is not a grid point."""
    k = round(eta * n)
    if abs(k / n - eta) > _GRID_TOL or not 0 <= k <= n:
        raise DomainError(f"eta={eta} is not a point of the 1/{n} grid")
    return int(k)


def discretize(model: TransmittanceModel, n: int) -> DiscretePDT:
    """Evaluate the density on ``eta_k = k/n`` and renormalize the values."""
    if int(n) != n or n < 1:
        raise ParameterDomainError(f"grid resolution n must be a positive integer, got {n}")
    n = int(n)
    vals = model._density(np.arange(n + 1) / n)
    if not np.all(np.isfinite(vals)):
        bad = np.flatnonzero(~np.isfinite(vals))
        raise DegenerateDistributionError(f"density is singular at grid points {bad.tolist()}")
    return DiscretePDT.from_unnormalized(vals)


class TransmittanceMoments(NamedTuple):
    mean: float
    variance: float
    skewness: float | None  # None when the variance vanishes
    raw: tuple


def transmittance_moments(pdt: DiscretePDT, max_order: int = 3) -> TransmittanceMoments:
    """Raw moments up to ``max_order`` plus mean, variance and standardized skewness."""
    eta = pdt.etas
    raw = tuple(float(pdt.weights @ eta**s) for s in range(1, max(max_order, 3) + 1))
    r1, r2 = raw[0], raw[1]
    if r2 - r1 * r1 <= 1e-15 * r2:
        return TransmittanceMoments(r1, 0.0, None, raw[:max_order])
    try:
        return TransmittanceMoments(*_central_stats(raw), raw=raw[:max_order])
    except UndefinedStatisticError:
        return TransmittanceMoments(r1, r2 - r1 * r1, None, raw[:max_order])


def skewness(pdt: DiscretePDT) -> float:
    """Standardized skewness; raises for a zero-variance mass function."""
    sk = transmittance_moments(pdt).skewness
    if sk is None:
        raise UndefinedStatisticError("skewness is undefined for a zero-variance distribution")
    return sk


def _central_stats(raw):
    r1, r2, r3 = raw[:3]
    var = r2 - r1 * r1
    den = var**1.5 if var > 0 else 0.0
    if not den > 0:
        raise UndefinedStatisticError("skewness is undefined for a zero-variance distribution")
    skew = (r3 - 3 * r1 * r2 + 2 * r1**3) / den
    return r1, var, skew


def _rel_err(approx, ref, scale=1.0):
    if ref is None or approx is None or abs(ref) <= 1e-14 * scale:
        return None
    return float(abs(approx - ref) / abs(ref))


def discretization_errors(model: TransmittanceModel, pdt: DiscretePDT, convention="raw", truncated=True):
    """Relative errors of the first three transmittance moments after discretization.

    ``convention="raw"`` compares ``<eta>, <eta^2>, <eta^3>``;
    ``convention="central"`` compares mean, variance and standardized skewness.
    Entries whose reference value vanishes are returned as ``None``.
    """
    ref_raw = continuous_moments(model, 3, truncated=truncated)
    eta = pdt.etas
    got_raw = [float(pdt.weights @ eta**s) for s in (1, 2, 3)]
    if convention == "raw":
        return tuple(_rel_err(g, r) for g, r in zip(got_raw, ref_raw))
    if convention != "central":
        raise ValueError(f"unknown moment convention {convention!r}")

    def stats(raw):
        r1, r2 = raw[0], raw[1]
        var = r2 - r1 * r1
        if var <= 1e-15 * max(r2, 1e-300):
            return r1, None, None
        return _central_stats(raw)

    ref, got = stats(ref_raw), stats(got_raw)
    return tuple(_rel_err(g, r) for g, r in zip(got, ref))


def discretization_report(model: TransmittanceModel, pdt: DiscretePDT) -> dict:
    """All convention/reference combinations that are defined for ``model``."""
    report = {}
    for truncated in (True, False):
        if not truncated and not isinstance(model, LogNormalPDT):
            continue
        ref = "truncated" if truncated else "untruncated"
        for conv in ("raw", "central"):
            report[f"{conv}_{ref}"] = discretization_errors(model, pdt, conv, truncated)
    return report


def post_select(pdt: DiscretePDT, eta_ps: float) -> DiscretePDT:
    """Keep grid points with ``eta_k >= eta_ps`` and renormalize."""
    if not 0 <= eta_ps <= 1:
        raise DomainError(f"post-selection threshold must lie in [0, 1], got {eta_ps}")
    if eta_ps == 0:
        return pdt
    keep = pdt.etas >= eta_ps - _GRID_TOL
    w = np.where(keep, pdt.weights, 0.0)
    total = w.sum()
    if total <= 0:
        raise EmptyPostSelectionError(f"no probability mass at eta >= {eta_ps}")
    return DiscretePDT(pdt.n, w / total)


def beta_binomial(n: int, alpha: float, beta: float) -> DiscretePDT:
    """Beta-binomial mass function on the grid, evaluated in log space."""
    if not (alpha > 0 and beta > 0) or not (math.isfinite(alpha) and math.isfinite(beta)):
        raise ParameterDomainError(f"alpha and beta must be > 0, got ({alpha}, {beta})")
    if int(n) != n or n < 1:
        raise ParameterDomainError(f"n must be a positive integer, got {n}")
    k = np.arange(n + 1)
    logc = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    logw = logc + betaln(k + alpha, n - k + beta) - betaln(alpha, beta)
    w = np.exp(logw)
    return DiscretePDT(int(n), w / w.sum())


def empirical_pdt(samples: Sequence[float], n: int) -> DiscretePDT:
    """Histogram of transmittance samples on the nearest grid points."""
    s = np.asarray(samples, dtype=float).ravel()
    if s.size == 0:
        raise EmptyInputError("no samples")
    if np.any(~np.isfinite(s)) or np.any(s < 0) or np.any(s > 1):
        raise DomainError("samples must lie in [0, 1]")
    k = np.rint(s * n).astype(np.int64)
    counts = np.bincount(k, minlength=n + 1).astype(float)
    return DiscretePDT(n, counts / s.size)
