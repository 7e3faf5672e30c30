"""End-to-end experiments on ensembles of constant-attenuation click data.

A :class:`ChannelEnsemble` holds click statistics recorded (or simulated) at
every transmittance ``eta_j = j/n``. A fluctuating-loss channel is emulated
by weighting the members with a discrete PDT, either by merging the click
statistics or, equivalently, by weighting the sampled moments.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import pdt as pdtmod
from .detector import (
    ClickStatistics,
    DetectorConfig,
    click_statistics,
    moment_vector,
    sample_clicks,
)
from .errors import (
    AtmosimError,
    ConfigurationError,
    IncompleteEnsembleError,
    SchemaError,
    UnachievableTargetError,
)
from .nonclassicality import (
    DEFAULT_B,
    NonclassicalityResult,
    Verdict,
    analytic_result,
    bootstrap_errors,
    classify,
    min_eigenvalue,
    moment_matrix,
)
from .pdt import DiscretePDT, beta_binomial, discretize, point_mass, post_select
from .source import PhotonNumberDistribution, SourceConfig, apply_loss

ANALYTIC = "analytic"
SAMPLED = "sampled"


@dataclass(frozen=True, eq=False)
class ChannelEnsemble:
    """Click statistics at every grid transmittance ``j/n``, ``j = 0..n``."""

    stats: tuple
    detector: DetectorConfig
    provenance: str = "simulated"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        stats = tuple(self.stats)
        if len(stats) < 2:
            raise IncompleteEnsembleError("an ensemble needs at least the levels eta=0 and eta=1")
        for j, cs in enumerate(stats):
            if cs.N != self.detector.bins:
                raise SchemaError(f"level {j}: N={cs.N} but the detector has {self.detector.bins} bins")
        object.__setattr__(self, "stats", stats)

    @property
    def n(self):
        return len(self.stats) - 1

    @property
    def etas(self):
        return np.arange(self.n + 1) / self.n

    @property
    def members(self):
        return list(zip(self.etas.tolist(), self.stats))

    @property
    def has_counts(self):
        return all(cs.counts is not None for cs in self.stats)

    def __eq__(self, other):
        return (
            isinstance(other, ChannelEnsemble)
            and self.detector == other.detector
            and self.stats == other.stats
        )

    __hash__ = None


def build_ensemble(
    source,
    cfg: DetectorConfig,
    n: int,
    mode: str = ANALYTIC,
    M: int | None = None,
    seed=None,
) -> ChannelEnsemble:
    """Click statistics of the lossy source at ``eta_j = j/n``.

    ``mode="sampled"`` attaches multinomial counts of ``M`` pulses per level,
    drawn from seed stream ``(seed, SAMPLE, j)``.
    """
    if int(n) != n or n < 1:
        raise ConfigurationError(f"grid resolution n must be >= 1, got {n}")
    pnd = source if isinstance(source, PhotonNumberDistribution) else source.distribution()
    stats = []
    for j in range(int(n) + 1):
        cs = click_statistics(apply_loss(pnd, j / n), cfg)
        if mode == SAMPLED:
            if M is None or seed is None:
                raise ConfigurationError("sampled mode needs both M and a seed")
            cs = sample_clicks(cs, M, seed, stream_index=(j,))
        elif mode != ANALYTIC:
            raise ConfigurationError(f"unknown ensemble mode {mode!r}")
        stats.append(cs)
    info = {"mode": mode}
    if isinstance(source, SourceConfig):
        info["source"] = source.to_dict()
    if mode == SAMPLED:
        info.update(M=int(M), seed=seed)
    return ChannelEnsemble(tuple(stats), cfg, "simulated", info)


def _check_grid(ensemble: ChannelEnsemble, pdt: DiscretePDT):
    if pdt.n != ensemble.n:
        raise IncompleteEnsembleError(
            f"PDT grid 1/{pdt.n} does not match the ensemble grid 1/{ensemble.n}"
        )


def merge_statistics(ensemble: ChannelEnsemble, pdt: DiscretePDT) -> ClickStatistics:
    """Weighted mixture ``c_atm = sum_j w_j c(eta_j)`` of the member statistics."""
    _check_grid(ensemble, pdt)
    acc = np.zeros(ensemble.detector.bins + 1)
    for j in pdt.support:
        acc += pdt.weights[j] * ensemble.stats[j].probabilities
    return ClickStatistics(acc / acc.sum())


def merged_min_eigenvalue(ensemble: ChannelEnsemble, pdt: DiscretePDT, K: int) -> float:
    """Minimal eigenvalue via the merged click statistics."""
    return min_eigenvalue(moment_matrix(moment_vector(merge_statistics(ensemble, pdt)), K))


def atmospheric_run(ensemble: ChannelEnsemble, pdt: DiscretePDT, K=8, B: int = DEFAULT_B, seed=0, threads: int = 1):
    """Nonclassicality test of the channel described by ``pdt``.

    Returns one :class:`NonclassicalityResult` for an integer ``K`` or a dict
    keyed by order for a sequence of orders. Ensembles without counts give
    exact values with ``delta_e = 0``.
    """
    _check_grid(ensemble, pdt)
    Ks = [K] if isinstance(K, (int, np.integer)) else list(K)
    if ensemble.has_counts:
        res = bootstrap_errors(ensemble, pdt, Ks, B, seed, threads)
    else:
        res = {k: analytic_result(ensemble, pdt, k) for k in Ks}
    return res[int(K)] if isinstance(K, (int, np.integer)) else res


@dataclass(frozen=True)
class SweepPoint:
    params: dict
    K: int
    result: NonclassicalityResult | None = None
    error: str | None = None

    @property
    def ok(self):
        return self.result is not None


@dataclass(frozen=True)
class SweepResult:
    kind: str
    parameter_names: tuple
    points: tuple
    info: dict = field(default_factory=dict)
    threshold: float = 3.0

    def for_order(self, K):
        return [p for p in self.points if p.K == K]

    def rows(self):
        """Plot-ready records, one per (parameter point, K)."""
        out = []
        for p in self.points:
            row = {name: p.params[name] for name in self.parameter_names}
            row["K"] = p.K
            if p.result is not None:
                sig = p.result.significance
                row.update(
                    e_min=p.result.e_min,
                    delta_e=p.result.delta_e,
                    significance=sig,
                    classification=classify(p.result, self.threshold).value,
                    error="",
                )
            else:
                row.update(e_min=math.nan, delta_e=math.nan, significance=math.nan, classification="", error=p.error)
            out.append(row)
        return out


def _run_points(ensemble, jobs, Ks, B, seed, threads):
    """Evaluate ``jobs`` = [(params, pdt_factory)] in order; errors become entries."""

    def one(job):
        params, make = job
        try:
            res = atmospheric_run(ensemble, make(), Ks, B, seed)
        except AtmosimError as exc:
            return [SweepPoint(params, K, None, f"{type(exc).__name__}: {exc}") for K in Ks]
        return [SweepPoint(params, K, res[K]) for K in Ks]

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as ex:
            chunks = list(ex.map(one, jobs))
    else:
        chunks = [one(job) for job in jobs]
    return tuple(p for chunk in chunks for p in chunk)


def _orders(K):
    return [int(K)] if isinstance(K, (int, np.integer)) else sorted(int(k) for k in K)


def constant_loss_sweep(ensemble: ChannelEnsemble, K=(2, 8), B: int = DEFAULT_B, seed=0, threads: int = 1, threshold: float = 3.0) -> SweepResult:
    """Point-mass PDT at every ensemble level."""
    Ks = _orders(K)
    jobs = [({"eta": float(eta)}, (lambda j=j: point_mass(ensemble.n, j / ensemble.n))) for j, eta in enumerate(ensemble.etas)]
    return SweepResult("constant-loss", ("eta",), _run_points(ensemble, jobs, Ks, B, seed, threads), {"K": Ks}, threshold)


def postselection_sweep(ensemble, pdt: DiscretePDT, K=8, thresholds: Sequence[float] | None = None, B: int = DEFAULT_B, seed=0, threads: int = 1, threshold: float = 3.0) -> SweepResult:
    """Atmospheric run on the post-selected PDT for every cutoff."""
    if thresholds is None:
        thresholds = [i / 100 for i in range(100)]
    ts = [float(t) for t in thresholds]
    if any(not 0 <= t <= 1 for t in ts):
        raise ConfigurationError("post-selection thresholds must lie in [0, 1]")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ConfigurationError("post-selection thresholds must be strictly increasing")
    jobs = [({"eta_ps": t}, (lambda t=t: post_select(pdt, t))) for t in ts]
    return SweepResult("postselect", ("eta_ps",), _run_points(ensemble, jobs, _orders(K), B, seed, threads), {"pdt": pdt.describe()}, threshold)


def rytov_sweep(ensemble, mapping: Callable, K=8, grid: Sequence[float] = (), B: int = DEFAULT_B, seed=0, threads: int = 1, threshold: float = 3.0) -> SweepResult:
    """Discretize ``mapping(sigma_R^2)`` and run the channel for every grid value.

    ``mapping`` returns a transmittance model or a ready :class:`DiscretePDT`.
    """
    if mapping is None:
        raise ConfigurationError("the Rytov sweep needs a sigma_R^2 -> PDT mapping")
    vals = [float(s) for s in grid]
    if not vals or any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigurationError("Rytov grid must be nonempty and strictly increasing")

    def make(s):
        model = mapping(s)
        return model if isinstance(model, DiscretePDT) else discretize(model, ensemble.n)

    jobs = [({"sigma_r2": s}, (lambda s=s: make(s))) for s in vals]
    return SweepResult("rytov", ("sigma_r2",), _run_points(ensemble, jobs, _orders(K), B, seed, threads), {}, threshold)


def beta_scan(ensemble, K=8, alphas: Sequence[float] = (), betas: Sequence[float] = (), B: int = DEFAULT_B, seed=0, threads: int = 1, threshold: float = 3.0) -> SweepResult:
    """Beta-binomial PDTs on the ensemble grid for every (alpha, beta) pair."""
    a_vals = sorted(float(a) for a in alphas)
    b_vals = sorted(float(b) for b in betas)
    if not a_vals or not b_vals or min(a_vals + b_vals) <= 0:
        raise ConfigurationError("alpha and beta grids must be nonempty and positive")
    jobs = [
        ({"alpha": a, "beta": b}, (lambda a=a, b=b: beta_binomial(ensemble.n, a, b)))
        for a in a_vals
        for b in b_vals
    ]
    return SweepResult("beta-scan", ("alpha", "beta"), _run_points(ensemble, jobs, _orders(K), B, seed, threads), {}, threshold)


def default_beta_grid(points: int = 12):
    return np.geomspace(0.1, 20.0, points).tolist()


@dataclass(frozen=True)
class LinearWanderingMapping:
    """Beam-wandering PDT whose wander variance grows linearly with sigma_R^2.

    The aperture parameters (``eta0``, ``shape``, ``scale``) stay fixed; a
    vanishing Rytov parameter maps to a point mass at the grid point
    nearest ``eta0``.
    """

    eta0: float
    shape: float
    scale: float
    variance_per_rytov: float
    n: int = 100

    def __call__(self, sigma_r2):
        if sigma_r2 <= 0:
            return point_mass(self.n, round(self.eta0 * self.n) / self.n)
        return pdtmod.BeamWanderingPDT(self.eta0, self.shape, self.scale, self.variance_per_rytov * sigma_r2)


@dataclass(frozen=True)
class TableMapping:
    """Explicit beam-wandering parameters per sigma_R^2 value."""

    entries: dict  # sigma_r2 -> (eta0, shape, scale, wander_variance)

    def __call__(self, sigma_r2):
        for key, params in self.entries.items():
            if math.isclose(float(key), sigma_r2, rel_tol=1e-12, abs_tol=1e-15):
                return pdtmod.BeamWanderingPDT(*params)
        raise ConfigurationError(f"no beam-wandering parameters tabulated for sigma_R^2={sigma_r2}")


def mean_clicks_at(source: SourceConfig, cfg: DetectorConfig, eta: float = 1.0) -> float:
    """Closed-form mean click number ``N (1 - e^{-dark} G(1 - eta*eff/N))``."""
    x = 1.0 - eta * cfg.efficiency / cfg.bins
    return cfg.bins * (1.0 - math.exp(-cfg.dark) * source.generating_function(x))


def _bisect(f, lo, hi, tol=1e-15, max_iter=200):
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def calibrate_source(
    target_mean_clicks: float = 2.7,
    cfg: DetectorConfig = DetectorConfig(),
    mode_count: int = 1,
    family: str = "squeezed",
    n_emitters: int = 20,
) -> SourceConfig:
    """Pick the source strength so that the mean click number at ``eta = 1`` hits the target.

    ``family="squeezed"`` solves for a common squeezing parameter of
    ``mode_count`` modes; ``family="binomial"`` solves for the emission
    probability of ``n_emitters`` single-photon emitters. Deterministic
    bisection on a bracketing interval.
    """
    N = cfg.bins
    floor = N * -math.expm1(-cfg.dark)
    if target_mean_clicks >= N:
        raise UnachievableTargetError(f"target {target_mean_clicks} clicks needs fewer than N={N}")
    if target_mean_clicks < floor - 1e-12:
        raise UnachievableTargetError(f"dark clicks alone give {floor:.4g} > {target_mean_clicks}")

    if family == "squeezed":
        make = lambda r: SourceConfig("squeezed", squeezes=(r,) * mode_count)
        lo, hi = 0.0, 1.0
        while mean_clicks_at(make(hi), cfg) < target_mean_clicks:
            hi *= 2
            if hi > 64:
                raise UnachievableTargetError(f"target {target_mean_clicks} not reachable by squeezing")
    elif family == "binomial":
        make = lambda q: SourceConfig("binomial", n_emitters=n_emitters, emission_probability=q)
        lo, hi = 0.0, 1.0
        if mean_clicks_at(make(hi), cfg) < target_mean_clicks:
            raise UnachievableTargetError(f"{n_emitters} emitters cannot reach {target_mean_clicks} clicks")
    else:
        raise ConfigurationError(f"calibration supports 'squeezed' and 'binomial', not {family!r}")

    if target_mean_clicks <= floor:
        return make(0.0)
    x = _bisect(lambda v: mean_clicks_at(make(v), cfg) - target_mean_clicks, lo, hi)
    return make(x)


def nonclassical_threshold(sweep: SweepResult, K: int, threshold: float = 3.0):
    """Smallest value of the sweep parameter above which every point is NONCLASSICAL (None if none)."""
    name = sweep.parameter_names[0]
    pts = sorted(((p.params[name], p) for p in sweep.for_order(K)), key=lambda t: t[0])
    best = None
    for eta, p in reversed(pts):
        if p.result is None or classify(p.result, threshold) is not Verdict.NONCLASSICAL:
            break
        best = eta
    return best


def ingest_ensemble(path) -> ChannelEnsemble:
    from .io import read_ensemble

    return read_ensemble(path)


def export_ensemble(ensemble: ChannelEnsemble, path, comments=()):
    from .io import write_ensemble

    return write_ensemble(ensemble, path, comments)
