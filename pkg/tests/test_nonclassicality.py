import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from atmosim.detector import DetectorConfig, click_statistics, moment_vector, moments_from_clicks, sample_clicks
from atmosim.errors import ContractViolationError, CountsRequiredError, DomainError, IncompleteEnsembleError, ParameterDomainError
from atmosim.nonclassicality import (
    NonclassicalityResult,
    Verdict,
    analytic_result,
    atmospheric_moments,
    bootstrap_error,
    bootstrap_errors,
    classify,
    jacobi_eigvalsh,
    min_eigenvalue,
    moment_matrix,
    point_estimate,
)
from atmosim.pdt import DiscretePDT, point_mass, post_select
from atmosim.source import apply_loss, binomial_state, coherent, squeezed_vacuum, thermal

CFG = DetectorConfig()
BINOM = binomial_state(20, 0.7409554875924189)


def _e(pnd, K, cfg=CFG):
    return min_eigenvalue(moment_matrix(moment_vector(click_statistics(pnd, cfg)), K))


class TestJacobi:
    @given(arrays(np.float64, (5, 5), elements=st.floats(-10, 10)))
    @settings(max_examples=100)
    def test_agrees_with_lapack(self, a):
        s = a + a.T
        ref = np.linalg.eigvalsh(s)
        got = jacobi_eigvalsh(s)
        assert np.max(np.abs(got - ref)) <= 1e-12 * max(1.0, np.linalg.norm(s, 2))

    def test_two_by_two_closed_form(self):
        a, b, c = 1.0, 0.5, 0.2
        expect = 0.5 * (a + c) - math.hypot(0.5 * (a - c), b)
        assert min_eigenvalue(np.array([[a, b], [b, c]])) == pytest.approx(expect, abs=1e-15)

    def test_rank_one(self):
        x = 0.3
        assert abs(min_eigenvalue(np.array([[1, x], [x, x * x]]))) <= 1e-15

    def test_batched(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(50, 4, 4))
        a = a + np.swapaxes(a, 1, 2)
        np.testing.assert_allclose(jacobi_eigvalsh(a), np.linalg.eigvalsh(a), atol=1e-12)

    def test_contract_violations(self):
        with pytest.raises(ContractViolationError):
            jacobi_eigvalsh(np.array([[1.0, 2.0], [0.0, 1.0]]))
        with pytest.raises(ContractViolationError):
            jacobi_eigvalsh(np.array([[1.0, np.nan], [np.nan, 1.0]]))
        with pytest.raises(ContractViolationError):
            jacobi_eigvalsh(np.ones((2, 3)))


class TestMomentMatrix:
    def test_hankel_layout(self):
        mv = moment_vector(click_statistics(coherent(1.0), CFG))
        M = moment_matrix(mv, 4).matrix
        assert M.shape == (3, 3)
        assert M[0, 0] == 1.0 and M[1, 1] == M[0, 2] == mv[2] and M[2, 2] == mv[4]

    @pytest.mark.parametrize("K", [0, 3, 10])
    def test_bad_order(self, K):
        mv = moment_vector(click_statistics(coherent(1.0), CFG))
        with pytest.raises(DomainError):
            moment_matrix(mv, K)


class TestClassicalBound:
    @pytest.mark.parametrize("mu", [0.1, 0.5, 1, 2, 5])
    @pytest.mark.parametrize("eff", [0.22, 1.0])
    def test_coherent(self, mu, eff):
        cfg = DetectorConfig(8, eff)
        pnd = coherent(mu, tol=1e-15)
        assert abs(_e(pnd, 2, cfg)) <= 1e-10
        for K in (4, 6, 8):
            assert _e(pnd, K, cfg) >= -1e-10

    @pytest.mark.parametrize("nb", [0.1, 1.0, 4.0])
    def test_thermal(self, nb):
        for K in (2, 4, 6, 8):
            assert _e(thermal(nb, tol=1e-15), K) >= -1e-10


class TestNonclassicalSources:
    def test_binomial_source_negative(self):
        assert _e(BINOM, 8) < -1e-2
        assert _e(BINOM, 2) < -1e-3

    def test_squeezed_vacuum_matches_high_precision_oracle(self):
        # squeezed vacuum stays PSD under this detector model; compare the tiny value itself
        mp.mp.dps = 60
        pnd = squeezed_vacuum(1.0, tol=1e-30)
        p = [mp.mpf(float(x)) for x in pnd.probs]
        m = [mp.fsum(pn * (1 - mp.mpf(l) * mp.mpf("0.22") / 8) ** n for n, pn in enumerate(p)) for l in range(9)]
        H = mp.matrix(5, 5)
        for s in range(5):
            for t in range(5):
                H[s, t] = m[s + t]
        ref = float(min(mp.eigsy(H, eigvals_only=True)))
        assert ref == pytest.approx(8.12e-10, rel=1e-2)
        assert _e(pnd, 8) == pytest.approx(ref, abs=1e-13)


class TestClassify:
    def test_nonclassical(self):
        assert classify(NonclassicalityResult(-0.0234, 0.0005, 8)) is Verdict.NONCLASSICAL

    def test_positive_is_classical(self):
        assert classify(NonclassicalityResult(0.0234, 0.0005, 8)) is Verdict.CONSISTENT_CLASSICAL

    def test_small_negative_inconclusive(self):
        assert classify(NonclassicalityResult(-0.001, 0.001, 8)) is Verdict.INCONCLUSIVE

    def test_zero_error(self):
        assert NonclassicalityResult(0.0, 0.0, 2).significance == 0.0
        assert NonclassicalityResult(-1e-3, 0.0, 2).significance == -math.inf
        d = NonclassicalityResult(-1e-3, 0.0, 2).to_dict()
        assert d["significance"] is None and json.dumps(d)

    @given(st.floats(-1, 1), st.floats(1e-6, 1))
    def test_verdicts_are_exclusive(self, e, d):
        v = classify(NonclassicalityResult(e, d, 8))
        assert (v is Verdict.NONCLASSICAL) == (e / d <= -3)
        if v is Verdict.CONSISTENT_CLASSICAL:
            assert e >= 0


def _sampled(pnd, etas, M, seed=1, cfg=CFG):
    return [(eta, sample_clicks(click_statistics(apply_loss(pnd, eta), cfg), M, seed, (j,))) for j, eta in enumerate(etas)]


class TestAtmosphericMoments:
    def test_point_mass(self):
        ens = _sampled(BINOM, [0.0, 0.5, 1.0], 10_000)
        pm = point_mass(2, 0.5)
        for l in range(9):
            assert atmospheric_moments(ens, pm, l) == pytest.approx(moments_from_clicks(ens[1][1], l), abs=1e-15)

    def test_missing_level_named(self):
        ens = _sampled(BINOM, [0.0, 1.0], 100)
        with pytest.raises(IncompleteEnsembleError, match="0.50"):
            atmospheric_moments(ens, point_mass(2, 0.5), 1)


class TestBootstrap:
    ENS = _sampled(BINOM, [i / 4 for i in range(5)], 50_000, seed=3)
    PDT = DiscretePDT(4, [0.0, 0.1, 0.2, 0.3, 0.4])

    def test_requires_counts(self):
        ens = [(eta, click_statistics(apply_loss(BINOM, eta), CFG)) for eta in (0.0, 1.0)]
        with pytest.raises(CountsRequiredError):
            bootstrap_error(ens, point_mass(1, 1.0), 2)

    def test_requires_enough_resamples(self):
        with pytest.raises(ParameterDomainError):
            bootstrap_error(self.ENS, self.PDT, 8, B=50)

    def test_deterministic_and_thread_independent(self):
        a = bootstrap_errors(self.ENS, self.PDT, [2, 8], B=600, seed=4, threads=1)
        b = bootstrap_errors(self.ENS, self.PDT, [2, 8], B=600, seed=4, threads=3)
        assert a == b
        assert a[8].metadata["B"] == 600 and a[8].metadata["M"] == 50_000

    def test_point_estimate_is_plug_in(self):
        r = bootstrap_error(self.ENS, self.PDT, 8, B=100, seed=0)
        assert r.e_min == point_estimate(self.ENS, self.PDT, 8)

    def test_collapsed_post_selection_reproduces_point_mass(self):
        collapsed = post_select(self.PDT, 1.0)
        assert bootstrap_error(self.ENS, collapsed, 8, B=200, seed=2) == bootstrap_error(self.ENS, point_mass(4, 1.0), 8, B=200, seed=2)

    def test_error_matches_experiment_scatter(self):
        # spread of independent experiments is the quantity the bootstrap estimates
        M = 20_000
        pm = point_mass(1, 1.0)
        es = []
        for seed in range(150):
            ens = _sampled(BINOM, [0.0, 1.0], M, seed=seed)
            es.append(point_estimate(ens, pm, 2))
        boot = bootstrap_error(_sampled(BINOM, [0.0, 1.0], M, seed=999), pm, 2, B=1000, seed=1)
        assert boot.delta_e == pytest.approx(np.std(es, ddof=1), rel=0.25)

    def test_analytic_result_has_no_error(self):
        ens = [(eta, click_statistics(apply_loss(BINOM, eta), CFG)) for eta in (0.0, 1.0)]
        r = analytic_result(ens, point_mass(1, 1.0), 8)
        assert r.delta_e == 0.0 and classify(r) is Verdict.NONCLASSICAL
