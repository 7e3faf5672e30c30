import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from atmosim.detector import (
    ClickStatistics,
    DetectorConfig,
    click_statistics,
    clicks_from_moments,
    mean_clicks,
    moment_vector,
    moments_from_clicks,
    monte_carlo_clicks,
    normally_ordered_moments,
    sample_clicks,
)
from atmosim.errors import DomainError, EmptyInputError, ParameterDomainError, SchemaError
from atmosim.source import apply_loss, binomial_state, coherent, fock, squeezed_vacuum, thermal

from oracles import occupancy_clicks, pooled_chisquare

CFG = DetectorConfig()
STATES = {"coherent(2)": coherent(2.0), "squeezed(1)": squeezed_vacuum(1.0), "thermal(1)": thermal(1.0)}


def test_config_validation():
    with pytest.raises(ParameterDomainError):
        DetectorConfig(bins=0)
    with pytest.raises(ParameterDomainError):
        DetectorConfig(efficiency=1.2)
    with pytest.raises(ParameterDomainError):
        DetectorConfig(dark=-1.0)


def test_single_photon():
    c = click_statistics(fock(1), CFG).probabilities
    assert c[0] == pytest.approx(0.78, abs=1e-15)
    assert c[1] == pytest.approx(0.22, abs=1e-15)
    assert np.all(np.abs(c[2:]) <= 1e-15)


@pytest.mark.parametrize("mu", [0.1, 1.0, 5.0])
@pytest.mark.parametrize("eff", [0.22, 1.0])
def test_coherent_gives_binomial(mu, eff):
    cfg = DetectorConfig(8, eff)
    q = -math.expm1(-eff * mu / 8)
    c = click_statistics(coherent(mu), cfg).probabilities
    np.testing.assert_allclose(c, stats.binom.pmf(np.arange(9), 8, q), atol=1e-9)


@pytest.mark.parametrize("name", list(STATES))
@pytest.mark.parametrize("dark", [0.0, 0.05])
def test_matches_occupancy_oracle(name, dark):
    pnd = STATES[name]
    cfg = DetectorConfig(8, 0.22, dark)
    oracle = occupancy_clicks(pnd.probs, 8, 0.22, dark)
    np.testing.assert_allclose(click_statistics(pnd, cfg).probabilities, oracle / oracle.sum(), atol=1e-12)


@pytest.mark.parametrize("name", list(STATES))
def test_moment_round_trip(name):
    pnd = STATES[name]
    cs = click_statistics(pnd, CFG)
    ref = normally_ordered_moments(pnd, CFG)
    for l in range(9):
        assert moments_from_clicks(cs, l) == pytest.approx(ref[l], abs=1e-12)


def test_all_no_click():
    cs = ClickStatistics([1.0] + [0.0] * 8)
    assert [moments_from_clicks(cs, l) for l in range(9)] == [1.0] * 9


def test_moment_order_domain():
    with pytest.raises(DomainError):
        moments_from_clicks(click_statistics(coherent(1.0), CFG), 9)


click_vectors = st.lists(st.floats(0, 1, allow_nan=False), min_size=9, max_size=9).filter(lambda c: sum(c) > 1e-3)


@given(click_vectors)
def test_mean_click_identity(c):
    cs = ClickStatistics(np.asarray(c) / sum(c))
    assert mean_clicks(cs) == pytest.approx(8 * (1 - moments_from_clicks(cs, 1)), abs=1e-12)


@given(click_vectors)
def test_reconstruction(c):
    cs = ClickStatistics(np.asarray(c) / sum(c))
    back = clicks_from_moments(moment_vector(cs))
    np.testing.assert_allclose(back, cs.probabilities, atol=1e-10)


@given(st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=40, deadline=None)
def test_loss_and_efficiency_commute(eta, eff):
    pnd = binomial_state(15, 0.5)
    lhs = click_statistics(apply_loss(pnd, eta), DetectorConfig(8, eff)).probabilities
    rhs = click_statistics(pnd, DetectorConfig(8, eta * eff)).probabilities
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


class TestSampling:
    def test_deterministic(self):
        cs = click_statistics(squeezed_vacuum(1.0), CFG)
        a = sample_clicks(cs, 10_000, 5, (3,))
        b = sample_clicks(cs, 10_000, 5, (3,))
        assert a == b and a.M == 10_000
        assert sample_clicks(cs, 10_000, 6, (3,)) != a

    def test_needs_trials(self):
        with pytest.raises(EmptyInputError):
            sample_clicks(click_statistics(coherent(1.0), CFG), 0, 1)

    def test_counts_validation(self):
        with pytest.raises(SchemaError):
            ClickStatistics([0.5, 0.5], counts=[1, 2, 3])
        with pytest.raises(EmptyInputError):
            ClickStatistics.from_counts([0, 0])


class TestMonteCarlo:
    def test_vacuum(self):
        cs = monte_carlo_clicks(coherent(0.0), CFG, 1000, 1)
        assert cs.counts[0] == 1000

    def test_single_photon_perfect_detector(self):
        cs = monte_carlo_clicks(fock(1), DetectorConfig(8, 1.0), 1000, 1)
        assert cs.counts[1] == 1000

    def test_thread_independent(self):
        pnd = coherent(2.0)
        a = monte_carlo_clicks(pnd, CFG, 450_000, 9, threads=1)
        b = monte_carlo_clicks(pnd, CFG, 450_000, 9, threads=4)
        assert a == b

    @pytest.mark.parametrize("dark", [0.0, 0.1])
    def test_agrees_with_closed_form(self, dark):
        cfg = DetectorConfig(8, 0.22, dark)
        pnd = squeezed_vacuum(1.0)
        cs = monte_carlo_clicks(pnd, cfg, 200_000, 11)
        assert pooled_chisquare(cs.counts, click_statistics(pnd, cfg).probabilities) > 1e-3
