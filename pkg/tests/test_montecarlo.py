import math

import numpy as np
import numpy.testing as npt
import pytest

import powergame as pg
from powergame.montecarlo import (empirical_packet_success,
                                  empirical_packet_success_for_user,
                                  empirical_sinr, empirical_sinr_for_user)

MF, DE, MMSE = pg.ReceiverKind.MF, pg.ReceiverKind.DE, pg.ReceiverKind.MMSE

# root of gamma f'(gamma) = f(gamma) for M = 100 (frozen, 50-digit oracle)
GAMMA_STAR = 6.474600379589358
# packet success for hard-decision BPSK in real AWGN at that SINR:
# (1 - Q(sqrt(gamma)))^100, Q(x) = erfc(x/sqrt(2))/2
PSR_GAUSS_ORACLE = 0.577736821834


def hand_instance():
    codes = pg.CodeBook(np.array([[1, 1, 1, 1], [1, 1, 1, -1]]) / 2.0)
    powers = np.array([2.0, 4.0])
    gains = np.array([1.0, 0.5])
    return codes, powers, gains


def test_single_user_unit_sinr():
    codes = pg.generate_codes(1, 32, seed=1)
    est = empirical_sinr(MF, 0, np.array([1.0]), np.array([1.0]), codes,
                         1.0, 100_000, seed=2)
    assert abs(est.gamma - 1.0) <= 4 * est.stderr
    assert est.stderr < 0.02


def test_hand_instance_matches_analytic():
    codes, powers, gains = hand_instance()
    expected = {MF: 1.6, DE: 1.5, MMSE: 1.75}
    for kind, want in expected.items():
        est = empirical_sinr(kind, 0, powers, gains, codes, 1.0, 100_000,
                             seed=7)
        assert abs(est.gamma - want) <= 4 * est.stderr


def test_estimate_scales_linearly_with_power():
    # same seed: identical noise and interference, so the ratio is exact
    codes, powers, gains = hand_instance()
    base = empirical_sinr(MF, 0, powers, gains, codes, 1.0, 5000, seed=3)
    doubled = powers.copy()
    doubled[0] *= 2.0
    est = empirical_sinr(MF, 0, doubled, gains, codes, 1.0, 5000, seed=3)
    npt.assert_allclose(est.gamma, 2 * base.gamma, rtol=1e-12)


def test_de_interference_is_statistically_nulled():
    # with strong interferers and weak noise, only noise survives the filter
    codes = pg.generate_codes(6, 32, seed=8)
    powers = np.array([1.0, 50.0, 80.0, 30.0, 60.0, 45.0])
    gains = np.ones(6)
    sigma2 = 1e-10
    analytic = pg.sinr(DE, 0, powers, gains, codes, sigma2)
    est = empirical_sinr(DE, 0, powers, gains, codes, sigma2, 50_000, seed=9)
    assert abs(est.gamma - analytic) <= 4 * est.stderr


def test_monte_carlo_deterministic():
    codes, powers, gains = hand_instance()
    a = empirical_sinr(MMSE, 0, powers, gains, codes, 1.0, 20_000, seed=11)
    b = empirical_sinr(MMSE, 0, powers, gains, codes, 1.0, 20_000, seed=11)
    assert a.gamma == b.gamma and a.stderr == b.stderr
    c = empirical_sinr(MMSE, 0, powers, gains, codes, 1.0, 20_000, seed=12)
    assert c.gamma != a.gamma


def test_minimum_sample_sizes_enforced():
    codes, powers, gains = hand_instance()
    with pytest.raises(ValueError):
        empirical_sinr(MF, 0, powers, gains, codes, 1.0, 999, seed=1)
    with pytest.raises(ValueError):
        empirical_packet_success(MF, 0, powers, gains, codes, 1.0, 999, 100,
                                 seed=1)


def test_scenario_wrapper_consistent_with_analytic():
    from powergame.experiments import build_instance
    scenario, codes = build_instance(4, 32, 15)
    powers = np.full(4, 1e-9)
    for kind in (MF, MMSE):
        analytic = pg.sinr(kind, 1, powers, scenario.receive_gains(1),
                           codes, scenario.noise_power,
                           exclude=int(scenario.exclusions()[1]))
        est = empirical_sinr_for_user(kind, 1, powers, scenario, codes,
                                      20_000, seed=4)
        assert abs(est.gamma - analytic) <= 4 * est.stderr


def test_packet_success_zero_power_is_coin_flipping():
    codes, powers, gains = hand_instance()
    silent = powers.copy()
    silent[0] = 0.0
    est = empirical_packet_success(MF, 0, silent, gains, codes, 1.0, 1000,
                                   100, seed=5)
    assert est.rate <= 0.005  # (1/2)^100 per packet


def test_packet_success_approaches_one_at_high_sinr():
    codes = pg.generate_codes(1, 32, seed=2)
    est = empirical_packet_success(MF, 0, np.array([1.0]), np.array([1.0]),
                                   codes, 1e-6, 1000, 100, seed=6)
    assert est.rate == 1.0


def test_packet_success_single_user_awgn():
    """Hard-decision BPSK at the equilibrium SINR floor.

    The empirical rate must match its own Gaussian oracle; the efficiency
    function is a sigmoid approximation of this curve, so that comparison
    is only reported loosely.
    """
    codes = pg.generate_codes(1, 32, seed=3)
    est = empirical_packet_success(MF, 0, np.array([GAMMA_STAR]),
                                   np.array([1.0]), codes, 1.0, 4000, 100,
                                   seed=13)
    assert abs(est.rate - PSR_GAUSS_ORACLE) <= 4 * est.stderr + 1e-3
    f_val = pg.EfficiencyFunction(100).value(GAMMA_STAR)
    print(f"packet success {est.rate:.4f} vs efficiency {f_val:.4f} "
          f"(difference {abs(est.rate - f_val):.3f})")
    assert 0.3 < est.rate < 1.0 and 0.3 < f_val < 1.0


def test_packet_success_scenario_wrapper():
    from powergame.experiments import build_instance
    scenario, codes = build_instance(3, 32, 18)
    config = pg.GameConfig(K=3, N=32)
    report = pg.run_best_response_dynamics(scenario, codes, config,
                                           receiver=MMSE)
    est = empirical_packet_success_for_user(MMSE, 0, report.final.p,
                                            scenario, codes, config, 1000,
                                            seed=20)
    assert 0.0 <= est.rate <= 1.0


def test_gaussian_oracle_value():
    # recompute the frozen oracle from scratch
    q = 0.5 * math.erfc(math.sqrt(GAMMA_STAR) / math.sqrt(2))
    npt.assert_allclose((1 - q) ** 100, PSR_GAUSS_ORACLE, rtol=1e-10)
