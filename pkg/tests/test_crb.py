import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

import onebit_mimo as om
from onebit_mimo.crb import COND_LIMIT

mp.mp.dps = 40


def mp_g(u, sigma2=1.0):
    """High-precision oracle for f^2/(F(1-F)) with variance sigma2."""
    s = mp.sqrt(sigma2)
    f = mp.exp(-(u / s) ** 2 / 2) / (s * mp.sqrt(2 * mp.pi))
    F = (1 + mp.erf(u / (s * mp.sqrt(2)))) / 2
    return f ** 2 / (F * (1 - F))


def make_model(M=3, K=2, L=6, snr_db=10.0, seed=0, sigma2=1.0):
    sys = om.build_system(M, K, L, snr_db, sigma2=sigma2, rng_seed=seed)
    return sys, om.realify(sys)


def test_g_weight_peak_value():
    assert abs(om.g_weight(0.0, 1.0) - 2.0 / np.pi) < 1e-15
    assert abs(om.g_weight(0.0, 2.5) - 2.0 / (np.pi * 2.5)) < 1e-15


def test_g_weight_matches_high_precision_oracle():
    for u, sigma2 in [(1.0, 1.0), (0.5, 2.0), (3.0, 1.0), (7.5, 0.7)]:
        expect = float(mp_g(u, sigma2))
        assert abs(om.g_weight(u, sigma2) - expect) < 1e-12 * expect
    # frozen value from the oracle
    assert abs(om.g_weight(1.0, 1.0) - 0.4386288611022141) < 1e-14


@given(st.floats(-30.0, 30.0))
def test_g_weight_positive_bounded_symmetric(u):
    g = float(om.g_weight(u, 1.0))
    assert 0.0 < g <= 2.0 / np.pi + 1e-15
    assert abs(g - float(om.g_weight(-u, 1.0))) <= 1e-12 * g
    if abs(u) > 1e-3:
        assert g < 2.0 / np.pi


def test_fim_with_oracle_thresholds_is_scaled_gram():
    sys, model = make_model(seed=1)
    ch = om.generate_channel(model.M, model.K, 1.0, 1)
    rep = om.fim(model, om.thresholds_oracle(model, ch.h), ch.h)
    expected = (2.0 / (np.pi * model.sigma2)) * model.gram()
    for blk in rep.fim_blocks:
        assert np.allclose(blk, expected, rtol=1e-12)
    # h = 0 with zero thresholds is the same stationary case
    rep0 = om.fim(model, om.thresholds_fixed(model.N, 0.0), np.zeros(model.dim))
    assert np.allclose(rep0.fim_blocks, rep.fim_blocks, rtol=1e-12)


def test_fim_dominance_of_oracle_thresholds():
    sys, model = make_model(seed=2)
    ch = om.generate_channel(model.M, model.K, 1.0, 2)
    J_star = om.fim(model, om.thresholds_oracle(model, ch.h), ch.h).fim_blocks
    for seed in range(5):
        tau = om.thresholds_random(model, 1.0, rng_seed=seed)
        J = om.fim(model, tau, ch.h).fim_blocks
        for d in J_star - J:
            assert np.linalg.eigvalsh(d).min() >= -1e-9


def test_crb_trace_optimal_design_value():
    sys, model = make_model(M=4, K=3, L=8, snr_db=12.0, seed=3)
    ch = om.generate_channel(4, 3, 1.0, 3)
    tr = om.crb_trace(model, om.thresholds_oracle(model, ch.h), ch.h)
    expected = np.pi * model.sigma2 * model.M * model.K ** 2 / sys.P
    assert abs(tr - expected) < 1e-10 * expected


def test_pi_half_ratio_exact():
    for seed, (M, K, L, snr) in enumerate([(2, 2, 4, 5.0), (4, 3, 7, 12.0), (1, 1, 2, 0.0)]):
        sys, model = make_model(M, K, L, snr, seed=seed)
        ch = om.generate_channel(M, K, 1.0, seed)
        ratio = om.crb_trace(model, om.thresholds_oracle(model, ch.h), ch.h) / om.crb_nq_trace(model)
        assert abs(ratio - np.pi / 2) < 1e-12 * (np.pi / 2)


def test_crb_trace_uniform_offset_formula_and_monotonicity():
    sys, model = make_model(M=2, K=2, L=5, seed=4)
    ch = om.generate_channel(2, 2, 1.0, 4)
    gram_inv_tr = model.M * np.trace(np.linalg.inv(model.gram()))
    prev = None
    for delta in [0.0, 0.4, 0.8, 1.6, 2.4]:
        tau = om.ThresholdVector(model.apply(ch.h) + delta, "fixed")
        tr = om.crb_trace(model, tau, ch.h)
        expected = gram_inv_tr / om.g_weight(delta, model.sigma2)
        assert abs(tr - expected) < 1e-9 * expected
        if prev is not None:
            assert tr > prev
        prev = tr


def test_crb_nq_trace_values():
    sys, model = make_model(M=5, K=2, L=6, snr_db=7.0, seed=5)
    expected = 2.0 * model.sigma2 * model.M * model.K ** 2 / sys.P
    assert abs(om.crb_nq_trace(model) - expected) < 1e-10 * expected
    # identity operator: trace is sigma2 * 2MK
    ident = om.realify(om.ComplexSystem(M=3, K=1, L=1, X=np.array([[1.0 + 0j]]),
                                        sigma2=0.5, P=1.0))
    assert abs(om.crb_nq_trace(ident) - 0.5 * 2 * 3 * 1) < 1e-12


def test_quantization_never_beats_unquantized():
    sys, model = make_model(seed=6)
    ch = om.generate_channel(model.M, model.K, 1.0, 6)
    nq = om.crb_nq_trace(model)
    for seed in range(4):
        tau = om.thresholds_random(model, 1.0, rng_seed=seed)
        assert om.crb_trace(model, tau, ch.h) >= nq * (1.0 - 1e-12)


def test_ill_conditioned_fim_raises_with_block_index():
    sys, model = make_model(M=2, K=2, L=5, seed=7)
    ch = om.generate_channel(2, 2, 1.0, 7)
    # push one antenna's thresholds far away: its block weights vanish
    tau = model.apply(ch.h)
    tau[:2 * model.L] += 200.0
    with pytest.raises(om.NumericalError) as err:
        om.crb_trace(model, om.ThresholdVector(tau, "fixed"), ch.h)
    assert "block 0" in str(err.value)
    rep = om.fim(model, om.ThresholdVector(tau, "fixed"), ch.h)
    assert rep.near_singular
    assert rep.worst_block == 0
    assert rep.worst_condition > COND_LIMIT


def test_trace_inverse_monotone_under_loewner_order():
    rng = np.random.default_rng(8)
    for _ in range(50):
        p = int(rng.integers(2, 7))
        A = rng.normal(size=(p, p))
        Q = A @ A.T + 0.1 * np.eye(p)
        B = rng.normal(size=(p, p))
        P_mat = Q + B @ B.T  # P - Q is PSD
        assert np.trace(np.linalg.inv(P_mat)) <= np.trace(np.linalg.inv(Q)) + 1e-12


def test_trace_inverse_lower_bound_under_trace_budget():
    rng = np.random.default_rng(9)
    P0 = 7.3
    for _ in range(100):
        p = int(rng.integers(1, 9))
        A = rng.normal(size=(p, p))
        Z = A @ A.T + 0.05 * np.eye(p)
        Z *= P0 / np.trace(Z)
        val = np.trace(np.linalg.inv(Z))
        assert val >= p ** 2 / P0 - 1e-9
        if val <= p ** 2 / P0 + 1e-6:
            assert np.linalg.norm(Z - (P0 / p) * np.eye(p)) < 1e-2 * np.linalg.norm(Z)


def test_gaussian_cdf_bound_values():
    fbar0, bound0 = om.gaussian_cdf_bound(0.0)
    assert fbar0 == 0.0 and bound0 == 0.0
    fbar1, bound1 = om.gaussian_cdf_bound(1.0)
    assert abs(fbar1 - 0.3413447460685429) < 1e-14
    assert abs(bound1 - 0.34311885394578095) < 1e-14
    assert fbar1 <= bound1
    fbar_inf, bound_inf = om.gaussian_cdf_bound(40.0)
    assert abs(fbar_inf - 0.5) < 1e-12 and abs(bound_inf - 0.5) < 1e-12
    with pytest.raises(ValueError):
        om.gaussian_cdf_bound(np.array([-0.1, 1.0]))


def test_gaussian_cdf_bound_against_oracle():
    for x in [0.2, 1.0, 2.7, 5.0]:
        fbar, bound = om.gaussian_cdf_bound(x)
        assert abs(fbar - float(mp.erf(x / mp.sqrt(2)) / 2)) < 1e-14
        assert abs(bound - float(mp.sqrt(1 - mp.exp(-2 * x ** 2 / mp.pi)) / 2)) < 1e-14


def test_g_bar_bound_equality_only_at_zero():
    g0, b0 = om.g_bar_bound(0.0)
    assert abs(g0 - 2.0 / np.pi) < 1e-15
    assert abs(b0 - 2.0 / np.pi) < 1e-15
    g2, b2 = om.g_bar_bound(2.0)
    assert g2 <= b2
    assert abs(g2 - float(mp_g(2.0))) < 1e-13
    ga, _ = om.g_bar_bound(-1.3)
    gb, _ = om.g_bar_bound(1.3)
    assert abs(ga - gb) < 1e-14
