import math

import mpmath
import numpy as np
import pytest

from baresim import divergences as dv
from baresim import generators as g
from baresim import oracle as orc

mpmath.mp.dps = 50

# frozen via the 50-digit script below (kl_highprec)
KL_BENCHMARK = 0.19204199316179815


def kl_highprec(Q, P):
    return float(
        sum(mpmath.mpf(q) * mpmath.log(mpmath.mpf(q) / mpmath.mpf(p)) for q, p in zip(Q, P))
    )


def test_frozen_kl_benchmark_matches_high_precision():
    assert KL_BENCHMARK == pytest.approx(kl_highprec((0.6, 0.4), (0.3, 0.7)), abs=1e-15)


def test_casm_reflexivity_and_spots():
    assert dv.casm_divergence(g.power(1.0, 1.0), [0.3, 0.7], [0.3, 0.7]) == 0.0
    assert dv.casm_divergence(g.power(2.0, 1.0), [2, 1], [1, 1]) == pytest.approx(0.5)
    assert dv.casm_divergence(g.tv(), [0.6, 0.4], [0.3, 0.7]) == pytest.approx(0.6)


def test_casm_zero_conventions():
    gen = g.power(1.0, 1.0)
    # q=0, p>0 contributes p*phi(0) = p for this generator
    assert dv.casm_divergence(gen, [0.0, 1.0], [0.5, 1.0]) == pytest.approx(0.5)
    val = dv.casm_divergence(gen, [0.0, 1.0], [0.5, 0.5])
    assert val == pytest.approx(0.5 * 1.0 + 0.5 * g.phi_eval(gen, 2.0))
    # p=0, q=0 contributes nothing
    assert dv.casm_divergence(g.power(0.5, 1.0), [0.0, 1.0], [0.0, 1.0]) == 0.0
    # p=0, q>0 contributes q * slope at infinity (finite for the 0<gamma<1 family)
    v = dv.casm_divergence(g.power(0.5, 1.0), [2.0, 1.0], [0.0, 1.0])
    assert v == pytest.approx(2.0 * (1.0 / 0.5))
    # slope at infinity infinite for gamma=1
    assert dv.casm_divergence(gen, [2.0, 1.0], [0.0, 1.0]) == math.inf


def test_power_divergence_closed_examples():
    val = dv.power_divergence_closed(1.0, 1.0, [0.6, 0.4], [0.3, 0.7])
    assert val == pytest.approx(KL_BENCHMARK, abs=1e-14)
    assert dv.power_divergence_closed(0.0, 1.0, [0.3, 0.7], [0.3, 0.7]) == pytest.approx(0.0)
    q, p = [0.4, 1.3], [0.9, 0.2]
    assert dv.power_divergence_closed(2.0, 3.0, q, p) == pytest.approx(
        3.0 * dv.power_divergence_closed(2.0, 1.0, q, p), rel=1e-13
    )


def test_power_divergence_closed_matches_casm_all_gammas():
    rng = np.random.default_rng(0)
    for gamma in (-1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0):
        for _ in range(20):
            k = rng.integers(2, 6)
            P = rng.uniform(0.2, 2.0, k)
            Q = rng.uniform(0.1, 2.0, k)
            if gamma >= 1:
                Q[rng.integers(0, k)] *= rng.choice([1.0, -1.0]) if gamma != 1 else 1.0
            a = dv.power_divergence_closed(gamma, 1.3, Q, P)
            b = dv.casm_divergence(g.power(gamma, 1.3), Q, P)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_power_divergence_domain_rows():
    assert dv.power_divergence_closed(0.0, 1.0, [0.0, 1.0], [0.5, 0.5]) == math.inf
    assert dv.power_divergence_closed(-1.0, 1.0, [0.0, 1.0], [0.5, 0.5]) == math.inf
    assert dv.power_divergence_closed(1.0, 1.0, [-0.1, 1.0], [0.5, 0.5]) == math.inf
    assert math.isfinite(dv.power_divergence_closed(2.0, 1.0, [-0.1, 1.0], [0.5, 0.5]))


def test_sbd_examples_and_collapse():
    gen = g.power(2.0, 1.0)
    assert dv.sbd(gen, [1, 1], [3, 0], [1, 1]) == pytest.approx(2.5)
    assert dv.sbd(gen, [1, 1], [0.4, 0.8], [0.4, 0.8]) == 0.0
    rng = np.random.default_rng(1)
    for gamma in (0.0, 0.5, 1.0, 2.0):
        gen = g.power(gamma, 0.8)
        for _ in range(20):
            P = rng.uniform(0.3, 2.0, 3)
            Q = rng.uniform(0.2, 2.0, 3)
            assert dv.sbd(gen, P, Q, P) == pytest.approx(
                dv.casm_divergence(gen, Q, P), rel=1e-12, abs=1e-12
            )


def test_sbd_precondition():
    with pytest.raises(dv.PreconditionError):
        dv.sbd(g.power(0.5, 1.0), [1, 1], [1, 1], [-0.5, 1.0])


def test_sbd_rescaling_identity():
    rng = np.random.default_rng(2)
    for _ in range(30):
        P = rng.uniform(0.3, 2.0, 3)
        Q = rng.uniform(0.2, 2.0, 3)
        Qss = rng.uniform(0.2, 2.0, 3)
        mp = P.sum()
        gen = g.power(0.5, 1.1)
        lhs = dv.sbd(gen, P, Q, Qss)
        rhs = dv.sbd(gen.scaled(mp), P / mp, Q / mp, Qss / mp)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_obd_examples():
    # Itakura-Saito style (gamma=0) and squared-distance (gamma=2) spot values
    q, qss = np.array([2.0, 0.5]), np.array([1.0, 1.0])
    val0 = dv.obd(g.power(0.0, 1.0), q, qss)
    expected0 = sum(-math.log(x) + x - 1 for x in q)
    assert val0 == pytest.approx(expected0, rel=1e-12)
    val2 = dv.obd(g.power(2.0, 1.5), q, qss)
    assert val2 == pytest.approx(1.5 / 2 * ((2 - 1) ** 2 + (0.5 - 1) ** 2), rel=1e-13)
    assert dv.obd(g.power(1.0, 1.0), qss, qss) == 0.0
    # gamma=1 generalized relative entropy equals the divergence on probability vectors
    p = np.array([0.3, 0.7])
    q = np.array([0.55, 0.45])
    assert dv.obd(g.power(1.0, 1.0), q, p) == pytest.approx(
        dv.casm_divergence(g.power(1.0, 1.0), q, p), rel=1e-12
    )


def test_bregman_exponential_matches_sbd():
    rng = np.random.default_rng(3)
    assert dv.bregman_exponential(-1.0, 1.0, [1, 1], [0.4, 0.6], [0.4, 0.6]) == pytest.approx(0.0)
    # spot value from the displayed closed form at 50 digits
    beta, c = mpmath.mpf(-1), mpmath.mpf(1)
    P, Q, Qss = [1, 1], [0.5, 0.5], [0.25, 0.75]
    spot = (2 * c / beta**2) * sum(
        mpmath.mpf(p) * mpmath.e ** (beta * mpmath.mpf(q) / p)
        - (mpmath.mpf(p) + beta * (mpmath.mpf(q) - mpmath.mpf(qs)))
        * mpmath.e ** (beta * mpmath.mpf(qs) / p)
        for p, q, qs in zip(P, Q, Qss)
    )
    assert dv.bregman_exponential(-1.0, 1.0, P, Q, Qss) == pytest.approx(float(spot), abs=1e-14)
    for _ in range(100):
        beta = rng.choice([-1.5, -0.5, 0.7, 1.2])
        c = rng.uniform(0.5, 2.0)
        P = rng.uniform(0.4, 2.0, 3)
        Q = rng.uniform(-0.5, 2.0, 3)
        Qss = rng.uniform(-0.5, 2.0, 3)
        a = dv.bregman_exponential(beta, c, P, Q, Qss)
        b = dv.sbd(g.bregman_exp(beta, c), P, Q, Qss)
        assert a == pytest.approx(b, abs=1e-10)


def test_hellinger_and_triple_sums():
    assert dv.hellinger_integral(2.0, [2, 1], [1, 1]) == pytest.approx(5.0)
    P = np.array([0.5, 1.5, 0.7])
    assert dv.hellinger_integral(0.7, P, P) == pytest.approx(P.sum())
    # identity between the power sum and the divergence, both sides independent
    rng = np.random.default_rng(4)
    for gamma in (-1.0, 0.5, 2.0, 3.0):
        for _ in range(20):
            p = rng.uniform(0.2, 1.0, 3)
            p /= p.sum()
            A = rng.uniform(0.5, 2.0)
            q = rng.uniform(0.05, 1.0, 3)
            q = q / q.sum() * A
            lhs = dv.hellinger_integral(gamma, q, p)
            rhs = 1 + gamma * (A - 1) + gamma * (gamma - 1) * dv.power_divergence_closed(
                gamma, 1.0, q, p
            )
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)
    assert dv.triple_power_sum(2.0, [1, 2], [1, 1], [1, 1]) == pytest.approx(3.0)
    assert dv.triple_power_sum(1.0, [0.2, 0.5], [9.0, 3.0], [1, 4]) == pytest.approx(0.7)
    qss = np.array([0.4, 1.2])
    assert dv.triple_power_sum(1.7, qss, qss, [1.0, 2.0]) == pytest.approx(
        dv.hellinger_integral(1.7, qss, [1.0, 2.0])
    )


def test_modified_kl_and_log_triple_sum():
    qss = np.array([0.5, 1.5])
    assert dv.modified_kl(qss, qss) == 0.0
    assert dv.log_triple_sum(qss, qss, [1.0, 1.0]) == 0.0
    assert dv.modified_kl([1.0, 0.0], [0.5, 0.5]) == pytest.approx(math.log(2.0))
    assert dv.log_triple_sum([1.0, 2.0], [2.0, 1.0], [1.0, 3.0]) == pytest.approx(
        -(1.0 * math.log(0.5) + 3.0 * math.log(2.0))
    )


def test_innmin_sbd_reflexive_and_gamma2_spot():
    # gamma=2 case with matching scale: T=1, H(Q)=0.5, H(Qss)=2
    val = dv.innmin_sbd(2.0, 1.0, [1, 1], [0.5, 0.5], [1, 1])
    assert val == pytest.approx(0.0, abs=1e-14)
    for gamma in (-1.0, 0.0, 0.5, 1.0, 2.0, 3.0):
        qss = np.array([0.4, 0.9])
        assert dv.innmin_sbd(gamma, 1.0, [1.0, 2.0], qss, qss) == pytest.approx(0.0, abs=1e-12)


def test_innmin_sbd_matches_golden_section():
    rng = np.random.default_rng(6)
    for gamma in (-1.0, 0.0, 0.5, 1.0, 2.0, 3.0):
        for _ in range(10):
            k = rng.integers(2, 4)
            P = rng.uniform(0.4, 2.0, k)
            Q = rng.uniform(0.2, 1.0, k)
            Q = Q / Q.sum() * rng.uniform(0.5, 1.8)
            Qss = P * rng.uniform(0.4, 1.7, k)
            c = rng.uniform(0.5, 1.5)
            closed = dv.innmin_sbd(gamma, c, P, Q, Qss)
            brute = orc.inner_m_minimize(gamma, c, P, Q, Qss)
            assert closed == pytest.approx(brute, abs=1e-8)


def test_innmin_sbd_gamma1_analytic_minimizer():
    rng = np.random.default_rng(7)
    gen = g.power(1.0, 1.0)
    for _ in range(10):
        P = rng.uniform(0.4, 2.0, 3)
        Q = rng.uniform(0.2, 1.0, 3)
        A = rng.uniform(0.5, 2.0)
        Q = Q / Q.sum() * A
        Qss = rng.uniform(0.3, 1.5, 3)
        m_star = math.exp(-dv.modified_kl(Q, Qss) / A)
        direct = dv.sbd(gen, P, m_star * Q, Qss)
        assert dv.innmin_sbd(1.0, 1.0, P, Q, Qss) == pytest.approx(direct, abs=1e-10)


def test_innmin_preconditions():
    with pytest.raises(dv.PreconditionError):
        dv.innmin_sbd(0.5, 1.0, [1, 1], [0.5, 0.5], [-1.0, 1.0])
    with pytest.raises(dv.PreconditionError):
        dv.innmin_sbd(0.0, 1.0, [1, 1], [0.0, 1.0], [1.0, 1.0])


def test_weighted_lr_examples():
    assert dv.weighted_lr(2.0, [1, 1], [4, 5], [1, 1]) == pytest.approx(5.0)
    assert dv.weighted_lr(1.0, [1, 1, 1], [1, 2, 3], [1, 2, 3]) == 0.0
    # r -> 0 counts nonzero deviations on an integer grid
    q = np.array([1.0, 2.0, 0.0, 4.0])
    p = np.array([1.0, 0.0, 0.0, 0.0])
    count = np.count_nonzero(q - p)
    val = dv.weighted_lr(1e-3, np.ones(4), q, p) ** 1e-3
    assert val == pytest.approx(count, rel=5e-3)


def test_mahalanobis_examples():
    Q, P = [1.0, 2.0], [0.0, 0.0]
    half_identity = 0.5 * np.eye(2)
    assert dv.mahalanobis(half_identity, Q, P) == pytest.approx(0.5 * (1 + 4))
    assert dv.mahalanobis(half_identity, P, P) == 0.0
    A = [[2.0, 0.5], [0.5, 1.0]]
    d = np.array([1.0, -1.0])
    assert dv.mahalanobis(A, [2.0, 0.0], [1.0, 1.0]) == pytest.approx(float(d @ A @ d))


def test_burbea_rao_examples():
    gen = g.power(1.0, 1.0)
    assert dv.burbea_rao(gen, 0.5, [0.4, 0.6], [0.4, 0.6]) == pytest.approx(0.0, abs=1e-15)
    q, p = [0.2, 0.8], [0.5, 0.5]
    assert dv.burbea_rao(gen, 0.5, q, p) == pytest.approx(dv.burbea_rao(gen, 0.5, p, q))
    spot = sum(
        0.5 * g.phi_eval(gen, a) + 0.5 * g.phi_eval(gen, b) - g.phi_eval(gen, (a + b) / 2)
        for a, b in zip(q, p)
    )
    assert dv.burbea_rao(gen, 0.5, q, p) == pytest.approx(spot, rel=1e-12)


def test_phi_entropy_examples():
    gen = g.power(1.0, 1.0)
    assert dv.phi_entropy(gen, "identity", [1.0, 1.0, 1.0]) == pytest.approx(0.0)
    q = [0.5, 1.5, 2.0]
    assert dv.phi_entropy(gen, "identity", q) == pytest.approx(
        dv.casm_divergence(gen, q, np.ones(3)), rel=1e-12
    )
    total = dv.phi_entropy(gen, "identity", q)
    assert dv.phi_entropy(gen, "negation", q) == pytest.approx(-total)
    assert dv.phi_entropy(gen, (2.0, 1.0), q) == pytest.approx(2.0 * total + 1.0)


def test_reflexivity_nonnegativity_random_instances():
    rng = np.random.default_rng(8)
    count = 0
    for k in (2, 3, 5):
        for _ in range(120):
            P = rng.uniform(0.2, 2.0, k)
            Q = rng.uniform(0.1, 2.0, k)
            gamma = rng.choice([-1.0, 0.0, 0.5, 1.0, 2.0, 3.0])
            gen = g.power(gamma, 1.0)
            assert dv.casm_divergence(gen, Q, P) >= -1e-12
            assert dv.casm_divergence(gen, P, P) == pytest.approx(0.0, abs=1e-12)
            Qss = P * rng.uniform(0.5, 1.5, k)
            assert dv.sbd(gen, P, Q, Qss) >= -1e-11
            count += 1
    assert count >= 360


def test_divergence_level_dominations():
    rng = np.random.default_rng(9)
    for _ in range(50):
        k = rng.integers(2, 5)
        P = rng.uniform(0.3, 2.0, k)
        Q = rng.uniform(-0.5, 2.5, k)
        # TV domination needs multiplier*beta < 1
        a, b, c = 0.6, 0.7, 1.2
        assert c * b < 1
        assert dv.casm_divergence(g.asym_laplace(a, b, b, c), Q, P) <= dv.casm_divergence(
            g.tv(), Q, P
        ) + 1e-12
        gamma = rng.uniform(1.01, 3.0)
        beta = rng.uniform(0.05, 0.95)
        lhs = dv.casm_divergence(g.two_gamma(beta, beta, 1.0 / gamma), Q, P)
        rhs = dv.casm_divergence(g.power(gamma, 1.0), Q, P)
        assert lhs <= rhs + 1e-12


def test_batch_matches_scalar_paths():
    rng = np.random.default_rng(10)
    P = rng.uniform(0.3, 1.5, 3)
    Q = rng.uniform(0.1, 2.0, (40, 3))
    Qss = P * rng.uniform(0.5, 1.5, 3)
    for gamma in (0.0, 0.5, 1.0, 2.0):
        gen = g.power(gamma, 1.2)
        batch = dv.casm_batch(gen, Q, P)
        for i in range(len(Q)):
            assert batch[i] == pytest.approx(dv.casm_divergence(gen, Q[i], P), rel=1e-11)
        sb = dv.sbd_batch(gen, P, Q, Qss)
        for i in range(0, len(Q), 7):
            assert sb[i] == pytest.approx(dv.sbd(gen, P, Q[i], Qss), rel=1e-11)
        if gamma != 0.0:
            inn = dv.innmin_sbd_batch(gamma, 1.1, P, Q, Qss)
            for i in range(0, len(Q), 9):
                assert inn[i] == pytest.approx(
                    dv.innmin_sbd(gamma, 1.1, P, Q[i], Qss), rel=1e-10, abs=1e-12
                )


def test_custom_table_objective_generalizes_bregman():
    # unit scaling tables reproduce the separable Bregman distance
    gen = g.power(2.0, 1.0)
    P = np.array([0.8, 1.2])
    obj = dv.make_objective("custom_table", generator=gen, P=P)
    q = np.array([1.5, 0.3])
    assert obj(q) == pytest.approx(dv.obd(gen, q, P), rel=1e-12)
    # a conformal-style aggregation vector rescales every term
    obj3 = dv.make_objective("custom_table", generator=gen, P=P, M3=[0.5, 0.5])
    assert obj3(q) == pytest.approx(0.5 * dv.obd(gen, q, P), rel=1e-12)
    # separate first/second scalings shift the evaluation points
    obj2 = dv.make_objective("custom_table", generator=gen, P=P, M1=[2.0, 2.0],
                             M2=[1.0, 1.0], M3=[1.0, 1.0])
    expect = sum(
        g.phi_eval(gen, qq / 2.0) - g.phi_eval(gen, pp)
        - g.phi_prime(gen, pp) * (qq / 2.0 - pp)
        for qq, pp in zip(q, P)
    )
    assert obj2(q) == pytest.approx(expect, rel=1e-12)


def test_phi_entropy_log1p_composer():
    gen = g.power(1.0, 1.0)
    q = [0.5, 1.5, 2.0]
    total = dv.phi_entropy(gen, "identity", q)
    assert dv.phi_entropy(gen, "log1p", q) == pytest.approx(math.log1p(total))
