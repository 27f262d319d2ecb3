import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from baresim import distributions as d
from baresim import generators as g

SAMPLABLE = [
    ("gamma_gamma", g.power(0.0, 1.0), 1.3),
    ("scaled_poisson", g.power(1.0, 1.0), 1.3),
    ("normal", g.power(2.0, 1.0), 1.3),
    ("compound_poi_gamma", g.power(0.5, 1.0), 1.3),
    ("neg_binomial_scaled", g.jensen_shannon_nb(1.0), 1.3),
    ("two_point", g.two_point(-1.0, 2.0), 1.0),
    ("asym_laplace_diff", g.asym_laplace(0.7, 0.5, 1.2, 1.0), 1.3),
]


def test_cumulant_at_zero_is_zero():
    for _, gen, mass in SAMPLABLE:
        zeta = d.zeta_for_generator(gen, mass)
        assert d.cumulant(zeta, 0.0) == pytest.approx(0.0, abs=1e-14)
        assert d.cumulant_prime(zeta, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_cumulant_examples():
    normal = d.ZetaSpec("normal", 1.0)
    assert d.cumulant(normal, 1.0) == pytest.approx(1.5)
    gamma = d.ZetaSpec("gamma_gamma", 1.0)
    assert d.cumulant(gamma, 0.5) == pytest.approx(-math.log(0.5))
    assert d.cumulant(gamma, 1.0) == math.inf
    assert d.cumulant(gamma, 0.999999) > 12.0


def test_legendre_phi_examples():
    z2 = d.zeta_for_generator(g.power(2.0, 1.0), 1.0)
    assert d.legendre_phi(z2, 1.7) == pytest.approx(0.7**2 / 2, abs=1e-9)
    assert d.legendre_phi(z2, 1.0) == pytest.approx(0.0, abs=1e-12)
    z1 = d.zeta_for_generator(g.power(1.0, 1.0), 1.0)
    assert d.legendre_phi(z1, 2.0) == pytest.approx(2 * math.log(2) - 1, abs=1e-9)


def test_legendre_identity_support_matrix():
    total_mass = 1.7
    for _, gen, _ in SAMPLABLE:
        zeta = d.zeta_for_generator(gen, total_mass)
        a, b, _, _ = g.gen_domain(gen)
        lo = a + 0.03 * (min(b, 8.0) - a) if math.isfinite(a) else -3.0
        hi = min(b - 1e-2, 5.0) if math.isfinite(b) else 5.0
        for t in np.linspace(lo, hi, 25):
            probe = d.legendre_phi(zeta, float(t))
            direct = total_mass * g.phi_eval(gen, float(t))
            assert probe == pytest.approx(direct, abs=1e-6), gen.family


def test_shifted_legendre_identity():
    total_mass = 1.4
    for _, gen, _ in SAMPLABLE:
        zeta = d.zeta_for_generator(gen, total_mass)
        _, _, lo, hi = g.gen_domain(gen)
        t_star = 0.8 if lo < 0.8 < hi else (lo + hi) / 2
        tau = d.tilt_param(gen, total_mass, t_star)
        a, b, _, _ = g.gen_domain(gen)
        glo = a + 0.05 * (min(b, 8.0) - a) if math.isfinite(a) else -2.0
        ghi = min(b - 2e-2, 4.0) if math.isfinite(b) else 4.0
        for t in np.linspace(glo, ghi, 15):
            probe = d.legendre_phi_tilted(zeta, tau, float(t))
            direct = total_mass * g.phi_k_eval(gen, float(t), t_star)
            assert probe == pytest.approx(direct, abs=1e-6), gen.family


def test_tilt_param_examples():
    for gen in (g.power(0.0, 1.0), g.power(2.0, 0.5), g.two_gamma(0.5, 0.5, 1.0)):
        assert d.tilt_param(gen, 2.0, 1.0) == pytest.approx(0.0, abs=1e-14)
    c, mass = 1.4, 2.0
    assert d.tilt_param(g.power(0.0, c), mass, 2.0) == pytest.approx(c * mass / 2)
    assert d.tilt_param(g.power(2.0, c), mass, 1.75) == pytest.approx(c * mass * 0.75)
    with pytest.raises(g.DomainError):
        d.tilt_param(g.power(0.5, 1.0), 1.0, -1.0)


def test_sample_zeta_mean_and_variance():
    rng = np.random.default_rng(11)
    for _, gen, mass in SAMPLABLE:
        zeta = d.zeta_for_generator(gen, mass)
        xs = d.sample_zeta(zeta, rng, size=1_000_000)
        se = xs.std() / math.sqrt(len(xs))
        assert abs(xs.mean() - 1.0) < 4 * se, gen.family
        var_target = d.cumulant_second(zeta, 0.0)
        assert xs.var() == pytest.approx(var_target, rel=0.05), gen.family


def test_two_point_support():
    zeta = d.ZetaSpec("two_point", 1.0, (("z1", -1.0), ("z2", 2.0)))
    rng = np.random.default_rng(12)
    xs = d.sample_zeta(zeta, rng, size=5000)
    assert set(np.unique(xs)) <= {-1.0, 2.0}
    # masses: P[z1] = (z2-1)/(z2-z1) = 1/3
    assert np.mean(xs == -1.0) == pytest.approx(1 / 3, abs=0.03)


def test_block_sum_examples():
    rng = np.random.default_rng(13)
    theta = 1.3
    nk = 9
    # untilted normal block: mean nk
    tb = d.TiltedBlockSpec(d.ZetaSpec("normal", theta), 0.0, nk)
    xs = d.sample_block_sum(tb, rng, size=100_000)
    se = xs.std() / math.sqrt(len(xs))
    assert abs(xs.mean() - nk) < 4 * se
    assert xs.var() == pytest.approx(nk / theta, rel=0.05)
    # poisson block sums live on the lattice (1/theta) N0
    tb = d.TiltedBlockSpec(d.ZetaSpec("scaled_poisson", theta), 0.0, nk)
    xs = d.sample_block_sum(tb, rng, size=20_000)
    lattice = np.round(xs * theta)
    assert np.max(np.abs(xs * theta - lattice)) < 1e-9
    assert np.min(xs) >= 0
    # tilted gamma block: mean nk*theta/(theta - tau)
    tau = 0.4
    tb = d.TiltedBlockSpec(d.ZetaSpec("gamma_gamma", theta), tau, nk)
    xs = d.sample_block_sum(tb, rng, size=100_000)
    target = nk * theta / (theta - tau)
    se = xs.std() / math.sqrt(len(xs))
    assert abs(xs.mean() - target) < 4 * se


def test_block_sum_means_all_samplable_families():
    rng = np.random.default_rng(14)
    nk = 7
    for _, gen, mass in SAMPLABLE:
        zeta = d.zeta_for_generator(gen, mass)
        _, _, lo, hi = g.gen_domain(gen)
        t_star = 1.25 if lo < 1.25 < hi else (lo + hi) / 2
        tau = d.tilt_param(gen, mass, t_star)
        tb = d.TiltedBlockSpec(zeta, tau, nk)
        xs = d.sample_block_sum(tb, rng, size=100_000)
        target = nk * d.cumulant_prime(zeta, tau)
        se = xs.std() / math.sqrt(len(xs))
        assert abs(xs.mean() - target) < 4 * se, gen.family


def _snap(xs):
    # kill float-ulp tie-splitting on lattice-valued families before a KS test
    return np.round(xs, 9)


def test_tilted_reduces_to_plain_at_zero_tilt():
    for _, gen, mass in SAMPLABLE:
        zeta = d.zeta_for_generator(gen, mass)
        tb = d.TiltedBlockSpec(zeta, 0.0, 1)
        a = d.sample_zeta(zeta, np.random.default_rng(100), size=100_000)
        b = d.sample_tilted(tb, np.random.default_rng(200), size=100_000)
        stat = ks_2samp(_snap(a), _snap(b))
        assert stat.pvalue > 0.01, gen.family


def test_block_sum_matches_fold_of_tilted():
    rng_a = np.random.default_rng(15)
    rng_b = np.random.default_rng(16)
    nk = 6
    for _, gen, mass in SAMPLABLE:
        zeta = d.zeta_for_generator(gen, mass)
        _, _, lo, hi = g.gen_domain(gen)
        t_star = 1.2 if lo < 1.2 < hi else (lo + hi) / 2
        tau = d.tilt_param(gen, mass, t_star)
        singles = d.sample_tilted(
            d.TiltedBlockSpec(zeta, tau, 1), rng_a, size=nk * 30_000
        ).reshape(30_000, nk).sum(axis=1)
        sums = d.sample_block_sum(d.TiltedBlockSpec(zeta, tau, nk), rng_b, size=30_000)
        stat = ks_2samp(_snap(singles), _snap(sums))
        assert stat.pvalue > 0.01, gen.family


def test_tilted_mean_matches_target_ratio():
    # expectation of a tilted draw equals the recentering ratio t_star
    rng = np.random.default_rng(17)
    for _, gen, mass in SAMPLABLE:
        zeta = d.zeta_for_generator(gen, mass)
        _, _, lo, hi = g.gen_domain(gen)
        t_star = 1.3 if lo < 1.3 < hi else (lo + hi) / 2
        tau = d.tilt_param(gen, mass, t_star)
        xs = d.sample_tilted(d.TiltedBlockSpec(zeta, tau, 1), rng, size=200_000)
        se = xs.std() / math.sqrt(len(xs))
        assert abs(xs.mean() - t_star) < 4 * se, gen.family


def test_unsupported_sampling_families():
    stable = d.zeta_for_generator(g.power(-1.0, 1.0), 1.0)
    assert stable.family == "power_stable"
    with pytest.raises(d.UnsupportedSamplingError):
        d.sample_zeta(stable, np.random.default_rng(0))
    bexp = d.zeta_for_generator(g.bregman_exp(-1.0, 1.0), 1.0)
    with pytest.raises(d.UnsupportedSamplingError):
        d.sample_zeta(bexp, np.random.default_rng(0))
    with pytest.raises(d.UnsupportedSamplingError):
        d.zeta_for_generator(g.power(1.5, 1.0), 1.0)
    with pytest.raises(d.UnsupportedSamplingError):
        d.zeta_for_generator(g.tv(), 1.0)
    # two_point block sums need integral trials
    tp = d.ZetaSpec("two_point", 1.3, (("z1", -1.0), ("z2", 2.0)))
    with pytest.raises(d.UnsupportedSamplingError):
        d.sample_block_sum(d.TiltedBlockSpec(tp, 0.0, 1), np.random.default_rng(0))


def test_eval_only_families_keep_cumulant():
    stable = d.zeta_for_generator(g.power(3.0, 1.1), 1.2)
    assert d.cumulant(stable, 0.0) == pytest.approx(0.0)
    for t in (0.5, 1.5, 3.0, -0.5):
        probe = d.legendre_phi(stable, t)
        direct = 1.2 * g.phi_eval(g.power(3.0, 1.1), t)
        assert probe == pytest.approx(direct, abs=1e-7)


def test_substream_determinism():
    a = d.substream(42, 1, 0, 3).normal(size=8)
    b = d.substream(42, 1, 0, 3).normal(size=8)
    c = d.substream(42, 1, 1, 3).normal(size=8)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_tilt_outside_domain_rejected():
    zeta = d.ZetaSpec("gamma_gamma", 1.0)
    with pytest.raises(ValueError):
        d.TiltedBlockSpec(zeta, 1.0, 3)
