"""Self-verification suites shared by the CLI 'check' task and the tests."""

from __future__ import annotations

import math

import numpy as np

from . import constraints as cons
from . import distributions as dists
from . import divergences as divs
from . import estimators as est
from . import generators as gens
from . import oracle as oracle_mod
from . import transforms


def _support_matrix():
    """(generator, grid, label) rows of the Legendre sampling matrix."""
    rows = []
    for gamma in (0.0, 0.5, 1.0, 2.0):
        gen = gens.power(gamma, 1.3)
        lo = 0.05 if gamma < 2 else -3.0
        rows.append((gen, np.linspace(lo, 6.0, 100), f"power(gamma={gamma})"))
    rows.append((gens.two_gamma(0.5, 0.5, 1.0), np.linspace(-4.0, 6.0, 100), "two_gamma"))
    rows.append((gens.jensen_shannon_nb(0.8), np.linspace(0.05, 6.0, 100), "jensen_shannon_nb"))
    rows.append((gens.two_point(-1.0, 2.0), np.linspace(-0.97, 1.97, 100), "two_point"))
    rows.append((gens.asym_laplace(0.7, 0.5, 1.2, 0.9), np.linspace(-4.0, 6.0, 100), "asym_laplace"))
    return rows


def check_legendre(seed: int = 0) -> dict:
    """Legendre identity and its tilt-shifted version on the support matrix."""
    rng = np.random.default_rng(seed)
    total_mass = 1.7
    worst = 0.0
    for gen, grid, _label in _support_matrix():
        zeta = dists.zeta_for_generator(gen, total_mass)
        for t in grid:
            probe = dists.legendre_phi(zeta, float(t))
            direct = total_mass * gens.phi_eval(gen, float(t))
            if math.isinf(direct) and math.isinf(probe):
                continue
            worst = max(worst, abs(probe - direct))
        _, _, lo, hi = gens.gen_domain(gen)
        lo_p = max(lo, 0.2 if math.isinf(lo) else lo + 0.15 * (min(hi, 10) - lo))
        hi_p = min(hi, 3.0)
        for t_star in rng.uniform(lo_p + 1e-3, hi_p - 1e-3, size=5):
            tau = dists.tilt_param(gen, total_mass, float(t_star))
            for t in grid[::5]:
                direct = total_mass * gens.phi_k_eval(gen, float(t), float(t_star))
                sup = dists.legendre_phi_tilted(zeta, tau, float(t))
                if math.isinf(direct) and math.isinf(sup):
                    continue
                worst = max(worst, abs(sup - direct))
    return {"passed": bool(worst <= 1e-6), "max_error": worst}


def check_transforms(seed: int = 0, perturb: float = 0.0) -> dict:
    """Forward/inverse roundtrips for all three transform kinds."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    collapse_worst = 0.0
    specs = []
    for _ in range(20):
        gamma = float(rng.choice([-1.0, 0.0, 0.5, 1.0, 2.0, 3.0]))
        c = float(rng.uniform(0.3, 2.5))
        A = float(rng.uniform(0.4, 2.0))
        mp = float(rng.uniform(0.5, 2.0))
        C = float(rng.uniform(0.4, 1.8))
        specs.append(transforms.TransformSpec("F", gamma=gamma, c=c, A=A))
        if gamma == 1.0:
            specs.append(transforms.TransformSpec(
                "Fbreve1", c=c, A=A, MQss=float(rng.uniform(0.5, 2.0))))
        else:
            specs.append(transforms.TransformSpec(
                "Fbreve", gamma=gamma, c=c, A=A, MP=mp, C=C))
    for spec in specs:
        for x in np.linspace(0.0, 3.0, 500):
            fwd = transforms.F_apply(spec, float(x)) + perturb
            if not math.isfinite(fwd):
                continue
            try:
                back = transforms.F_invert(spec, fwd)
            except transforms.TransformDomainError:
                worst = max(worst, abs(perturb))
                continue
            worst = max(worst, abs(back - x))
    for gamma in (-1.0, 0.0, 0.5, 2.0, 3.0):
        f_spec = transforms.TransformSpec("F", gamma=gamma, c=1.2, A=0.9)
        b_spec = transforms.TransformSpec("Fbreve", gamma=gamma, c=1.2, A=0.9, MP=1.0, C=1.0)
        for x in np.linspace(0.0, 2.0, 200):
            fv = transforms.F_apply(f_spec, float(x))
            bv = transforms.F_apply(b_spec, float(x))
            if math.isinf(fv) and math.isinf(bv):
                continue
            collapse_worst = max(collapse_worst, abs(fv - bv))
    f1 = transforms.TransformSpec("F", gamma=1.0, c=1.2, A=0.9)
    b1 = transforms.TransformSpec("Fbreve1", c=1.2, A=0.9, MQss=1.0)
    for x in np.linspace(0.0, 2.0, 200):
        collapse_worst = max(
            collapse_worst,
            abs(transforms.F_apply(f1, float(x)) - transforms.F_apply(b1, float(x))),
        )
    return {
        "passed": bool(worst <= 1e-10 and collapse_worst <= 1e-12),
        "max_error": worst,
        "collapse_error": collapse_worst,
    }


def check_bounds(seed: int = 0) -> dict:
    """Pointwise generator dominations with equality only at t = 1."""
    grid_pos = np.linspace(0.0, 6.0, 1000)
    # the KL-vs-power domination degenerates to equality at t = 0 as well
    # (both sides reach c/gamma there), so probe it on the open axis
    grid_open = np.linspace(0.006, 6.0, 1000)
    grid_all = np.linspace(-5.0, 6.0, 1000)
    ok = True
    margin = math.inf

    def dominated(lhs, rhs, grid):
        nonlocal ok, margin
        lo = gens.phi_eval(lhs, grid)
        hi = gens.phi_eval(rhs, grid)
        finite = np.isfinite(lo) & np.isfinite(hi)
        gap = hi[finite] - lo[finite]
        off_one = np.abs(grid[finite] - 1.0) > 1e-9
        if np.any(gap[off_one] <= 0):
            ok = False
        at_one = np.abs(grid - 1.0) <= 1e-9
        if np.any(np.abs(hi[at_one] - lo[at_one]) > 1e-12):
            ok = False
        if gap[off_one].size:
            margin = min(margin, float(np.min(gap[off_one])))

    for gamma, beta, c in ((1.5, 0.5, 1.0), (3.0, 0.9, 0.7), (2.5, 1.5, 1.3)):
        if beta < 1:
            dominated(gens.two_gamma(beta, beta, c / gamma), gens.power(gamma, c), grid_all)
        dominated(gens.power(1.0, c / gamma), gens.power(gamma, c), grid_open)
        if beta <= 1.6:
            dominated(gens.two_gamma(beta, beta, c / gamma), gens.power(1.0, c / gamma), grid_pos)
    # total-variation domination for multiplier*beta < 1
    for alpha, beta, c in ((0.5, 0.5, 1.0), (1.2, 0.7, 0.9)):
        dominated(gens.two_gamma(alpha, beta, c) if alpha == beta
                  else gens.asym_laplace(alpha, beta, beta, c), gens.tv(), grid_all)
    # derivative relations on both sides of 1 for beta <= 8/5
    tgrid = np.concatenate([np.linspace(0.01, 0.99, 200), np.linspace(1.01, 6.0, 200)])
    for beta in (0.5, 1.0, 1.6):
        d_two = gens.phi_prime(gens.two_gamma(beta, beta, 1.0), tgrid)
        d_kl = gens.phi_prime(gens.power(1.0, 1.0), tgrid)
        left = tgrid < 1.0
        if not (np.all(d_two[left] < 0) and np.all(d_two[left] > d_kl[left])):
            ok = False
        right = ~left
        if not (np.all(d_two[right] > 0) and np.all(d_two[right] < d_kl[right])):
            ok = False
    return {"passed": bool(ok), "min_margin": margin}


def check_coincide(seed: int = 0) -> dict:
    """Importance sampling against method-2 recentering on shared draws."""
    P = (1.0, 1.0)
    constraint = cons.make(
        [cons.halfspace([1.0, 0.0], 1.4, ">="), cons.box([-1.0, -1.0], [4.0, 4.0])]
    )
    objective = divs.make_objective("casm", generator=gens.power(2.0, 1.0), P=P)
    common = dict(
        direction="min", mode="full_space",
        base=est.BaseSpec(gens.power(2.0, 1.0), P, Qstar=(1.6, 1.0)),
        constraint=constraint, n=100, L=200, seed=seed + 11,
        objective=objective, keep_terms=True, contract="compact",
    )
    r_is = est.estimate(est.EstimateRequest(method="importance_sampling", **common))
    r_m2 = est.estimate(est.EstimateRequest(method="speedup", **common))
    t_is = r_is.diagnostics["terms"]
    t_m2 = r_m2.diagnostics["terms"]
    both = np.isfinite(t_is) & np.isfinite(t_m2)
    same_miss = np.array_equal(np.isfinite(t_is), np.isfinite(t_m2))
    worst = float(np.max(np.abs(t_is[both] - t_m2[both]))) if both.any() else math.inf
    return {"passed": bool(same_miss and worst <= 1e-10), "max_error": worst}


def check_oracle(seed: int = 0) -> dict:
    """Scale-minimized Bregman closed forms vs the 1-D golden-section search."""
    rng = np.random.default_rng(seed + 3)
    worst = 0.0
    for gamma in (-1.0, 0.0, 0.5, 1.0, 2.0, 3.0):
        for _ in range(8):
            k = int(rng.integers(2, 4))
            P = rng.uniform(0.4, 2.0, size=k)
            Q = rng.uniform(0.2, 1.0, size=k)
            Q = Q / Q.sum() * rng.uniform(0.5, 1.8)
            Qss = P * rng.uniform(0.4, 1.7, size=k)
            c = float(rng.uniform(0.5, 1.5))
            closed = divs.innmin_sbd(gamma, c, P, Q, Qss)
            brute = oracle_mod.inner_m_minimize(gamma, c, P, Q, Qss)
            worst = max(worst, abs(closed - brute))
    return {"passed": bool(worst <= 1e-8), "max_error": worst}
