"""Simulation laws tied to divergence generators by Legendre duality.

Each ZetaSpec describes the probability law whose cumulant generating
function has Legendre transform equal to (multiplier) * phi for the paired
generator (multiplier = c * M_P). Exponential tilting per block and the
closed-form block-sum laws live here as well.

Counter-based substreams: all sampling is driven by Philox generators keyed
by (seed, purpose, block, chunk), so draws are reproducible independently
of scheduling and worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import generators as gens
from .generators import GeneratorSpec

_MASK64 = (1 << 64) - 1

EVAL_ONLY_FAMILIES = ("power_stable", "bregman_exp_stable")
FAMILIES = (
    "gamma_gamma",
    "scaled_poisson",
    "normal",
    "compound_poi_gamma",
    "neg_binomial_scaled",
    "two_point",
    "asym_laplace_diff",
) + EVAL_ONLY_FAMILIES


class UnsupportedSamplingError(ValueError):
    """Law has no constructive sampler (stable-law rows)."""


class NumericError(RuntimeError):
    """Safeguarded 1-D search failed to converge."""


@dataclass(frozen=True)
class ZetaSpec:
    family: str
    multiplier: float  # c * M_P
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown zeta family {self.family!r}")
        if not (self.multiplier > 0):
            raise ValueError("multiplier must be > 0")

    def param(self, name: str) -> float:
        for key, value in self.params:
            if key == name:
                return value
        raise KeyError(name)


@dataclass(frozen=True)
class TiltedBlockSpec:
    zeta: ZetaSpec
    tau: float
    block_size: int

    def __post_init__(self):
        lo, hi = cumulant_domain(self.zeta)
        if not (lo < self.tau < hi):
            raise ValueError(
                f"tilt {self.tau} outside the open cumulant domain ({lo}, {hi})"
            )
        if self.block_size < 1:
            raise ValueError("block size must be >= 1")


def zeta_for_generator(gen: GeneratorSpec, total_mass: float) -> ZetaSpec:
    """The simulation law paired with total_mass * phi (total_mass = M_P)."""
    if not (total_mass > 0):
        raise ValueError("total mass must be > 0")
    theta = gen.c * total_mass
    if gen.family == "power":
        g = gen.param("gamma")
        if g == 0:
            return ZetaSpec("gamma_gamma", theta)
        if g == 1:
            return ZetaSpec("scaled_poisson", theta)
        if g == 2:
            return ZetaSpec("normal", theta)
        if 0 < g < 1:
            return ZetaSpec("compound_poi_gamma", theta, (("gamma", g),))
        if 1 < g < 2:
            raise UnsupportedSamplingError(
                "power generators with gamma in (1,2) admit no simulation law; "
                "use a dominated base generator instead"
            )
        return ZetaSpec("power_stable", theta, (("gamma", g),))
    if gen.family == "jensen_shannon_nb":
        return ZetaSpec("neg_binomial_scaled", theta)
    if gen.family == "two_point":
        return ZetaSpec(
            "two_point", total_mass,
            (("z1", gen.param("z1")), ("z2", gen.param("z2"))),
        )
    if gen.family == "two_gamma":
        a, b = gen.param("alpha"), gen.param("beta")
        return ZetaSpec(
            "asym_laplace_diff", theta, (("alpha", a), ("beta1", b), ("beta2", b))
        )
    if gen.family == "asym_laplace":
        return ZetaSpec(
            "asym_laplace_diff", theta,
            (("alpha", gen.param("alpha")), ("beta1", gen.param("beta1")),
             ("beta2", gen.param("beta2"))),
        )
    if gen.family == "bregman_exp":
        return ZetaSpec("bregman_exp_stable", theta, (("beta", gen.param("beta")),))
    raise UnsupportedSamplingError(
        f"generator family {gen.family!r} has no Legendre-paired simulation law"
    )


def cumulant_domain(zeta: ZetaSpec) -> tuple[float, float]:
    """Open interval on which the cumulant function is finite.

    Closed finite endpoints with finite values are reported via
    cumulant() itself; this returns the interior.
    """
    th = zeta.multiplier
    fam = zeta.family
    if fam == "gamma_gamma":
        return (-math.inf, th)
    if fam in ("scaled_poisson", "normal", "two_point"):
        return (-math.inf, math.inf)
    if fam == "compound_poi_gamma":
        g = zeta.param("gamma")
        return (-math.inf, th / (1.0 - g))
    if fam == "neg_binomial_scaled":
        return (-math.inf, th * math.log(2.0))
    if fam == "asym_laplace_diff":
        return (-th * zeta.param("beta2"), th * zeta.param("beta1"))
    if fam == "power_stable":
        g = zeta.param("gamma")
        if g < 0:
            return (-math.inf, th / (1.0 - g))
        return (-th / (g - 1.0), math.inf)
    # bregman_exp_stable
    beta = zeta.param("beta")
    edge = -2.0 * th * math.exp(beta) / beta
    return (edge, math.inf) if beta > 0 else (-math.inf, edge)


def _cumulant_arr(zeta: ZetaSpec, z: np.ndarray) -> np.ndarray:
    th = zeta.multiplier
    fam = zeta.family
    out = np.full(z.shape, np.inf)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if fam == "gamma_gamma":
            ok = z < th
            out[ok] = -th * np.log1p(-z[ok] / th)
        elif fam == "scaled_poisson":
            out = th * np.expm1(z / th)
        elif fam == "normal":
            out = z + z * z / (2.0 * th)
        elif fam in ("compound_poi_gamma", "power_stable"):
            g = zeta.param("gamma")
            base = 1.0 + (g - 1.0) * z / th
            expo = g / (g - 1.0)
            if 0 < g < 1 or g < 0:
                ok = base > 0 if 0 < g < 1 else base >= 0
            else:  # g > 2
                ok = base >= 0
            out[ok] = (th / g) * (base[ok] ** expo - 1.0)
        elif fam == "neg_binomial_scaled":
            ok = z < th * math.log(2.0)
            out[ok] = -th * np.log(2.0 - np.exp(z[ok] / th))
        elif fam == "two_point":
            z1, z2 = zeta.param("z1"), zeta.param("z2")
            p = (z2 - 1.0) / (z2 - z1)
            # theta * logsumexp of the two-point masses, overflow-safe
            a = z * z1 / th + math.log(p)
            b = z * z2 / th + math.log1p(-p)
            hi = np.maximum(a, b)
            out = th * (hi + np.log(np.exp(a - hi) + np.exp(b - hi)))
        elif fam == "asym_laplace_diff":
            alpha = zeta.param("alpha")
            b1, b2 = zeta.param("beta1"), zeta.param("beta2")
            drift = 1.0 + alpha * (1.0 / b2 - 1.0 / b1)
            ok = (z < th * b1) & (z > -th * b2)
            zz = z[ok]
            out[ok] = (
                drift * zz
                - th * alpha * np.log1p(-zz / (th * b1))
                - th * alpha * np.log1p(zz / (th * b2))
            )
        else:  # bregman_exp_stable
            beta = zeta.param("beta")
            eb = math.exp(beta)
            base = beta * z / (2.0 * th) + eb
            ok = base >= 0
            val = np.where(base > 0, base * np.log(np.where(base > 0, base, 1.0)) - base, 0.0)
            out[ok] = (2.0 * th / beta**2) * (val[ok] - (beta - 1.0) * eb)
    return out


def cumulant(zeta: ZetaSpec, z):
    """Log moment generating function; +inf outside its domain."""
    arr = np.atleast_1d(np.asarray(z, dtype=float))
    out = _cumulant_arr(zeta, arr)
    return float(out[0]) if np.asarray(z).ndim == 0 else out


def cumulant_prime(zeta: ZetaSpec, z):
    """Derivative of the cumulant function on the interior of its domain."""
    arr = np.atleast_1d(np.asarray(z, dtype=float))
    th = zeta.multiplier
    fam = zeta.family
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if fam == "gamma_gamma":
            out = 1.0 / (1.0 - arr / th)
        elif fam == "scaled_poisson":
            out = np.exp(arr / th)
        elif fam == "normal":
            out = 1.0 + arr / th
        elif fam in ("compound_poi_gamma", "power_stable"):
            g = zeta.param("gamma")
            out = (1.0 + (g - 1.0) * arr / th) ** (1.0 / (g - 1.0))
        elif fam == "neg_binomial_scaled":
            e = np.exp(arr / th)
            out = e / (2.0 - e)
        elif fam == "two_point":
            z1, z2 = zeta.param("z1"), zeta.param("z2")
            p = (z2 - 1.0) / (z2 - z1)
            a = arr * z1 / th + math.log(p)
            b = arr * z2 / th + math.log1p(-p)
            hi = np.maximum(a, b)
            wa, wb = np.exp(a - hi), np.exp(b - hi)
            out = (z1 * wa + z2 * wb) / (wa + wb)
        elif fam == "asym_laplace_diff":
            alpha = zeta.param("alpha")
            b1, b2 = zeta.param("beta1"), zeta.param("beta2")
            drift = 1.0 + alpha * (1.0 / b2 - 1.0 / b1)
            out = drift + th * alpha / (th * b1 - arr) - th * alpha / (th * b2 + arr)
        else:  # bregman_exp_stable
            beta = zeta.param("beta")
            eb = math.exp(beta)
            base = beta * arr / (2.0 * th) + eb
            out = np.log(base) / beta
    return float(out[0]) if np.asarray(z).ndim == 0 else out


def cumulant_second(zeta: ZetaSpec, z: float, eps: float = 1e-6) -> float:
    """Second derivative by central differences (diagnostics only)."""
    lo, hi = cumulant_domain(zeta)
    h = min(eps, (hi - z) / 4 if math.isfinite(hi) else eps,
            (z - lo) / 4 if math.isfinite(lo) else eps)
    return (cumulant_prime(zeta, z + h) - cumulant_prime(zeta, z - h)) / (2.0 * h)


_MAX_BISECT = 80


def _legendre_sup(lo: float, hi: float, lam, slope, t: float) -> float:
    """sup_z (z*t - lam(z)) on (lo, hi) by bracketing + bisection on slope."""
    z_lo, z_hi = -1.0, 1.0
    if math.isfinite(lo):
        z_lo = lo + 0.5 * min(1.0, hi - lo if math.isfinite(hi) else 1.0)
    if math.isfinite(hi):
        z_hi = hi - 0.5 * min(1.0, hi - lo if math.isfinite(lo) else 1.0)
    if z_lo >= z_hi:
        mid = (max(lo, z_lo - 1.0) + min(hi, z_hi + 1.0)) / 2.0
        z_lo, z_hi = mid - 1e-9, mid + 1e-9
    for _ in range(200):
        if slope(z_lo) <= t:
            break
        z_lo = z_lo * 2.0 - 1.0 if not math.isfinite(lo) else (z_lo + lo) / 2.0
    else:
        # slope stays above t: supremum attained at / toward the lower edge
        return _edge_value(lam, t, lo, from_above=True)
    for _ in range(200):
        if slope(z_hi) >= t:
            break
        z_hi = z_hi * 2.0 + 1.0 if not math.isfinite(hi) else (z_hi + hi) / 2.0
    else:
        return _edge_value(lam, t, hi, from_above=False)
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (z_lo + z_hi)
        if slope(mid) < t:
            z_lo = mid
        else:
            z_hi = mid
        if z_hi - z_lo < 1e-12 * max(1.0, abs(z_lo) + abs(z_hi)):
            break
    z = 0.5 * (z_lo + z_hi)
    val = z * t - lam(z)
    if math.isnan(val):
        raise NumericError(
            f"legendre probe failed at t={t} (bracket [{z_lo}, {z_hi}])"
        )
    return max(val, 0.0) if abs(t - 1.0) < 1e-13 else val


def legendre_phi(zeta: ZetaSpec, t: float) -> float:
    """sup_z (z*t - cumulant(z)) by safeguarded 1-D concave maximization.

    Equals multiplier * phi(t) for the paired generator. Returns +inf when
    the supremum diverges (t outside the generator domain).
    """
    lo, hi = cumulant_domain(zeta)
    return _legendre_sup(
        lo, hi, lambda z: cumulant(zeta, z), lambda z: cumulant_prime(zeta, z), t
    )


def legendre_phi_tilted(zeta: ZetaSpec, tau: float, t: float) -> float:
    """sup_z (z*t - tilted cumulant), tilted cumulant(z) = L(z+tau) - L(tau).

    Equals multiplier * phi_k(t) for the Bregman-shifted generator whose
    tilt is tau = multiplier * phi'(t_star).
    """
    lo, hi = cumulant_domain(zeta)
    log_norm = cumulant(zeta, tau)
    return _legendre_sup(
        lo - tau,
        hi - tau,
        lambda z: cumulant(zeta, z + tau) - log_norm,
        lambda z: cumulant_prime(zeta, z + tau),
        t,
    )


def _edge_value(lam, t: float, edge: float, from_above: bool) -> float:
    if not math.isfinite(edge):
        # slope never crosses t: the objective increases toward +/- infinity;
        # probe geometrically, it either converges (boundary of dom(phi)) or blows up
        best = -math.inf
        for k in range(64):
            z = -(2.0**k) if from_above else 2.0**k
            v = z * t - lam(z)
            if math.isfinite(v):
                best = max(best, v)
            if v > 1e30:
                return math.inf
        return best if math.isfinite(best) else math.inf
    val = edge * t - lam(edge)
    if math.isfinite(val):
        return val
    # open edge with infinite cumulant: approach it geometrically
    step = 0.5
    best = -math.inf
    for _ in range(200):
        z = edge + step if from_above else edge - step
        v = z * t - lam(z)
        if math.isfinite(v):
            best = max(best, v)
        step /= 2.0
    return best if math.isfinite(best) else math.inf


def tilt_param(gen: GeneratorSpec, total_mass: float, t_star: float) -> float:
    """Block tilt total_mass * phi'(t_star), t_star in the strict-convexity interval."""
    _, _, lo, hi = gens.gen_domain(gen)
    if not (lo < t_star < hi):
        raise gens.DomainError(
            f"t_star={t_star} outside strict-convexity interval ({lo}, {hi})"
        )
    return total_mass * gens.phi_prime(gen, t_star)


def substream(seed: int, purpose: int, block: int, chunk: int) -> np.random.Generator:
    """Independent Philox stream for (seed, purpose, block, chunk)."""
    key = np.array([seed & _MASK64, (seed >> 64) & _MASK64], dtype=np.uint64)
    counter = np.array(
        [0, purpose & _MASK64, block & _MASK64, chunk & _MASK64], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def sample_zeta(zeta: ZetaSpec, rng: np.random.Generator, size: int | None = None):
    """Draw W with E[W] = 1 from the plain (untilted) law."""
    return sample_tilted_core(zeta, 0.0, 1, rng, size)


def sample_tilted(tb: TiltedBlockSpec, rng: np.random.Generator, size: int | None = None):
    """One exponentially tilted draw V per replication."""
    return sample_tilted_core(tb.zeta, tb.tau, 1, rng, size)


def sample_block_sum(tb: TiltedBlockSpec, rng: np.random.Generator, size: int | None = None):
    """One draw of the tilted block sum (block_size-fold convolution)."""
    return sample_tilted_core(tb.zeta, tb.tau, tb.block_size, rng, size)


def sample_tilted_core(zeta: ZetaSpec, tau: float, nk: int,
                       rng: np.random.Generator, size: int | None = None):
    """Closed-form sampler for the nk-fold tilted convolution."""
    th = zeta.multiplier
    fam = zeta.family
    n = 1 if size is None else size
    lo, hi = cumulant_domain(zeta)
    if not (lo < tau < hi):
        raise ValueError(f"tilt {tau} outside the open cumulant domain ({lo}, {hi})")
    if fam == "gamma_gamma":
        out = rng.gamma(shape=nk * th, scale=1.0 / (th - tau), size=n)
    elif fam == "scaled_poisson":
        out = rng.poisson(nk * th * math.exp(tau / th), size=n) / th
    elif fam == "normal":
        out = rng.normal(nk * (1.0 + tau / th), math.sqrt(nk / th), size=n)
    elif fam == "compound_poi_gamma":
        g = zeta.param("gamma")
        jump_rate = th / (1.0 - g) - tau
        intensity = (th / g) * ((g - 1.0) * tau / th + 1.0) ** (g / (g - 1.0))
        counts = rng.poisson(nk * intensity, size=n)
        shape = counts * (g / (1.0 - g))
        out = np.zeros(n)
        pos = counts > 0
        if np.any(pos):
            out[pos] = rng.gamma(shape=shape[pos], scale=1.0 / jump_rate)
    elif fam == "neg_binomial_scaled":
        fail_p = math.exp(tau / th) / 2.0
        out = rng.negative_binomial(nk * th, 1.0 - fail_p, size=n) / th
    elif fam == "two_point":
        z1, z2 = zeta.param("z1"), zeta.param("z2")
        p = (z2 - 1.0) / (z2 - z1)
        trials = nk * th
        if abs(trials - round(trials)) > 1e-9:
            raise UnsupportedSamplingError(
                "two_point block sums require an integer block_size * multiplier"
            )
        trials = int(round(trials))
        u = tau / th
        la = u * z1 + math.log(p)
        lb = u * z2 + math.log1p(-p)
        m = max(la, lb)
        p_tilt = math.exp(la - m) / (math.exp(la - m) + math.exp(lb - m))
        b = rng.binomial(trials, p_tilt, size=n)
        out = (z2 * trials + (z1 - z2) * b) / th
    elif fam == "asym_laplace_diff":
        alpha = zeta.param("alpha")
        b1, b2 = zeta.param("beta1"), zeta.param("beta2")
        drift = 1.0 + alpha * (1.0 / b2 - 1.0 / b1)
        shape = nk * th * alpha
        out = (
            nk * drift
            + rng.gamma(shape=shape, scale=1.0 / (th * b1 - tau), size=n)
            - rng.gamma(shape=shape, scale=1.0 / (th * b2 + tau), size=n)
        )
    else:
        raise UnsupportedSamplingError(
            f"family {fam!r} is evaluation-only (stable-law simulation not supported)"
        )
    return float(out[0]) if size is None else out
