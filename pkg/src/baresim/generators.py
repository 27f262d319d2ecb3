"""Divergence generators: convex functions phi with phi(1) = 0.

Each family is a closed convex function on the real line, finite on an
interval whose interior is (a, b), strictly convex on (t_lo_sc, t_hi_sc),
and normalized so that phi(1) = 0 (and phi'(1) = 0 where differentiable).
Evaluation returns +inf outside the effective domain; boundary points use
the known closed-form limits rather than numeric ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FAMILIES = (
    "power",
    "tv",
    "two_gamma",
    "asym_laplace",
    "bregman_exp",
    "two_point",
    "jensen_shannon_nb",
    "modified_dampened",
)


class ParameterError(ValueError):
    """Invalid generator parameters."""


class DomainError(ValueError):
    """Argument outside the closure of the generator domain."""


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    params: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown generator family {self.family!r}")

    def param(self, name: str) -> float:
        for key, value in self.params:
            if key == name:
                return value
        raise KeyError(name)

    @property
    def c(self) -> float:
        """Positive multiplier; families without one report 1."""
        try:
            return self.param("c")
        except KeyError:
            return 1.0

    def scaled(self, factor: float) -> "GeneratorSpec":
        """The generator factor*phi, for families carrying a multiplier."""
        if factor <= 0:
            raise ParameterError("scaling factor must be > 0")
        if self.family in ("tv", "two_point"):
            if factor == 1.0:
                return self
            raise ParameterError(f"{self.family} generator has no free multiplier")
        items = tuple((k, v * factor if k == "c" else v) for k, v in self.params)
        return GeneratorSpec(self.family, items)


def _spec(family: str, **params: float) -> GeneratorSpec:
    return GeneratorSpec(family, tuple(sorted(params.items())))


def power(gamma: float, c: float = 1.0) -> GeneratorSpec:
    if not (c > 0) or not math.isfinite(gamma):
        raise ParameterError("power generator needs finite gamma and c > 0")
    return _spec("power", gamma=float(gamma), c=float(c))


def tv() -> GeneratorSpec:
    return _spec("tv")


def two_gamma(alpha: float, beta: float, c: float = 1.0) -> GeneratorSpec:
    if min(alpha, beta, c) <= 0:
        raise ParameterError("two_gamma generator needs alpha, beta, c > 0")
    return _spec("two_gamma", alpha=float(alpha), beta=float(beta), c=float(c))


def asym_laplace(alpha: float, beta1: float, beta2: float, c: float = 1.0) -> GeneratorSpec:
    if min(alpha, beta1, beta2, c) <= 0:
        raise ParameterError("asym_laplace generator needs alpha, beta1, beta2, c > 0")
    return _spec("asym_laplace", alpha=float(alpha), beta1=float(beta1), beta2=float(beta2), c=float(c))


def bregman_exp(beta: float, c: float = 1.0) -> GeneratorSpec:
    if beta == 0 or not (c > 0):
        raise ParameterError("bregman_exp generator needs beta != 0 and c > 0")
    return _spec("bregman_exp", beta=float(beta), c=float(c))


def two_point(z1: float, z2: float) -> GeneratorSpec:
    if not (z1 < 1 < z2):
        raise ParameterError("two_point generator needs z1 < 1 < z2")
    return _spec("two_point", z1=float(z1), z2=float(z2))


def jensen_shannon_nb(c: float = 1.0) -> GeneratorSpec:
    if not (c > 0):
        raise ParameterError("jensen_shannon_nb generator needs c > 0")
    return _spec("jensen_shannon_nb", c=float(c))


def modified_dampened(beta: float, c: float = 1.0) -> GeneratorSpec:
    if not (0 < beta <= 1) or not (c > 0):
        raise ParameterError("modified_dampened generator needs beta in (0,1] and c > 0")
    return _spec("modified_dampened", beta=float(beta), c=float(c))


def from_config(cfg: dict) -> GeneratorSpec:
    """Build a generator from a {'family': ..., params...} mapping (CLI use)."""
    cfg = dict(cfg)
    family = cfg.pop("family", None)
    builders = {
        "power": power,
        "tv": tv,
        "two_gamma": two_gamma,
        "asym_laplace": asym_laplace,
        "bregman_exp": bregman_exp,
        "two_point": two_point,
        "jensen_shannon_nb": jensen_shannon_nb,
        "modified_dampened": modified_dampened,
    }
    if family not in builders:
        raise ParameterError(f"unknown generator family {family!r}")
    try:
        return builders[family](**cfg)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for family {family!r}: {exc}") from None


def gen_domain(gen: GeneratorSpec) -> tuple[float, float, float, float]:
    """(a, b, t_lo_sc, t_hi_sc): interior of the effective domain and of the
    strict-convexity interval. tv has no strict-convexity interval and
    reports the degenerate (1, 1)."""
    inf = math.inf
    if gen.family == "power":
        g = gen.param("gamma")
        if g <= 1:
            return (0.0, inf, 0.0, inf)
        if g == 2:
            return (-inf, inf, -inf, inf)
        return (-inf, inf, 0.0, inf)
    if gen.family == "tv":
        return (-inf, inf, 1.0, 1.0)
    if gen.family in ("two_gamma", "asym_laplace", "bregman_exp"):
        return (-inf, inf, -inf, inf)
    if gen.family == "two_point":
        z1, z2 = gen.param("z1"), gen.param("z2")
        return (z1, z2, z1, z2)
    if gen.family == "jensen_shannon_nb":
        return (0.0, inf, 0.0, inf)
    # modified_dampened
    beta = gen.param("beta")
    lo = (beta - 1.0) / beta
    return (lo, inf, lo, inf)


def boundary_values(gen: GeneratorSpec) -> tuple[float, float, float, float]:
    """Closed-form limits (phi(a), phi(b), phi'(a), phi'(b))."""
    inf = math.inf
    c = gen.c
    if gen.family == "power":
        g = gen.param("gamma")
        if g < 0:
            return (inf, inf, -inf, c / (1.0 - g))
        if g == 0:
            return (inf, inf, -inf, c)
        if 0 < g < 1:
            return (c / g, inf, -inf, c / (1.0 - g))
        if g == 1:
            return (c, inf, -inf, inf)
        if g == 2:
            return (inf, inf, -inf, inf)
        return (inf, inf, c / (1.0 - g), inf)
    if gen.family == "tv":
        return (inf, inf, -1.0, 1.0)
    if gen.family == "two_gamma":
        beta = gen.param("beta")
        return (inf, inf, -c * beta, c * beta)
    if gen.family == "asym_laplace":
        b1, b2 = gen.param("beta1"), gen.param("beta2")
        return (inf, inf, -c * b2, c * b1)
    if gen.family == "bregman_exp":
        beta = gen.param("beta")
        slope = 2.0 * c / beta * (0.0 - math.exp(beta))
        # phi'(t) = (2c/beta)(e^{beta t} - e^{beta}); one end has e^{beta t} -> 0,
        # the other -> inf, which end depends on sign(beta)
        if beta > 0:
            return (inf, inf, slope, inf)
        return (inf, inf, -inf, slope)
    if gen.family == "two_point":
        z1, z2 = gen.param("z1"), gen.param("z2")
        p = (z2 - 1.0) / (z2 - z1)
        return (math.log(1.0 / p), math.log(1.0 / (1.0 - p)), -inf, inf)
    if gen.family == "jensen_shannon_nb":
        return (c * math.log(2.0), inf, -inf, c * math.log(2.0))
    beta = gen.param("beta")  # modified_dampened
    return (inf, inf, -inf, c / (2.0 * beta))


def slope_at_plus_inf(gen: GeneratorSpec) -> float:
    """lim_{t->inf} phi(t)/t, i.e. phi'(b) if b = inf else +inf."""
    a, b, _, _ = gen_domain(gen)
    if math.isinf(b):
        return boundary_values(gen)[3]
    return math.inf


def slope_at_minus_inf(gen: GeneratorSpec) -> float:
    """lim_{t->-inf} phi(t)/t, i.e. phi'(a) if a = -inf else -inf."""
    a, b, _, _ = gen_domain(gen)
    if math.isinf(a):
        return boundary_values(gen)[2]
    return -math.inf


def is_differentiable(gen: GeneratorSpec) -> bool:
    return gen.family != "tv"


def _xlogx(t):
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = t[pos] * np.log(t[pos])
    return out


def _phi_core(gen: GeneratorSpec, t: np.ndarray) -> np.ndarray:
    """phi on finite arguments; +inf outside dom, boundary closed forms."""
    out = np.full(t.shape, np.inf)
    c = gen.c
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if gen.family == "power":
            g = gen.param("gamma")
            pos = t > 0
            if g == 0:
                out[pos] = c * (-np.log(t[pos]) + t[pos] - 1.0)
            elif g == 1:
                out[pos] = c * (t[pos] * np.log(t[pos]) + 1.0 - t[pos])
                out[t == 0] = c
            elif g == 2:
                out = c * (t - 1.0) ** 2 / 2.0
            else:
                out[pos] = c * (t[pos] ** g - g * t[pos] + g - 1.0) / (g * (g - 1.0))
                if 0 < g < 1:
                    out[t == 0] = c / g
                elif g > 1:
                    npos = ~pos
                    out[npos] = c * (1.0 / g - t[npos] / (g - 1.0))
        elif gen.family == "tv":
            out = np.abs(t - 1.0)
        elif gen.family == "two_gamma":
            alpha, beta = gen.param("alpha"), gen.param("beta")
            u = (beta * (1.0 - t) / alpha) ** 2
            root = np.sqrt(1.0 + u)
            # 2*(root-1)/u == 2/(1+root), removing the 0/0 at t = 1
            out = c * alpha * ((root - 1.0) + np.log(2.0) - np.log1p(root))
        elif gen.family == "asym_laplace":
            alpha = gen.param("alpha")
            b1, b2 = gen.param("beta1"), gen.param("beta2")
            g = (1.0 - t) / alpha + 1.0 / b2 - 1.0 / b1
            s = (b1 + b2) * g
            root = np.sqrt(4.0 + s * s)
            # (root-2)/(b1*b2*g^2) == (b1+b2)^2/(b1*b2*(root+2))
            out = c * alpha * (
                (root - 2.0) / 2.0
                - (b1 - b2) * g / 2.0
                + np.log((b1 + b2) ** 2 / (b1 * b2))
                - np.log(root + 2.0)
            )
        elif gen.family == "bregman_exp":
            beta = gen.param("beta")
            eb = math.exp(beta)
            out = (2.0 * c / beta**2) * (np.exp(beta * t) - t * beta * eb + (beta - 1.0) * eb)
        elif gen.family == "two_point":
            z1, z2 = gen.param("z1"), gen.param("z2")
            p = (z2 - 1.0) / (z2 - z1)
            inside = (t > z1) & (t < z2)
            u = (t[inside] - z1) / (z2 - z1)
            v = z2 - t[inside]
            # factored form: u log u avoids 0 * inf when t - z1 underflows
            out[inside] = (
                _xlogx(u)
                + u * (math.log((z2 - z1) * p / (1.0 - p)) - np.log(v))
                - math.log((z2 - z1) * p)
                + np.log(v)
            )
            out[t == z1] = math.log(1.0 / p)
            out[t == z2] = math.log(1.0 / (1.0 - p))
        elif gen.family == "jensen_shannon_nb":
            pos = t > 0
            tp = t[pos]
            out[pos] = c * (tp * np.log(tp) + (tp + 1.0) * np.log(2.0 / (tp + 1.0)))
            out[t == 0] = c * math.log(2.0)
        else:  # modified_dampened
            beta = gen.param("beta")
            lo = (beta - 1.0) / beta
            inside = t > lo
            ti = t[inside]
            out[inside] = c * (ti - 1.0) ** 2 / (2.0 * (beta * ti + 1.0 - beta))
    return out


def phi_eval(gen: GeneratorSpec, t):
    """phi(t); +inf outside the effective domain, array-capable."""
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr).copy()
    out = np.empty_like(arr)
    finite = np.isfinite(arr)
    phi_a, phi_b, _, _ = boundary_values(gen)
    out[arr == math.inf] = phi_b
    out[arr == -math.inf] = phi_a
    out[finite] = _phi_core(gen, arr[finite])
    # clamp tiny negatives from rounding right at t = 1
    near_one = finite & (np.abs(arr - 1.0) < 1e-15)
    out[near_one] = np.where(out[near_one] < 0, 0.0, out[near_one])
    return float(out[0]) if scalar else out


def _phi_prime_core(gen: GeneratorSpec, t: np.ndarray) -> np.ndarray:
    out = np.full(t.shape, np.nan)
    c = gen.c
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if gen.family == "power":
            g = gen.param("gamma")
            pos = t > 0
            if g == 0:
                out[pos] = c * (1.0 - 1.0 / t[pos])
            elif g == 1:
                out[pos] = c * np.log(t[pos])
            elif g == 2:
                out = c * (t - 1.0)
            else:
                out[pos] = c * (t[pos] ** (g - 1.0) - 1.0) / (g - 1.0)
                if g > 1:
                    out[~pos] = c / (1.0 - g)
        elif gen.family == "tv":
            out = np.sign(t - 1.0)
        elif gen.family == "two_gamma":
            alpha, beta = gen.param("alpha"), gen.param("beta")
            u = (beta * (1.0 - t) / alpha) ** 2
            root = np.sqrt(1.0 + u)
            out = -c * beta**2 * (1.0 - t) / (alpha * (1.0 + root))
        elif gen.family == "asym_laplace":
            alpha = gen.param("alpha")
            b1, b2 = gen.param("beta1"), gen.param("beta2")
            g = (1.0 - t) / alpha + 1.0 / b2 - 1.0 / b1
            s = (b1 + b2) * g
            root = np.sqrt(4.0 + s * s)
            out = c * ((b1 - b2) / 2.0 - (b1 + b2) ** 2 * g / (2.0 * (root + 2.0)))
        elif gen.family == "bregman_exp":
            beta = gen.param("beta")
            out = (2.0 * c / beta) * (np.exp(beta * t) - math.exp(beta))
        elif gen.family == "two_point":
            z1, z2 = gen.param("z1"), gen.param("z2")
            p = (z2 - 1.0) / (z2 - z1)
            inside = (t > z1) & (t < z2)
            w = t[inside] - z1
            v = z2 - t[inside]
            out[inside] = np.log(w * p / (v * (1.0 - p))) / (z2 - z1)
        elif gen.family == "jensen_shannon_nb":
            pos = t > 0
            out[pos] = c * np.log(2.0 * t[pos] / (t[pos] + 1.0))
        else:  # modified_dampened
            beta = gen.param("beta")
            lo = (beta - 1.0) / beta
            inside = t > lo
            ti = t[inside]
            den = beta * ti + 1.0 - beta
            out[inside] = c * (ti - 1.0) * (beta * ti + 2.0 - beta) / (2.0 * den * den)
    return out


def phi_prime(gen: GeneratorSpec, t):
    """phi'(t); endpoint arguments return the tabulated limits.

    tv is non-differentiable at t = 1 and returns 0 there by convention.
    Raises DomainError outside the closure of the domain.
    """
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr).astype(float)
    a, b, _, _ = gen_domain(gen)
    if np.any(arr < a) or np.any(arr > b):
        raise DomainError(f"argument outside [{a}, {b}] for family {gen.family}")
    _, _, der_a, der_b = boundary_values(gen)
    out = np.empty_like(arr)
    interior = (arr > a) & (arr < b)
    out[arr == a] = der_a
    out[arr == b] = der_b
    out[interior] = _phi_prime_core(gen, arr[interior])
    return float(out[0]) if scalar else out


def phi_k_eval(gen: GeneratorSpec, t, t_star: float):
    """Bregman-shifted generator phi(t) - phi(t*) - phi'(t*)(t - t*).

    Requires t_star inside the strict-convexity interval; nonnegative with
    a unique zero at t = t_star.
    """
    _, _, lo, hi = gen_domain(gen)
    if not (lo < t_star < hi):
        raise DomainError(
            f"t_star={t_star} outside strict-convexity interval ({lo}, {hi})"
        )
    base = phi_eval(gen, t_star)
    slope = phi_prime(gen, t_star)
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = phi_eval(gen, arr) - base - slope * (arr - t_star)
    tiny = (out < 0) & (out > -1e-12)  # rounding residue near t = t_star
    out[tiny] = 0.0
    return float(out[0]) if scalar else out
