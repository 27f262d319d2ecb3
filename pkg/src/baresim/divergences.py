"""Closed-form directed distances used as objectives or base divergences.

Scalar entry points use exact compensated accumulation (math.fsum); the
*_batch variants evaluate row-wise on (m, K) candidate arrays for the
Monte-Carlo loops and rely on numpy's pairwise summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import generators as gens
from .generators import GeneratorSpec


class PreconditionError(ValueError):
    """Inputs violate a divergence's stated precondition."""


def as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise PreconditionError("expected a 1-D vector")
    return v


def _check_positive(P: np.ndarray, name: str = "P"):
    if np.any(P <= 0):
        raise PreconditionError(f"{name} must have strictly positive components")


def casm_divergence(gen: GeneratorSpec, Q, P) -> float:
    """Sum of p_k * phi(q_k / p_k) with the three zero conventions.

    p = 0, q = 0 contributes 0; p = 0, q != 0 contributes q times the
    asymptotic slope of phi in the direction of sign(q); q = 0, p > 0
    contributes p * phi(0). +inf is a valid return.
    """
    Q, P = as_vector(Q), as_vector(P)
    if Q.shape != P.shape:
        raise PreconditionError("Q and P must have the same length")
    if np.any(P < 0):
        raise PreconditionError("P must be componentwise nonnegative")
    terms = []
    for q, p in zip(Q, P):
        if p > 0:
            val = p * gens.phi_eval(gen, q / p)
        elif q == 0:
            val = 0.0
        elif q > 0:
            val = q * gens.slope_at_plus_inf(gen)
        else:
            slope = gens.slope_at_minus_inf(gen)
            val = math.inf if math.isinf(slope) else q * slope
        if math.isinf(val):
            return math.inf
        terms.append(val)
    return math.fsum(terms)


def casm_batch(gen: GeneratorSpec, Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Row-wise casm_divergence for Q of shape (m, K); requires P > 0."""
    _check_positive(P)
    vals = gens.phi_eval(gen, Q / P)
    return np.sum(P * vals, axis=1)


def power_divergence_closed(gamma: float, c: float, Q, P) -> float:
    """Generalized power divergence, case-exact including the domain rows."""
    Q, P = as_vector(Q), as_vector(P)
    if Q.shape != P.shape:
        raise PreconditionError("Q and P must have the same length")
    if not (c > 0):
        raise PreconditionError("c must be > 0")
    g = gamma
    nonneg_P = np.all(P >= 0) and np.any(P > 0)
    pos_P = np.all(P > 0)
    if g < 0 or 0 < g < 1:
        ok = nonneg_P and (np.all(Q > 0) if g < 0 else np.all(Q >= 0))
        if not ok:
            return math.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            mixed = np.where((Q > 0) & (P > 0), Q**g * np.where(P > 0, P, 1.0) ** (1 - g), 0.0)
            if g < 0:  # p = 0 terms: q^g * 0^{1-g} = 0; q = 0 excluded above
                mixed = np.where(P > 0, mixed, 0.0)
        return c * (
            math.fsum(mixed) / (g * (g - 1.0))
            - math.fsum(Q) / (g - 1.0)
            + math.fsum(P) / g
        )
    if g == 0:
        if not (nonneg_P and np.all(Q > 0)):
            return math.inf
        terms = np.where(P > 0, P * np.log(np.where(P > 0, P, 1.0) / Q), 0.0)
        return c * (math.fsum(terms) + math.fsum(Q) - math.fsum(P))
    if g == 1:
        if not (pos_P and np.all(Q >= 0)):
            return math.inf
        terms = np.where(Q > 0, Q * np.log(np.where(Q > 0, Q, 1.0) / P), 0.0)
        return c * (math.fsum(terms) - math.fsum(Q) + math.fsum(P))
    if g == 2:
        if not pos_P:
            return math.inf
        return c * math.fsum((Q - P) ** 2 / (2.0 * P))
    # g in (1,2) or (2,inf)
    if not pos_P:
        return math.inf
    mixed = np.where(Q >= 0, np.where(Q >= 0, np.abs(Q), 0.0) ** g * P ** (1 - g), 0.0)
    return c * (
        math.fsum(mixed) / (g * (g - 1.0))
        - math.fsum(Q) / (g - 1.0)
        + math.fsum(P) / g
    )


def sbd(gen: GeneratorSpec, P, Q, Qss) -> float:
    """Scaled Bregman distance sum p_k * phi_k(q_k / p_k).

    Requires q**_k / p_k inside the strict-convexity interval for all k.
    Collapses to casm_divergence(gen, Q, P) at Qss = P.
    """
    P, Q, Qss = as_vector(P), as_vector(Q), as_vector(Qss)
    _check_positive(P)
    _, _, lo, hi = gens.gen_domain(gen)
    tss = Qss / P
    if np.any(tss <= lo) or np.any(tss >= hi):
        raise PreconditionError(
            "Qss/P must lie inside the strict-convexity interval "
            f"({lo}, {hi}) componentwise"
        )
    terms = [p * gens.phi_k_eval(gen, q / p, ts) for p, q, ts in zip(P, Q, tss)]
    if any(math.isinf(v) for v in terms):
        return math.inf
    return math.fsum(terms)


def sbd_batch(gen: GeneratorSpec, P: np.ndarray, Q: np.ndarray, Qss: np.ndarray) -> np.ndarray:
    """Row-wise sbd for Q of shape (m, K)."""
    _check_positive(P)
    tss = Qss / P
    base = gens.phi_eval(gen, tss)
    slope = gens.phi_prime(gen, tss)
    t = Q / P
    vals = gens.phi_eval(gen, t) - base - slope * (t - tss)
    return np.sum(P * vals, axis=1)


def obd(gen: GeneratorSpec, Q, Qss) -> float:
    """Separable ordinary Bregman distance: sbd with unit scaling."""
    Q = as_vector(Q)
    return sbd(gen, np.ones_like(Q), Q, Qss)


def bregman_exponential(beta: float, c: float, P, Q, Qss) -> float:
    """Exponential-generator scaled Bregman divergence, direct closed form."""
    if beta == 0 or not (c > 0):
        raise PreconditionError("bregman_exponential needs beta != 0 and c > 0")
    P, Q, Qss = as_vector(P), as_vector(Q), as_vector(Qss)
    _check_positive(P)
    terms = [
        p * math.exp(beta * q / p)
        - (p + beta * (q - qss)) * math.exp(beta * qss / p)
        for p, q, qss in zip(P, Q, Qss)
    ]
    return (2.0 * c / beta**2) * math.fsum(terms)


def hellinger_integral(gamma: float, Q, P) -> float:
    """Power sum of q_k^gamma * p_k^(1-gamma)."""
    Q, P = as_vector(Q), as_vector(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = Q**gamma * P ** (1.0 - gamma)
    if gamma == 0:
        vals = np.where(Q > 0, P, 0.0)
    elif gamma == 1:
        vals = np.where(P > 0, Q, 0.0)
    return math.fsum(vals)


def _hellinger_rows(gamma: float, Q: np.ndarray, P: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = Q**gamma * P ** (1.0 - gamma)
    if gamma > 0:
        vals = np.where(Q == 0.0, 0.0, vals)
    return np.sum(vals, axis=1)


def triple_power_sum(gamma: float, Q, Qss, P) -> float:
    """Sum of q_k * (q**_k)^(gamma-1) * p_k^(1-gamma)."""
    Q, Qss, P = as_vector(Q), as_vector(Qss), as_vector(P)
    vals = Q * Qss ** (gamma - 1.0) * P ** (1.0 - gamma)
    return math.fsum(vals)


def modified_kl(Q, Qss) -> float:
    """Sum of q_k * log(q_k / q**_k), with 0 log 0 = 0; needs Qss > 0."""
    Q, Qss = as_vector(Q), as_vector(Qss)
    _check_positive(Qss, "Qss")
    if np.any(Q < 0):
        raise PreconditionError("Q must be componentwise nonnegative")
    terms = np.where(Q > 0, Q * np.log(np.where(Q > 0, Q, 1.0) / Qss), 0.0)
    return math.fsum(terms)


def log_triple_sum(Q, Qss, P) -> float:
    """-sum of p_k * log(q_k / q**_k); needs Q > 0 and Qss > 0."""
    Q, Qss, P = as_vector(Q), as_vector(Qss), as_vector(P)
    _check_positive(Q, "Q")
    _check_positive(Qss, "Qss")
    return -math.fsum(P * np.log(Q / Qss))


def _innmin_numeric(gamma: float, c: float, P, Q, Qss) -> float:
    # 1-D fallback over m > 0 with the m^gamma indicator term kept explicit
    from scipy.optimize import minimize_scalar

    def val(m):
        return sbd(gens.power(gamma, c), P, m * np.asarray(Q, float), Qss)

    grid = np.exp(np.linspace(-12.0, 12.0, 241))
    coarse = min(grid, key=val)
    res = minimize_scalar(
        val, bounds=(coarse / 4.0, coarse * 4.0), method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.fun)


def innmin_sbd(gamma: float, c: float, P, Q, Qss) -> float:
    """Scale-minimized scaled Bregman distance inf_{m != 0} of the SBD at m*Q.

    Closed forms per gamma case; requires Q on a positive-sum simplex copy
    (any sign of the sum is allowed only for gamma = 2) and Qss > 0
    componentwise (gamma = 2 allows general Qss).
    """
    P, Q, Qss = as_vector(P), as_vector(Q), as_vector(Qss)
    _check_positive(P)
    A = math.fsum(Q)
    if gamma == 2:
        if A == 0:
            raise PreconditionError("component sum of Q must be nonzero")
    else:
        if np.any(Qss <= 0):
            raise PreconditionError("Qss must be componentwise positive")
        if np.any(Q < 0) or A <= 0:
            raise PreconditionError("Q must be nonnegative with positive sum")
        if gamma <= 0 and np.any(Q <= 0):
            raise PreconditionError(
                f"gamma={gamma} requires strictly positive Q components"
            )
    if gamma == 1:
        kl = modified_kl(Q, Qss)
        return c * (math.fsum(Qss) - A * math.exp(-kl / A))
    if gamma == 0:
        mp = math.fsum(P)
        t0 = triple_power_sum(0.0, Q, Qss, P)
        return c * (mp * math.log(t0) + log_triple_sum(Q, Qss, P) - mp * math.log(mp))
    h_ref = hellinger_integral(gamma, Qss, P)
    h_q = hellinger_integral(gamma, Q, P)
    t_g = triple_power_sum(gamma, Q, Qss, P)
    if gamma > 1 and t_g <= 0:
        # interior-optimum power of T assumes T > 0
        return _innmin_numeric(gamma, c, P, Q, Qss)
    if gamma == 2:
        return (c / 2.0) * (h_ref - t_g * t_g / h_q)
    return (c / gamma) * (
        h_ref - t_g ** (gamma / (gamma - 1.0)) * h_q ** (-1.0 / (gamma - 1.0))
    )


def innmin_sbd_batch(gamma: float, c: float, P: np.ndarray, Q: np.ndarray,
                     Qss: np.ndarray) -> np.ndarray:
    """Row-wise innmin_sbd for nonnegative Q of shape (m, K)."""
    _check_positive(P)
    h_ref = hellinger_integral(gamma, Qss, P)
    if gamma == 1:
        A = np.sum(Q, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            kl = np.sum(np.where(Q > 0, Q * np.log(np.where(Q > 0, Q, 1.0) / Qss), 0.0), axis=1)
        return c * (math.fsum(Qss) - A * np.exp(-kl / A))
    if gamma == 0:
        mp = math.fsum(P)
        with np.errstate(divide="ignore", invalid="ignore"):
            t0 = np.sum(Q * P / Qss, axis=1)
            lts = -np.sum(P * np.log(Q / Qss), axis=1)
        out = c * (mp * np.log(t0) + lts - mp * math.log(mp))
        return np.where(np.all(Q > 0, axis=1), out, np.inf)
    h_q = _hellinger_rows(gamma, Q, P)
    t_g = Q @ (Qss ** (gamma - 1.0) * P ** (1.0 - gamma))
    if gamma == 2:
        return (c / 2.0) * (h_ref - t_g * t_g / h_q)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (c / gamma) * (
            h_ref - t_g ** (gamma / (gamma - 1.0)) * h_q ** (-1.0 / (gamma - 1.0))
        )
    if gamma < 0:
        out = np.where(np.all(Q > 0, axis=1), out, np.inf)
    return out


def weighted_lr(r: float, M, Q, P) -> float:
    """Weighted l_r distance (sum (1/m_k)|q_k - p_k|^r)^( 1/r ), r > 0."""
    if not (r > 0):
        raise PreconditionError("r must be > 0")
    M, Q, P = as_vector(M), as_vector(Q), as_vector(P)
    _check_positive(M, "M")
    return math.fsum(np.abs(Q - P) ** r / M) ** (1.0 / r)


def mahalanobis(Amat, Q, P) -> float:
    """Quadratic form (Q-P) A (Q-P)^T for positive-definite A."""
    Q, P = as_vector(Q), as_vector(P)
    A = np.asarray(Amat, dtype=float)
    d = Q - P
    return float(d @ A @ d)


def burbea_rao(gen: GeneratorSpec, beta: float, Q, P) -> float:
    """Skew Jensen gap sum beta*phi(q) + (1-beta)*phi(p) - phi(beta q + (1-beta) p)."""
    if not (0 < beta < 1):
        raise PreconditionError("beta must be in (0, 1)")
    Q, P = as_vector(Q), as_vector(P)
    mid = gens.phi_eval(gen, beta * Q + (1.0 - beta) * P)
    terms = beta * gens.phi_eval(gen, Q) + (1.0 - beta) * gens.phi_eval(gen, P) - mid
    return math.fsum(terms)


_ENTROPY_COMPOSERS = {
    "identity": lambda x: x,
    "negation": lambda x: -x,
    "log1p": lambda x: np.log1p(x),
}


def phi_entropy(gen: GeneratorSpec, h, Q) -> float:
    """Composed generator sum h(sum phi(q_k)); h one of
    'identity' | 'negation' | 'log1p' | (slope, offset) for an affine map."""
    Q = as_vector(Q)
    total = math.fsum(gens.phi_eval(gen, Q))
    if isinstance(h, str):
        try:
            fn = _ENTROPY_COMPOSERS[h]
        except KeyError:
            raise PreconditionError(f"unknown entropy composer {h!r}") from None
        return float(fn(total))
    slope, offset = h
    return slope * total + offset


@dataclass(frozen=True)
class Objective:
    """A continuous objective with scalar and row-batched evaluation."""

    kind: str
    fn: callable = field(repr=False)
    batch: callable = field(repr=False)

    def __call__(self, q) -> float:
        return self.fn(np.asarray(q, dtype=float))

    def negated(self) -> "Objective":
        return Objective(
            kind=f"neg({self.kind})",
            fn=lambda q: -self.fn(q),
            batch=lambda Q: -self.batch(Q),
        )


def _scalar_rows(fn):
    def batch(Q):
        return np.array([fn(row) for row in Q])

    return batch


def make_objective(kind: str, **kw) -> Objective:
    """Objective factory for the kinds usable as Phi in the estimators."""
    if kind == "casm":
        gen = kw["generator"]
        P = as_vector(kw["P"])
        if np.all(P > 0):
            return Objective(kind, lambda q: casm_divergence(gen, q, P),
                             lambda Q: casm_batch(gen, Q, P))
        return Objective(kind, lambda q: casm_divergence(gen, q, P),
                         _scalar_rows(lambda q: casm_divergence(gen, q, P)))
    if kind == "sbd":
        gen, P, Qss = kw["generator"], as_vector(kw["P"]), as_vector(kw["Qss"])
        return Objective(kind, lambda q: sbd(gen, P, q, Qss),
                         lambda Q: sbd_batch(gen, P, Q, Qss))
    if kind == "obd":
        gen, Qss = kw["generator"], as_vector(kw["Qss"])
        ones = np.ones_like(Qss)
        return Objective(kind, lambda q: sbd(gen, ones, q, Qss),
                         lambda Q: sbd_batch(gen, ones, Q, Qss))
    if kind == "innmin_sbd":
        gamma, c = kw["gamma"], kw.get("c", 1.0)
        P, Qss = as_vector(kw["P"]), as_vector(kw["Qss"])
        return Objective(kind, lambda q: innmin_sbd(gamma, c, P, q, Qss),
                         lambda Q: innmin_sbd_batch(gamma, c, P, Q, Qss))
    if kind == "weighted_lr":
        r = kw["r"]
        P = as_vector(kw["P"])
        M = as_vector(kw.get("M", np.ones_like(P)))
        return Objective(
            kind, lambda q: weighted_lr(r, M, q, P),
            lambda Q: np.sum(np.abs(Q - P) ** r / M, axis=1) ** (1.0 / r))
    if kind == "mahalanobis":
        A = np.asarray(kw["Amat"], dtype=float)
        P = as_vector(kw["P"])
        return Objective(kind, lambda q: mahalanobis(A, q, P),
                         lambda Q: np.einsum("ij,jk,ik->i", Q - P, A, Q - P))
    if kind == "burbea_rao":
        gen, beta, P = kw["generator"], kw.get("beta", 0.5), as_vector(kw["P"])

        def br_batch(Q):
            mid = gens.phi_eval(gen, beta * Q + (1.0 - beta) * P)
            return np.sum(beta * gens.phi_eval(gen, Q)
                          + (1.0 - beta) * gens.phi_eval(gen, P) - mid, axis=1)

        return Objective(kind, lambda q: burbea_rao(gen, beta, q, P), br_batch)
    if kind == "phi_entropy":
        gen, h = kw["generator"], kw.get("h", "identity")
        return Objective(kind, lambda q: phi_entropy(gen, h, q),
                         _scalar_rows(lambda q: phi_entropy(gen, h, q)))
    if kind == "custom_table":
        # generalized Bregman distance with per-coordinate scaling tables
        gen = kw["generator"]
        P = as_vector(kw["P"])
        m1 = as_vector(kw.get("M1", np.ones_like(P)))
        m2 = as_vector(kw.get("M2", np.ones_like(P)))
        m3 = as_vector(kw.get("M3", np.ones_like(P)))
        ref = P / m2
        base = gens.phi_eval(gen, ref)
        slope = gens.phi_prime(gen, ref)

        def ct_batch(Q):
            t = Q / m1
            return np.sum((gens.phi_eval(gen, t) - base - slope * (t - ref)) * m3, axis=1)

        return Objective(kind, lambda q: float(ct_batch(q[None, :])[0]), ct_batch)
    raise PreconditionError(f"unknown objective kind {kind!r}")
