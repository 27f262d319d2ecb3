"""Strictly increasing maps between log-hit-rates and divergence values.

Three kinds, all power-family specific:
  * "F"        -- parameters (gamma, c, A); component-sum-A problems with a
                  probability reference vector.
  * "Fbreve"   -- parameters (gamma, c, A, MP, C); Bregman targets whose
                  reference is C times the scaling vector, gamma != 1.
  * "Fbreve1"  -- parameters (c, A, MQss); gamma = 1 Bregman targets with an
                  arbitrary positive reference.
Every kind collapses to "F" in its degenerate parameterization (C = 1 and
MP = 1, respectively MQss = 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_LOG_SPACE_CUTOFF = 1e-12


class TransformDomainError(ValueError):
    pass


@dataclass(frozen=True)
class TransformSpec:
    kind: str  # "F" | "Fbreve" | "Fbreve1"
    gamma: float = 0.0
    c: float = 1.0
    A: float = 1.0
    MP: float = 1.0
    C: float = 1.0
    MQss: float = 1.0

    def __post_init__(self):
        if self.kind not in ("F", "Fbreve", "Fbreve1"):
            raise TransformDomainError(f"unknown transform kind {self.kind!r}")
        if not (self.c > 0):
            raise TransformDomainError("c must be > 0")
        if self.kind == "Fbreve1":
            if self.MQss <= 0:
                raise TransformDomainError("MQss must be > 0")
        elif self.kind == "Fbreve" and self.gamma == 1:
            raise TransformDomainError("Fbreve needs gamma != 1; use Fbreve1")
        g = 1.0 if self.kind == "Fbreve1" else self.gamma
        if self.kind == "F" and 1 < g < 2:
            raise TransformDomainError("F is undefined for gamma in (1,2)")
        if self.A <= 0 and g != 2:
            raise TransformDomainError("A <= 0 is allowed only for gamma = 2")
        if self.kind == "Fbreve":
            if self.MP <= 0:
                raise TransformDomainError("MP must be > 0")
            if self.C <= 0:
                raise TransformDomainError("C must be > 0")


def _neg_power(base: float, expo: float) -> float:
    """base ** (-expo) for base >= 0, in log space near zero."""
    if base < 0:
        return math.inf
    if base == 0.0:
        return math.inf if expo > 0 else 0.0
    if base < _LOG_SPACE_CUTOFF:
        return math.exp(-expo * math.log(base))
    return base ** (-expo)


def F_apply(spec: TransformSpec, x: float) -> float:
    """Forward transform; +inf on the infinite branch of its case table."""
    g, c, A = spec.gamma, spec.c, spec.A
    if spec.kind == "F":
        if g == 0:
            return c * (1.0 - A + math.log(A)) + x
        if g == 1:
            return c * (1.0 - A * math.exp(1.0 / A - 1.0 - x / (A * c)))
        base = 1.0 + g * (A - 1.0) + g * (g - 1.0) * x / c
        if g >= 2:
            if base <= 0:
                return math.inf
        elif base < 0:
            return math.inf
        apow = A * A if g == 2 else A ** (g / (g - 1.0))
        return (c / g) * (1.0 - apow * _neg_power(base, 1.0 / (g - 1.0)))
    if spec.kind == "Fbreve1":
        c, A, mq = spec.c, spec.A, spec.MQss
        return c * (mq - A * math.exp(mq / A - 1.0 - x / (A * c)))
    # Fbreve, gamma != 1
    mp, C = spec.MP, spec.C
    if g == 0:
        return c * (mp - A / C + mp * math.log(A / C) - mp * math.log(mp)) + x
    base = C**g * mp + g * C ** (g - 1.0) * (A - C * mp) + g * (g - 1.0) * x / c
    if g > 1:
        if base <= 0:
            return math.inf
    elif base < 0:
        return math.inf
    apow = A * A if g == 2 else A ** (g / (g - 1.0))
    return (c * C**g / g) * (mp - apow * _neg_power(base, 1.0 / (g - 1.0)))


def F_invert(spec: TransformSpec, z: float) -> float:
    """Inverse transform; raises outside the stated half-line."""
    g, c, A = spec.gamma, spec.c, spec.A
    if spec.kind == "F":
        if g == 0:
            return z - c * (1.0 - A + math.log(A))
        if g == 1:
            if z >= c:
                raise TransformDomainError(f"inverse needs z < c (got z={z}, c={c})")
            return c * (1.0 - A - A * (math.log(1.0 - z / c) - math.log(A)))
        strict = g >= 2
        if g * z > c or (strict and g * z == c):
            raise TransformDomainError(
                f"inverse needs gamma*z {'<' if strict else '<='} c (got {g * z} vs {c})"
            )
        apow = A * A if g == 2 else A**g
        return (c / (g * (g - 1.0))) * (
            apow * _neg_power(1.0 - g * z / c, g - 1.0) - 1.0 - g * (A - 1.0)
        )
    if spec.kind == "Fbreve1":
        c, A, mq = spec.c, spec.A, spec.MQss
        if z >= c * mq:
            raise TransformDomainError(f"inverse needs z < c*MQss (got z={z})")
        return c * (mq - A - A * (math.log(mq - z / c) - math.log(A)))
    mp, C = spec.MP, spec.C
    if g == 0:
        return z - c * (mp - A / C + mp * math.log(A / C) - mp * math.log(mp))
    lim = c * C**g * mp
    strict = g > 1
    if g * z > lim or (strict and g * z == lim):
        raise TransformDomainError(
            f"inverse needs gamma*z {'<' if strict else '<='} c*C^gamma*MP"
        )
    apow = A * A if g == 2 else A**g
    return (c / (g * (g - 1.0))) * (
        apow * _neg_power(mp - g * z / (c * C**g), g - 1.0)
        - C**g * mp
        - g * C ** (g - 1.0) * (A - C * mp)
    )


def divergence_from_hitrate(spec: TransformSpec, neg_log_hitrate_over_n: float) -> float:
    """Narrow-sense value: the inverse transform of -(1/n) log(hits / L)."""
    return F_invert(spec, neg_log_hitrate_over_n)
