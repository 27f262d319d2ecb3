"""Brute-force reference optimizers for desk-scale verification.

Independent of the Monte-Carlo machinery: plain grids and 1-D scans, so the
estimators can be checked against something that cannot share their bugs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import constraints as cons
from . import divergences as divs
from . import generators as gens

MAX_GRID_DIM = 3


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    value: float
    arg: tuple[float, ...]
    method: str
    resolution: float


def _simplex_grid(k: int, total: float, step: float):
    m = int(round(total / step))
    if k == 1:
        yield np.array([total])
        return
    if k == 2:
        for i in range(m + 1):
            yield np.array([i * step, total - i * step])
        return
    for combo in itertools.product(range(m + 1), repeat=k - 1):
        if sum(combo) <= m:
            rest = total - step * sum(combo)
            yield np.array([c * step for c in combo] + [rest])


def _box_grid(lo: np.ndarray, hi: np.ndarray, step: float):
    axes = [np.arange(l, h + step / 2, step) for l, h in zip(lo, hi)]
    for point in itertools.product(*axes):
        yield np.array(point)


def _bounding_box(spec: cons.ConstraintSpec):
    for atom in spec.atoms:
        if atom.kind == "box":
            lo, hi = atom.data["lo"], atom.data["hi"]
            if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
                return lo, hi
        if atom.kind == "l2_ball":
            c, r = atom.data["center"], atom.data["radius"]
            return c - r, c + r
    raise OracleError(
        "grid oracle needs a bounded box or ball atom (or a simplex scale)"
    )


def grid_optimize(phi, constraint: cons.ConstraintSpec, resolution: float,
                  direction: str = "min", tol: float = cons.DEFAULT_TOL) -> OracleResult:
    """Exhaustive grid search over the constraint set, K <= 3 only."""
    if direction not in ("min", "max"):
        raise OracleError("direction must be 'min' or 'max'")
    if constraint.simplex_scale is not None:
        k = constraint.dim
        if k is None:
            raise OracleError("constraint does not determine the dimension")
        if k > MAX_GRID_DIM:
            raise OracleError(f"grid oracle limited to K <= {MAX_GRID_DIM}")
        points = _simplex_grid(k, constraint.simplex_scale, resolution)
    else:
        lo, hi = _bounding_box(constraint)
        if len(lo) > MAX_GRID_DIM:
            raise OracleError(f"grid oracle limited to K <= {MAX_GRID_DIM}")
        points = _box_grid(lo, hi, resolution)
    best_val, best_arg = None, None
    sign = 1.0 if direction == "min" else -1.0
    for q in points:
        if not cons.contains(constraint, q, tol):
            continue
        val = float(phi(q))
        if math.isnan(val):
            continue
        if best_val is None or sign * val < sign * best_val:
            best_val, best_arg = val, q
    if best_val is None:
        raise OracleError("grid never hit the constraint set; refine the resolution")
    return OracleResult(best_val, tuple(best_arg), "grid", resolution)


def inner_m_minimize(gamma: float, c: float, P, Q, Qss) -> float:
    """inf over m != 0 of the scaled Bregman distance at m*Q, by 1-D search.

    Coarse log-grid scan (vectorized over the defining Bregman sum, not the
    closed forms under test) followed by golden-section refinement; the
    negative axis is scanned as well (it matters only in the gamma = 2 case).
    """
    P = np.asarray(P, float)
    Q = np.asarray(Q, float)
    Qss = np.asarray(Qss, float)
    gen = gens.power(gamma, c)

    def value(m):
        if m == 0.0:
            return math.inf
        try:
            return divs.sbd(gen, P, m * Q, Qss)
        except divs.PreconditionError:
            return math.inf

    best = math.inf
    for sign in (1.0, -1.0):
        grid = sign * np.exp(np.linspace(-14.0, 14.0, 281))
        with np.errstate(invalid="ignore", over="ignore"):
            vals = divs.sbd_batch(gen, P, grid[:, None] * Q[None, :], Qss)
        vals = np.where(np.isnan(vals), np.inf, vals)
        idx = int(np.argmin(vals))
        if not math.isfinite(vals[idx]):
            continue
        lo = grid[max(idx - 1, 0)]
        hi = grid[min(idx + 1, len(grid) - 1)]
        lo, hi = min(lo, hi), max(lo, hi)
        res = minimize_scalar(value, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        best = min(best, float(res.fun), float(vals[idx]))
    if not math.isfinite(best):
        raise OracleError("inner scale minimization found no finite value")
    return best
