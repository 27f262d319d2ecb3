"""Declarative constraint sets: finite intersections of closed atoms.

Atoms: box, halfspace, l2_ball, regression_ball. An optional simplex scale A
additionally requires componentwise nonnegativity and component sum A. The
regularity assumption (closure of the set equals the closure of its
interior, in the relevant topology) is the caller's contract and is not
verified here.

regression_ball(y, X, eps) is the residual set sum_i (y_i - (Xq)_i)^2 <= eps;
shifted-coordinate formulations (basis-pursuit style) are obtained by
pre-shifting y.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-12


class ConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class Atom:
    kind: str
    data: dict = field(compare=False)


def box(lo, hi) -> Atom:
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    if lo.shape != hi.shape or np.any(lo > hi):
        raise ConstraintError("box needs lo <= hi componentwise")
    return Atom("box", {"lo": lo, "hi": hi})


def halfspace(a, b: float, sense: str = ">=") -> Atom:
    if sense not in (">=", "<="):
        raise ConstraintError("halfspace sense must be '>=' or '<='")
    return Atom("halfspace", {"a": np.asarray(a, float), "b": float(b), "sense": sense})


def l2_ball(center, radius: float) -> Atom:
    if radius < 0:
        raise ConstraintError("radius must be >= 0")
    return Atom("l2_ball", {"center": np.asarray(center, float), "radius": float(radius)})


def regression_ball(y, X, eps: float) -> Atom:
    y, X = np.asarray(y, float), np.asarray(X, float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ConstraintError("regression_ball needs y of shape (d,) and X of shape (d, K)")
    if eps < 0:
        raise ConstraintError("eps must be >= 0")
    return Atom("regression_ball", {"y": y, "X": X, "eps": float(eps)})


@dataclass(frozen=True)
class ConstraintSpec:
    atoms: tuple[Atom, ...]
    simplex_scale: float | None = None
    interior_point: tuple[float, ...] | None = None
    dim: int | None = None

    def __post_init__(self):
        if self.simplex_scale is not None and self.simplex_scale <= 0:
            raise ConstraintError("simplex_scale must be > 0")


def _atom_dim(atom: Atom) -> int | None:
    d = atom.data
    if atom.kind == "box":
        return d["lo"].shape[0]
    if atom.kind == "halfspace":
        return d["a"].shape[0]
    if atom.kind == "l2_ball":
        return d["center"].shape[0]
    return d["X"].shape[1]


def make(atoms, simplex_scale=None, interior_point=None, dim=None) -> ConstraintSpec:
    atoms = tuple(atoms)
    dims = {d for d in (_atom_dim(a) for a in atoms) if d is not None}
    if interior_point is not None:
        dims.add(len(interior_point))
    if dim is not None:
        dims.add(int(dim))
    if len(dims) > 1:
        raise ConstraintError(f"atoms disagree on dimension: {sorted(dims)}")
    k = dims.pop() if dims else None
    return ConstraintSpec(
        atoms,
        None if simplex_scale is None else float(simplex_scale),
        None if interior_point is None else tuple(float(v) for v in interior_point),
        k,
    )


def _atom_mask(atom: Atom, Q: np.ndarray, tol: float) -> np.ndarray:
    d = atom.data
    if atom.kind == "box":
        return np.all((Q >= d["lo"] - tol) & (Q <= d["hi"] + tol), axis=1)
    if atom.kind == "halfspace":
        val = Q @ d["a"]
        if d["sense"] == ">=":
            return val >= d["b"] - tol
        return val <= d["b"] + tol
    if atom.kind == "l2_ball":
        diff = Q - d["center"]
        return np.einsum("ij,ij->i", diff, diff) <= (d["radius"] + tol) ** 2
    # regression_ball
    res = Q @ d["X"].T - d["y"]
    return np.einsum("ij,ij->i", res, res) <= d["eps"] + tol


def contains_batch(spec: ConstraintSpec, Q: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Row-wise membership for an (m, K) array of finite candidates."""
    if spec.dim is not None and Q.shape[1] != spec.dim:
        raise ConstraintError(f"dimension mismatch: got {Q.shape[1]}, expected {spec.dim}")
    mask = np.ones(len(Q), dtype=bool)
    if spec.simplex_scale is not None:
        a = spec.simplex_scale
        mask &= np.abs(Q.sum(axis=1) - a) <= max(tol, 1e-9 * a)
        mask &= np.all(Q >= -tol, axis=1)
    for atom in spec.atoms:
        mask &= _atom_mask(atom, Q, tol)
    return mask


def contains(spec: ConstraintSpec, q, tol: float = DEFAULT_TOL) -> bool:
    """Membership with closed-set tolerance; the infinity sentinel is outside."""
    if q is None:
        return False
    arr = np.asarray(q, dtype=float)
    if arr.ndim != 1:
        raise ConstraintError("expected a vector or None")
    if not np.all(np.isfinite(arr)):
        return False
    return bool(contains_batch(spec, arr[None, :], tol)[0])


def interior_hint(spec: ConstraintSpec):
    """A point expected in the (relative) interior, if one is derivable.

    Priority: an explicitly supplied interior_point, else the center of a
    box or ball atom, provided it lies strictly inside every other atom.
    Halfspace-only intersections have no derivable center.
    """
    if spec.interior_point is not None:
        return np.asarray(spec.interior_point, dtype=float)
    candidates = []
    for atom in spec.atoms:
        if atom.kind == "box":
            lo, hi = atom.data["lo"], atom.data["hi"]
            if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
                candidates.append((lo + hi) / 2.0)
        elif atom.kind == "l2_ball":
            candidates.append(atom.data["center"].copy())
    for cand in candidates:
        if spec.simplex_scale is not None:
            if abs(cand.sum() - spec.simplex_scale) > 1e-9 or np.any(cand < 0):
                continue
        inside = all(_atom_mask(atom, cand[None, :], -1e-9)[0] for atom in spec.atoms)
        if inside:
            return cand
    return None
