import numpy as np
import pytest

from baresim import constraints as cons


def test_halfspace_boundary_inclusive():
    spec = cons.make([cons.halfspace([1.0, 0.0], 0.6, ">=")])
    assert cons.contains(spec, [0.6, 0.4], tol=0.0)
    assert not cons.contains(spec, [0.59, 0.41], tol=0.0)
    assert cons.contains(spec, [0.7, 0.3])


def test_sentinel_never_member():
    spec = cons.make([cons.box([0, 0], [1, 1])])
    assert not cons.contains(spec, None)
    assert not cons.contains(spec, [np.inf, 0.5])


def test_regression_ball_zero_residual():
    X = np.array([[1.0, 2.0], [0.5, -1.0]])
    q = np.array([0.3, 0.4])
    y = X @ q
    spec = cons.make([cons.regression_ball(y, X, eps=1e-3)])
    assert cons.contains(spec, q)
    assert not cons.contains(spec, q + 2.0)


def test_box_and_ball():
    spec = cons.make([cons.box([0, 0], [1, 1]), cons.l2_ball([0.5, 0.5], 0.3)])
    assert cons.contains(spec, [0.5, 0.5])
    assert cons.contains(spec, [0.5, 0.79])
    assert not cons.contains(spec, [0.5, 0.85])


def test_tol_monotonicity():
    spec = cons.make([cons.halfspace([1.0], 1.0, ">=")])
    rng = np.random.default_rng(0)
    for _ in range(200):
        q = [float(rng.uniform(0.9, 1.1))]
        if cons.contains(spec, q, tol=0.0):
            assert cons.contains(spec, q, tol=1e-6)
            assert cons.contains(spec, q, tol=1e-2)


def test_simplex_scale_membership():
    spec = cons.make([cons.halfspace([1, 0], 0.6, ">=")], simplex_scale=1.0)
    assert cons.contains(spec, [0.6, 0.4])
    assert not cons.contains(spec, [0.7, 0.4])  # sum != 1
    assert not cons.contains(spec, [1.2, -0.2])  # negative coordinate
    spec2 = cons.make([cons.halfspace([1, 0], 1.2, ">=")], simplex_scale=2.0)
    assert cons.contains(spec2, [1.2, 0.8])


def test_contains_batch_matches_scalar():
    spec = cons.make(
        [cons.halfspace([1.0, -1.0], 0.0, ">="), cons.l2_ball([1.0, 0.5], 1.0)]
    )
    rng = np.random.default_rng(1)
    Q = rng.uniform(-1, 2, size=(200, 2))
    mask = cons.contains_batch(spec, Q)
    for i in range(len(Q)):
        assert mask[i] == cons.contains(spec, Q[i])


def test_dimension_mismatch():
    spec = cons.make([cons.box([0, 0], [1, 1])])
    with pytest.raises(cons.ConstraintError):
        cons.contains(spec, [0.5, 0.5, 0.5])
    with pytest.raises(cons.ConstraintError):
        cons.make([cons.box([0, 0], [1, 1]), cons.halfspace([1.0], 0.0)])


def test_interior_hint_examples():
    box = cons.make([cons.box([0, 0], [1, 1])])
    np.testing.assert_allclose(cons.interior_hint(box), [0.5, 0.5])
    half_only = cons.make([cons.halfspace([1, 0], 0.5, ">=")])
    assert cons.interior_hint(half_only) is None
    # box center excluded by a disjoint companion atom: nothing derivable
    mixed = cons.make([cons.box([0, 0], [1, 1]), cons.l2_ball([5.0, 5.0], 0.1)])
    assert cons.interior_hint(mixed) is None
    supplied = cons.make([cons.box([0, 0], [1, 1])], interior_point=(0.25, 0.25))
    np.testing.assert_allclose(cons.interior_hint(supplied), [0.25, 0.25])
    ball = cons.make([cons.l2_ball([0.2, 0.3], 0.5), cons.halfspace([1, 0], 0.0, ">=")])
    np.testing.assert_allclose(cons.interior_hint(ball), [0.2, 0.3])
