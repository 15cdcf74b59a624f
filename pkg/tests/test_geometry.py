import numpy as np
import pytest

from dpmeta.geometry import ParamDomain, as_vector, clip_norm, dist_sq, project

RTOL = 1e-12


def test_project_frozen_examples():
    unit = ParamDomain(np.zeros(2), 1.0)
    assert np.allclose(project([2.0, 0.0], unit), [1.0, 0.0], rtol=RTOL, atol=0)
    # interior point passes through unchanged
    inside = project([0.3, -0.4], unit)
    assert np.array_equal(inside, [0.3, -0.4])
    shifted = ParamDomain(np.array([3.0, 0.0]), 1.0)
    assert np.allclose(project([3.0, 4.0], shifted), [3.0, 1.0], rtol=RTOL, atol=0)


def test_project_idempotent_and_feasible():
    rng = np.random.default_rng(1)
    dom = ParamDomain(rng.normal(size=4), 1.7)
    for _ in range(200):
        v = rng.normal(scale=5.0, size=4)
        p = project(v, dom)
        assert np.linalg.norm(p - dom.center) <= dom.radius * (1 + RTOL)
        assert np.allclose(project(p, dom), p, rtol=RTOL, atol=1e-15)


def test_project_nonexpansive():
    rng = np.random.default_rng(2)
    dom = ParamDomain(np.zeros(3), 2.0)
    for _ in range(200):
        a = rng.normal(scale=4.0, size=3)
        b = rng.normal(scale=4.0, size=3)
        da = project(a, dom)
        db = project(b, dom)
        assert dist_sq(da, db) <= dist_sq(a, b) * (1 + 1e-9) + 1e-15


def test_zero_radius_domain():
    dom = ParamDomain(np.array([1.0, 2.0]), 0.0)
    assert np.allclose(project([5.0, 5.0], dom), [1.0, 2.0], rtol=RTOL)
    assert dom.contains([1.0, 2.0])
    assert not dom.contains([1.0, 2.1])


def test_clip_norm_frozen_examples():
    out = clip_norm([3.0, 4.0], 1.0)
    assert abs(np.linalg.norm(out) - 1.0) <= RTOL
    assert np.allclose(out, [0.6, 0.8], rtol=RTOL)
    # under the bound: untouched
    assert np.array_equal(clip_norm([0.3, 0.4], 1.0), [0.3, 0.4])
    assert np.array_equal(clip_norm([0.0, 0.0], 1.0), [0.0, 0.0])


def test_clip_norm_properties():
    rng = np.random.default_rng(3)
    for _ in range(200):
        v = rng.normal(scale=3.0, size=5)
        bound = rng.uniform(0.1, 2.0)
        c = clip_norm(v, bound)
        assert np.linalg.norm(c) <= bound * (1 + RTOL)
        # direction preserved: c is a nonnegative multiple of v
        nv = np.linalg.norm(v)
        if nv > 0:
            cos = np.dot(c, v) / (np.linalg.norm(c) * nv + 1e-300)
            assert cos >= 1 - 1e-9 or np.linalg.norm(c) == 0


def test_clip_zero_bound():
    assert np.allclose(clip_norm([1.0, 1.0], 0.0), [0.0, 0.0], atol=1e-300)


def test_dist_sq_examples():
    assert dist_sq([0.0, 0.0], [3.0, 4.0]) == 25.0
    assert dist_sq([1.0], [1.0]) == 0.0


def test_dimension_mismatch_errors():
    dom = ParamDomain(np.zeros(3), 1.0)
    with pytest.raises(ValueError):
        project([1.0, 2.0], dom)
    with pytest.raises(ValueError):
        dist_sq([1.0, 2.0], [1.0, 2.0, 3.0])


def test_invalid_inputs():
    with pytest.raises(ValueError):
        ParamDomain(np.zeros(2), -1.0)
    with pytest.raises(ValueError):
        ParamDomain(np.array([np.nan, 0.0]), 1.0)
    with pytest.raises(ValueError):
        clip_norm([1.0, 2.0], -0.5)
    with pytest.raises(ValueError):
        as_vector([[1.0, 2.0]])
    with pytest.raises(ValueError):
        as_vector([])
    with pytest.raises(ValueError):
        as_vector([1.0, np.inf])


def test_as_vector_copies():
    src = np.array([1.0, 2.0])
    v = as_vector(src)
    v[0] = 99.0
    assert src[0] == 1.0
