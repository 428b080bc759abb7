import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hoiplan.errors import DegenerateDirection, InvalidInput
from hoiplan.landscape import (
    ParamVector,
    builtin_loss,
    evaluate_grid,
    grid_coefficients,
    landscape,
    orthogonalize,
    quadratic_loss,
    rosenbrock_loss,
    sample_direction,
)


def pv(*arrays):
    return ParamVector.from_tensors([np.asarray(a, float) for a in arrays])


def test_param_vector_round_trip():
    a, b = np.arange(6.0).reshape(2, 3), np.array([7.0, 8.0])
    w = pv(a, b)
    assert w.values.size == 8
    t = w.tensors()
    assert np.array_equal(t[0], a) and np.array_equal(t[1], b)
    with pytest.raises(InvalidInput):
        ParamVector(np.zeros(5), [(2, 2)])


def test_direction_block_norms():
    rng = np.random.default_rng(0)
    d = sample_direction(pv([3.0, 4.0]), rng)
    assert d.norm() == pytest.approx(5.0)
    d = sample_direction(pv(np.zeros(4), [1.0, 0, 0]), rng)
    assert np.array_equal(d.tensors()[0], np.zeros(4))
    w = pv([1.0, 0, 0], [0, 10.0, 0])
    d = sample_direction(w, rng)
    assert [np.linalg.norm(t) for t in d.tensors()] == pytest.approx([1.0, 10.0])


@settings(max_examples=50)
@given(seed=st.integers(0, 10**6), n=st.integers(2, 40))
def test_orthogonal_after_gram_schmidt(seed, n):
    rng = np.random.default_rng(seed)
    w0 = pv(rng.standard_normal(n), rng.standard_normal((2, 3)))
    d_x = sample_direction(w0, rng)
    d_y = orthogonalize(sample_direction(w0, rng), d_x)
    assert abs(d_x.dot(d_y)) <= 1e-10 * d_x.norm() * d_y.norm()


def test_orthogonalize_examples():
    d_x = pv([1.0, 0.0])
    assert np.array_equal(orthogonalize(pv([0.0, 2.0]), d_x).values, [0.0, 2.0])
    assert np.array_equal(orthogonalize(pv([1.0, 1.0]), d_x).values, [0.0, 1.0])
    with pytest.raises(DegenerateDirection):
        orthogonalize(d_x, d_x)
    with pytest.raises(DegenerateDirection):
        orthogonalize(d_x, pv([0.0, 0.0]))


def test_grid_coefficients():
    a = grid_coefficients(1.0, 51)
    assert a[0] == -1.0 and a[-1] == 1.0 and a[25] == 0.0
    assert np.array_equal(a, -a[::-1])
    assert np.allclose(np.diff(a), 0.04)


def test_constant_and_center():
    w0 = pv([1.0, 2.0, 3.0])
    rng = np.random.default_rng(1)
    d_x = sample_direction(w0, rng)
    d_y = orthogonalize(sample_direction(w0, rng), d_x)
    g = evaluate_grid(w0, d_x, d_y, 1.0, 5, builtin_loss("constant:2.5", w0))
    assert np.all(g.values == 2.5)
    g = evaluate_grid(w0, d_x, d_y, 1.0, 5, rosenbrock_loss)
    assert g.values[2, 2] == rosenbrock_loss(w0)


def test_quadratic_is_pythagorean():
    rng = np.random.default_rng(2)
    w0 = pv(rng.standard_normal((3, 3)), rng.standard_normal(4))
    d_x = sample_direction(w0, rng)
    d_y = orthogonalize(sample_direction(w0, rng), d_x)
    g = evaluate_grid(w0, d_x, d_y, 1.0, 11, quadratic_loss(w0))
    A, B = np.meshgrid(g.alphas, g.alphas, indexing="ij")
    expect = A**2 * d_x.dot(d_x) + B**2 * d_y.dot(d_y)
    assert np.allclose(g.values, expect, rtol=1e-10, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), steps=st.integers(2, 9))
def test_even_loss_gives_symmetric_grid(seed, steps):
    rng = np.random.default_rng(seed)
    w0 = pv(rng.standard_normal(6))
    c = w0.values.copy()
    even = lambda w: float(np.cos(np.sum(w.values - c)) + np.sum((w.values - c) ** 4))
    g = landscape(w0, even, r=0.7, steps=steps, seed=seed)
    assert np.allclose(g.values, g.values[::-1, ::-1], rtol=1e-12, atol=1e-12)


def test_non_finite_cells_become_nan():
    w0 = pv([0.0, 0.0])
    d_x, d_y = pv([1.0, 0.0]), pv([0.0, 1.0])

    def loss(w):
        x, y = w.values
        if x > 0.5:
            raise FloatingPointError("overflow")
        return 1.0 / y if y != 0 else float("inf")

    g = evaluate_grid(w0, d_x, d_y, 1.0, 3, loss)
    assert np.isnan(g.values[1, 1]) and np.isnan(g.values[2, 0])
    assert g.values[0, 0] == -1.0
    csv = g.to_csv().splitlines()
    assert csv[0] == "alpha,beta,loss"
    assert len(csv) == 10
    assert "nan" in csv[5]


def test_landscape_deterministic():
    w0 = pv(np.arange(5.0))
    a = landscape(w0, rosenbrock_loss, steps=7, seed=3)
    b = landscape(w0, rosenbrock_loss, steps=7, seed=3)
    assert np.array_equal(a.values, b.values)
    assert a.to_csv() == b.to_csv()


def test_bad_inputs():
    w0 = pv([1.0])
    with pytest.raises(InvalidInput):
        evaluate_grid(w0, w0, w0, 1.0, 1, rosenbrock_loss)
    with pytest.raises(InvalidInput):
        builtin_loss("sinkhorn", w0)
    with pytest.raises(InvalidInput):
        builtin_loss("constant:abc", w0)
