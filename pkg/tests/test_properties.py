"""Property tests: identities that must hold for every input, drawn by hypothesis."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density
from finq import linalg as la
from finq.finvn import (ConcreteStarAlgebra, Weight, connes_cocycle, generated_algebra, tensor_coords,
                        tensor_element, tensor_mult)

seeds = st.integers(0, 2**32 - 1)
small = st.integers(1, 3)
SETTINGS = settings(max_examples=25, deadline=None)


def _cmat(rng, a, b=None):
    b = a if b is None else b
    return rng.normal(size=(a, b)) + 1j * rng.normal(size=(a, b))


def _algebra(rng):
    sizes = list(rng.integers(1, 3, size=rng.integers(1, 3)))
    return ConcreteStarAlgebra.from_blocks([int(s) for s in sizes])


def _weight(rng, alg, spread=2.0):
    h = alg.random_element(rng, hermitian=True)
    w, v = np.linalg.eigh(h)
    q = (v * np.exp(spread * w / max(1.0, abs(w).max()))) @ v.conj().T
    q = alg.element(alg.coords(q))
    return Weight.from_density(alg, (q + q.conj().T) / 2)


@SETTINGS
@given(seeds, small, small, small)
def test_kron_is_associative(seed, a, b, c):
    rng = np.random.default_rng(seed)
    x, y, z = _cmat(rng, a), _cmat(rng, b), _cmat(rng, c)
    assert la.residual(np.kron(np.kron(x, y), z), np.kron(x, np.kron(y, z))) <= 1e-12


@SETTINGS
@given(seeds, small, small)
def test_flip_is_unitary_and_swaps(seed, a, b):
    rng = np.random.default_rng(seed)
    s = la.flip(a, b)
    assert la.residual(s @ s.conj().T, np.eye(a * b)) <= 1e-15
    x, y = _cmat(rng, a), _cmat(rng, b)
    assert la.residual(s @ np.kron(x, y) @ s.conj().T, np.kron(y, x)) <= 1e-12


@SETTINGS
@given(seeds, st.integers(1, 5), st.floats(-3, 3))
def test_funcalc_power_group_law(seed, d, t):
    rng = np.random.default_rng(seed)
    q = random_density(rng, d, 3.0)
    assert la.residual(la.funcalc(q, "power", 0), np.eye(d)) <= 1e-12
    assert la.residual(la.funcalc(q, "power", 1), q) <= 1e-12
    u = la.funcalc(q, "power", 1j * t)
    assert la.residual(u @ la.funcalc(q, "power", -1j * t), np.eye(d)) <= 1e-11


@SETTINGS
@given(seeds, st.integers(1, 4))
def test_polar_antilinear_round_trip(seed, d):
    rng = np.random.default_rng(seed)
    s = la.AntilinearOp(_cmat(rng, d) + 3 * np.eye(d))
    j, nab = la.polar_antilinear(s)
    assert la.residual(j @ la.funcalc(nab, "power", 0.5), s) <= 1e-10 * max(1.0, la.fnorm(s.base))
    assert la.residual(j @ j.adjoint(), np.eye(d)) <= 1e-10


@SETTINGS
@given(seeds)
def test_tensor_mult_is_associative_and_matches_matrices(seed):
    rng = np.random.default_rng(seed)
    a, b = _algebra(rng), _algebra(rng)
    ab = a.tensor(b)
    xs = [ab.random_element(rng) for _ in range(3)]
    cs = [tensor_coords(x, a, b) for x in xs]
    st_ = [a.structure, b.structure]
    left = tensor_mult(st_, tensor_mult(st_, cs[0], cs[1]), cs[2])
    right = tensor_mult(st_, cs[0], tensor_mult(st_, cs[1], cs[2]))
    assert la.residual(left, right) <= 1e-10
    assert la.residual(tensor_element(left, a, b), xs[0] @ xs[1] @ xs[2]) <= 1e-10


@SETTINGS
@given(seeds, st.floats(-2, 2), st.floats(-2, 2))
def test_connes_cocycle_identity(seed, t, s):
    rng = np.random.default_rng(seed)
    alg = _algebra(rng)
    t1, t2 = _weight(rng, alg), _weight(rng, alg)
    u = lambda r: connes_cocycle(t2, t1, r)  # noqa: E731
    assert la.residual(u(t + s), u(t) @ t1.sigma(t, u(s))) <= 1e-9
    assert la.residual(u(t) @ u(t).conj().T, np.eye(alg.d)) <= 1e-10


@SETTINGS
@given(seeds)
def test_gns_round_trip(seed):
    rng = np.random.default_rng(seed)
    alg = _algebra(rng)
    th = _weight(rng, alg)
    g = th.gns
    x, y = alg.random_element(rng), alg.random_element(rng)
    assert la.residual(g.unvec(g.vec(x)), x) <= 1e-9
    assert abs(np.vdot(g.vec(y), g.vec(x)) - th(y.conj().T @ x)) <= 1e-9 * max(1.0, la.fnorm(x) * la.fnorm(y))
    assert la.residual(g.j(g.j(g.vec(x))), g.vec(x)) <= 1e-9


@SETTINGS
@given(seeds)
def test_generated_algebra_ignores_generator_order(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 4))
    gens = [_cmat(rng, d) * (rng.random(size=(d, d)) < 0.4) for _ in range(3)]
    g1 = generated_algebra(gens, d)
    g2 = generated_algebra(gens[::-1], d)
    assert g1.dim == g2.dim
    assert g1.same_span_residual(g2) <= 1e-9
