import numpy as np
import pytest

from conftest import random_density
from finq import linalg as la
from finq.errors import InputError
from finq.finvn import (ConcreteStarAlgebra, Weight, balanced_weight, center, commutant, commutant_nullspace,
                        connes_cocycle, generated_algebra, inclusion_matrix, intersection, is_factor,
                        relative_commutant, relative_modular, spatial_derivative, tensor_mult, wedderburn,
                        weight_from_json)

PAULI_Z = np.diag([1.0, -1.0]).astype(complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)


def random_weight(rng, alg, spread=1.0):
    """Faithful weight with a random density inside ``alg``."""
    h = alg.random_element(rng, hermitian=True)
    w, v = np.linalg.eigh(h)
    q = (v * np.exp(spread * w / max(1.0, abs(w).max()))) @ v.conj().T
    # project into the algebra so the density belongs to it
    q = alg.element(alg.coords(q))
    return Weight.from_density(alg, (q + q.conj().T) / 2)


def test_commutant_examples():
    assert commutant(ConcreteStarAlgebra.scalars(2)).dim == 4
    diag = commutant(ConcreteStarAlgebra.diagonal(2))
    assert diag.dim == 2
    assert diag.same_span_residual(ConcreteStarAlgebra.diagonal(2)) <= 1e-12


def test_commutant_routes_agree():
    a = ConcreteStarAlgebra.from_blocks([1, 2, 2])
    c1, c2 = commutant(a), commutant_nullspace(a)
    # multiplicity free, so the commutant is the centre
    assert c1.dim == c2.dim == 3
    assert c1.same_span_residual(c2) <= 1e-9


def test_double_commutant_is_generated_algebra(rng):
    gens = [np.kron(rng.normal(size=(2, 2)), np.eye(2)), np.kron(np.eye(2), np.diag([1.0, 2.0]))]
    g = generated_algebra(gens, 4)
    cc = commutant(commutant(g))
    assert g.dim == 8
    assert cc.same_span_residual(g) <= 1e-9


def test_generated_algebra_examples():
    assert generated_algebra([np.eye(2)], 2).dim == 1
    m2 = generated_algebra([PAULI_Z, PAULI_X], 2)
    assert m2.dim == 4
    res = m2.closure_residuals()
    assert max(res.values()) <= 1e-12


def test_generated_algebra_skips_noise_generators():
    g = generated_algebra([PAULI_Z, 1e-14 * PAULI_X], 2)
    assert g.dim == 2


def test_center_and_factor():
    m2 = ConcreteStarAlgebra.full(2)
    assert center(m2).dim == 1 and is_factor(m2)
    d2 = ConcreteStarAlgebra.diagonal(2)
    assert center(d2).dim == 2
    assert not is_factor(ConcreteStarAlgebra.from_blocks([2, 3]))


def test_wedderburn_and_inclusion_matrix():
    a = ConcreteStarAlgebra.from_blocks([1, 1, 2])
    assert sorted(wedderburn(a).sizes) == [1, 1, 2]
    d = ConcreteStarAlgebra.diagonal(2)
    m = inclusion_matrix(d, ConcreteStarAlgebra.full(2))
    assert m.tolist() == [[1], [1]]


def test_intersection_and_relative_commutant():
    m2 = ConcreteStarAlgebra.full(2).tensor(ConcreteStarAlgebra.scalars(2))
    full = ConcreteStarAlgebra.full(4)
    rc = relative_commutant(full, m2)
    assert rc.dim == 4
    assert rc.same_span_residual(commutant(m2)) <= 1e-9
    d4 = ConcreteStarAlgebra.diagonal(4)
    assert intersection(d4, m2).dim == 2


def test_gns_examples():
    m2 = ConcreteStarAlgebra.full(2)
    tr = Weight.trace(m2)
    assert la.residual(tr.gns.nabla, np.eye(4)) <= 1e-12
    w = Weight.from_density(m2, np.diag([1.0, 2.0]))
    ev = np.sort(np.linalg.eigvalsh(w.gns.nabla))
    assert np.allclose(ev, [0.5, 1.0, 1.0, 2.0])
    c = ConcreteStarAlgebra.scalars(1)
    g = Weight(c, [1.0]).gns
    assert np.allclose(g.nabla, 1) and np.allclose(g.j.base, 1)


def test_gns_invariants_on_random_weights(rng):
    alg = ConcreteStarAlgebra.from_blocks([1, 2])
    for _ in range(5):
        th = random_weight(rng, alg, 2.0)
        res = th.gns.invariant_residuals()
        assert max(res.values()) <= 1e-9
        x, y = alg.random_element(rng), alg.random_element(rng)
        g = th.gns
        assert la.residual(g.pi(x) @ g.vec(y), g.vec(x @ y)) <= 1e-9
        assert abs(th(x.conj().T @ x) - np.vdot(g.vec(x), g.vec(x))) <= 1e-9 * max(1, abs(th(x.conj().T @ x)))


def test_non_faithful_weight_rejected():
    d2 = ConcreteStarAlgebra.diagonal(2)
    with pytest.raises(InputError):
        Weight.from_density(d2, np.diag([1.0, 0.0])).gns


def test_modular_invariance(rng):
    alg = ConcreteStarAlgebra.full(2)
    th = random_weight(rng, alg, 2.0)
    for t in (1.0, -1.0, 0.37, -0.37):
        for b in alg.basis:
            assert abs(th(th.sigma(t, b)) - th(b)) <= 1e-9


def test_connes_cocycle_examples(rng):
    alg = ConcreteStarAlgebra.full(2)
    t1, t2 = random_weight(rng, alg), random_weight(rng, alg)
    assert la.residual(connes_cocycle(t1, t1, 0.8), np.eye(2)) <= 1e-12
    assert la.residual(connes_cocycle(t2, t1, 0.0), np.eye(2)) <= 1e-12
    t, s = 0.3, -1.1
    u = lambda r: connes_cocycle(t2, t1, r)
    assert la.residual(u(t + s), u(t) @ t1.sigma(t, u(s))) <= 1e-9
    other = Weight.trace(ConcreteStarAlgebra.diagonal(2))
    with pytest.raises(InputError):
        connes_cocycle(other, t1, 1.0)


def test_relative_modular(rng):
    alg = ConcreteStarAlgebra.full(2)
    t1, t2 = random_weight(rng, alg), random_weight(rng, alg)
    _, u = relative_modular(t1, t1)
    assert la.residual(u, np.eye(4)) <= 1e-9
    j21, u = relative_modular(t2, t1)
    assert la.residual(u @ u.conj().T, np.eye(4)) <= 1e-9
    for b in alg.basis:
        assert la.residual(u @ t1.gns.pi(b) @ u.conj().T, t2.gns.pi(b)) <= 1e-9
    j12, _ = relative_modular(t1, t2)
    assert la.residual(j12, j21.adjoint()) <= 1e-9


def test_balanced_weight_recovers_cocycle(rng):
    alg = ConcreteStarAlgebra.full(2)
    t1, t2 = random_weight(rng, alg), random_weight(rng, alg)
    bw = balanced_weight(t1, t2)
    e21 = np.array([[0, 0], [1, 0]], dtype=complex)
    for t in (0.5, -1.2):
        s = bw.sigma(t, np.kron(np.eye(2), e21))
        corner = s.reshape(2, 2, 2, 2)[:, 1, :, 0]
        assert la.residual(corner, connes_cocycle(t2, t1, t)) <= 1e-9
    c = ConcreteStarAlgebra.scalars(1)
    tr = Weight(c, [1.0])
    b = balanced_weight(tr, tr)
    assert np.allclose(b.density, np.eye(2))


def test_spatial_derivative_density_example():
    d = 3
    n, nprime = ConcreteStarAlgebra.full(d), ConcreteStarAlgebra.scalars(d)
    q = np.diag([1.0, 2.0, 3.0])
    phi = Weight.from_density(n, q)
    psi = Weight(nprime, [1 / np.sqrt(d)])
    assert la.residual(spatial_derivative(phi, psi), q) <= 1e-9


def test_spatial_derivative_scalar_example():
    # the defining quadratic form gives I here; see the decisions ledger
    d = 3
    phi = Weight(ConcreteStarAlgebra.scalars(d), [1 / np.sqrt(d)])
    psi = Weight.trace(ConcreteStarAlgebra.full(d))
    assert la.residual(spatial_derivative(phi, psi), np.eye(d)) <= 1e-9


def test_spatial_derivative_tensor_oracle_and_reciprocity(rng):
    a = ConcreteStarAlgebra.full(2).tensor(ConcreteStarAlgebra.scalars(3))
    b = ConcreteStarAlgebra.scalars(2).tensor(ConcreteStarAlgebra.full(3))
    q1, q2 = random_density(rng, 2), random_density(rng, 3)
    phi = Weight.from_density(a, np.kron(q1, np.eye(3)) / 3)
    psi = Weight.from_density(b, np.kron(np.eye(2), q2) / 2)
    dpp = spatial_derivative(phi, psi)
    assert la.residual(dpp, np.kron(q1, np.linalg.inv(q2))) <= 1e-9
    assert la.residual(dpp @ spatial_derivative(psi, phi), np.eye(6)) <= 1e-9
    # its imaginary powers implement the modular group of phi
    x = np.kron(rng.normal(size=(2, 2)), np.eye(3))
    ut = la.funcalc(dpp, "power", 0.4j)
    assert la.residual(ut @ x @ ut.conj().T, phi.sigma(0.4, x)) <= 1e-9


def test_tensor_mult_matches_matrix_product(rng):
    a, b = ConcreteStarAlgebra.from_blocks([1, 2]), ConcreteStarAlgebra.full(2)
    ab = a.tensor(b)
    x, y = ab.random_element(rng), ab.random_element(rng)
    from finq.finvn import tensor_coords, tensor_element
    cx, cy = tensor_coords(x, a, b), tensor_coords(y, a, b)
    prod = tensor_mult([a.structure, b.structure], cx, cy)
    assert la.residual(tensor_element(prod, a, b), x @ y) <= 1e-12


def test_algebra_and_weight_json_round_trip():
    a = ConcreteStarAlgebra.from_blocks([1, 2], name="A")
    b = ConcreteStarAlgebra.from_json(a.to_json())
    assert np.array_equal(a.basis, b.basis)
    w = Weight.from_density(a, np.diag([1.0, 2.0, 3.0]), name="w")
    w2 = weight_from_json(w.to_json(), b)
    assert np.array_equal(w.values, w2.values)
