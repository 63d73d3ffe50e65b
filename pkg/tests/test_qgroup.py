import numpy as np
import pytest

from finq import linalg as la
from finq import qgroup
from finq.action import group_likes
from finq.errors import InputError
from finq.qgroup import (FiniteQuantumGroup, dual_checks, dual_gns_map_check, find_isomorphism, pentagon_residual,
                         recover_from_pairings, pairings_from_vector, qgroup_from_json, slice_gns_map_check,
                         validate)

NAMES = ["trivial", "CZ2", "CZ3", "CS3", "FZ2", "FZ3", "FS3", "KP"]


@pytest.mark.parametrize("name", NAMES)
def test_catalog_validates(catalog, name):
    rep = validate(catalog[name], 1e-9)
    assert rep.passed, [r.check_id for r in rep.failures()]
    assert rep[f"{name}.pentagon"].residual <= 1e-9


@pytest.mark.parametrize("name", NAMES)
def test_catalog_dual_checks(catalog, name):
    rep = dual_checks(catalog[name], 1e-9)
    assert rep.passed, [r.check_id for r in rep.failures()]
    assert catalog[name].dual().dim == catalog[name].dim


def test_trivial_residuals_vanish(catalog):
    rep = validate(catalog["trivial"])
    assert max(r.residual for r in rep.records) <= 1e-15
    assert np.allclose(catalog["trivial"].W, 1)
    assert np.allclose(catalog["trivial"].V, 1)


def test_corrupted_delta_breaks_coassociativity(catalog):
    q = catalog["FZ2"]
    d = q.delta.copy()
    d[1, 0] += 1e-3
    bad = FiniteQuantumGroup(q.algebra, d, q.counit, q.antipode, q.haar, "bad")
    rep = validate(bad)
    assert rep["bad.coassociativity"].residual > 1e-9
    assert not rep.passed


def test_group_algebra_structure(catalog):
    q = catalog["CZ2"]
    assert q.is_cocommutative() <= 1e-12
    gl = group_likes(q)
    assert len(gl) == 2
    for u in gl:
        # S(lambda_g) = lambda_g^{-1} = lambda_g for Z2
        assert la.residual(q.antipode @ u, u) <= 1e-12


def test_function_algebra_s3_not_cocommutative(catalog):
    q = catalog["FS3"]
    assert q.is_commutative() <= 1e-12
    assert q.is_cocommutative() > 1e-3


def test_kac_paljutkin_shape(catalog):
    kp = catalog["KP"]
    assert kp.dim == 8
    assert sorted(kp.algebra.blocks.sizes) == [1, 1, 1, 1, 2]
    assert kp.is_commutative() > 1e-3 and kp.is_cocommutative() > 1e-3


def test_haar_oracles(catalog):
    # C(G): uniform measure
    fs3 = catalog["FS3"]
    assert np.allclose(fs3.haar(np.eye(6)), 1)
    for b in fs3.algebra.basis:
        assert abs(fs3.haar(b) - np.trace(b) / 6) <= 1e-12
    # C[G]: Kronecker delta at the identity, seen on the group-likes
    cs3 = catalog["CS3"]
    vals = sorted(abs(cs3.haar.on_coords(u)) for u in group_likes(cs3))
    # the group-likes of C[S3] are the six translations; only the identity has weight 1
    assert np.allclose(vals, [0, 0, 0, 0, 0, 1])
    assert np.allclose(catalog["trivial"].haar.values, catalog["trivial"].counit)


def test_w_of_function_algebra_is_translation(catalog):
    t = qgroup.symmetric3_table()
    q = catalog["FS3"]
    w = q.W
    n = 6
    oracle = np.zeros((n * n, n * n))
    for g in range(n):
        for k in range(n):
            oracle[g * n + t[g, k], g * n + k] = 1
    assert la.residual(w, oracle) <= 1e-12
    assert np.allclose(w.imag, 0)
    assert pentagon_residual(catalog["FZ2"].W) <= 1e-12
    assert pentagon_residual(catalog["FZ2"].V) <= 1e-12
    assert pentagon_residual(catalog["CZ2"].W) <= 1e-12


def test_w_implements_comultiplication(catalog):
    q = catalog["KP"]
    h = q.pi_basis.shape[1]
    for p, b in enumerate(q.pi_basis):
        d3 = q.delta[:, p].reshape(q.dim, q.dim)
        lhs = np.einsum("qr,qab,rcd->acbd", d3, q.pi_basis, q.pi_basis).reshape(h * h, h * h)
        rhs = q.W.conj().T @ np.kron(np.eye(h), b) @ q.W
        assert la.residual(lhs, rhs) <= 1e-9


def test_v_from_w_relation(catalog):
    for name in ("FS3", "KP"):
        q = catalog[name]
        h = q.pi_basis.shape[1]
        jj = la.AntilinearOp(np.kron(q.dual_data.J_hat.base, q.dual_data.J_hat.base))
        sig = la.flip(h, h)
        assert la.residual(q.V, jj.sandwich(sig @ q.W.conj().T @ sig)) <= 1e-9


def test_j_and_jhat_commute(catalog):
    q = catalog["KP"]
    assert la.residual(q.dual_data.J_hat @ q.J, q.J @ q.dual_data.J_hat) <= 1e-9


@pytest.mark.parametrize("a,b", [("CZ2", "FZ2"), ("CZ3", "FZ3"), ("CS3", "FS3"), ("KP", "KP")])
def test_duality_isomorphisms(catalog, a, b):
    res = find_isomorphism(catalog[a].dual(), catalog[b])
    assert res.identified and res.residual <= 1e-8


def test_non_isomorphic_pair_not_identified(catalog):
    res = find_isomorphism(catalog["CS3"], catalog["FS3"])
    assert not res.identified


def test_bidual_matches_commutant_of_opposite_dual(catalog):
    q = catalog["CS3"]
    lhs = qgroup.opposite(q).dual()
    rhs = qgroup.commutant_qg(q.dual())
    assert find_isomorphism(lhs, rhs).identified


def test_dual_gns_map_examples(catalog, rng):
    triv = catalog["trivial"]
    assert dual_gns_map_check(triv, [1.0], triv.algebra.unit_coords) <= 1e-15
    fz2 = catalog["FZ2"]
    for _ in range(3):
        xi = rng.normal(size=2) + 1j * rng.normal(size=2)
        b = rng.normal(size=2) + 1j * rng.normal(size=2)
        assert dual_gns_map_check(fz2, xi, b) <= 1e-9
    cz2 = catalog["CZ2"]
    for xi in np.eye(2):
        for b in np.eye(2):
            assert dual_gns_map_check(cz2, xi, b) <= 1e-9


def test_slice_gns_map_examples(catalog, rng):
    q = catalog["FZ2"]
    xi, eta = rng.normal(size=2), rng.normal(size=2)
    assert slice_gns_map_check(q, q.algebra.unit_coords, xi, eta) <= 1e-12
    for _ in range(3):
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        xi, eta = rng.normal(size=2) + 1j * rng.normal(size=2), rng.normal(size=2) + 1j * rng.normal(size=2)
        assert slice_gns_map_check(q, a, xi, eta) <= 1e-9
    kp = catalog["KP"]
    a = rng.normal(size=8)
    h = kp.pi_basis.shape[1]
    assert slice_gns_map_check(kp, a, rng.normal(size=h), rng.normal(size=h)) <= 1e-9


def test_recover_from_pairings(catalog, rng):
    q = catalog["CS3"]
    x0 = rng.normal(size=6) + 1j * rng.normal(size=6)
    eta = q.gns.lam @ x0
    x = recover_from_pairings(q, pairings_from_vector(q, eta))
    assert la.residual(x, x0) <= 1e-9
    # repeat a functional with a different value
    bad = pairings_from_vector(q, eta)
    bad = bad + [(bad[0][0], bad[0][1] + 1.0)]
    with pytest.raises(InputError):
        recover_from_pairings(q, bad)


def test_invalid_group_table():
    with pytest.raises(InputError):
        qgroup.function_algebra(np.array([[0, 1], [0, 1]]))


def test_quantum_group_json_round_trip(catalog):
    q = catalog["KP"]
    q2 = qgroup_from_json(q.to_json())
    assert np.array_equal(q.delta, q2.delta)
    assert validate(q2).passed
