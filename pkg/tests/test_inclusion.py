import numpy as np
import pytest

from finq.action import group_like_cocycle, group_likes, trivial_action
from finq.crossed import CrossedProduct
from finq.errors import InputError
from finq.finvn import ConcreteStarAlgebra, Weight
from finq.inclusion import (basic_construction, basic_construction_generation_check, cocycle_surjection_check,
                            default_mu_nu, depth2_check, depth2_to_json, dual_action_witness, inclusion_checks,
                            jones_tower, outer_minimal_logic, predicates, regularity_witness, rho_checks,
                            rho_homomorphism, second_ovw_spatial_derivative_check, semidual_check)


@pytest.mark.parametrize("n0,dim", [(ConcreteStarAlgebra.scalars(2), 16), (ConcreteStarAlgebra.full(2), 4),
                                    (ConcreteStarAlgebra.diagonal(2), 8)])
def test_basic_construction_dimensions(n0, dim):
    m2 = ConcreteStarAlgebra.full(2)
    n2 = basic_construction(n0, m2, Weight.trace(m2))
    assert n2.dim == dim
    assert max(n2.closure_residuals().values()) <= 1e-12


def test_basic_construction_transposes_inclusion_matrix():
    tw = jones_tower(ConcreteStarAlgebra.diagonal(2), ConcreteStarAlgebra.full(2))
    l01, l12 = tw.inclusion_matrices
    assert l01.tolist() == [[1], [1]]
    assert l12.tolist() == l01.T.tolist()


def test_basic_construction_rejects_bad_input():
    m2 = ConcreteStarAlgebra.full(2)
    with pytest.raises(InputError):
        basic_construction(ConcreteStarAlgebra.full(2), ConcreteStarAlgebra.diagonal(2),
                           Weight.trace(ConcreteStarAlgebra.diagonal(2)))
    with pytest.raises(InputError):
        basic_construction(ConcreteStarAlgebra.scalars(2), m2, Weight.from_density(m2, np.diag([1.0, 0.0])))


@pytest.mark.parametrize("action,weight", [("transl_Z2", "skew_C2"), ("ad_Z2", "density_M2"),
                                           ("delta_KP", "haar_KP")])
def test_basic_construction_generated_by_n_and_implementation(corpus, action, weight):
    assert basic_construction_generation_check(corpus.actions[action], corpus.weights[weight]) <= 1e-9


def test_rho_faithful_for_translation(corpus):
    rho = rho_homomorphism(corpus.actions["transl_Z2"])
    assert rho.faithful
    rep = rho_checks(rho, 1e-9)
    assert rep.passed, [r.check_id for r in rep.failures()]


def test_rho_kernel_for_trivial_action(corpus):
    a = corpus.actions["trivial_S3_M2"]
    rho = rho_homomorphism(a)
    # M^ (x) N has dimension 24 and N2 = pi(N)' has dimension 4
    assert rho.n2.dim == 4
    assert rho.kernel.shape[1] == 24 - 4
    assert not rho.faithful
    rep = rho_checks(rho, 1e-9)
    assert rep.passed, [r.check_id for r in rep.failures()]


def test_rho_rejects_foreign_crossed_product(corpus):
    a = corpus.actions["transl_Z2"]
    with pytest.raises(InputError):
        rho_homomorphism(a, cp=CrossedProduct(a, corpus.weights["skew_C2"]))


def test_cocycle_surjection(corpus):
    a = corpus.actions["transl_Z2"]
    for u0 in group_likes(a.qg):
        rep = cocycle_surjection_check(a, group_like_cocycle(a, u0), tol=1e-9)
        assert rep.passed, [r.check_id for r in rep.failures()]


def test_semidual_dual_action_witness(corpus):
    cp = CrossedProduct(corpus.actions["transl_Z2"])
    res = semidual_check(cp.dual_action, dual_action_witness(cp))
    assert res.flag and res.residual <= 1e-9


def test_semidual_negative_and_trivial(catalog):
    # a nontrivial quantum group cannot act semidually on C
    res = semidual_check(trivial_action(catalog["FZ2"], ConcreteStarAlgebra.scalars(1)))
    assert not res.flag
    res = semidual_check(trivial_action(catalog["trivial"], ConcreteStarAlgebra.full(2)))
    assert res.flag


def test_semidual_search_finds_unitary_for_translation(corpus):
    # C(G) acting on C(G) by translation is itself a dual action
    res = semidual_check(corpus.actions["transl_Z2"])
    assert res.flag and res.solution_dim > 0


def test_predicates(corpus, catalog):
    p = predicates(trivial_action(catalog["trivial"], ConcreteStarAlgebra.scalars(1)))
    assert p.outer and p.minimal
    p = predicates(corpus.actions["transl_Z2"])
    assert not p.outer and not p.minimal
    assert p.relative_commutant_dim == 2 and p.center_residual <= 1e-9
    rep = outer_minimal_logic([corpus.actions["transl_Z2"], corpus.actions["ad_Z2"]], 1e-9)
    assert rep.passed


def test_depth2_examples(corpus):
    res = depth2_check(ConcreteStarAlgebra.scalars(2), ConcreteStarAlgebra.diagonal(2))
    assert res.flag and res.model_matches and res.numeric_third_level
    cp = CrossedProduct(corpus.actions["delta_KP"])
    res = depth2_check(ConcreteStarAlgebra.from_span(cp.alpha_images), cp.algebra)
    assert res.flag and res.model_matches
    js = depth2_to_json(res)
    assert js["depth2"] is True and "A_B" in js["inclusion_matrices"]


def test_depth2_negative_example():
    # C[S2] inside C[S3] has depth 3
    a = ConcreteStarAlgebra.from_blocks([1, 1, 2])
    p = np.diag([1.0, 0.0, 1.0, 0.0]).astype(complex)
    n0 = ConcreteStarAlgebra.from_span(np.array([p, np.eye(4) - p]))
    res = depth2_check(n0, a)
    assert res.matrices["N0_N1"].tolist() == [[1, 0, 1], [0, 1, 1]]
    assert not res.flag and res.model_matches


def test_second_ovw_spatial_derivative(corpus):
    a = corpus.actions["transl_Z2"]
    rho = rho_homomorphism(a)
    for mu, nu in default_mu_nu(a):
        assert second_ovw_spatial_derivative_check(a, mu, nu, rho) <= 1e-7
    assert regularity_witness(rho) <= 1e-9


def test_inclusion_checks_suite(corpus):
    rep = inclusion_checks(corpus.actions["ad_Z2"], corpus.weights["density_M2"], 1e-9)
    assert rep.passed, [r.check_id for r in rep.failures()]
    assert all(r.paper_anchor for r in rep.records)
