import numpy as np
import pytest

from finq import linalg as la
from finq import qgroup
from finq.action import (composed_weight, from_group_action, group_like_cocycle, group_likes, translation_automorphisms,
                         trivial_action)
from finq.errors import InputError
from finq.finvn import ConcreteStarAlgebra, Weight
from finq.implementation import (agrees_with_v_theta, biduality_cocycle, cocycle_change_check,
                                 implementation_checks, unitary_implementation, weight_change_check)


@pytest.mark.parametrize("action,weight", [("transl_Z2", "skew_C2"), ("ad_Z2", "density_M2"),
                                           ("trivial_S3_M2", "trace_M2"), ("delta_KP", "haar_KP")])
def test_implementation_checks(corpus, action, weight):
    impl = unitary_implementation(corpus.actions[action], corpus.weights[weight])
    rep = implementation_checks(impl, 1e-9)
    assert rep.passed, [r.check_id for r in rep.failures()]


def test_trivial_action_is_implemented_by_identity(catalog):
    m2 = ConcreteStarAlgebra.full(2)
    for name in ("CZ2", "FZ3", "KP"):
        a = trivial_action(catalog[name], m2)
        impl = unitary_implementation(a, Weight.from_density(m2, np.diag([1.0, 2.5])))
        assert la.residual(impl.U, np.eye(impl.U.shape[0])) <= 1e-9


@pytest.mark.parametrize("n", [2, 3])
def test_translation_implementation_is_permutation(n):
    # U (e_g (x) e_k) = e_g (x) e_{g^{-1} k}
    t = qgroup.cyclic_table(n)
    inv = qgroup._inverse(t)
    cn = ConcreteStarAlgebra.diagonal(n)
    a = from_group_action(t, translation_automorphisms(t), cn)
    impl = unitary_implementation(a, Weight.trace(cn))
    oracle = np.zeros((n * n, n * n))
    for g in range(n):
        for k in range(n):
            oracle[g * n + t[inv[g], k], g * n + k] = 1
    assert la.residual(impl.U, oracle) <= 1e-9


def test_weight_change(corpus):
    a = corpus.actions["ad_Z2"]
    rep = weight_change_check(a, corpus.weights["trace_M2"], corpus.weights["density_M2"], 1e-9)
    assert rep.passed, [r.check_id for r in rep.failures()]
    a = corpus.actions["transl_Z2"]
    rep = weight_change_check(a, Weight.trace(a.target), corpus.weights["skew_C2"], 1e-9)
    assert rep.passed, [r.check_id for r in rep.failures()]


def test_cocycle_change(corpus):
    a = corpus.actions["transl_Z2"]
    for u0 in group_likes(a.qg):
        c = group_like_cocycle(a, u0)
        rep = cocycle_change_check(a, c, corpus.weights["skew_C2"], 1e-9)
        assert rep.passed, [r.check_id for r in rep.failures()]


@pytest.mark.parametrize("name", ["transl_Z2", "ad_Z2", "delta_KP"])
def test_agrees_with_invariant_weight_unitary(corpus, name):
    a = corpus.actions[name]
    theta = composed_weight(Weight.trace(a.fixed_points), a)
    assert agrees_with_v_theta(a, theta) <= 1e-9


def test_agreement_rejects_non_invariant(corpus):
    with pytest.raises(InputError):
        agrees_with_v_theta(corpus.actions["transl_Z2"], corpus.weights["skew_C2"])


def test_non_faithful_weight_rejected(corpus):
    a = corpus.actions["transl_Z2"]
    with pytest.raises(InputError):
        unitary_implementation(a, Weight(a.target, [1.0, 0.0]))


def test_biduality_cocycle_is_valid(corpus):
    mu, c = biduality_cocycle(corpus.actions["transl_Z2"])
    assert c.is_valid(1e-9)
    assert mu.target.dim == 4 * 2
