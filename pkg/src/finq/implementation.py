"""The canonical unitary implementation ``U = J~ (J^ (x) J_theta)`` of an action.

U is built only from the modular data of the dual weight, never from the
invariant-weight formula, so that comparing it with V_theta is a real test.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .action import Action, Cocycle, delta_leg1, is_invariant_weight, perturb, v_theta
from .crossed import CrossedProduct, DualWeightData, dual_weight
from .errors import InputError, TheoremViolation
from .finvn import ConcreteStarAlgebra, Weight, relative_modular
from .linalg import AntilinearOp, dag, on_legs
from .report import Report

ANCHORS = {
    "definition": "unitary-implementation/definition",
    "implements": "unitary-implementation/implements-action",
    "flip": "unitary-implementation/conjugation-flip",
    "membership": "unitary-implementation/leg-membership",
    "corep": "unitary-implementation/corepresentation",
    "weight_change": "unitary-implementation/weight-change",
    "cocycle_change": "unitary-implementation/cocycle-change",
    "invariant": "unitary-implementation/invariant-weight-agreement",
}


@dataclass
class Implementation:
    action: Action
    theta: Weight
    U: np.ndarray
    cp: CrossedProduct
    dw: DualWeightData
    provenance: dict = field(default_factory=dict)

    @property
    def h(self) -> int:
        return self.cp.h

    @property
    def k(self) -> int:
        return self.cp.k

    @property
    def conj(self) -> AntilinearOp:
        """``J^ (x) J_theta``."""
        return AntilinearOp(np.kron(self.cp.qg.dual_data.J_hat.base, self.cp.j_theta.base))

    def in_standard_form(self, c) -> np.ndarray:
        """An element of M (x) N (coordinates, original N basis) as an operator on H (x) K."""
        qg = self.cp.qg
        pk = self.theta.gns.pi_basis
        c = np.asarray(c, dtype=complex).reshape(qg.dim, len(pk))
        return np.einsum("pq,pab,qcd->acbd", c, qg.pi_basis, pk).reshape(self.h * self.k, self.h * self.k)


def unitary_implementation(a: Action, theta: Weight, tol: float | None = None, check: bool = True,
                           cp: CrossedProduct | None = None) -> Implementation:
    """``U = J~ (J^ (x) J_theta)`` on H (x) GNS(theta)."""
    tol = la.get_tol() if tol is None else tol
    if not theta.is_faithful():
        raise InputError(f"weight {theta.name!r} is not faithful")
    if cp is None or cp.theta is not theta:
        cp = CrossedProduct(a, theta)
    dw = dual_weight(cp, theta, tol=max(tol, 1e-9))
    conj = AntilinearOp(np.kron(cp.qg.dual_data.J_hat.base, cp.j_theta.base))
    u = dw.j_tilde @ conj
    impl = Implementation(a, theta, u, cp, dw, {
        "haar_gns": "orthonormal, lam = sqrtm(G^T)",
        "theta_gns": "orthonormal, lam = sqrtm(G^T)",
        "crossed_basis": f"generated, dim {cp.algebra.dim}",
    })
    if check:
        rep = implementation_checks(impl, tol)
        bad = rep.failures()
        if bad:
            worst = max(bad, key=lambda r: r.residual)
            raise TheoremViolation(f"{worst.check_id} residual {worst.residual:.2e}", worst.residual)
    return impl


def implementation_checks(impl: Implementation, tol: float | None = None, prefix=None) -> Report:
    tol = la.get_tol() if tol is None else tol
    cp = impl.cp
    pre = (prefix or f"{impl.action.name}[{impl.theta.name}]") + "."
    rep = Report(title=f"unitary implementation {impl.action.name} {impl.theta.name}")
    u, h, k = impl.U, impl.h, impl.k
    qg = cp.qg
    with rep.timed(pre + "u_unitary", ANCHORS["definition"], tol) as box:
        box["residual"] = max(la.residual(u @ dag(u), np.eye(h * k)), la.residual(dag(u) @ u, np.eye(h * k)))
    with rep.timed(pre + "u_implements_action", ANCHORS["implements"], tol) as box:
        worst = 0.0
        for j, x in enumerate(cp.nalg.basis):
            worst = max(worst, la.residual(u @ np.kron(np.eye(h), x) @ dag(u), cp.alpha_images[j]))
        box["residual"] = worst
    with rep.timed(pre + "u_conjugation_flip", ANCHORS["flip"], tol) as box:
        c = impl.conj
        box["residual"] = la.residual(u @ c, c @ dag(u))
    with rep.timed(pre + "u_leg_membership", ANCHORS["membership"], tol) as box:
        worst = 0.0
        for p in qg.pi_basis:
            y = np.kron(qg.J.sandwich(p), np.eye(k))
            worst = max(worst, la.residual(y @ u, u @ y))
        box["residual"] = worst
    with rep.timed(pre + "u_corepresentation", ANCHORS["corep"], tol) as box:
        dims = [h, h, k]
        box["residual"] = la.residual(delta_leg1(qg, u, k), on_legs(u, dims, [1, 2]) @ on_legs(u, dims, [0, 2]))
    with rep.timed(pre + "u_q_operator_trivial", ANCHORS["invariant"], tol) as box:
        box["residual"] = la.residual(qg.dual_data.nabla_hat, np.eye(h))
    return rep


def weight_change_check(a: Action, theta1: Weight, theta2: Weight, tol: float | None = None,
                        prefix=None) -> Report:
    """``U_2 = (1 (x) u) U_1 (1 (x) u^*)`` with u intertwining the standard representations."""
    tol = la.get_tol() if tol is None else tol
    pre = (prefix or f"{a.name}[{theta1.name}->{theta2.name}]") + "."
    rep = Report(title=f"weight change {a.name}")
    i1 = unitary_implementation(a, theta1, check=False)
    i2 = unitary_implementation(a, theta2, check=False)
    h = i1.h
    _, u = relative_modular(theta2, theta1)
    one_u = np.kron(np.eye(h), u)
    with rep.timed(pre + "weight_change_u", ANCHORS["weight_change"], tol) as box:
        box["residual"] = la.residual(i2.U, one_u @ i1.U @ dag(one_u))
    with rep.timed(pre + "weight_change_intertwines", ANCHORS["weight_change"], tol) as box:
        g1, g2 = theta1.gns, theta2.gns
        worst = max(la.residual(u @ p1 @ dag(u), p2) for p1, p2 in zip(g1.pi_basis, g2.pi_basis))
        # (1 (x) u) carries the crossed product of theta1's form onto theta2's
        p1 = i1.cp.products
        p2 = i2.cp.products
        n1, n2 = i1.cp.nalg, i2.cp.nalg
        m = a.qg.dim
        c1 = n1.coords(g1.pi_basis).T
        c2 = n2.coords(g2.pi_basis).T
        # products are indexed by nalg basis; rewrite both in the original N basis
        q1 = np.einsum("ijab,jl->ilab", p1.reshape(m, n1.dim, *p1.shape[1:]), c1)
        q2 = np.einsum("ijab,jl->ilab", p2.reshape(m, n2.dim, *p2.shape[1:]), c2)
        lhs = np.einsum("xa,ilab,yb->ilxy", one_u, q1, one_u.conj())
        worst = max(worst, la.residual(lhs, q2))
        box["residual"] = worst
    with rep.timed(pre + "weight_change_dual_conjugation", ANCHORS["weight_change"], tol) as box:
        # (1 (x) u) J~_1 = J~_2 (1 (x) u)
        box["residual"] = la.residual(one_u @ i1.dw.j_tilde, i2.dw.j_tilde @ one_u)
    return rep


def cocycle_change_check(a: Action, c: Cocycle, theta: Weight, tol: float | None = None,
                         prefix=None) -> Report:
    """``U_beta = V U_alpha (J^ (x) J_theta) V^* (J^ (x) J_theta)`` for ``beta = Ad V o alpha``."""
    tol = la.get_tol() if tol is None else tol
    pre = (prefix or f"{a.name}[{c.name}]") + "."
    rep = Report(title=f"cocycle change {a.name} {c.name}")
    beta = perturb(a, c)
    ia = unitary_implementation(a, theta, check=False)
    ib = unitary_implementation(beta, theta, check=False)
    v = ia.in_standard_form(c.u)
    cj = ia.conj
    with rep.timed(pre + "cocycle_change_formula", ANCHORS["cocycle_change"], tol) as box:
        rhs = v @ ia.U @ (cj @ dag(v) @ cj)
        box["residual"] = la.residual(ib.U, rhs)
    h, k = ia.h, ia.k
    dims = [h, h, k]
    for tag, impl in (("alpha", ia), ("beta", ib)):
        with rep.timed(pre + f"cocycle_change_corep_{tag}", ANCHORS["corep"], tol) as box:
            u = impl.U
            box["residual"] = la.residual(delta_leg1(a.qg, u, k),
                                          on_legs(u, dims, [1, 2]) @ on_legs(u, dims, [0, 2]))
    return rep


def agrees_with_v_theta(a: Action, theta: Weight, tol: float | None = None) -> float:
    """Residual of ``U = V_theta`` for an invariant weight."""
    ok, r = is_invariant_weight(theta, a, tol)
    if not ok:
        raise InputError(f"weight {theta.name!r} is not invariant (residual {r:.2e})")
    impl = unitary_implementation(a, theta, check=False)
    return la.residual(impl.U, v_theta(a, theta))


def biduality_cocycle(a: Action, name=None):
    """The action ``mu = (sigma (x) id)(id (x) alpha)`` of M on B(H) (x) N and its cocycle
    ``Sigma V^* Sigma (x) 1``."""
    qg = a.qg
    h = qg.pi_basis.shape[1]
    bh = ConcreteStarAlgebra.full(h)
    target = bh.tensor(a.target, name=f"B(H)(x){a.target.name}")
    # mu(e_ab (x) x) = sum_{p,q} alpha[p q, x] b_p (x) e_ab (x) n_q
    m, n = a.m, a.n
    a3 = a.alpha.reshape(m, n, n)
    e = np.eye(h * h)
    cols = []
    for ab in range(h * h):
        for x in range(n):
            c = np.einsum("pq,r->prq", a3[:, :, x], e[ab]).reshape(-1)
            cols.append(c)
    mu = Action(qg, target, np.array(cols).T, name=name or f"mu({a.name})")
    sig = la.flip(h, h)
    x = sig @ dag(qg.V) @ sig
    # coordinates of X (x) 1 on the basis b_p (x) e_ab (x) n_q
    x4 = x.reshape(h, h, h, h)
    pb = qg.pi_basis
    mcoef = np.einsum("pij,iajb->pab", pb.conj(), x4)
    # pi_basis is orthonormal for the trace, so these are exact coordinates
    coords = np.einsum("pab,q->pabq", mcoef, a.target.unit_coords).reshape(-1)
    return mu, Cocycle(mu, coords, name="bidual_cocycle")
