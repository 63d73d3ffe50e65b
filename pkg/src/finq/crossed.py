"""Crossed products, the dual action, biduality and dual weights.

The crossed product lives on H (x) K where H is the GNS space of the Haar
state and K carries N.  With ``theta`` given, K is the GNS space of theta
and the crossed product is in standard form for the dual weight: there
``Lambda~((a (x) 1) alpha(x)) = Lambda^(a) (x) Lambda_theta(x)`` and the
crossed product acts on H (x) K by matrix multiplication.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg as la
from .action import Action, fixed_point_algebra, invariance_residual
from .errors import InputError, StructureError, TheoremViolation
from .finvn import (ConcreteStarAlgebra, Weight, connes_cocycle, generated_algebra, tensor_coords,
                    tensor_element, tensor_membership)
from .linalg import AntilinearOp, dag, fnorm, on_legs
from .qgroup import FiniteQuantumGroup, opposite
from .report import Report

ANCHORS = {
    "crossed": "crossed-product/definition",
    "dual_action": "crossed-product/dual-action",
    "bidual": "crossed-product/biduality",
    "fixed": "crossed-product/fixed-point-duality",
    "dual_weight": "dual-weight/definition",
    "product_formula": "dual-weight/product-formula",
    "modular": "dual-weight/modular-data",
}


def clock_shift(h: int):
    """Two generators of B(C^h)."""
    w = np.exp(2j * np.pi / h)
    clock = np.diag(w ** np.arange(h))
    shift = np.roll(np.eye(h), 1, axis=0)
    return clock.astype(complex), shift.astype(complex)


class CrossedProduct:
    """``M x_alpha N = (alpha(N) u M^ (x) C)''`` on H (x) K."""

    def __init__(self, action: Action, theta: Weight | None = None, name=None):
        self.source = action
        self.theta = theta
        if theta is not None:
            if theta.algebra is not action.target and theta.algebra.same_span_residual(action.target) > la.get_tol():
                raise InputError("theta must be a weight on the acted-upon algebra")
            g = theta.gns
            nalg = ConcreteStarAlgebra.from_span(g.pi_basis, name=f"pi({action.target.name})")
            p = nalg.coords(g.pi_basis).T
            self.transport = p
            self.action = action.transported(p, nalg)
            self.theta_std = Weight(nalg, theta.values @ np.linalg.inv(p), theta.name)
            # GNS map and modular conjugation of theta, read on K itself
            self.lam_theta = g.lam @ np.linalg.inv(p)
            self.j_theta = g.j
        else:
            self.transport = np.eye(action.n)
            self.action = action
            self.theta_std = None
            self.lam_theta = None
            self.j_theta = None
        self.name = name or f"cp({action.name})"
        self.qg = action.qg
        self.nalg = self.action.target
        self.h = self.qg.pi_basis.shape[1]
        self.k = self.nalg.d

    def __repr__(self):
        return f"CrossedProduct({self.name!r}, dim={self.algebra.dim}, ambient={self.h * self.k})"

    @cached_property
    def alpha_images(self) -> np.ndarray:
        return self.action.images()

    @cached_property
    def dual_images(self) -> np.ndarray:
        mhat = self.qg.dual_data.algebra
        return np.array([np.kron(b, np.eye(self.k)) for b in mhat.basis])

    @cached_property
    def products(self) -> np.ndarray:
        """``(a_i (x) 1) alpha(x_j)`` with i slow."""
        return np.einsum("iab,jbc->ijac", self.dual_images, self.alpha_images).reshape(
            -1, self.h * self.k, self.h * self.k)

    @cached_property
    def algebra(self) -> ConcreteStarAlgebra:
        gens = list(self.alpha_images) + list(self.dual_images)
        alg = generated_algebra(gens, self.h * self.k, name=self.name)
        want = self.qg.dim * self.action.n
        if alg.dim < want:
            raise StructureError(f"crossed product has dimension {alg.dim} < {want}")
        return alg

    @cached_property
    def w_tilde(self) -> np.ndarray:
        qg = self.qg
        jj = AntilinearOp(np.kron(qg.J.base, qg.J.base))
        sig = la.flip(self.h, self.h)
        return jj.sandwich(sig @ qg.W @ sig)

    def dual_action_concrete(self, z) -> np.ndarray:
        """``(W~ (x) 1)(1 (x) z)(W~^* (x) 1)`` on H (x) H (x) K."""
        return conj_head(self.w_tilde, np.kron(np.eye(self.h), z), self.k)

    @cached_property
    def dual_qg(self) -> FiniteQuantumGroup:
        return opposite(self.qg.dual(), name=f"op(dual({self.qg.name}))")

    @cached_property
    def dual_action(self) -> Action:
        return dual_action(self)

    @cached_property
    def alpha_coords(self) -> np.ndarray:
        """alpha(N) inside the crossed product, as a (dim, n) coordinate matrix."""
        return self.algebra.coords(self.alpha_images).T

    def alpha_inverse(self, c) -> tuple:
        """Pre-image under alpha of crossed product coordinates, with range residual."""
        x, *_ = np.linalg.lstsq(self.alpha_coords, c, rcond=None)
        return x, la.residual(self.alpha_coords @ x, c)


def crossed_product(a: Action, theta: Weight | None = None, name=None) -> CrossedProduct:
    return CrossedProduct(a, theta, name)


def dual_action(cp: CrossedProduct) -> Action:
    """The dual action as an action of the opposite dual on the crossed product."""
    mhat = cp.qg.dual_data.algebra
    alg = cp.algebra
    cols = []
    for z in alg.basis:
        img = cp.dual_action_concrete(z)
        cols.append(tensor_coords(img, mhat, alg))
    return Action(cp.dual_qg, alg, np.array(cols).T, name=f"dual({cp.source.name})")


def crossed_checks(cp: CrossedProduct, tol: float | None = None, prefix=None, seed: int = 0) -> Report:
    tol = la.get_tol() if tol is None else tol
    pre = (prefix or cp.name) + "."
    rep = Report(title=f"crossed product {cp.name}")
    alg = cp.algebra
    with rep.timed(pre + "dimension", ANCHORS["crossed"], 0.5) as box:
        box["residual"] = abs(alg.dim - cp.qg.dim * cp.action.n)
        box["note"] = f"dim={alg.dim}"
    with rep.timed(pre + "spanned_by_products", ANCHORS["crossed"], tol) as box:
        prod = ConcreteStarAlgebra.from_span(cp.products)
        box["residual"] = alg.same_span_residual(prod)
    with rep.timed(pre + "generation_order", ANCHORS["crossed"], tol) as box:
        rng = np.random.default_rng(seed)
        gens = list(cp.alpha_images) + list(cp.dual_images)
        order = rng.permutation(len(gens))
        alt = generated_algebra([gens[i] for i in order], cp.h * cp.k)
        box["residual"] = alg.same_span_residual(alt)
    with rep.timed(pre + "embeddings_injective", ANCHORS["crossed"], tol) as box:
        s1 = np.linalg.svd(cp.alpha_coords, compute_uv=False)
        s2 = np.linalg.svd(alg.coords(cp.dual_images).T, compute_uv=False)
        box["residual"] = 0.0 if min(s1.min() / s1.max(), s2.min() / s2.max()) > tol else 1.0
    da = cp.dual_action
    mhat = cp.qg.dual_data.algebra
    with rep.timed(pre + "dual_action_in_tensor", ANCHORS["dual_action"], tol) as box:
        worst = 0.0
        for z in alg.basis[: min(alg.dim, 16)]:
            worst = max(worst, tensor_membership(cp.dual_action_concrete(z), mhat, alg))
        box["residual"] = worst
    with rep.timed(pre + "dual_action_on_alpha", ANCHORS["dual_action"], tol) as box:
        worst = 0.0
        for z in cp.alpha_images:
            worst = max(worst, la.residual(cp.dual_action_concrete(z), np.kron(np.eye(cp.h), z)))
        box["residual"] = worst
    with rep.timed(pre + "dual_action_on_dual", ANCHORS["dual_action"], tol) as box:
        q1 = cp.dual_qg
        worst = 0.0
        for k, b in enumerate(mhat.basis):
            lhs = cp.dual_action_concrete(cp.dual_images[k])
            dop = tensor_element(q1.delta[:, k], mhat, mhat)
            worst = max(worst, la.residual(lhs, np.kron(dop, np.eye(cp.k))))
        box["residual"] = worst
    from .action import validate_action
    rep.extend(validate_action(da, tol, prefix=pre + "dual_action"))
    return rep


def fixed_point_duality_check(cp: CrossedProduct, tol: float | None = None, prefix=None) -> Report:
    """Fixed points of the dual action are alpha(N), and alpha(N) is cut out by the coaction identity."""
    tol = la.get_tol() if tol is None else tol
    pre = (prefix or cp.name) + "."
    rep = Report(title=f"fixed points {cp.name}")
    fix = cp.dual_action.fixed_points
    an = ConcreteStarAlgebra.from_span(cp.alpha_images)
    with rep.timed(pre + "dual_fixed_points_dim", ANCHORS["fixed"], 0.5) as box:
        box["residual"] = abs(fix.dim - an.dim)
    with rep.timed(pre + "dual_fixed_points_span", ANCHORS["fixed"], tol) as box:
        box["residual"] = fix.same_span_residual(an)
    a = cp.action
    m, n = a.m, a.n
    lhs = np.kron(np.eye(m), a.alpha) - np.kron(a.qg.delta, np.eye(n))
    ns = la.null_space(lhs, rtol=1e-10, atol=1e-10 * max(1.0, np.linalg.norm(a.alpha, 2)))
    rng = la.orth(a.alpha)
    with rep.timed(pre + "coaction_solutions_dim", ANCHORS["fixed"], 0.5) as box:
        box["residual"] = abs(ns.shape[1] - rng.shape[1])
    with rep.timed(pre + "coaction_solutions_span", ANCHORS["fixed"], tol) as box:
        if ns.shape[1] != rng.shape[1]:
            box["residual"] = 1.0
        else:
            box["residual"] = la.residual(ns @ dag(ns), rng @ dag(rng))
    return rep


# -- biduality ------------------------------------------------------------------

def _nv(z, nalg: ConcreteStarAlgebra, d: int) -> np.ndarray:
    """Write an operator on C^d (x) K as sum_q T_q (x) n_q; returns T with shape (n, d, d)."""
    z4 = np.asarray(z).reshape(d, nalg.d, d, nalg.d)
    return np.einsum("aibj,qij->qab", z4, nalg.basis.conj())


def _nv_alpha(t, a: Action) -> np.ndarray:
    """``(id (x) alpha)`` on an N-valued operator: appends one H leg."""
    a3 = a.alpha.reshape(a.m, a.n, a.n)
    pb = a.qg.pi_basis
    d, h = t.shape[1], pb.shape[1]
    out = np.einsum("prq,qab,pcd->racbd", a3, t, pb, optimize=True)
    return out.reshape(a.n, d * h, d * h)


def _conj(u, t) -> np.ndarray:
    return u @ t @ dag(u)


def conj_head(u, t, tail: int) -> np.ndarray:
    """``(u (x) 1) t (u (x) 1)^*`` with a trailing identity of size ``tail``; t may be a stack."""
    d = u.shape[0]
    s = t.shape[:-2]
    x = u @ t.reshape(*s, d, tail * d * tail)
    out = u.conj() @ x.reshape(*s, d * tail, d, tail)
    return out.reshape(t.shape)


def conj_tail(u, t, head: int) -> np.ndarray:
    """``(1 (x) u) t (1 (x) u)^*`` with a leading identity of size ``head``."""
    d = u.shape[0]
    s = t.shape[:-2]
    x = u @ t.reshape(*s, head, d, head * d)
    out = x.reshape(*s, head * d * head, d) @ dag(u)
    return out.reshape(t.shape)


def _transport_to_h(q1: FiniteQuantumGroup, qg: FiniteQuantumGroup) -> np.ndarray:
    """Unitary from the GNS space of the opposite dual onto H."""
    dd = qg.dual_data
    c = dd.haar_hat.on_coords(dd.algebra.unit_coords).real
    return dd.lam_hat @ q1.gns.lam_inv / np.sqrt(c)


@dataclass
class BidualityCertificate:
    report: Report

    @property
    def passed(self) -> bool:
        return self.report.passed


def biduality(cp: CrossedProduct, tol: float | None = None, prefix=None) -> BidualityCertificate:
    tol = la.get_tol() if tol is None else tol
    pre = (prefix or cp.name) + "."
    rep = Report(title=f"biduality {cp.name}")
    qg, a, nalg = cp.qg, cp.action, cp.nalg
    h, k, n = cp.h, cp.k, a.n
    w = qg.W
    jm = qg.J
    mprime = np.array([jm.sandwich(p) for p in qg.pi_basis])
    mhat = qg.dual_data.algebra
    cs = clock_shift(h)

    with rep.timed(pre + "bidual_generation", ANCHORS["bidual"], tol) as box:
        # with B(H) (x) 1 present the generated algebra is B(H) (x) A, A generated by the slices
        x4 = cp.alpha_images.reshape(-1, h, k, h, k)
        sl = x4.transpose(0, 1, 3, 2, 4).reshape(-1, k, k)
        gen = generated_algebra(list(sl), k)
        box["residual"] = gen.same_span_residual(nalg)
        box["note"] = f"dim={gen.dim}"

    def phi_nv(z):
        t = _nv(z, nalg, h)
        return _conj(w, _nv_alpha(t, a))

    eye_h = np.eye(h)
    with rep.timed(pre + "bidual_phi_alpha", ANCHORS["bidual"], tol) as box:
        worst = 0.0
        for z in cp.alpha_images:
            lhs = phi_nv(z)
            rhs = _nv(np.kron(eye_h, z), nalg, h * h)
            worst = max(worst, la.residual(lhs, rhs))
        box["residual"] = worst
    with rep.timed(pre + "bidual_phi_dual", ANCHORS["bidual"], tol) as box:
        worst = 0.0
        q1 = cp.dual_qg
        for kk, b in enumerate(mhat.basis):
            lhs = phi_nv(np.kron(b, np.eye(k)))
            dop = tensor_element(q1.delta[:, kk], mhat, mhat)
            worst = max(worst, la.residual(lhs, _nv(np.kron(dop, np.eye(k)), nalg, h * h)))
        box["residual"] = worst
    with rep.timed(pre + "bidual_phi_commutant", ANCHORS["bidual"], tol) as box:
        worst = 0.0
        for y in mprime:
            lhs = phi_nv(np.kron(y, np.eye(k)))
            worst = max(worst, la.residual(lhs, _nv(np.kron(np.kron(y, eye_h), np.eye(k)), nalg, h * h)))
        box["residual"] = worst
    with rep.timed(pre + "bidual_phi_injective", ANCHORS["bidual"], tol) as box:
        s = np.linalg.svd(a.alpha, compute_uv=False)
        box["residual"] = 0.0 if s.min() > tol * s.max() else 1.0
    with rep.timed(pre + "bidual_dual_and_commutant_generate", ANCHORS["bidual"], tol) as box:
        gen = generated_algebra(list(mhat.basis) + list(mprime), h)
        box["residual"] = abs(gen.dim - h * h) / max(1, h * h)
    q1 = cp.dual_qg
    omega = _transport_to_h(q1, qg)
    om2 = np.kron(omega, omega)
    w1 = om2 @ q1.W @ dag(om2)
    with rep.timed(pre + "bidual_second_dual_is_commutant", ANCHORS["bidual"], tol) as box:
        slices = np.array([w1.reshape(h, h, h, h)[i, :, j, :] for i in range(h) for j in range(h)])
        span = ConcreteStarAlgebra.from_span(slices)
        box["residual"] = span.same_span_residual(ConcreteStarAlgebra.from_span(mprime))
    with rep.timed(pre + "bidual_phi_matches_dual_action", ANCHORS["bidual"], tol) as box:
        worst = 0.0
        for z in cp.algebra.basis[: min(cp.algebra.dim, 16)]:
            lhs = phi_nv(z)
            rhs = _nv(cp.dual_action_concrete(z), nalg, h * h)
            worst = max(worst, la.residual(lhs, rhs))
        box["residual"] = worst

    # cocycle Sigma V^* Sigma for mu = (sigma (x) id)(id (x) alpha)
    sig = la.flip(h, h)
    x = sig @ dag(qg.V) @ sig
    dims = [h, h, h]
    with rep.timed(pre + "bidual_cocycle_leg", ANCHORS["bidual"], tol) as box:
        worst = 0.0
        for y in mprime:
            yy = np.kron(y, eye_h)
            worst = max(worst, la.residual(yy @ x, x @ yy))
        box["residual"] = worst
    with rep.timed(pre + "bidual_cocycle_identity", ANCHORS["bidual"], tol) as box:
        lhs = dag(np.kron(w, eye_h)) @ np.kron(eye_h, x) @ np.kron(w, eye_h)
        rhs = on_legs(x, dims, [1, 2]) @ on_legs(x, dims, [0, 2])
        box["residual"] = la.residual(lhs, rhs)
    with rep.timed(pre + "bidual_cocycle_unitary", ANCHORS["bidual"], tol) as box:
        box["residual"] = la.residual(x @ dag(x), np.eye(h * h))

    # bidual action versus the perturbed action gamma, on generators of B(H) (x) N
    j1 = AntilinearOp(omega @ q1.J.base @ omega.T)
    jj1 = AntilinearOp(np.kron(j1.base, j1.base))
    wt1 = jj1.sandwich(sig @ w1 @ sig)
    uj = qg.dual_data.J_hat @ jm

    def lhs_of(t):
        # t: N-valued form of z on H; Phi then the bidual action
        ph = _conj(w, _nv_alpha(t, a))
        return conj_head(wt1, np.array([np.kron(eye_h, s) for s in ph]), h)

    def rhs_of(t):
        mu = _nv_alpha(t, a)
        mu = np.array([sig @ s @ sig for s in mu])
        g = _conj(x, mu)
        return conj_tail(w, conj_head(uj, _nv_alpha(g, a), h * h), h)

    with rep.timed(pre + "bidual_conjugation_identity", ANCHORS["bidual"], tol) as box:
        worst = 0.0
        gens = [np.kron(g, np.eye(k)) for g in cs] + list(cp.alpha_images)
        for z in gens:
            t = _nv(z, nalg, h)
            worst = max(worst, la.residual(lhs_of(t), rhs_of(t)))
        box["residual"] = worst
    with rep.timed(pre + "bidual_quantum_group_iso", ANCHORS["bidual"], tol) as box:
        # J(x) = J^ J x J J^ carries M onto M'
        imgs = np.array([uj @ p @ dag(uj) for p in qg.pi_basis])
        box["residual"] = ConcreteStarAlgebra.from_span(imgs).same_span_residual(
            ConcreteStarAlgebra.from_span(mprime))
    return BidualityCertificate(rep)


# -- dual weight ------------------------------------------------------------------

@dataclass
class DualWeightData:
    cp: CrossedProduct
    theta: Weight
    theta_tilde: Weight
    theta_tilde0: Weight
    lambda_tilde: np.ndarray
    j_tilde: AntilinearOp
    nabla_tilde: np.ndarray
    t_tilde: AntilinearOp
    mismatch: float

    def lam(self, z) -> np.ndarray:
        return self.lambda_tilde @ self.cp.algebra.coords(z)


def dual_weight_slice(cp: CrossedProduct, theta_std: Weight) -> Weight:
    """``theta~ = theta o alpha^{-1} o (phi^ (x) id)alpha^`` evaluated on the crossed product basis."""
    dd = cp.qg.dual_data
    phat = dd.haar_hat.values
    da = cp.dual_action
    m = da.m
    x3 = da.alpha.reshape(m, cp.algebra.dim, cp.algebra.dim)
    sliced = np.einsum("i,ijk->jk", phat, x3)
    pre, *_ = np.linalg.lstsq(cp.alpha_coords, sliced, rcond=None)
    res = la.residual(cp.alpha_coords @ pre, sliced)
    if res > 1e3 * la.get_tol():
        raise TheoremViolation(f"slice of the dual action leaves alpha(N) (residual {res:.2e})", res)
    return Weight(cp.algebra, theta_std.values @ pre, name="dual_weight")


def dual_weight(a: Action | CrossedProduct, theta: Weight, tol: float | None = None) -> DualWeightData:
    tol = la.get_tol() if tol is None else tol
    src = a.source if isinstance(a, CrossedProduct) else a
    cp = a if isinstance(a, CrossedProduct) and a.theta is theta else CrossedProduct(src, theta)
    dd = cp.qg.dual_data
    alg = cp.algebra
    zc = alg.coords(cp.products).T
    targets = np.einsum("ai,bj->abij", dd.lam_hat, cp.lam_theta).reshape(cp.h * cp.k, -1)
    lam_t = targets @ np.linalg.inv(zc)
    one = lam_t @ alg.unit_coords
    t0 = Weight(alg, dag(lam_t) @ one, name="dual_weight_gns")
    tt = dual_weight_slice(cp, cp.theta_std)
    mismatch = la.residual(tt.values, t0.values)
    if mismatch > tol:
        raise TheoremViolation(f"dual weight routes disagree (residual {mismatch:.2e})", mismatch)
    s = AntilinearOp(lam_t @ alg.star_matrix @ np.conj(np.linalg.inv(lam_t)))
    jt, nt = la.polar_antilinear(s)
    nt = (nt + dag(nt)) / 2
    return DualWeightData(cp, theta, tt, t0, lam_t, jt, nt, s, mismatch)


def dual_weight_checks(dw: DualWeightData, tol: float | None = None, prefix=None) -> Report:
    tol = la.get_tol() if tol is None else tol
    cp = dw.cp
    pre = (prefix or f"{cp.name}[{dw.theta.name}]") + "."
    rep = Report(title=f"dual weight {cp.name} {dw.theta.name}")
    alg = cp.algebra
    dd = cp.qg.dual_data
    lam = dw.lambda_tilde
    rep.add(pre + "dual_weight_routes", ANCHORS["dual_weight"], dw.mismatch, tol)
    with rep.timed(pre + "dual_weight_gns_map", ANCHORS["dual_weight"], tol) as box:
        zc = alg.coords(cp.products).T
        targets = np.einsum("ai,bj->abij", dd.lam_hat, cp.lam_theta).reshape(cp.h * cp.k, -1)
        box["residual"] = la.residual(lam @ zc, targets)
    with rep.timed(pre + "dual_weight_standard_rep", ANCHORS["dual_weight"], tol) as box:
        c = alg.structure
        lhs = np.einsum("xa,apr->xpr", lam, c)
        rhs = np.einsum("pxy,yr->xpr", alg.basis, lam)
        box["residual"] = la.residual(lhs, rhs)
    with rep.timed(pre + "dual_weight_product_formula", ANCHORS["product_formula"], tol) as box:
        worst = 0.0
        phat = dd.haar_hat
        th = cp.theta_std
        nalg = cp.nalg
        for i, ai in enumerate(dd.algebra.basis):
            aa = dag(ai) @ ai
            faa = phat(aa)
            aak = np.kron(aa, np.eye(cp.k))
            for j, xj in enumerate(cp.alpha_images):
                z = dag(xj) @ aak @ xj
                lhs = dw.theta_tilde(z)
                xn = nalg.basis[j]
                rhs = th(dag(xn) @ xn) * faa
                worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
        box["residual"] = worst
    with rep.timed(pre + "dual_weight_tomita", ANCHORS["modular"], tol) as box:
        lhs = dw.j_tilde @ la.funcalc(dw.nabla_tilde, "power", 0.5)
        box["residual"] = la.residual(lhs, dw.t_tilde)
    with rep.timed(pre + "dual_weight_gram", ANCHORS["dual_weight"], tol) as box:
        box["residual"] = la.residual(dag(lam) @ lam, dw.theta_tilde.gram.T)
    return rep


def dual_weight_modular_checks(dw: DualWeightData, tol: float | None = None, prefix=None,
                               ts=(1.0, -1.0, 0.37, -0.37)) -> Report:
    tol = la.get_tol() if tol is None else tol
    cp = dw.cp
    pre = (prefix or f"{cp.name}[{dw.theta.name}]") + "."
    rep = Report(title=f"dual weight modular {cp.name} {dw.theta.name}")
    nalg = cp.nalg
    th = cp.theta_std
    imgs = cp.alpha_images
    with rep.timed(pre + "modular_group_intertwines", ANCHORS["modular"], tol) as box:
        worst = 0.0
        for t in ts:
            nt = la.funcalc(dw.nabla_tilde, "power", 1j * t)
            for j, xn in enumerate(nalg.basis):
                lhs = nt @ imgs[j] @ dag(nt)
                sx = th.sigma(t, xn)
                rhs = cp.action.concrete(nalg.coords(sx))
                worst = max(worst, la.residual(lhs, rhs))
        box["residual"] = worst
    that = cp.qg.dual_data.J_hat @ la.funcalc(cp.qg.dual_data.nabla_hat, "power", 0.5)
    with rep.timed(pre + "tomita_on_products", ANCHORS["modular"], tol) as box:
        worst = 0.0
        h = cp.h
        for eta in np.eye(h):
            for i, xi in enumerate(nalg.basis):
                lx = cp.lam_theta @ nalg.coords(xi)
                for j, yj in enumerate(nalg.basis):
                    ly = cp.lam_theta @ nalg.coords(yj)
                    lhs = dw.t_tilde(dag(imgs[i]) @ np.kron(eta, ly))
                    rhs = dag(imgs[j]) @ np.kron(that(eta), lx)
                    worst = max(worst, la.residual(lhs, rhs))
        box["residual"] = worst
    with rep.timed(pre + "analytic_half", ANCHORS["modular"], tol) as box:
        worst = 0.0
        nh = la.funcalc(dw.nabla_tilde, "power", 0.5)
        nhi = la.funcalc(dw.nabla_tilde, "power", -0.5)
        for j, yj in enumerate(nalg.basis):
            s_half = nhi @ imgs[j] @ nh
            lhs = dw.j_tilde.sandwich(dag(s_half))
            sy = th.sigma_analytic(0.5j, yj)
            rhs = np.kron(np.eye(cp.h), cp.j_theta.sandwich(dag(sy)))
            worst = max(worst, la.residual(lhs, rhs))
        box["residual"] = worst
    with rep.timed(pre + "dual_weight_invariant", ANCHORS["dual_weight"], tol) as box:
        box["residual"] = invariance_residual(dw.theta_tilde, cp.dual_action)
    return rep


def cocycle_transfer_check(cp: CrossedProduct, theta2: Weight, ts=(1.0, -0.37), tol=None) -> float:
    """Worst ``|[D theta2~ : D theta1~]_t - alpha([D theta2 : D theta1]_t)|`` with theta1 = cp.theta."""
    if cp.theta is None:
        raise InputError("crossed product must be in standard form for a weight")
    p = cp.transport
    t2 = Weight(cp.nalg, theta2.values @ np.linalg.inv(p), theta2.name)
    tt1 = dual_weight_slice(cp, cp.theta_std)
    tt2 = dual_weight_slice(cp, t2)
    worst = 0.0
    for t in ts:
        lhs = connes_cocycle(tt2, tt1, t)
        u = connes_cocycle(t2, cp.theta_std, t)
        rhs = cp.action.concrete(cp.nalg.coords(u))
        worst = max(worst, la.residual(lhs, rhs))
    return worst
