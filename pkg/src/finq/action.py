"""Actions of finite quantum groups on concrete algebras.

An action stores ``alpha`` as a (m*n, n) matrix: column j holds the
coordinates of ``alpha(b_j)`` on the basis ``a_p (x) b_q`` of M (x) N.
Concrete operators are produced on H (x) K where H is the GNS space of the
Haar state and K is either N's own space or any faithful representation
passed in as the images of N's basis.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from . import linalg as la
from .errors import InputError, NumericalError
from .finvn import ConcreteStarAlgebra, Weight, tensor_mult
from .linalg import dag, fnorm
from .qgroup import FiniteQuantumGroup, check_group_table, function_algebra, _inverse
from .report import Report

ANCHORS = {
    "action": "action/coaction",
    "fixed": "action/fixed-points",
    "ovw": "action/operator-valued-weight",
    "invariant": "action/invariant-weight",
    "cocycle": "action/cocycle",
    "vtheta": "action/invariant-weight-implementation",
}


class Action:
    def __init__(self, qg: FiniteQuantumGroup, target: ConcreteStarAlgebra, alpha, name: str | None = None):
        m, n = qg.dim, target.dim
        alpha = np.asarray(alpha, dtype=complex)
        if alpha.shape != (m * n, n):
            raise InputError(f"action {name!r}: alpha has shape {alpha.shape}, expected {(m * n, n)}")
        self.qg = qg
        self.target = target
        self.alpha = alpha
        self.name = name

    def __repr__(self):
        return f"Action({self.name!r}, M={self.qg.name}, dim N={self.n})"

    @property
    def m(self) -> int:
        return self.qg.dim

    @property
    def n(self) -> int:
        return self.target.dim

    @property
    def structs(self):
        return [self.qg.structure, self.target.structure]

    def of(self, c) -> np.ndarray:
        return self.alpha @ c

    def mult(self, x, y) -> np.ndarray:
        """Product in M (x) N, coordinates."""
        return tensor_mult(self.structs, x, y)

    def star(self, x) -> np.ndarray:
        return np.kron(self.qg.algebra.star_matrix, self.target.star_matrix) @ np.conj(x)

    def one_tensor(self, c) -> np.ndarray:
        """Coordinates of ``1 (x) x``."""
        return np.kron(self.qg.unit, c)

    # -- concrete operators on H (x) K ---------------------------------
    def images(self, nrep=None) -> np.ndarray:
        """``alpha(b_j)`` as operators on H (x) K, one per basis element of N."""
        r = self.target.basis if nrep is None else np.asarray(nrep)
        m, n = self.m, self.n
        a3 = self.alpha.reshape(m, n, n)
        pb = self.qg.pi_basis
        h, k = pb.shape[1], r.shape[1]
        t = np.einsum("pqj,pab,qcd->jacbd", a3, pb, r, optimize=True)
        return t.reshape(n, h * k, h * k)

    def concrete(self, c, nrep=None) -> np.ndarray:
        return np.tensordot(c, self.images(nrep), axes=1)

    def slice_coords(self, omega_vals, c) -> np.ndarray:
        """``(omega (x) id) alpha(x)`` in N coordinates, ``omega_vals[p] = omega(a_p)``."""
        return np.einsum("p,pqj,j->q", omega_vals, self.alpha.reshape(self.m, self.n, self.n), c)

    # -- derived -------------------------------------------------------
    @cached_property
    def fixed_points(self) -> ConcreteStarAlgebra:
        return fixed_point_algebra(self)

    @cached_property
    def T(self) -> np.ndarray:
        """Coordinate matrix of ``T_alpha = (phi (x) id) alpha``."""
        return canonical_ovw(self)

    def transported(self, p: np.ndarray, target: ConcreteStarAlgebra, name=None) -> "Action":
        """Same action on an isomorphic copy of N; ``p`` maps old coordinates to new."""
        pinv = np.linalg.inv(p)
        return Action(self.qg, target, np.kron(np.eye(self.m), p) @ self.alpha @ pinv, name or self.name)

    def to_json(self) -> dict:
        return {
            "kind": "action",
            "name": self.name,
            "qg": self.qg.name,
            "target": self.target.name,
            "alpha": la.matrix_to_json(self.alpha),
        }


def validate_action(a: Action, tol: float | None = None, prefix: str | None = None) -> Report:
    tol = la.get_tol() if tol is None else tol
    pre = (prefix or a.name or "action") + "."
    rep = Report(title=f"action {a.name}")
    m, n = a.m, a.n
    cm, cn = a.structs
    al = a.alpha
    a3 = al.reshape(m, n, n)
    with rep.timed(pre + "multiplicative", ANCHORS["action"], tol) as box:
        lhs = np.einsum("kj,jpr->kpr", al, cn)
        rhs = np.einsum("apr,bqs,pqj,rsk->abjk", cm, cn, a3, a3, optimize=True).reshape(m * n, n, n)
        box["residual"] = la.residual(lhs, rhs)
    with rep.timed(pre + "star", ANCHORS["action"], tol) as box:
        box["residual"] = la.residual(al @ a.target.star_matrix,
                                      np.kron(a.qg.algebra.star_matrix, a.target.star_matrix) @ al.conj())
    with rep.timed(pre + "unital", ANCHORS["action"], tol) as box:
        box["residual"] = la.residual(al @ a.target.unit_coords, np.kron(a.qg.unit, a.target.unit_coords))
    with rep.timed(pre + "injective", ANCHORS["action"], tol) as box:
        s = np.linalg.svd(al, compute_uv=False)
        # report the defect 1 - s_min / s_max so that injective means small residual
        box["residual"] = 0.0 if s.min() > tol * s.max() else 1.0
        box["note"] = f"s_min={s.min():.3e}"
    with rep.timed(pre + "coaction", ANCHORS["action"], tol) as box:
        box["residual"] = la.residual(np.kron(np.eye(m), al) @ al, np.kron(a.qg.delta, np.eye(n)) @ al)
    return rep


def fixed_point_algebra(a: Action) -> ConcreteStarAlgebra:
    """``N^alpha = {x : alpha(x) = 1 (x) x}``."""
    lhs = a.alpha - np.kron(a.qg.unit[:, None], np.eye(a.n))
    # lhs vanishes up to rounding for trivial actions, hence the absolute floor
    ns = la.null_space(lhs, rtol=1e-10, atol=1e-10 * max(1.0, np.linalg.norm(a.alpha, 2)))
    mats = a.target.element(ns.T)
    return ConcreteStarAlgebra.from_span(mats, name=f"fix({a.name})")


def canonical_ovw(a: Action) -> np.ndarray:
    """``T_alpha = (phi (x) id) alpha`` as an n x n coordinate matrix."""
    return np.kron(a.qg.haar.values[None, :], np.eye(a.n)) @ a.alpha


def ovw_checks(a: Action, tol: float | None = None, prefix: str | None = None) -> Report:
    tol = la.get_tol() if tol is None else tol
    pre = (prefix or a.name or "action") + "."
    rep = Report(title=f"operator valued weight {a.name}")
    t = a.T
    nfix = a.fixed_points
    with rep.timed(pre + "ovw_range_fixed", ANCHORS["ovw"], tol) as box:
        imgs = a.target.element(t.T)
        box["residual"] = max(nfix.membership(y) for y in imgs)
    with rep.timed(pre + "ovw_bimodule", ANCHORS["ovw"], tol) as box:
        cn = a.target.structure
        worst = 0.0
        rng = np.random.default_rng(3)
        x = rng.normal(size=a.n) + 1j * rng.normal(size=a.n)
        for f in nfix.basis:
            fc = a.target.coords(f)
            fs = a.target.star_coords(fc)
            lhs = t @ _m(cn, _m(cn, fc, x), fs)
            rhs = _m(cn, _m(cn, fc, t @ x), fs)
            worst = max(worst, la.residual(lhs, rhs))
        box["residual"] = worst
    with rep.timed(pre + "ovw_completely_positive", ANCHORS["ovw"], tol) as box:
        box["residual"] = max(0.0, -choi_min_eig(a.target, t))
    with rep.timed(pre + "ovw_equivariance", ANCHORS["ovw"], tol) as box:
        box["residual"] = la.residual(a.alpha @ t, np.kron(a.qg.unit[:, None], t))
    with rep.timed(pre + "ovw_unit_invertible", ANCHORS["ovw"], tol) as box:
        tone = a.target.element(t @ a.target.unit_coords)
        w = np.linalg.eigvalsh((tone + dag(tone)) / 2)
        # positive invertible on N's support
        box["residual"] = 0.0 if w.min() > tol else 1.0
    return rep


def _m(c, x, y):
    return np.einsum("apr,p,r->a", c, x, y)


def choi_min_eig(alg: ConcreteStarAlgebra, t: np.ndarray) -> float:
    """Smallest eigenvalue over the Choi matrices of a map N -> N on each simple summand."""
    wb = alg.blocks
    worst = np.inf
    for e in wb.units:
        s = e.shape[0]
        d = alg.d
        ch = np.zeros((s * d, s * d), dtype=complex)
        for i in range(s):
            for j in range(s):
                img = alg.element(t @ alg.coords(e[i, j]))
                ch[i * d:(i + 1) * d, j * d:(j + 1) * d] = img
        ch = (ch + dag(ch)) / 2
        worst = min(worst, np.linalg.eigvalsh(ch).min() / max(1.0, fnorm(ch)))
    return float(worst)


def _spanning_vectors(h: int) -> list:
    vs = [np.eye(h)[i].astype(complex) for i in range(h)]
    for i in range(h):
        for j in range(i + 1, h):
            e = np.zeros(h, dtype=complex)
            e[i], e[j] = 1, 1
            vs.append(e)
            e = e.copy()
            e[j] = 1j
            vs.append(e)
    return vs


def invariance_residual(theta: Weight, a: Action) -> float:
    """Worst ``|theta((omega_xi (x) id) alpha(x)) - |xi|^2 theta(x)|`` over a spanning set of xi."""
    pb = a.qg.pi_basis
    worst = 0.0
    for xi in _spanning_vectors(pb.shape[1]):
        om = np.einsum("i,pij,j->p", xi.conj(), pb, xi)
        lhs = np.array([theta.on_coords(a.slice_coords(om, e)) for e in np.eye(a.n)])
        rhs = np.vdot(xi, xi).real * theta.values
        worst = max(worst, la.residual(lhs, rhs))
    return worst


def is_invariant_weight(theta: Weight, a: Action, tol: float | None = None):
    tol = la.get_tol() if tol is None else tol
    r = invariance_residual(theta, a)
    return r <= tol, r


def composed_weight(theta0: Weight, a: Action, name=None) -> Weight:
    """``theta0 o T_alpha`` for a weight theta0 on N^alpha."""
    nfix = a.fixed_points
    if theta0.algebra.d != a.target.d:
        raise InputError("theta0 must live on the fixed point algebra of the action")
    vals = []
    for e in np.eye(a.n):
        y = a.target.element(a.T @ e)
        vals.append(theta0.on_coords(nfix.coords(y)) if theta0.algebra is nfix else theta0(y))
    return Weight(a.target, np.array(vals), name)


# -- cocycles -------------------------------------------------------------------

class Cocycle:
    """A unitary ``U`` in M (x) N (coordinates) with (Delta (x) id)(U) = U_23 (id (x) alpha)(U)."""

    def __init__(self, action: Action, u, name=None):
        u = np.asarray(u, dtype=complex).ravel()
        if u.shape != (action.m * action.n,):
            raise InputError(f"cocycle needs {action.m * action.n} coordinates, got {u.shape[0]}")
        self.action = action
        self.u = u
        self.name = name

    def residuals(self) -> dict:
        a = self.action
        m, n = a.m, a.n
        structs = [a.qg.structure, a.qg.structure, a.target.structure]
        lhs = np.kron(a.qg.delta, np.eye(n)) @ self.u
        u23 = np.kron(a.qg.unit, self.u)
        rhs = tensor_mult(structs, u23, np.kron(np.eye(m), a.alpha) @ self.u)
        us = a.star(self.u)
        one = np.kron(a.qg.unit, a.target.unit_coords)
        return {
            "cocycle": la.residual(lhs, rhs),
            "unitary": max(la.residual(a.mult(self.u, us), one), la.residual(a.mult(us, self.u), one)),
        }

    def is_valid(self, tol=None) -> bool:
        tol = la.get_tol() if tol is None else tol
        return all(v <= tol for v in self.residuals().values())

    def inverse_for(self, beta: Action) -> "Cocycle":
        return Cocycle(beta, self.action.star(self.u), name=f"inv({self.name})")


def perturb(a: Action, c: Cocycle, name=None) -> Action:
    """``beta(x) = U alpha(x) U^*``."""
    if not c.is_valid():
        raise InputError(f"{c.name or 'cocycle'} is not an alpha-cocycle: {c.residuals()}")
    us = a.star(c.u)
    cols = [a.mult(a.mult(c.u, a.alpha[:, j]), us) for j in range(a.n)]
    return Action(a.qg, a.target, np.array(cols).T, name or f"{a.name}^U")


def group_like_cocycle(a: Action, u0) -> Cocycle:
    """``U = u0 (x) 1`` for a unitary group-like ``u0`` (Delta(u0) = u0 (x) u0)."""
    u0 = np.asarray(u0, dtype=complex)
    qg = a.qg
    if la.residual(qg.delta @ u0, np.kron(u0, u0)) > la.get_tol():
        raise InputError("u0 is not group-like")
    return Cocycle(a, np.kron(u0, a.target.unit_coords), name="group_like")


def group_likes(qg: FiniteQuantumGroup) -> list:
    """Unitary group-like elements of M (coordinates).

    Each character chi of the dual (a one-dimensional block of the dual
    algebra) gives the group-like ``(id (x) chi)(W)``.
    """
    mhat = qg.dual_data.algebra
    pb = qg.pi_basis.reshape(qg.dim, -1).T
    out = []
    for e, s in zip(mhat.blocks.units, mhat.blocks.sizes):
        if s != 1:
            continue
        p = e[0, 0]
        omega = p / np.trace(p)
        x = la.slice_right(omega, qg.W)
        for y in (x, dag(x)):
            c, *_ = np.linalg.lstsq(pb, y.ravel(), rcond=None)
            if la.residual(qg.delta @ c, np.kron(c, c)) < 1e-8 and not any(la.residual(c, o) < 1e-8 for o in out):
                out.append(c)
    return out


# -- the invariant-weight unitary ----------------------------------------------------

def v_theta(a: Action, theta: Weight, tol: float | None = None) -> np.ndarray:
    """The unitary V_theta on H (x) H_theta with
    ``(omega_{xi,eta} (x) id)(V_theta) Lambda_theta(x) = Lambda_theta((omega_{xi,eta} (x) id) alpha(x))``.
    """
    ok, r = is_invariant_weight(theta, a, tol)
    if not ok:
        raise InputError(f"weight {theta.name!r} is not invariant (residual {r:.2e})")
    g = theta.gns
    pb = a.qg.pi_basis
    h = pb.shape[1]
    n = a.n
    a3 = a.alpha.reshape(a.m, n, n)
    # block (j, i) of V acts on H_theta and equals Lambda (omega_{e_i, e_j} (x) id) alpha Lambda^{-1}
    blocks = np.einsum("pji,pqx->jiqx", pb, a3)
    v = np.einsum("aq,jiqx,xb->jaib", g.lam, blocks, g.lam_inv).reshape(h * n, h * n)
    if la.residual(v @ dag(v), np.eye(h * n)) > 1e3 * la.get_tol():
        raise NumericalError("V_theta is not unitary")
    return v


def v_theta_checks(a: Action, theta: Weight, tol=None, prefix=None) -> Report:
    tol = la.get_tol() if tol is None else tol
    pre = (prefix or a.name or "action") + "."
    rep = Report(title=f"V_theta {a.name}")
    v = v_theta(a, theta)
    qg = a.qg
    g = theta.gns
    h, k = qg.pi_basis.shape[1], g.gns_dim
    w = qg.W
    with rep.timed(pre + "vtheta_unitary", ANCHORS["vtheta"], tol) as box:
        box["residual"] = la.residual(v @ dag(v), np.eye(h * k))
    with rep.timed(pre + "vtheta_corepresentation", ANCHORS["vtheta"], tol) as box:
        lhs = delta_leg1(qg, v, k)
        dims = [h, h, k]
        box["residual"] = la.residual(lhs, la.on_legs(v, dims, [1, 2]) @ la.on_legs(v, dims, [0, 2]))
    with rep.timed(pre + "vtheta_implements", ANCHORS["vtheta"], tol) as box:
        imgs = a.images(g.pi_basis)
        worst = 0.0
        for j in range(a.n):
            worst = max(worst, la.residual(imgs[j], v @ np.kron(np.eye(h), g.pi_basis[j]) @ dag(v)))
        box["residual"] = worst
    with rep.timed(pre + "vtheta_conjugation", ANCHORS["vtheta"], tol) as box:
        jj = la.AntilinearOp(np.kron(qg.dual_data.J_hat.base, g.j.base))
        box["residual"] = la.residual(v @ jj, jj @ dag(v))
    with rep.timed(pre + "vtheta_modular", ANCHORS["vtheta"], tol) as box:
        q = qg.dual_data.nabla_hat
        qn = np.kron(q, g.nabla)
        box["residual"] = la.residual(v @ qn, qn @ v) + la.residual(q, np.eye(h))
    return rep


def delta_leg1(qg: FiniteQuantumGroup, x: np.ndarray, k: int) -> np.ndarray:
    """``(Delta (x) id)(X)`` for X in M (x) B(K) on H (x) K, via Delta(y) = W^*(1 (x) y)W."""
    h = qg.pi_basis.shape[1]
    w1 = np.kron(qg.W, np.eye(k))
    return dag(w1) @ np.kron(np.eye(h), x) @ w1


# -- corpus builders --------------------------------------------------------------

def trivial_action(qg: FiniteQuantumGroup, target: ConcreteStarAlgebra, name=None) -> Action:
    return Action(qg, target, np.kron(qg.unit[:, None], np.eye(target.dim)), name or f"trivial({qg.name})")


def coaction_of_comultiplication(qg: FiniteQuantumGroup, name=None) -> Action:
    """M acting on itself by Delta."""
    return Action(qg, qg.algebra, qg.delta, name or f"delta({qg.name})")


def inner_automorphism(alg: ConcreteStarAlgebra, u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    return alg.coords(u @ alg.basis @ dag(u)).T


def translation_automorphisms(table) -> list:
    """Left translations ``f -> f(g^{-1} .)`` of C(G) in the delta basis."""
    t = check_group_table(table)
    n = len(t)
    out = []
    for g in range(n):
        p = np.zeros((n, n), dtype=complex)
        for k in range(n):
            p[t[g, k], k] = 1
        out.append(p)
    return out


def from_group_action(table, autos, target: ConcreteStarAlgebra, qg=None, name=None) -> Action:
    """Action of C(G) from automorphisms ``alpha_g`` (coordinate matrices) of N:
    ``alpha(x) = sum_g delta_g (x) alpha_{g^{-1}}(x)``."""
    t = check_group_table(table)
    n_g = len(t)
    autos = [np.asarray(p, dtype=complex) for p in autos]
    if len(autos) != n_g:
        raise InputError(f"need {n_g} automorphisms, got {len(autos)}")
    for p in autos:
        if p.shape != (target.dim, target.dim):
            raise InputError("automorphism matrices must be square in N's coordinates")
    for g in range(n_g):
        for h in range(n_g):
            if la.residual(autos[g] @ autos[h], autos[t[g, h]]) > la.get_tol():
                raise InputError("automorphisms do not form a representation of the group")
    qg = qg or function_algebra(t)
    if qg.dim != n_g:
        raise InputError("quantum group does not match the group table")
    inv = _inverse(t)
    n = target.dim
    alpha = np.zeros((n_g * n, n), dtype=complex)
    eye = np.eye(n_g)
    for g in range(n_g):
        alpha += np.kron(eye[:, [g]], autos[inv[g]])
    return Action(qg, target, alpha, name or f"group({qg.name} on {target.name})")


def action_from_json(data: dict, qgs: dict, algebras: dict) -> Action:
    name = data.get("name")
    for key in ("qg", "target", "alpha"):
        if key not in data:
            raise InputError(f"action {name!r} is missing field {key!r}")
    if data["qg"] not in qgs:
        raise InputError(f"action {name!r}: unresolved reference to quantum group {data['qg']!r}")
    if data["target"] not in algebras:
        raise InputError(f"action {name!r}: unresolved reference to algebra {data['target']!r}")
    return Action(qgs[data["qg"]], algebras[data["target"]], la.matrix_from_json(data["alpha"]), name)
