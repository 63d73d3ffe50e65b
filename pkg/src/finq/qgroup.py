"""Finite quantum groups (finite-dimensional Kac algebras).

A quantum group here is a concrete algebra ``M`` together with a
comultiplication, counit and antipode written in the algebra basis:

* ``delta`` has shape (n*n, n); column j holds the coordinates of
  ``Delta(b_j)`` on the basis ``b_p (x) b_q`` (p slow),
* ``counit`` is the row of values ``eps(b_j)``,
* ``antipode`` is the n x n matrix of ``S``.

The Haar state is solved for when it is not supplied.  The GNS space ``H``
of the Haar state carries the multiplicative unitary ``W``, the right
regular unitary ``V`` and the modular conjugation ``J``; :meth:`dual`
builds the dual quantum group on the same ``H``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.optimize

from . import linalg as la
from .errors import InputError, NumericalError, StructureError
from .finvn import (ConcreteStarAlgebra, Weight, tensor_coords, tensor_membership)
from .linalg import AntilinearOp, dag, fnorm, on_legs
from .report import Report

ANCHORS = {
    "hom": "comultiplication/homomorphism",
    "coassoc": "comultiplication/coassociativity",
    "counit": "hopf/counit",
    "antipode": "hopf/antipode",
    "kac": "kac/antipode-involution",
    "haar": "haar/invariance",
    "pentagon": "multiplicative-unitary/pentagon",
    "implement": "multiplicative-unitary/implements-comultiplication",
    "dual": "duality/dual-quantum-group",
}


class FiniteQuantumGroup:
    def __init__(self, algebra: ConcreteStarAlgebra, delta, counit, antipode,
                 haar: Weight | np.ndarray | None = None, name: str | None = None):
        n = algebra.dim
        delta = np.asarray(delta, dtype=complex)
        counit = np.asarray(counit, dtype=complex).ravel()
        antipode = np.asarray(antipode, dtype=complex)
        if delta.shape != (n * n, n):
            raise InputError(f"delta must have shape {(n * n, n)}, got {delta.shape}")
        if counit.shape != (n,):
            raise InputError(f"counit must have {n} entries, got {counit.shape[0]}")
        if antipode.shape != (n, n):
            raise InputError(f"antipode must have shape {(n, n)}, got {antipode.shape}")
        self.algebra = algebra
        self.delta = delta
        self.counit = counit
        self.antipode = antipode
        self.name = name
        if getattr(algebra, "name", None) is None:
            algebra.name = name
        if haar is None:
            haar = solve_haar(algebra, delta, counit, antipode)
        elif not isinstance(haar, Weight):
            haar = Weight(algebra, haar)
        self.haar = haar

    def __repr__(self):
        return f"FiniteQuantumGroup({self.name!r}, dim={self.dim})"

    @property
    def dim(self) -> int:
        return self.algebra.dim

    # -- coordinate algebra --------------------------------------------
    @property
    def structure(self) -> np.ndarray:
        """``C[a, p, r]`` = coordinate a of ``b_p b_r``."""
        return self.algebra.structure

    def lmat(self, c) -> np.ndarray:
        return np.einsum("apr,p->ar", self.structure, c)

    def rmat(self, c) -> np.ndarray:
        return np.einsum("apr,r->ap", self.structure, c)

    def mult(self, x, y) -> np.ndarray:
        return np.einsum("apr,p,r->a", self.structure, x, y)

    def mult2(self, x, y) -> np.ndarray:
        """Product in M (x) M on coordinates."""
        n = self.dim
        c = self.structure
        out = np.einsum("apr,bqs,pq,rs->ab", c, c, x.reshape(n, n), y.reshape(n, n), optimize=True)
        return out.ravel()

    @property
    def unit(self) -> np.ndarray:
        return self.algebra.unit_coords

    def star2(self, x) -> np.ndarray:
        a = self.algebra.star_matrix
        return np.kron(a, a) @ np.conj(x)

    def delta_of(self, c) -> np.ndarray:
        return self.delta @ c

    def is_cocommutative(self) -> float:
        n = self.dim
        flipped = self.delta.reshape(n, n, n).transpose(1, 0, 2).reshape(n * n, n)
        return fnorm(flipped - self.delta) / max(1.0, fnorm(self.delta))

    def is_commutative(self) -> float:
        c = self.structure
        return fnorm(c - c.transpose(0, 2, 1)) / max(1.0, fnorm(c))

    # -- GNS, W and V --------------------------------------------------
    @cached_property
    def gns(self):
        return self.haar.gns

    @property
    def J(self) -> AntilinearOp:
        return self.gns.j

    @property
    def nabla(self) -> np.ndarray:
        return self.gns.nabla

    @cached_property
    def pi_basis(self) -> np.ndarray:
        g = self.gns
        return np.array([g.lam @ self.lmat(e) @ g.lam_inv for e in np.eye(self.dim)])

    def pi(self, c) -> np.ndarray:
        """Left multiplication by the element with coordinates ``c`` on H."""
        return np.tensordot(c, self.pi_basis, axes=1)

    def pi2(self, x) -> np.ndarray:
        """An element of M (x) M (coordinates) acting on H (x) H."""
        n = self.dim
        t = np.einsum("pq,pij,qkl->ikjl", np.asarray(x).reshape(n, n), self.pi_basis, self.pi_basis)
        return t.reshape(n * n, n * n)

    @cached_property
    def represented(self) -> ConcreteStarAlgebra:
        """M acting on H by left multiplication."""
        return ConcreteStarAlgebra.from_span(self.pi_basis, name=f"pi({self.name})")

    @cached_property
    def W(self) -> np.ndarray:
        return multiplicative_unitary(self)

    @cached_property
    def V(self) -> np.ndarray:
        return right_regular(self)

    @cached_property
    def dual_data(self) -> "DualData":
        return build_dual(self)

    def dual(self) -> "FiniteQuantumGroup":
        return self.dual_data.qg

    # -- serialization -------------------------------------------------
    def to_json(self) -> dict:
        q = self if _is_block_form(self.algebra) else block_form(self)
        return {
            "kind": "quantum_group",
            "name": self.name,
            "blocks": _block_sizes(q.algebra),
            "delta": la.matrix_to_json(q.delta),
            "epsilon": la.vector_to_json(q.counit),
            "antipode": la.matrix_to_json(q.antipode),
            "haar": la.vector_to_json(q.haar.values),
        }


def qgroup_from_json(data: dict) -> FiniteQuantumGroup:
    name = data.get("name")
    for key in ("blocks", "delta", "epsilon", "antipode"):
        if key not in data:
            raise InputError(f"quantum_group {name!r} is missing field {key!r}")
    alg = ConcreteStarAlgebra.from_blocks(data["blocks"], name=name)
    n = alg.dim
    delta = la.matrix_from_json(data["delta"])
    eps = la.vector_from_json(data["epsilon"])
    s = la.matrix_from_json(data["antipode"])
    if delta.shape != (n * n, n):
        raise InputError(f"quantum_group {name!r}: delta has shape {delta.shape}, expected {(n * n, n)}")
    if eps.shape != (n,):
        raise InputError(f"quantum_group {name!r}: epsilon has {eps.shape[0]} entries, expected {n}")
    if s.shape != (n, n):
        raise InputError(f"quantum_group {name!r}: antipode has shape {s.shape}, expected {(n, n)}")
    haar = None
    if data.get("haar") is not None:
        haar = la.vector_from_json(data["haar"])
        if haar.shape != (n,):
            raise InputError(f"quantum_group {name!r}: haar has {haar.shape[0]} entries, expected {n}")
    return FiniteQuantumGroup(alg, delta, eps, s, haar, name)


def _block_sizes(a: ConcreteStarAlgebra):
    return getattr(a, "_block_sizes", None)


def _is_block_form(a: ConcreteStarAlgebra) -> bool:
    return _block_sizes(a) is not None


def block_algebra(sizes, name=None) -> ConcreteStarAlgebra:
    return ConcreteStarAlgebra.from_blocks(sizes, name)


# -- Haar state -------------------------------------------------------------

def solve_haar(algebra, delta, counit=None, antipode=None) -> Weight:
    """The unique left and right invariant state, from the invariance system."""
    n = algebra.dim
    d3 = np.asarray(delta).reshape(n, n, n)
    u = algebra.unit_coords
    rows = []
    # left: sum_q phi_q D[p, q, j] - u_p phi_j = 0 ; right: sum_p phi_p D[p, q, j] - u_q phi_j = 0
    eye = np.eye(n)
    for p in range(n):
        for j in range(n):
            rows.append(d3[p, :, j] - u[p] * eye[j])
            rows.append(d3[:, p, j] - u[p] * eye[j])
    ns = la.null_space(np.array(rows), rtol=1e-10)
    if ns.shape[1] != 1:
        raise StructureError(f"invariance system has a {ns.shape[1]}-dimensional solution space, expected 1")
    phi = ns[:, 0]
    norm = phi @ u
    if abs(norm) < 1e-12:
        raise StructureError("invariant functional vanishes on the unit")
    phi = phi / norm
    w = Weight(algebra, phi, name="haar")
    if not w.is_faithful():
        raise StructureError("invariant functional is not a faithful state")
    return w


# -- W and V ----------------------------------------------------------------

def multiplicative_unitary(qg: FiniteQuantumGroup) -> np.ndarray:
    """W with W^*(Lambda(a) (x) Lambda(b)) = (Lambda (x) Lambda)(Delta(b)(a (x) 1))."""
    n = qg.dim
    cols = np.zeros((n * n, n * n), dtype=complex)
    eye = np.eye(n)
    for i in range(n):
        ra = np.kron(qg.rmat(eye[i]), eye)
        for k in range(n):
            cols[:, i * n + k] = ra @ qg.delta[:, k]
    lam = np.kron(qg.gns.lam, qg.gns.lam)
    wstar = lam @ cols @ np.linalg.inv(lam)
    w = dag(wstar)
    if la.residual(w @ wstar, np.eye(n * n)) > la.get_tol() * 10:
        raise StructureError("multiplicative unitary is not unitary")
    return w


def right_regular(qg: FiniteQuantumGroup) -> np.ndarray:
    """V with V(Lambda(a) (x) Lambda(b)) = (Lambda (x) Lambda)(Delta(a)(1 (x) b))."""
    n = qg.dim
    cols = np.zeros((n * n, n * n), dtype=complex)
    eye = np.eye(n)
    for k in range(n):
        rb = np.kron(eye, qg.rmat(eye[k]))
        for i in range(n):
            cols[:, i * n + k] = rb @ qg.delta[:, i]
    lam = np.kron(qg.gns.lam, qg.gns.lam)
    v = lam @ cols @ np.linalg.inv(lam)
    if la.residual(v @ dag(v), np.eye(n * n)) > la.get_tol() * 10:
        raise StructureError("right regular unitary is not unitary")
    return v


def pentagon_residual(w: np.ndarray) -> float:
    n = int(round(np.sqrt(w.shape[0])))
    dims = [n, n, n]
    lhs = on_legs(w, dims, [0, 1]) @ on_legs(w, dims, [0, 2]) @ on_legs(w, dims, [1, 2])
    rhs = on_legs(w, dims, [1, 2]) @ on_legs(w, dims, [0, 1])
    return la.residual(lhs, rhs)


# -- validation --------------------------------------------------------------

def validate(qg: FiniteQuantumGroup, tol: float | None = None, prefix: str | None = None) -> Report:
    tol = la.get_tol() if tol is None else tol
    pre = (prefix or qg.name or "qg") + "."
    rep = Report(title=f"validate {qg.name}")
    n = qg.dim
    c = qg.structure
    d = qg.delta
    d3 = d.reshape(n, n, n)
    u = qg.unit
    eye = np.eye(n)

    with rep.timed(pre + "delta_multiplicative", ANCHORS["hom"], tol) as box:
        lhs = np.einsum("kj,jpr->kpr", d, c)
        rhs = np.einsum("apr,bqs,pqj,rsk->abjk", c, c, d3, d3, optimize=True).reshape(n * n, n, n)
        box["residual"] = la.residual(lhs, rhs)
    with rep.timed(pre + "delta_star", ANCHORS["hom"], tol) as box:
        a = qg.algebra.star_matrix
        box["residual"] = la.residual(d @ a, np.kron(a, a) @ d.conj())
    with rep.timed(pre + "delta_unital", ANCHORS["hom"], tol) as box:
        box["residual"] = la.residual(d @ u, np.kron(u, u))
    with rep.timed(pre + "coassociativity", ANCHORS["coassoc"], tol) as box:
        box["residual"] = la.residual(np.kron(d, eye) @ d, np.kron(eye, d) @ d)
    with rep.timed(pre + "counit_left", ANCHORS["counit"], tol) as box:
        box["residual"] = la.residual(np.kron(qg.counit[None, :], eye) @ d, eye)
    with rep.timed(pre + "counit_right", ANCHORS["counit"], tol) as box:
        box["residual"] = la.residual(np.kron(eye, qg.counit[None, :]) @ d, eye)
    m = c.reshape(n, n * n)
    target = np.outer(u, qg.counit)
    with rep.timed(pre + "antipode_left", ANCHORS["antipode"], tol) as box:
        box["residual"] = la.residual(m @ np.kron(qg.antipode, eye) @ d, target)
    with rep.timed(pre + "antipode_right", ANCHORS["antipode"], tol) as box:
        box["residual"] = la.residual(m @ np.kron(eye, qg.antipode) @ d, target)
    with rep.timed(pre + "antipode_involutive", ANCHORS["kac"], tol) as box:
        box["residual"] = la.residual(qg.antipode @ qg.antipode, eye)
    with rep.timed(pre + "antipode_star", ANCHORS["kac"], tol) as box:
        a = qg.algebra.star_matrix
        box["residual"] = la.residual(qg.antipode @ a, a @ qg.antipode.conj())
    phi = qg.haar.values
    with rep.timed(pre + "haar_tracial", ANCHORS["kac"], tol) as box:
        box["residual"] = la.residual(np.einsum("a,apr->pr", phi, c), np.einsum("a,arp->pr", phi, c))
    with rep.timed(pre + "haar_antipode", ANCHORS["kac"], tol) as box:
        box["residual"] = la.residual(phi @ qg.antipode, phi)
    with rep.timed(pre + "haar_left_invariance", ANCHORS["haar"], tol) as box:
        box["residual"] = la.residual(np.einsum("pqj,q->pj", d3, phi), np.outer(u, phi))
    with rep.timed(pre + "haar_right_invariance", ANCHORS["haar"], tol) as box:
        box["residual"] = la.residual(np.einsum("pqj,p->qj", d3, phi), np.outer(u, phi))
    with rep.timed(pre + "haar_state", ANCHORS["haar"], tol) as box:
        box["residual"] = abs(phi @ u - 1) + max(0.0, -qg.haar.positivity())
    with rep.timed(pre + "modular_trivial", ANCHORS["kac"], tol) as box:
        box["residual"] = la.residual(qg.nabla, np.eye(n))
    try:
        w = qg.W
    except StructureError as exc:
        # broken structure maps: record the unitary checks as failures instead of raising
        for key in ("pentagon", "w_implements_delta"):
            rep.add(pre + key, ANCHORS["pentagon" if key == "pentagon" else "implement"], math.inf, tol,
                    note=str(exc))
        return rep
    with rep.timed(pre + "pentagon", ANCHORS["pentagon"], tol) as box:
        box["residual"] = pentagon_residual(w)
    with rep.timed(pre + "w_implements_delta", ANCHORS["implement"], tol) as box:
        worst = 0.0
        for k in range(n):
            lhs = qg.pi2(d[:, k])
            rhs = dag(w) @ np.kron(np.eye(n), qg.pi_basis[k]) @ w
            worst = max(worst, la.residual(lhs, rhs))
        box["residual"] = worst
    return rep


# -- dual --------------------------------------------------------------------

@dataclass
class DualData:
    """The dual quantum group realized on the GNS space H of the original one."""

    algebra: ConcreteStarAlgebra
    delta_hat: np.ndarray
    haar_hat: Weight
    lam_hat: np.ndarray
    J_hat: AntilinearOp
    nabla_hat: np.ndarray
    qg: FiniteQuantumGroup
    consistency: float
    iota: np.ndarray

    def lam_hat_of(self, y) -> np.ndarray:
        return self.lam_hat @ self.algebra.coords(y)


def xi_of(qg: FiniteQuantumGroup, omega: np.ndarray) -> np.ndarray:
    """The vector ``xi(omega)`` with ``omega(x^*) = <xi(omega), Lambda(x)>``.

    ``omega`` is a density on B(H), restricted to M acting on H.
    """
    adj = np.conj(np.transpose(qg.pi_basis, (0, 2, 1)))
    vals = np.einsum("ij,kji->k", omega, adj)
    return np.linalg.solve(dag(qg.gns.lam), vals)


def build_dual(qg: FiniteQuantumGroup) -> DualData:
    n = qg.dim
    w = qg.W
    slices = []
    omegas = []
    for i in range(n):
        for j in range(n):
            om = np.zeros((n, n), dtype=complex)
            om[j, i] = 1.0
            omegas.append(om)
            slices.append(w.reshape(n, n, n, n)[i, :, j, :])
    slices = np.array(slices)
    mhat = ConcreteStarAlgebra.from_span(slices, name=f"dual({qg.name})")
    if mhat.dim != n:
        raise StructureError(f"slices of W span {mhat.dim} dimensions, expected {n}")
    cm = mhat.coords(slices).T
    xis = np.array([xi_of(qg, om) for om in omegas]).T
    lam_hat, *_ = np.linalg.lstsq(cm.T, xis.T, rcond=None)
    lam_hat = lam_hat.T
    consistency = la.residual(lam_hat @ cm, xis)
    if consistency > 1e3 * la.get_tol():
        raise StructureError(f"xi(omega) is not a function of lambda(omega) (residual {consistency:.2e})")
    one = lam_hat @ mhat.unit_coords
    phi_hat = Weight(mhat, dag(lam_hat) @ one, name=f"dual_haar({qg.name})")
    s = AntilinearOp(lam_hat @ mhat.star_matrix @ np.conj(np.linalg.inv(lam_hat)))
    j_hat, nabla_hat = la.polar_antilinear(s)
    # comultiplication  y -> Sigma W (y (x) 1) W^* Sigma
    sig = la.flip(n, n)
    dh = np.zeros((n * n, n), dtype=complex)
    worst = 0.0
    for k, y in enumerate(mhat.basis):
        img = sig @ w @ np.kron(y, np.eye(n)) @ dag(w) @ sig
        dh[:, k] = tensor_coords(img, mhat, mhat)
        worst = max(worst, tensor_membership(img, mhat, mhat))
    if worst > 1e3 * la.get_tol():
        raise StructureError(f"dual comultiplication leaves the dual algebra (residual {worst:.2e})")
    eps_vals = np.array([np.trace(om).real for om in omegas])
    eps_hat, *_ = np.linalg.lstsq(cm.T, eps_vals.astype(complex), rcond=None)
    # unitary antipode of the dual: y -> J y^* J
    jj = qg.J
    s_hat = np.array([mhat.coords(jj.sandwich(dag(y))) for y in mhat.basis]).T
    haar_state = Weight(mhat, phi_hat.values / phi_hat.on_coords(mhat.unit_coords), name="haar")
    dual_qg = FiniteQuantumGroup(mhat, dh, eps_hat, s_hat, haar_state, name=f"dual({qg.name})")
    return DualData(mhat, dh, phi_hat, lam_hat, j_hat, (nabla_hat + dag(nabla_hat)) / 2,
                    dual_qg, consistency, np.eye(n))


def dual_checks(qg: FiniteQuantumGroup, tol: float | None = None, prefix=None) -> Report:
    """Residuals of the identities tying M, the dual and their modular data together."""
    tol = la.get_tol() if tol is None else tol
    pre = (prefix or qg.name or "qg") + "."
    rep = Report(title=f"dual {qg.name}")
    dd = qg.dual_data
    n = qg.dim
    with rep.timed(pre + "dual_dim", ANCHORS["dual"], 0.5) as box:
        box["residual"] = abs(dd.algebra.dim - qg.dim)
    with rep.timed(pre + "dual_lambda_hat_consistency", ANCHORS["dual"], tol) as box:
        box["residual"] = dd.consistency
    with rep.timed(pre + "dual_gram", ANCHORS["dual"], tol) as box:
        v = dd.lam_hat
        box["residual"] = la.residual(dag(v) @ v, dd.haar_hat.gram.T)
    with rep.timed(pre + "dual_jhat_antipode", "modular/jhat-antipode", tol) as box:
        worst = 0.0
        for k in range(n):
            lhs = dd.J_hat.sandwich(dag(qg.pi_basis[k]))
            rhs = qg.pi(qg.antipode[:, k])
            worst = max(worst, la.residual(lhs, rhs))
        box["residual"] = worst
    with rep.timed(pre + "dual_j_commute", "modular/j-jhat-commute", tol) as box:
        box["residual"] = la.residual(dd.J_hat @ qg.J, qg.J @ dd.J_hat)
    with rep.timed(pre + "dual_modular_trivial", ANCHORS["kac"], tol) as box:
        box["residual"] = la.residual(dd.nabla_hat, np.eye(n))
    with rep.timed(pre + "v_from_w", "multiplicative-unitary/right-regular", tol) as box:
        jj = AntilinearOp(np.kron(dd.J_hat.base, dd.J_hat.base))
        sig = la.flip(n, n)
        box["residual"] = la.residual(qg.V, jj.sandwich(sig @ dag(qg.W) @ sig))
    with rep.timed(pre + "v_pentagon", ANCHORS["pentagon"], tol) as box:
        box["residual"] = pentagon_residual(qg.V)
    with rep.timed(pre + "v_leg_membership", "multiplicative-unitary/right-regular", tol) as box:
        from .finvn import commutant
        box["residual"] = tensor_membership(qg.V, commutant(dd.algebra), qg.represented)
    return rep


# -- GNS formulas linking M and its dual ------------------------------------------

def dual_gns_map_check(qg: FiniteQuantumGroup, xi, b) -> float:
    """Residual of Lambda_hat(lambda(omega_{xi, Lambda(b)})) = J b J xi (b in coordinates)."""
    dd = qg.dual_data
    xi = np.asarray(xi, dtype=complex)
    b = np.asarray(b, dtype=complex)
    lb = qg.gns.lam @ b
    lam_om = la.slice_left(la.vector_functional(xi, lb), qg.W)
    lhs = dd.lam_hat_of(lam_om)
    rhs = qg.J.sandwich(qg.pi(b)) @ xi
    return la.residual(lhs, rhs)


def slice_gns_map_check(qg: FiniteQuantumGroup, a, xi, eta) -> float:
    """Residual of Lambda((id (x) omega_{xi,eta}) Delta(a)) = (id (x) omega_{xi,eta})(V) Lambda(a)."""
    n = qg.dim
    a = np.asarray(a, dtype=complex)
    om = la.vector_functional(xi, eta)
    da = (qg.delta @ a).reshape(n, n)
    wvals = np.einsum("ij,qji->q", om, qg.pi_basis)
    x = da @ wvals
    lhs = qg.gns.lam @ x
    rhs = la.slice_right(om, qg.V) @ (qg.gns.lam @ a)
    return la.residual(lhs, rhs)


def pairings_from_vector(qg: FiniteQuantumGroup, eta) -> list:
    """Matrix-unit functionals omega with the values <xi(omega), eta>."""
    n = qg.dim
    out = []
    for i in range(n):
        for j in range(n):
            om = np.zeros((n, n), dtype=complex)
            om[j, i] = 1.0
            out.append((om, complex(np.vdot(eta, xi_of(qg, om)))))
    return out


def recover_from_pairings(qg: FiniteQuantumGroup, pairings, tol: float | None = None) -> np.ndarray:
    """Coordinates of the unique x with omega(x^*) = value for every (omega, value) pair."""
    tol = la.get_tol() if tol is None else tol
    rows = []
    vals = []
    for om, v in pairings:
        om = np.asarray(om, dtype=complex)
        if om.shape != (qg.dim, qg.dim):
            raise InputError("pairing functional has the wrong size")
        rows.append(np.einsum("ij,kji->k", om, qg.pi_basis))
        vals.append(v)
    rows = np.array(rows)
    vals = np.array(vals)
    y, *_ = np.linalg.lstsq(rows, vals, rcond=None)
    res = la.residual(rows @ y, vals)
    if res > 1e3 * tol:
        raise InputError(f"pairing data is inconsistent (residual {res:.2e})")
    # y are the coordinates of x^*
    return qg.algebra.star_coords(y)


# -- catalog -------------------------------------------------------------------------

def check_group_table(table) -> np.ndarray:
    t = np.asarray(table)
    if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] == 0:
        raise InputError("group table must be a non-empty square array")
    n = t.shape[0]
    if not np.issubdtype(t.dtype, np.integer):
        if not np.all(t == np.round(t)):
            raise InputError("group table must contain integers")
        t = t.astype(int)
    if t.min() < 0 or t.max() >= n:
        raise InputError("group table entries must index group elements")
    for row in t:
        if len(set(row.tolist())) != n:
            raise InputError("group table rows must be permutations")
    for col in t.T:
        if len(set(col.tolist())) != n:
            raise InputError("group table columns must be permutations")
    ids = [e for e in range(n) if np.array_equal(t[e], np.arange(n)) and np.array_equal(t[:, e], np.arange(n))]
    if not ids:
        raise InputError("group table has no identity element")
    for a in range(n):
        for b in range(n):
            ab = t[a, b]
            if not np.array_equal(t[ab], t[a][t[b]]):
                raise InputError("group table is not associative")
    return t


def _identity(t):
    return next(e for e in range(len(t)) if np.array_equal(t[e], np.arange(len(t))))


def _inverse(t):
    e = _identity(t)
    return [int(np.nonzero(t[g] == e)[0][0]) for g in range(len(t))]


def cyclic_table(n: int) -> np.ndarray:
    return np.add.outer(np.arange(n), np.arange(n)) % n


def symmetric3_table() -> np.ndarray:
    perms = list(itertools.permutations(range(3)))
    idx = {p: i for i, p in enumerate(perms)}
    t = np.zeros((6, 6), dtype=int)
    for i, p in enumerate(perms):
        for j, q in enumerate(perms):
            t[i, j] = idx[tuple(p[q[k]] for k in range(3))]
    return t


def function_algebra(table, name=None) -> FiniteQuantumGroup:
    """C(G): pointwise functions with Delta(f)(g, h) = f(gh)."""
    t = check_group_table(table)
    n = len(t)
    alg = block_algebra([1] * n, name)
    delta = np.zeros((n * n, n), dtype=complex)
    for g in range(n):
        for h in range(n):
            delta[g * n + h, t[g, h]] = 1
    eps = np.zeros(n, dtype=complex)
    eps[_identity(t)] = 1
    inv = _inverse(t)
    s = np.zeros((n, n), dtype=complex)
    for g in range(n):
        s[inv[g], g] = 1
    return FiniteQuantumGroup(alg, delta, eps, s, None, name or f"C(G{n})")


def group_algebra(table, name=None) -> FiniteQuantumGroup:
    """C[G]: the group algebra with Delta(lambda_g) = lambda_g (x) lambda_g, in block form."""
    t = check_group_table(table)
    n = len(t)
    lam = np.zeros((n, n, n), dtype=complex)
    for g in range(n):
        for h in range(n):
            lam[g, t[g, h], h] = 1
    alg = ConcreteStarAlgebra(lam / np.sqrt(n), name)
    r = np.sqrt(n)
    delta = np.zeros((n * n, n), dtype=complex)
    for g in range(n):
        delta[g * n + g, g] = r
    eps = np.full(n, 1 / r, dtype=complex)
    inv = _inverse(t)
    s = np.zeros((n, n), dtype=complex)
    for g in range(n):
        s[inv[g], g] = 1
    qg = FiniteQuantumGroup(alg, delta, eps, s, None, name or f"C[G{n}]")
    return block_form(qg, counit_first=True)


def trivial(name="trivial") -> FiniteQuantumGroup:
    alg = block_algebra([1], name)
    return FiniteQuantumGroup(alg, [[1]], [1], [[1]], None, name)


def _kp_generators():
    x = np.diag([1, 1, -1, -1, 1, -1]).astype(complex)
    y = np.diag([1, 1, -1, -1, -1, 1]).astype(complex)
    z = np.zeros((6, 6), dtype=complex)
    z[:4, :4] = np.diag([1, -1, 1j, -1j])
    z[4, 5] = z[5, 4] = 1
    return x, y, z


def kac_paljutkin(name="KP") -> FiniteQuantumGroup:
    """The eight-dimensional Kac-Paljutkin quantum group on C^4 (+) M_2(C).

    Generated by x, y, z with x^2 = y^2 = 1, xy = yx, zx = yz, zy = xz and
    z^2 = (1 + x + y - xy)/2, with x, y group-like and
    Delta(z) = (1/2)(1 (x) 1 + 1 (x) x + y (x) 1 - y (x) x)(z (x) z).
    """
    alg = block_algebra([1, 1, 1, 1, 2], name)
    x, y, z = _kp_generators()
    one = np.eye(6, dtype=complex)
    words = []
    dwords = []
    swords = []
    dx, dy = np.kron(x, x), np.kron(y, y)
    dz = 0.5 * (np.kron(one, one) + np.kron(one, x) + np.kron(y, one) - np.kron(y, x)) @ np.kron(z, z)
    for i, j, k in itertools.product(range(2), repeat=3):
        mx, my, mz = (np.linalg.matrix_power(m, p) for m, p in ((x, i), (y, j), (z, k)))
        words.append(mx @ my @ mz)
        dwords.append(np.linalg.matrix_power(dx, i) @ np.linalg.matrix_power(dy, j) @ np.linalg.matrix_power(dz, k))
        swords.append(mz @ my @ mx)
    cw = alg.coords(np.array(words)).T
    if np.linalg.matrix_rank(cw) != 8:
        raise StructureError("Kac-Paljutkin words do not span the algebra")
    cwi = np.linalg.inv(cw)
    dcoords = np.array([tensor_coords(dw, alg, alg) for dw in dwords]).T
    for dw in dwords:
        if tensor_membership(dw, alg, alg) > 1e-12:
            raise StructureError("Kac-Paljutkin comultiplication leaves M (x) M")
    delta = dcoords @ cwi
    eps = np.ones(8) @ cwi
    s = alg.coords(np.array(swords)).T @ cwi
    return FiniteQuantumGroup(alg, delta, eps, s, None, name)


def opposite(qg: FiniteQuantumGroup, name=None) -> FiniteQuantumGroup:
    """Same algebra with the flipped comultiplication."""
    n = qg.dim
    d = qg.delta.reshape(n, n, n).transpose(1, 0, 2).reshape(n * n, n)
    out = FiniteQuantumGroup(qg.algebra, d, qg.counit, qg.antipode, qg.haar, name or f"op({qg.name})")
    return out


def commutant_qg(qg: FiniteQuantumGroup, name=None) -> FiniteQuantumGroup:
    """M' on H with Delta'(x) = (J (x) J) Delta(J x J) (J (x) J)."""
    n = qg.dim
    j = qg.J
    mprime = ConcreteStarAlgebra.from_span(np.array([j.sandwich(p) for p in qg.pi_basis]),
                                           name=name or f"comm({qg.name})")
    rep = qg.represented
    # coordinates of pi(M) elements back in the abstract basis of M
    to_m = np.linalg.pinv(rep.coords(qg.pi_basis).T)
    jj = AntilinearOp(np.kron(j.base, j.base))
    delta = np.zeros((n * n, n), dtype=complex)
    eps = np.zeros(n, dtype=complex)
    s = np.zeros((n, n), dtype=complex)
    phi = np.zeros(n, dtype=complex)
    for k, xk in enumerate(mprime.basis):
        y = j.sandwich(xk)
        cm = to_m @ rep.coords(y)
        img = jj.sandwich(qg.pi2(qg.delta @ cm))
        delta[:, k] = tensor_coords(img, mprime, mprime)
        eps[k] = np.conj(qg.counit @ cm)
        s[:, k] = mprime.coords(j.sandwich(qg.pi(qg.antipode @ cm)))
        phi[k] = np.conj(qg.haar.on_coords(cm))
    return FiniteQuantumGroup(mprime, delta, eps, s, Weight(mprime, phi, "haar"), name or f"comm({qg.name})")


def block_form(qg: FiniteQuantumGroup, counit_first: bool = False) -> FiniteQuantumGroup:
    """Transport a quantum group onto the standard direct sum of full matrix blocks."""
    wb = qg.algebra.blocks
    units = list(wb.units)
    mults = list(wb.multiplicities)
    if counit_first:
        vals = [abs(qg.counit @ qg.algebra.coords(u[0, 0])) if u.shape[0] == 1 else 0 for u in units]
        k = int(np.argmax(vals))
        units.insert(0, units.pop(k))
        mults.insert(0, mults.pop(k))
    sizes = [u.shape[0] for u in units]
    order = sorted(range(len(units)), key=lambda k: (sizes[k], 0 if (counit_first and k == 0) else 1))
    units = [units[k] for k in order]
    mults = [mults[k] for k in order]
    sizes = [sizes[k] for k in order]
    target = block_algebra(sizes, qg.algebra.name)
    p = _transport_matrix(qg.algebra, units, mults, target)
    pinv = np.linalg.inv(p)
    delta = np.kron(p, p) @ qg.delta @ pinv
    eps = qg.counit @ pinv
    s = p @ qg.antipode @ pinv
    haar = Weight(target, qg.haar.values @ pinv, "haar")
    return FiniteQuantumGroup(target, delta, eps, s, haar, qg.name)


def _transport_matrix(src: ConcreteStarAlgebra, units, mults, target: ConcreteStarAlgebra,
                      unitaries=None, perm=None) -> np.ndarray:
    """Coordinate matrix of the *-isomorphism sending src's k-th block onto target's block perm[k].

    Inside each block the matrix units are conjugated by ``unitaries[k]``.
    """
    tb = _block_offsets(target)
    out = np.zeros((target.dim, src.dim), dtype=complex)
    for k, (e, m) in enumerate(zip(units, mults)):
        kk = k if perm is None else perm[k]
        off, size = tb[kk]
        if size != e.shape[0]:
            raise StructureError("block sizes do not match")
        u = np.eye(size) if unitaries is None else unitaries[k]
        # x_k[i, j] = Tr(e_ji x) / m
        xk = np.einsum("jiab,pba->pij", e, src.basis) / m
        yk = np.einsum("ai,pij,bj->pab", u, xk, u.conj())
        img = np.zeros((src.dim, target.d, target.d), dtype=complex)
        img[:, off:off + size, off:off + size] = yk
        out += target.coords(img).T
    return out


def _block_offsets(a: ConcreteStarAlgebra):
    sizes = _block_sizes(a)
    if sizes is None:
        raise StructureError("algebra is not in block form")
    offs = []
    o = 0
    for s in sizes:
        offs.append((o, s))
        o += s
    return offs


# -- isomorphism search --------------------------------------------------------------

@dataclass
class IsoResult:
    identified: bool
    residual: float
    matrix: np.ndarray | None
    message: str


def _hopf_residual(qa, qb, p) -> float:
    r = fnorm(qb.delta @ p - np.kron(p, p) @ qa.delta) / max(1.0, fnorm(qb.delta))
    r = max(r, fnorm(qb.counit @ p - qa.counit))
    return r


def find_isomorphism(qa: FiniteQuantumGroup, qb: FiniteQuantumGroup, tol: float = 1e-8,
                     seeds: int = 6, max_perms: int = 5040) -> IsoResult:
    """Search for a Hopf *-isomorphism qa -> qb.

    Both algebras are brought to block form; candidate maps permute blocks of
    equal size and conjugate the larger blocks by unitaries found with a
    seeded least-squares fit.  A failed search is reported as "not identified",
    which is not a proof that no isomorphism exists.
    """
    if qa.dim != qb.dim:
        return IsoResult(False, np.inf, None, "dimensions differ")
    a = qa if _is_block_form(qa.algebra) else block_form(qa)
    b = qb if _is_block_form(qb.algebra) else block_form(qb)
    sa, sb = _block_sizes(a.algebra), _block_sizes(b.algebra)
    if sorted(sa) != sorted(sb):
        return IsoResult(False, np.inf, None, f"block structures differ: {sa} vs {sb}")
    units = []
    off = 0
    for s in sa:
        e = np.zeros((s, s, a.algebra.d, a.algebra.d), dtype=complex)
        for i in range(s):
            for j in range(s):
                e[i, j, off + i, off + j] = 1
        units.append(e)
        off += s
    mults = [1] * len(sa)
    groups = {}
    for k, s in enumerate(sb):
        groups.setdefault(s, []).append(k)
    choices = []
    for s in sorted(set(sa)):
        src = [k for k, t in enumerate(sa) if t == s]
        choices.append((src, list(itertools.permutations(groups[s]))))
    rng = np.random.default_rng(7)
    best = (np.inf, None)
    big = [k for k, s in enumerate(sa) if s > 1]
    # coordinates living in one-dimensional blocks; their part of Delta does not see the unitaries
    small_a = _one_dim_coords(a.algebra)
    small_b = _one_dim_coords(b.algebra)
    rows_b = (small_b[:, None] * b.dim + small_b[None, :]).ravel()
    rows_a = (small_a[:, None] * a.dim + small_a[None, :]).ravel()
    count = 0
    for combo in itertools.product(*[c[1] for c in choices]):
        count += 1
        if count > max_perms:
            break
        perm = [0] * len(sa)
        for (src, _), tgt in zip(choices, combo):
            for s_k, t_k in zip(src, tgt):
                perm[s_k] = t_k

        def build(params):
            us = []
            pos = 0
            for k, s in enumerate(sa):
                if s == 1:
                    us.append(np.eye(1))
                    continue
                h = params[pos:pos + s * s]
                pos += s * s
                hm = np.zeros((s, s), dtype=complex)
                iu = np.triu_indices(s, 1)
                m = len(iu[0])
                hm[iu] = h[:m] + 1j * h[m:2 * m]
                hm = hm + dag(hm)
                hm[np.diag_indices(s)] = h[2 * m:2 * m + s]
                us.append(scipy.linalg.expm(1j * hm))
            return _transport_matrix(a.algebra, units, mults, b.algebra, us, perm)

        nparam = sum(sa[k] ** 2 for k in big)
        p0 = build(np.zeros(nparam))
        pre = (b.delta[np.ix_(rows_b, small_b)] @ p0[np.ix_(small_b, small_a)]
               - np.kron(p0[np.ix_(small_b, small_a)], p0[np.ix_(small_b, small_a)]) @ a.delta[np.ix_(rows_a, small_a)])
        if fnorm(pre) > tol or fnorm(b.counit[small_b] @ p0[np.ix_(small_b, small_a)] - a.counit[small_a]) > tol:
            continue
        if nparam == 0:
            p = build(np.zeros(0))
            r = _hopf_residual(a, b, p)
            if r < best[0]:
                best = (r, p)
            continue

        def fun(params):
            p = build(params)
            r = b.delta @ p - np.kron(p, p) @ a.delta
            return np.concatenate([r.real.ravel(), r.imag.ravel()])

        for _ in range(seeds):
            x0 = rng.normal(size=nparam) * np.pi
            sol = scipy.optimize.least_squares(fun, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
            p = build(sol.x)
            r = _hopf_residual(a, b, p)
            if r < best[0]:
                best = (r, p)
            if r <= tol * 1e-2:
                break
        if best[0] <= tol * 1e-2:
            break
    r, p = best
    if p is None or r > tol:
        return IsoResult(False, r, None, "not identified")
    # express in the original coordinates of qa, qb
    pa = _to_block_coords(qa, a)
    pb = _to_block_coords(qb, b)
    full = np.linalg.inv(pb) @ p @ pa
    return IsoResult(True, r, full, "identified")


def _one_dim_coords(alg) -> np.ndarray:
    out = []
    for k, b in enumerate(alg.basis):
        for (o, s) in _block_offsets(alg):
            if s == 1 and abs(b[o, o]) > 0.5:
                out.append(k)
    return np.array(out, dtype=int)


def _to_block_coords(q, qb) -> np.ndarray:
    """Coordinate change from q to its block form qb (identity when q is already blocked)."""
    if q is qb:
        return np.eye(q.dim)
    wb = q.algebra.blocks
    # recompute the same transport used by block_form
    fresh = block_form(q)
    if fresh.algebra.dim != qb.algebra.dim:
        raise NumericalError("block form changed between calls")
    units = list(wb.units)
    mults = list(wb.multiplicities)
    sizes = [u.shape[0] for u in units]
    order = sorted(range(len(units)), key=lambda k: (sizes[k], 1))
    return _transport_matrix(q.algebra, [units[k] for k in order], [mults[k] for k in order], qb.algebra)
