"""Finite-dimensional von Neumann algebras living concretely inside B(C^d).

An algebra is a Hilbert-Schmidt orthonormal basis of d x d matrices whose
span is a unital *-subalgebra.  Elements are handled either as concrete
matrices or as coordinate vectors in that basis.  A weight is a positive
functional, recorded by its values on the basis.

GNS spaces are always given orthonormal coordinates, so that modular
conjugations are honest antiunitaries of C^n and modular operators are
Hermitian matrices.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import linalg as la
from .errors import InputError, NumericalError, StructureError
from .linalg import AntilinearOp, dag, fnorm

_WEDDERBURN_SEED = 20240611


class ConcreteStarAlgebra:
    """Unital *-subalgebra of d x d matrices given by an orthonormal basis."""

    def __init__(self, basis, name: str | None = None, check: bool = False):
        b = np.ascontiguousarray(basis, dtype=complex)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise InputError(f"basis must be a stack of square matrices, got shape {b.shape}")
        self.basis = b
        self.basis.setflags(write=False)
        self.name = name
        if check:
            g = self.flat.conj() @ self.flat.T
            if la.residual(g, np.eye(self.dim)) > la.get_tol() * 10:
                raise InputError("basis is not Hilbert-Schmidt orthonormal")
            res = self.closure_residuals()
            bad = {k: v for k, v in res.items() if v > la.get_tol() * 10}
            if bad:
                raise StructureError(f"span is not a unital *-algebra: {bad}")

    # -- construction -------------------------------------------------
    @classmethod
    def from_span(cls, mats, name=None, rtol=None) -> "ConcreteStarAlgebra":
        mats = np.asarray(mats, dtype=complex)
        d = mats.shape[-1]
        q = la.orth(mats.reshape(len(mats), d * d).T, rtol)
        return cls(q.T.reshape(-1, d, d), name)

    @classmethod
    def full(cls, d: int, name=None) -> "ConcreteStarAlgebra":
        return cls(np.eye(d * d, dtype=complex).reshape(d * d, d, d), name or f"M{d}")

    @classmethod
    def scalars(cls, d: int, name=None) -> "ConcreteStarAlgebra":
        return cls(np.eye(d, dtype=complex)[None] / np.sqrt(d), name or "C")

    @classmethod
    def diagonal(cls, d: int, name=None) -> "ConcreteStarAlgebra":
        b = np.zeros((d, d, d), dtype=complex)
        for i in range(d):
            b[i, i, i] = 1
        return cls(b, name or f"D{d}")

    @classmethod
    def from_blocks(cls, sizes: Sequence[int], name=None) -> "ConcreteStarAlgebra":
        """Direct sum of full matrix blocks, one copy each, basis = matrix units."""
        sizes = [int(s) for s in sizes]
        if not sizes or min(sizes) < 1:
            raise InputError(f"block sizes must be positive, got {sizes}")
        d = sum(sizes)
        out = []
        off = 0
        for s in sizes:
            for i in range(s):
                for j in range(s):
                    e = np.zeros((d, d), dtype=complex)
                    e[off + i, off + j] = 1
                    out.append(e)
            off += s
        a = cls(np.array(out), name)
        a._block_sizes = sizes
        return a

    def tensor(self, other: "ConcreteStarAlgebra", name=None) -> "ConcreteStarAlgebra":
        b = np.einsum("aij,bkl->abikjl", self.basis, other.basis)
        d = self.d * other.d
        return ConcreteStarAlgebra(b.reshape(self.dim * other.dim, d, d), name)

    def conjugated(self, u: np.ndarray, name=None) -> "ConcreteStarAlgebra":
        """``u A u*`` for a unitary ``u``."""
        return ConcreteStarAlgebra(u @ self.basis @ dag(u), name)

    # -- basic data ---------------------------------------------------
    @property
    def d(self) -> int:
        return self.basis.shape[1]

    ambient_dim = d

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def __len__(self):
        return self.dim

    def __repr__(self):
        nm = f"{self.name!r}, " if self.name else ""
        return f"ConcreteStarAlgebra({nm}dim={self.dim}, ambient={self.d})"

    @cached_property
    def flat(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1)

    @cached_property
    def _flat_conj(self) -> np.ndarray:
        return np.ascontiguousarray(self.flat.conj())

    def coords(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.ndim == 2:
            return self._flat_conj @ x.ravel()
        return x.reshape(len(x), -1) @ self._flat_conj.T

    def element(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=complex)
        if c.ndim == 1:
            return np.tensordot(c, self.basis, axes=1)
        return (c @ self.flat).reshape(len(c), self.d, self.d)

    def membership(self, x) -> float:
        """Distance of ``x`` from the algebra relative to ``|x|``."""
        x = np.asarray(x, dtype=complex)
        r = x - self.element(self.coords(x))
        return fnorm(r) / max(1.0, fnorm(x))

    def max_membership(self, xs) -> float:
        """Largest :meth:`membership` over a stack of matrices."""
        xs = np.asarray(xs, dtype=complex)
        if len(xs) == 0:
            return 0.0
        r = xs - self.element(self.coords(xs))
        num = np.linalg.norm(r.reshape(len(xs), -1), axis=1)
        den = np.maximum(1.0, np.linalg.norm(xs.reshape(len(xs), -1), axis=1))
        return float(np.max(num / den))

    def contains(self, x, tol=None) -> bool:
        tol = la.get_tol() if tol is None else tol
        return self.membership(x) <= tol

    def subalgebra_residual(self, other: "ConcreteStarAlgebra") -> float:
        """Largest membership residual of ``other``'s basis in ``self``."""
        if other.d != self.d:
            raise InputError("algebras live in different ambient spaces")
        r = other.basis - self.element(self.coords(other.basis))
        return float(np.sqrt(np.max(np.sum(abs(r.reshape(other.dim, -1)) ** 2, axis=1))))

    def same_span_residual(self, other: "ConcreteStarAlgebra") -> float:
        if self.dim != other.dim:
            return 1.0
        return max(self.subalgebra_residual(other), other.subalgebra_residual(self))

    @cached_property
    def unit_coords(self) -> np.ndarray:
        return self.coords(np.eye(self.d))

    @cached_property
    def star_matrix(self) -> np.ndarray:
        """Matrix ``A`` with ``coords(x*) = A @ conj(coords(x))``."""
        return self.coords(np.conj(np.transpose(self.basis, (0, 2, 1)))).T

    def star_coords(self, c) -> np.ndarray:
        return self.star_matrix @ np.conj(c)

    def left_mult(self, x) -> np.ndarray:
        """Matrix of ``y -> x y`` in coordinates."""
        return self.coords(np.asarray(x) @ self.basis).T

    def closure_residuals(self) -> dict:
        tol_rows = {}
        adj = np.conj(np.transpose(self.basis, (0, 2, 1)))
        r = adj - self.element(self.coords(adj))
        tol_rows["adjoint"] = float(np.max(np.linalg.norm(r.reshape(self.dim, -1), axis=1)))
        worst = 0.0
        for i in range(self.dim):
            p = self.basis[i] @ self.basis
            r = p - self.element(self.coords(p))
            worst = max(worst, float(np.max(np.linalg.norm(r.reshape(self.dim, -1), axis=1))))
        tol_rows["product"] = worst
        tol_rows["unit"] = self.membership(np.eye(self.d))
        return tol_rows

    def random_element(self, rng: np.random.Generator, hermitian=False) -> np.ndarray:
        c = rng.normal(size=self.dim) + 1j * rng.normal(size=self.dim)
        x = self.element(c)
        if hermitian:
            x = (x + dag(x)) / 2
        return x

    # -- structure ----------------------------------------------------
    @cached_property
    def structure(self) -> np.ndarray:
        """``C[a, p, r]`` = coordinate a of ``b_p b_r``."""
        b = self.basis
        fc = self.flat.conj().T
        out = np.empty((self.dim, self.dim, self.dim), dtype=complex)
        for p in range(self.dim):
            out[:, p, :] = ((b[p] @ b).reshape(self.dim, -1) @ fc).T
        return out

    @cached_property
    def blocks(self) -> "Wedderburn":
        return wedderburn(self)

    def to_json(self) -> dict:
        return {
            "kind": "algebra",
            "name": self.name,
            "ambient_dim": self.d,
            "basis": [la.matrix_to_json(b) for b in self.basis],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConcreteStarAlgebra":
        name = data.get("name")
        if "blocks" in data:
            return cls.from_blocks(data["blocks"], name)
        if "basis" not in data or "ambient_dim" not in data:
            raise InputError(f"algebra {name!r} needs 'ambient_dim' and 'basis' (or 'blocks')")
        d = int(data["ambient_dim"])
        mats = [la.matrix_from_json(b) for b in data["basis"]]
        for m in mats:
            if m.shape != (d, d):
                raise InputError(f"algebra {name!r}: basis matrix of shape {m.shape}, expected {(d, d)}")
        if not mats:
            raise InputError(f"algebra {name!r} has an empty basis")
        return cls(np.array(mats), name, check=True)


# -- Wedderburn decomposition --------------------------------------------

@dataclass
class Wedderburn:
    """Matrix units of a finite-dimensional C*-algebra in its concrete position.

    ``units[k]`` has shape (n_k, n_k, d, d); ``multiplicities[k]`` is the rank of
    a minimal projection of block ``k``.
    """

    units: list
    multiplicities: list

    @property
    def sizes(self) -> list:
        return [u.shape[0] for u in self.units]

    def central_projections(self) -> list:
        return [np.einsum("iijk->jk", u) for u in self.units]

    def minimal_projections(self) -> list:
        return [u[0, 0] for u in self.units]


def _group_eigen(w, v, gap):
    groups = []
    start = 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > gap:
            groups.append(v[:, start:i])
            start = i
    return groups


def wedderburn(a: ConcreteStarAlgebra, attempts: int = 4) -> Wedderburn:
    rng = np.random.default_rng(_WEDDERBURN_SEED + a.dim)
    tol = la.get_tol()
    for _ in range(attempts):
        h = a.random_element(rng, hermitian=True)
        w, v = np.linalg.eigh(h)
        scale = max(1.0, float(abs(w).max()))
        groups = _group_eigen(w, v, 1e-7 * scale)
        projs = [g @ dag(g) for g in groups]
        x1 = a.random_element(rng)
        x2 = a.random_element(rng)
        # minimal projections p, q share a block iff p A q != 0
        n = len(projs)
        linked = np.zeros((n, n), dtype=bool)
        for i in range(n):
            for j in range(n):
                m = max(fnorm(projs[i] @ x1 @ projs[j]), fnorm(projs[i] @ x2 @ projs[j]))
                linked[i, j] = m > 1e-6 * max(fnorm(x1), 1.0)
        seen = set()
        blocks = []
        for i in range(n):
            if i in seen:
                continue
            members = [j for j in range(n) if linked[i, j]]
            seen.update(members)
            blocks.append(members)
        units = []
        mults = []
        for members in blocks:
            p1 = projs[members[0]]
            rank = int(round(np.trace(p1).real))
            row = [p1]
            for j in members[1:]:
                vij = p1 @ x1 @ projs[j]
                c = np.trace(vij @ dag(vij)).real / rank
                row.append(vij / np.sqrt(c))
            k = len(members)
            e = np.empty((k, k, a.d, a.d), dtype=complex)
            for i in range(k):
                for j in range(k):
                    e[i, j] = dag(row[i]) @ row[j]
            units.append(e)
            mults.append(rank)
        total = sum(u.shape[0] ** 2 for u in units)
        if total != a.dim:
            continue
        flat = np.concatenate([u.reshape(-1, a.d, a.d) for u in units])
        if a.max_membership(flat) > 1e3 * tol:
            continue
        if la.residual(sum(np.einsum("iijk->jk", u) for u in units), np.eye(a.d)) > 1e3 * tol:
            continue
        order = sorted(range(len(units)), key=lambda k: (units[k].shape[0], mults[k]))
        return Wedderburn([units[k] for k in order], [mults[k] for k in order])
    raise NumericalError("could not find matrix units for the algebra")


def bratteli(a: ConcreteStarAlgebra) -> dict:
    wb = a.blocks
    return {"block_sizes": wb.sizes, "multiplicities": wb.multiplicities}


def inclusion_matrix(small: ConcreteStarAlgebra, big: ConcreteStarAlgebra) -> np.ndarray:
    """Integer multiplicity matrix of ``small`` inside ``big`` (rows: blocks of small)."""
    ws, wb = small.blocks, big.blocks
    qs = wb.central_projections()
    fs = wb.minimal_projections()
    out = np.zeros((len(ws.units), len(qs)), dtype=int)
    for i, p in enumerate(ws.minimal_projections()):
        for j, (q, f) in enumerate(zip(qs, fs)):
            val = np.trace(p @ q).real / np.trace(f).real
            out[i, j] = int(round(val))
            if abs(val - out[i, j]) > 1e-6:
                raise NumericalError(f"non-integral inclusion multiplicity {val}")
    return out


# -- commutants, generation, intersections -------------------------------

def commutant(a: ConcreteStarAlgebra, name=None) -> ConcreteStarAlgebra:
    """Full commutant in B(C^d), assembled from the matrix units of ``a``.

    For a block with units e_ij and multiplicity space V = range(e_11), every
    element of the commutant restricted to that block is sum_i e_i1 y e_1i
    with y in B(V).
    """
    out = []
    for e, m in zip(a.blocks.units, a.blocks.multiplicities):
        vecs = la.orth(e[0, 0])
        k = e.shape[0]
        for s in range(m):
            for t in range(m):
                y = np.outer(vecs[:, s], vecs[:, t].conj())
                x = sum(e[i, 0] @ y @ e[0, i] for i in range(k))
                out.append(x / np.sqrt(k))
    # these elements are already Hilbert-Schmidt orthonormal, so skip the SVD
    return ConcreteStarAlgebra(np.array(out), name)


def commutant_nullspace(a: ConcreteStarAlgebra, name=None) -> ConcreteStarAlgebra:
    """Commutant as the null space of the stacked system ``x b - b x = 0``.

    Cost grows like d^6, so this is only practical for small ambient spaces;
    it serves as an independent check on :func:`commutant`.
    """
    d = a.d
    eye = np.eye(d)
    rows = [np.kron(b, eye) - np.kron(eye, b.T) for b in a.basis]
    ns = la.null_space(np.vstack(rows), atol=1e-10)
    return ConcreteStarAlgebra.from_span(ns.T.reshape(-1, d, d), name)


_GENERATED_CACHE: dict = {}


def generated_algebra(gens, ambient_dim: int | None = None, name=None,
                      rtol: float | None = None, chunk: int = 32) -> ConcreteStarAlgebra:
    """Smallest unital *-algebra containing ``gens``.

    Grows the span of words in the generators and their adjoints one letter at
    a time until no new direction appears.
    """
    gens = [np.asarray(g, dtype=complex) for g in gens]
    if ambient_dim is None:
        if not gens:
            raise InputError("need generators or an ambient dimension")
        ambient_dim = gens[0].shape[0]
    d = ambient_dim
    for g in gens:
        if g.shape != (d, d):
            raise InputError(f"generator of shape {g.shape} in ambient dimension {d}")
    rtol = la.get_tol() if rtol is None else rtol
    key = hashlib.sha1(np.ascontiguousarray(np.array(gens).reshape(-1, d, d)).tobytes()
                       + repr((d, rtol)).encode()).hexdigest()
    if key in _GENERATED_CACHE:
        return ConcreteStarAlgebra(_GENERATED_CACHE[key], name)
    letters = []
    # generators that are numerically zero relative to the rest carry only noise
    top = max([fnorm(g) for g in gens], default=0.0)
    for g in gens:
        nrm = fnorm(g)
        if nrm <= rtol * top or nrm == 0:
            continue
        letters.append(g / nrm)
        if fnorm(g - dag(g)) > rtol * nrm:
            letters.append(dag(g) / nrm)
    letters = np.array(letters).reshape(-1, d, d)
    basis = np.zeros((d * d, 0), dtype=complex)

    def absorb(mats):
        nonlocal basis
        cand = mats.reshape(len(mats), -1).T
        ref = max(1e-300, float(np.max(np.linalg.norm(cand, axis=0))))
        for _ in range(2):
            cand = cand - basis @ (dag(basis) @ cand)
        # most words already lie in the span; drop them before the SVD
        cand = cand[:, np.linalg.norm(cand, axis=0) > rtol * ref]
        if cand.shape[1] == 0:
            return np.zeros((0, d, d), dtype=complex)
        u, s, _ = np.linalg.svd(cand, full_matrices=False)
        new = u[:, s > rtol * ref]
        for _ in range(2):
            new = new - basis @ (dag(basis) @ new)
            new = np.linalg.qr(new)[0] if new.shape[1] else new
        basis = np.hstack([basis, new])
        return new.T.reshape(-1, d, d)

    queue = list(absorb(np.eye(d, dtype=complex)[None]))
    while queue:
        batch, queue = queue[:chunk], queue[chunk:]
        prods = np.matmul(np.array(batch)[:, None], letters[None]).reshape(-1, d, d)
        if len(prods):
            queue.extend(absorb(prods))
    out = ConcreteStarAlgebra(basis.T.reshape(-1, d, d), name)
    # same generators give the same algebra; keep a few recent results
    if len(_GENERATED_CACHE) >= 16:
        _GENERATED_CACHE.pop(next(iter(_GENERATED_CACHE)))
    _GENERATED_CACHE[key] = out.basis
    return out


def intersection(a: ConcreteStarAlgebra, b: ConcreteStarAlgebra, name=None) -> ConcreteStarAlgebra:
    """Common part of two subspaces, via principal angles."""
    if a.d != b.d:
        raise InputError("algebras live in different ambient spaces")
    ua = a.flat.T
    ub = b.flat.T
    u, s, _ = np.linalg.svd(dag(ua) @ ub)
    k = int(np.sum(s > 1 - 1e-7))
    vecs = ua @ u[:, :k]
    if k == 0:
        raise StructureError("intersection of unital algebras cannot be zero")
    return ConcreteStarAlgebra(vecs.T.reshape(-1, a.d, a.d), name)


def center(a: ConcreteStarAlgebra, name=None) -> ConcreteStarAlgebra:
    projs = a.blocks.central_projections()
    return ConcreteStarAlgebra.from_span(np.array(projs), name)


def is_factor(a: ConcreteStarAlgebra) -> bool:
    return len(a.blocks.units) == 1


def relative_commutant(big: ConcreteStarAlgebra, small: ConcreteStarAlgebra, name=None):
    """``big ∩ small'``.

    Picks the cheaper of two routes: intersecting with the full commutant, or
    solving ``[x, s] = 0`` for x in big when small is tiny and its commutant huge.
    """
    if small.dim == 1:
        return ConcreteStarAlgebra(big.basis, name)
    comm_dim = sum(m * m for m in small.blocks.multiplicities)
    if small.dim * big.dim < comm_dim:
        rows = np.concatenate([(big.basis @ s - s @ big.basis).reshape(big.dim, -1).T
                               for s in small.basis])
        r = np.linalg.qr(rows, mode="r") if rows.shape[0] > big.dim else rows
        ns = la.null_space(r, 1e-9, atol=1e-9)
        vecs = big.flat.T @ ns
        return ConcreteStarAlgebra(vecs.T.reshape(-1, big.d, big.d), name)
    return intersection(big, commutant(small), name)


# -- weights --------------------------------------------------------------

class Weight:
    """A positive functional on a concrete algebra, stored by its basis values."""

    def __init__(self, algebra: ConcreteStarAlgebra, values, name: str | None = None):
        v = np.asarray(values, dtype=complex).ravel()
        if v.shape != (algebra.dim,):
            raise InputError(f"weight needs {algebra.dim} values, got {v.shape[0]}")
        self.algebra = algebra
        self.values = v
        self.values.setflags(write=False)
        self.name = name

    @classmethod
    def from_density(cls, algebra, q, name=None) -> "Weight":
        q = np.asarray(q, dtype=complex)
        vals = np.einsum("ij,aji->a", q, algebra.basis)
        return cls(algebra, vals, name or "density")

    @classmethod
    def trace(cls, algebra, name=None) -> "Weight":
        return cls.from_density(algebra, np.eye(algebra.d), name or "trace")

    def __call__(self, x) -> complex:
        return complex(self.values @ self.algebra.coords(x))

    def on_coords(self, c) -> complex:
        return complex(self.values @ c)

    def scaled(self, c: float) -> "Weight":
        return Weight(self.algebra, self.values * c, self.name)

    @cached_property
    def density(self) -> np.ndarray:
        """The unique ``Q`` in the algebra with ``theta(x) = Tr(Q x)``."""
        b = self.algebra.basis
        t = np.einsum("kij,aji->ak", b, b)
        q = np.linalg.solve(t, self.values)
        qm = self.algebra.element(q)
        return (qm + dag(qm)) / 2

    @cached_property
    def gram(self) -> np.ndarray:
        """``G[i, j] = theta(b_j^* b_i)``."""
        b = self.algebra.basis
        bq = b @ self.density
        return np.einsum("jkl,ikl->ij", b.conj(), bq)

    def positivity(self) -> float:
        g = self.gram
        w = np.linalg.eigvalsh((g + dag(g)) / 2)
        return float(w.min())

    def is_faithful(self, tol=None) -> bool:
        tol = la.get_tol() if tol is None else tol
        g = self.gram
        w = np.linalg.eigvalsh((g + dag(g)) / 2)
        return bool(w.min() > tol * max(1.0, abs(w).max()))

    def sigma(self, t: float, x) -> np.ndarray:
        """Modular automorphism ``Q^{it} x Q^{-it}``."""
        qt = la.funcalc(self.density, "power", 1j * t)
        return qt @ x @ dag(qt)

    def sigma_analytic(self, z: complex, x) -> np.ndarray:
        """``sigma_z(x) = Q^{iz} x Q^{-iz}`` for complex ``z``."""
        return la.funcalc(self.density, "power", 1j * z) @ x @ la.funcalc(self.density, "power", -1j * z)

    @cached_property
    def gns(self) -> "GnsData":
        return gns(self)

    def to_json(self) -> dict:
        return {
            "kind": "weight",
            "name": self.name,
            "algebra": self.algebra.name,
            "values": la.vector_to_json(self.values),
        }


def weight_from_json(data: dict, algebra: ConcreteStarAlgebra) -> Weight:
    name = data.get("name")
    if "values" in data:
        vals = la.vector_from_json(data["values"])
        if vals.shape[0] != algebra.dim:
            raise InputError(f"weight {name!r}: {vals.shape[0]} values for a {algebra.dim}-dim algebra")
        w = Weight(algebra, vals, name)
    elif "density" in data:
        q = la.matrix_from_json(data["density"])
        if q.shape != (algebra.d, algebra.d):
            raise InputError(f"weight {name!r}: density of shape {q.shape}, expected {(algebra.d, algebra.d)}")
        w = Weight.from_density(algebra, q, name)
    else:
        raise InputError(f"weight {name!r} needs 'values' or 'density'")
    return w


@dataclass
class GnsData:
    """Concrete GNS construction with orthonormal coordinates.

    ``lam`` maps algebra coordinates to GNS vectors, so ``Lambda(x) = lam @ coords(x)``.
    """

    weight: Weight
    lam: np.ndarray
    j: AntilinearOp
    nabla: np.ndarray
    density: np.ndarray

    @property
    def gns_dim(self) -> int:
        return self.lam.shape[0]

    @cached_property
    def lam_inv(self) -> np.ndarray:
        return np.linalg.inv(self.lam)

    def vec(self, x) -> np.ndarray:
        return self.lam @ self.weight.algebra.coords(x)

    def pi(self, x) -> np.ndarray:
        return self.lam @ self.weight.algebra.left_mult(x) @ self.lam_inv

    def unvec(self, v) -> np.ndarray:
        """Inverse of Lambda (bijective at finite dimension)."""
        return self.weight.algebra.element(self.lam_inv @ v)

    @cached_property
    def pi_basis(self) -> np.ndarray:
        a = self.weight.algebra
        return np.array([self.pi(b) for b in a.basis])

    @cached_property
    def represented(self) -> ConcreteStarAlgebra:
        """``pi(N)`` as an algebra on the GNS space."""
        return ConcreteStarAlgebra.from_span(self.pi_basis)

    def jxj(self, x) -> np.ndarray:
        return self.j.sandwich(x)

    def invariant_residuals(self) -> dict:
        a = self.weight.algebra
        cs = np.eye(a.dim)
        vecs = self.lam @ cs
        g = dag(vecs) @ vecs
        gram_res = la.residual(g, self.weight.gram.T)
        half = la.funcalc(self.nabla, "power", 0.5)
        lhs = self.j.base @ np.conj(half @ vecs)
        rhs = self.lam @ a.star_matrix @ np.conj(cs)
        jj = self.j @ self.j
        return {
            "gram": gram_res,
            "tomita": la.residual(lhs, rhs),
            "j_involution": la.residual(jj, np.eye(a.dim)),
            "nabla_hermitian": la.residual(self.nabla, dag(self.nabla)),
        }


def gns(theta: Weight) -> GnsData:
    if not theta.is_faithful():
        raise InputError(f"weight {theta.name!r} is not faithful")
    a = theta.algebra
    g = theta.gram.T
    r = la.sqrtm_psd((g + dag(g)) / 2)
    # Tomita map Lambda(x) -> Lambda(x*) in these coordinates
    s = AntilinearOp(r @ a.star_matrix @ np.linalg.inv(r).conj())
    j, nab = la.polar_antilinear(s)
    return GnsData(theta, r, j, (nab + dag(nab)) / 2, theta.density)


def connes_cocycle(theta2: Weight, theta1: Weight, t: float) -> np.ndarray:
    """``[D theta2 : D theta1]_t = Q2^{it} Q1^{-it}``."""
    if theta2.algebra is not theta1.algebra and theta2.algebra.same_span_residual(theta1.algebra) > la.get_tol():
        raise InputError("Connes cocycle needs two weights on the same algebra")
    return la.funcalc(theta2.density, "power", 1j * t) @ la.funcalc(theta1.density, "power", -1j * t)


def relative_modular(theta2: Weight, theta1: Weight):
    """Relative modular conjugation ``J_{2,1}`` (GNS_1 -> GNS_2) and ``u = J_{2,1} J_1``."""
    if theta2.algebra is not theta1.algebra and theta2.algebra.same_span_residual(theta1.algebra) > la.get_tol():
        raise InputError("relative modular theory needs two weights on the same algebra")
    a = theta1.algebra
    g1, g2 = theta1.gns, theta2.gns
    s21 = AntilinearOp(g2.lam @ a.star_matrix @ np.conj(g1.lam_inv))
    j21, _ = la.polar_antilinear(s21)
    u = j21 @ g1.j
    return j21, u


def balanced_weight(theta1: Weight, theta2: Weight, name=None) -> Weight:
    """Weight on ``N (x) M_2`` with value theta1(x11) + theta2(x22)."""
    a = theta1.algebra
    if theta2.algebra is not a and a.same_span_residual(theta2.algebra) > la.get_tol():
        raise InputError("balanced weight needs two weights on the same algebra")
    m2 = ConcreteStarAlgebra.full(2)
    big = a.tensor(m2)
    q = np.kron(theta1.density, np.diag([1.0, 0.0])) + np.kron(theta2.density, np.diag([0.0, 1.0]))
    return Weight.from_density(big, q, name)


def theta_psi(psi: Weight, xi) -> np.ndarray:
    """``Theta^psi(xi) = R(xi) R(xi)^*`` where ``R(xi) Lambda_psi(x) = x xi``."""
    g = psi.gns
    b = psi.algebra.basis
    cols = np.einsum("aij,j->ia", b, np.asarray(xi, dtype=complex))
    r = cols @ g.lam_inv
    return r @ dag(r)


def spatial_derivative(phi: Weight, psi: Weight) -> np.ndarray:
    """Connes' spatial derivative ``d phi / d psi`` on C^d.

    ``phi`` lives on N and ``psi`` on N'.  The positive operator is read off
    from the quadratic form ``xi -> phi(Theta^psi(xi))`` by polarization.
    """
    d = phi.algebra.d
    if psi.algebra.d != d:
        raise InputError("phi and psi must act on the same space")
    q = phi.density
    g = psi.gns
    b = psi.algebra.basis
    ginv = g.lam_inv @ dag(g.lam_inv)
    # sesquilinear form s(xi, eta) = phi(R(xi) R(eta)^*) = eta^H D xi
    dmat = np.einsum("ab,bki,kl,alj->ij", ginv, b.conj(), q, b)
    dmat = (dmat + dag(dmat)) / 2
    w = np.linalg.eigvalsh(dmat)
    if w.min() <= la.get_tol() * max(1.0, abs(w).max()):
        raise NumericalError("spatial derivative form is degenerate")
    return dmat


def quadratic_form(phi: Weight, psi: Weight, xi) -> float:
    """``xi -> phi(Theta^psi(xi))`` evaluated directly."""
    return phi(theta_psi(psi, xi)).real


def tensor_coords(x, a: ConcreteStarAlgebra, b: ConcreteStarAlgebra) -> np.ndarray:
    """Coordinates of ``x`` on the basis ``a_p (x) b_q``, flattened with p slow."""
    x = np.asarray(x, dtype=complex)
    t = x.reshape(a.d, b.d, a.d, b.d).transpose(0, 2, 1, 3).reshape(a.d * a.d, b.d * b.d)
    return (a.flat.conj() @ t @ b.flat.conj().T).ravel()


def tensor_element(c, a: ConcreteStarAlgebra, b: ConcreteStarAlgebra) -> np.ndarray:
    c = np.asarray(c, dtype=complex).reshape(a.dim, b.dim)
    t = (a.flat.T @ c @ b.flat).reshape(a.d, a.d, b.d, b.d)
    return t.transpose(0, 2, 1, 3).reshape(a.d * b.d, a.d * b.d)


def tensor_membership(x, a: ConcreteStarAlgebra, b: ConcreteStarAlgebra) -> float:
    """Distance of ``x`` from ``a (x) b`` relative to ``|x|``."""
    x = np.asarray(x, dtype=complex)
    r = x - tensor_element(tensor_coords(x, a, b), a, b)
    return fnorm(r) / max(1.0, fnorm(x))


def tensor_mult(structs, x, y) -> np.ndarray:
    """Product of two elements of ``A_1 (x) ... (x) A_k`` given in Kronecker coordinates.

    Contracts one factor at a time against ``x (x) y``, which keeps every step a matmul.
    """
    dims = [c.shape[0] for c in structs]
    k = len(structs)
    s = np.multiply.outer(np.reshape(x, dims), np.reshape(y, dims))
    for i, c in enumerate(structs):
        # axes: finished outputs, then the remaining left and right legs
        s = np.moveaxis(s, (i, k), (0, 1))
        sh = s.shape
        s = (c.reshape(dims[i], -1) @ s.reshape(dims[i] * dims[i], -1)).reshape(dims[i], *sh[2:])
        s = np.moveaxis(s, 0, i)
    return s.ravel()
