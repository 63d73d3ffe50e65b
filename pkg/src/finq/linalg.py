"""Dense complex matrix kernel.

Everything downstream is a plain ``numpy`` complex array.  Operators on a
tensor product of legs use the Kronecker convention in which the first
factor is the slow index, so ``kron(a, b) @ kron(v, w) == kron(a @ v, b @ w)``.
Leg bookkeeping (the ``X_13`` style of notation) goes through
:func:`permute_legs` and :func:`on_legs` only.

Antilinear maps are stored as ``v -> base @ conj(v)`` in the canonical basis;
see :class:`AntilinearOp`.
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import InputError, NumericalError

DEFAULT_TOL = 1e-9
_tol = [DEFAULT_TOL]


def get_tol() -> float:
    return _tol[0]


def set_tol(value: float) -> None:
    if not (value > 0 and np.isfinite(value)):
        raise InputError(f"tolerance must be a positive finite number, got {value!r}")
    _tol[0] = float(value)


@contextlib.contextmanager
def tolerance(value: float):
    """Temporarily change the global tolerance."""
    old = get_tol()
    set_tol(value)
    try:
        yield
    finally:
        _tol[0] = old


def asmat(x) -> np.ndarray:
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2:
        raise InputError(f"expected a matrix, got array of shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix has non-finite entries")
    return a


def dag(x: np.ndarray) -> np.ndarray:
    return x.conj().T


def fnorm(x) -> float:
    return float(np.linalg.norm(x))


def residual(a, b) -> float:
    """Frobenius distance of ``a`` and ``b`` relative to their size (floored at 1).

    Two antilinear operators are compared through their bases.
    """
    a = np.asarray(a.base if isinstance(a, AntilinearOp) else a)
    b = np.asarray(b.base if isinstance(b, AntilinearOp) else b)
    scale = max(1.0, fnorm(a), fnorm(b))
    return fnorm(a - b) / scale


def kron(a, b) -> np.ndarray:
    return np.kron(a, b)


def kron_all(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def flip(dim1: int, dim2: int) -> np.ndarray:
    """The unitary sending ``v (x) w`` in C^dim1 (x) C^dim2 to ``w (x) v``."""
    n = dim1 * dim2
    s = np.zeros((n, n), dtype=complex)
    for i in range(dim1):
        for j in range(dim2):
            s[j * dim1 + i, i * dim2 + j] = 1.0
    return s


def permute_legs(x: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder the tensor legs of an operator or a vector.

    ``dims`` are the leg dimensions of ``x``.  Leg ``k`` of the result is leg
    ``perm[k]`` of the input.
    """
    dims = list(dims)
    perm = list(perm)
    if sorted(perm) != list(range(len(dims))):
        raise InputError(f"{perm} is not a permutation of {len(dims)} legs")
    n = len(dims)
    total = int(np.prod(dims))
    new_dims = [dims[p] for p in perm]
    if x.ndim == 1:
        if x.shape[0] != total:
            raise InputError("vector size does not match leg dimensions")
        return x.reshape(dims).transpose(perm).reshape(total)
    if x.shape != (total, total):
        raise InputError(f"operator of shape {x.shape} does not act on legs {dims}")
    t = x.reshape(dims + dims)
    t = t.transpose(perm + [n + p for p in perm])
    return t.reshape(int(np.prod(new_dims)), int(np.prod(new_dims)))


def on_legs(x: np.ndarray, dims: Sequence[int], legs: Sequence[int]) -> np.ndarray:
    """Place an operator acting on the listed legs into the full tensor product.

    ``on_legs(W, [n, n, n], [0, 2])`` is ``W_13``.  The order of ``legs`` matters:
    the first leg of ``x`` lands on ``legs[0]``.
    """
    dims = list(dims)
    legs = list(legs)
    rest = [k for k in range(len(dims)) if k not in legs]
    sub = int(np.prod([dims[k] for k in legs]))
    if x.shape != (sub, sub):
        raise InputError(f"operator of shape {x.shape} does not act on legs {legs}")
    full = np.kron(x, np.eye(int(np.prod([dims[k] for k in rest])) if rest else 1))
    order = legs + rest
    cur_dims = [dims[k] for k in order]
    # leg j of ``full`` is original leg order[j]; invert that
    inv = [order.index(k) for k in range(len(dims))]
    return permute_legs(full, cur_dims, inv)


def vector_functional(xi, eta) -> np.ndarray:
    """Density ``D`` with ``Tr(D a) = <a xi, eta>``."""
    xi = np.asarray(xi, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    return np.outer(xi, eta.conj())


def slice_left(omega: np.ndarray, x: np.ndarray, d2: int | None = None) -> np.ndarray:
    """``(omega (x) id)(x)`` where ``omega(a) = Tr(omega @ a)`` on the first leg."""
    d1 = omega.shape[0]
    if omega.shape != (d1, d1):
        raise InputError("functional density must be square")
    if d2 is None:
        if x.shape[0] % d1:
            raise InputError("operator size is not a multiple of the functional size")
        d2 = x.shape[0] // d1
    if x.shape != (d1 * d2, d1 * d2):
        raise InputError(f"cannot slice {x.shape} operator by a {d1}-dim functional")
    t = x.reshape(d1, d2, d1, d2)
    return np.einsum("ji,ikjl->kl", omega, t)


def slice_right(omega: np.ndarray, x: np.ndarray, d1: int | None = None) -> np.ndarray:
    """``(id (x) omega)(x)`` on the second leg."""
    d2 = omega.shape[0]
    if omega.shape != (d2, d2):
        raise InputError("functional density must be square")
    if d1 is None:
        if x.shape[0] % d2:
            raise InputError("operator size is not a multiple of the functional size")
        d1 = x.shape[0] // d2
    if x.shape != (d1 * d2, d1 * d2):
        raise InputError(f"cannot slice {x.shape} operator by a {d2}-dim functional")
    t = x.reshape(d1, d2, d1, d2)
    return np.einsum("lk,ikjl->ij", omega, t)


def is_hermitian(q, tol: float | None = None) -> bool:
    tol = get_tol() if tol is None else tol
    return fnorm(q - dag(q)) <= tol * max(1.0, fnorm(q))


def funcalc(q, kind: str, z: complex | None = None) -> np.ndarray:
    """Apply ``t -> t**z``, ``log`` or ``exp`` to a positive definite matrix."""
    q = asmat(q)
    if q.shape[0] != q.shape[1]:
        raise NumericalError("functional calculus needs a square matrix")
    tol = get_tol()
    if not is_hermitian(q, tol):
        raise NumericalError("functional calculus needs a Hermitian matrix")
    w, v = np.linalg.eigh((q + dag(q)) / 2)
    if w.min() <= tol * max(1.0, abs(w).max()):
        raise NumericalError(f"matrix is not positive definite (min eigenvalue {w.min():.3e})")
    if kind == "power":
        if z is None:
            raise InputError("power needs an exponent")
        f = np.exp(complex(z) * np.log(w))
    elif kind == "log":
        f = np.log(w).astype(complex)
    elif kind == "exp":
        f = np.exp(w).astype(complex)
    else:
        raise InputError(f"unknown function tag {kind!r}")
    return (v * f) @ dag(v)


def sqrtm_psd(q) -> np.ndarray:
    return funcalc(q, "power", 0.5)


@dataclass(frozen=True)
class AntilinearOp:
    """The antilinear map ``v -> base @ conj(v)``.

    Composition follows the type: antilinear after antilinear is a plain
    matrix, anything mixed with an antilinear is antilinear again.
    """

    base: np.ndarray
    # let ``ndarray @ AntilinearOp`` fall through to __rmatmul__
    __array_ufunc__ = None

    def __post_init__(self):
        b = asmat(self.base)
        if b.shape[0] != b.shape[1]:
            raise InputError("antilinear operator must be square")
        object.__setattr__(self, "base", b)

    @property
    def dim(self) -> int:
        return self.base.shape[0]

    def __call__(self, v):
        return self.base @ np.conj(v)

    def __matmul__(self, other):
        if isinstance(other, AntilinearOp):
            return self.base @ other.base.conj()
        other = np.asarray(other)
        if other.ndim == 1:
            return self(other)
        return AntilinearOp(self.base @ other.conj())

    def __rmatmul__(self, other):
        return AntilinearOp(np.asarray(other) @ self.base)

    def adjoint(self, gram=None) -> "AntilinearOp":
        """Antilinear adjoint: ``<A v, w> = <A^* w, v>`` for the given Gram matrix."""
        if gram is None:
            return AntilinearOp(self.base.T)
        g = asmat(gram)
        return AntilinearOp(np.linalg.solve(g, self.base.T @ g.T))

    def conjugate(self, x: np.ndarray) -> np.ndarray:
        """The linear operator ``A x A^{-1}`` for invertible ``A``."""
        return self.base @ x.conj() @ np.linalg.inv(self.base)

    def sandwich(self, x: np.ndarray) -> np.ndarray:
        """``A x A`` as a linear operator (used for ``J x J``)."""
        return self.base @ x.conj() @ self.base.conj()


def conjugation(n: int) -> AntilinearOp:
    return AntilinearOp(np.eye(n, dtype=complex))


def polar_antilinear(s: AntilinearOp, gram=None):
    """Polar decomposition ``s = J o nabla^(1/2)`` in the geometry of ``gram``.

    Returns ``(J, nabla)`` with ``J`` antiunitary and ``nabla`` positive for
    the inner product ``<v, w> = w^H gram v``.
    """
    n = s.dim
    if gram is None:
        r = np.eye(n, dtype=complex)
        rinv = r
    else:
        g = asmat(gram)
        r = sqrtm_psd(g)
        rinv = np.linalg.inv(r)
    # move to orthonormal coordinates u = r v
    b = r @ s.base @ rinv.conj()
    sv = np.linalg.svd(b, compute_uv=False)
    if sv.min() <= get_tol() * max(1.0, sv.max()):
        raise NumericalError("antilinear map is singular")
    nab = b.T @ b.conj()
    nab = (nab + dag(nab)) / 2
    jb = b @ funcalc(nab, "power", -0.5).conj()
    j = AntilinearOp(rinv @ jb @ r.conj())
    return j, rinv @ nab @ r


def null_space(a, rtol: float | None = None, atol: float = 0.0) -> np.ndarray:
    """Orthonormal basis (as columns) of the kernel of ``a``.

    Singular values at or below ``max(rtol * smax, atol)`` count as zero; the
    absolute floor matters when ``a`` itself is zero up to rounding.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape[0] == 0:
        return np.eye(a.shape[1], dtype=complex)
    rtol = get_tol() if rtol is None else rtol
    if atol == 0.0:
        return scipy.linalg.null_space(a, rcond=rtol)
    _, s, vh = scipy.linalg.svd(a, full_matrices=True)
    cut = max(rtol * (s[0] if s.size else 0.0), atol)
    rank = int(np.sum(s > cut))
    return vh[rank:].conj().T


def orth(vectors, rtol: float | None = None) -> np.ndarray:
    """Orthonormal basis (as columns) of the column span, rank cut at ``rtol * smax``."""
    v = np.asarray(vectors, dtype=complex)
    if v.size == 0:
        return np.zeros((v.shape[0], 0), dtype=complex)
    rtol = get_tol() if rtol is None else rtol
    u, s, _ = np.linalg.svd(v, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((v.shape[0], 0), dtype=complex)
    k = int(np.sum(s > rtol * s[0]))
    return u[:, :k]


def span_residual(x, basis_cols: np.ndarray) -> float:
    """Distance of ``x`` (flattened) from the span of orthonormal columns, relative to ``|x|``."""
    v = np.ravel(x)
    if basis_cols.shape[1] == 0:
        return 1.0 if fnorm(v) > 0 else 0.0
    r = v - basis_cols @ (dag(basis_cols) @ v)
    return fnorm(r) / max(1.0, fnorm(v))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def matrix_to_json(x) -> list:
    x = np.asarray(x, dtype=complex)
    return [[[float(e.real), float(e.imag)] for e in row] for row in x]


def matrix_from_json(data) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"matrix is not a nested list of [re, im] pairs: {exc}") from None
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InputError(f"matrix must be rows of [re, im] pairs, got shape {arr.shape}")
    out = arr[..., 0] + 1j * arr[..., 1]
    if not np.all(np.isfinite(out)):
        raise InputError("matrix has non-finite entries")
    return out


def vector_to_json(v) -> list:
    return [[float(e.real), float(e.imag)] for e in np.asarray(v, dtype=complex)]


def vector_from_json(data) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"vector is not a list of [re, im] pairs: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError(f"vector must be a list of [re, im] pairs, got shape {arr.shape}")
    out = arr[:, 0] + 1j * arr[:, 1]
    if not np.all(np.isfinite(out)):
        raise InputError("vector has non-finite entries")
    return out
