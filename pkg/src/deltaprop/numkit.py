"""Small complex linear-algebra toolkit for Hermitian tridiagonal operators.

Vectors are plain 1D numpy arrays. Operators are stored as a real diagonal
plus one upper off-diagonal; the lower off-diagonal is its conjugate, so
self-adjointness holds by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels


class NumericalError(RuntimeError):
    """A numeric step produced an unusable result."""


class SingularSystemError(NumericalError):
    def __init__(self, index, magnitude):
        super().__init__(
            f"shifted system is singular or ill-conditioned: pivot {index} "
            f"has magnitude {magnitude:.3e}"
        )
        self.index = index


class OracleCapError(ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    """Engine-wide numerical defaults; every field can be overridden from a run config."""

    solve_residual: float = 1e-12
    eig_residual: float = 1e-10
    pivot_floor: float = 1e-300
    oracle_cap: int = 2048


DEFAULT_TOLERANCES = Tolerances()


def as_vector(v, name="vector"):
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a non-empty 1D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HermitianBanded:
    """Hermitian tridiagonal matrix.

    ``offdiag[k]`` is the entry ``A[k, k+1]``; ``A[k+1, k]`` is its conjugate.
    The off-diagonal is real for every lab-frame operator and complex only for
    the transformed-frame operator, which carries first-order momentum terms.
    """

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag)
        if np.iscomplexobj(diag):
            if np.any(diag.imag != 0):
                raise ValueError("diagonal of a Hermitian matrix must be real")
            diag = diag.real
        diag = diag.astype(np.float64)
        off = np.asarray(self.offdiag)
        off = off.astype(np.complex128 if np.iscomplexobj(off) else np.float64)
        if diag.ndim != 1 or diag.size < 1:
            raise ValueError("diagonal must be a non-empty 1D array")
        if off.shape != (diag.size - 1,):
            raise ValueError(
                f"off-diagonal must have length {diag.size - 1}, got {off.shape}"
            )
        if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(off))):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "diag", _frozen(diag))
        object.__setattr__(self, "offdiag", _frozen(off))

    @classmethod
    def identity(cls, dim):
        return cls(np.ones(dim), np.zeros(dim - 1))

    @property
    def dim(self):
        return self.diag.size

    @property
    def is_real(self):
        return not np.iscomplexobj(self.offdiag)

    def norm1(self):
        """Maximum absolute column sum."""
        col = np.abs(self.diag).copy()
        a = np.abs(self.offdiag)
        col[:-1] += a
        col[1:] += a
        return float(col.max())

    def shifted(self, c):
        """Return ``A + c*I`` for real ``c``."""
        return HermitianBanded(self.diag + c, self.offdiag)

    def __add__(self, other):
        if not isinstance(other, HermitianBanded):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return HermitianBanded(self.diag + other.diag, self.offdiag + other.offdiag)

    def __sub__(self, other):
        if not isinstance(other, HermitianBanded):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return HermitianBanded(self.diag - other.diag, self.offdiag - other.offdiag)

    def equals(self, other):
        return (
            self.dim == other.dim
            and np.array_equal(self.diag, other.diag)
            and np.array_equal(self.offdiag, other.offdiag)
        )

    def to_dense(self):
        dtype = np.float64 if self.is_real else np.complex128
        a = np.diag(self.diag.astype(dtype))
        idx = np.arange(self.dim - 1)
        a[idx, idx + 1] = self.offdiag
        a[idx + 1, idx] = np.conj(self.offdiag)
        return a


def apply(A: HermitianBanded, v) -> np.ndarray:
    """Matrix-vector product; ``v`` may also be a 2D array of column vectors."""
    v = np.asarray(v)
    if v.shape[0] != A.dim:
        raise ValueError(f"dimension mismatch: operator {A.dim}, vector {v.shape[0]}")
    if v.ndim == 1:
        d, up, lo = A.diag, A.offdiag, np.conj(A.offdiag)
    else:
        d, up, lo = A.diag[:, None], A.offdiag[:, None], np.conj(A.offdiag)[:, None]
    out = d * v
    out = out.astype(np.result_type(out, up, v))
    out[:-1] += up * v[1:]
    out[1:] += lo * v[:-1]
    return out


class ShiftedFactorization:
    """Reusable LU factorization of ``A + z*I`` for repeated solves.

    Every solve is followed by a residual check. If the unpivoted LU produced a
    tiny pivot or the residual exceeds tolerance, the system is re-solved with
    a pivoted banded LAPACK solve.
    """

    def __init__(self, A: HermitianBanded, z, tol: Tolerances = DEFAULT_TOLERANCES):
        self.A = A
        self.z = complex(z)
        self.tol = tol
        self._scale = A.norm1() + abs(self.z)
        self._upper = A.offdiag.astype(np.complex128)
        lower = np.conj(self._upper)
        diag = A.diag + self.z
        self._diag = diag
        self._mult, self._piv, self.bad_pivot = _kernels.lu_factor(
            lower, diag, self._upper, tol.pivot_floor
        )
        self.used_fallback = False

    def residual(self, x, b):
        return np.linalg.norm(apply(self.A, x) + self.z * x - b)

    def _banded_solve(self, b):
        n = self.A.dim
        ab = np.zeros((3, n), dtype=np.complex128)
        ab[0, 1:] = self._upper
        ab[1] = self._diag
        ab[2, :-1] = np.conj(self._upper)
        try:
            return scipy.linalg.solve_banded((1, 1), ab, b, check_finite=False)
        except np.linalg.LinAlgError:
            index = self.bad_pivot if self.bad_pivot >= 0 else int(np.argmin(np.abs(self._piv)))
            raise SingularSystemError(index, abs(self._piv[index])) from None

    def solve(self, b):
        b = np.asarray(b, dtype=np.complex128)
        if b.shape != (self.A.dim,):
            raise ValueError(f"dimension mismatch: operator {self.A.dim}, rhs {b.shape}")
        if self.bad_pivot < 0:
            x = _kernels.lu_solve(self._mult, self._piv, self._upper, b)
            limit = self.tol.solve_residual * self._scale * np.linalg.norm(x)
            if np.all(np.isfinite(x)) and self.residual(x, b) <= limit:
                return x
        self.used_fallback = True
        x = self._banded_solve(b)
        if not np.all(np.isfinite(x)):
            index = self.bad_pivot if self.bad_pivot >= 0 else int(np.argmin(np.abs(self._piv)))
            raise SingularSystemError(index, abs(self._piv[index]))
        return x


def solve_shifted(A: HermitianBanded, z, b, tol: Tolerances = DEFAULT_TOLERANCES):
    """Solve ``(A + z I) x = b``."""
    return ShiftedFactorization(A, z, tol).solve(b)


def quadratic_form(A: HermitianBanded, f) -> float:
    """Real value of ``<f, A f>`` (unweighted Euclidean inner product)."""
    f = np.asarray(f)
    if f.shape[0] != A.dim:
        raise ValueError(f"dimension mismatch: operator {A.dim}, vector {f.shape[0]}")
    Af = apply(A, f)
    if f.ndim == 1:
        return float(np.real(np.vdot(f, Af)))
    return np.real(np.sum(np.conj(f) * Af, axis=0))


def eig_dense(A: HermitianBanded, tol: Tolerances = DEFAULT_TOLERANCES):
    """Full eigendecomposition, ascending eigenvalues and orthonormal columns.

    Intended as an oracle for small grids only.
    """
    if A.dim > tol.oracle_cap:
        raise OracleCapError(
            f"operator dimension {A.dim} exceeds the dense oracle cap "
            f"{tol.oracle_cap}; reduce the grid node count"
        )
    if A.dim == 1:
        return A.diag.copy(), np.ones((1, 1))
    if A.is_real:
        return scipy.linalg.eigh_tridiagonal(A.diag, A.offdiag)
    return np.linalg.eigh(A.to_dense())
