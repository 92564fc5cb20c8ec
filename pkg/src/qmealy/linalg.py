"""Dense complex matrix helpers and the orthogonal span tracker.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` (or ``float64``
in real mode). The helpers below add the shape checks the rest of the
package relies on; everything else is ordinary numpy.
"""

import numpy as np

DEFAULT_SPAN_TOL = 1e-9


class ShapeError(ValueError):
    """Raised when matrix operands have incompatible shapes."""


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def _check_square(a):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")


def as_matrix(a, dtype=complex):
    """Return ``a`` as a 2-d array of the given dtype."""
    m = np.asarray(a, dtype=dtype)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def frobenius_inner(a, b):
    """Frobenius inner product ``tr(A^dagger B)``."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_shape(a, b)
    return complex(np.vdot(a, b))


def adjoint(a):
    return np.conj(np.asarray(a)).T


def trace(a):
    a = np.asarray(a)
    _check_square(a)
    return complex(np.trace(a))


def matmul(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def add(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    _check_same_shape(a, b)
    return a + b


def scale(c, a):
    return c * np.asarray(a)


def real_part(a):
    return np.real(np.asarray(a)).copy()


def direct_sum_matrix(a, b):
    """Block-diagonal matrix ``A (+) B``."""
    a = as_matrix(a, dtype=np.result_type(np.asarray(a), np.asarray(b)))
    b = as_matrix(b, dtype=a.dtype)
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=a.dtype)
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def sandwich(m, rho):
    """``M rho M^dagger``."""
    return m @ rho @ np.conj(m).T


class SpanTracker:
    """Incrementally maintained orthonormal basis of a span of matrices.

    Each accepted matrix contributes its Gram-Schmidt residual against the
    stored elements, normalized to unit Frobenius norm. Membership is
    decided on the relative residual::

        |rho - P rho|^2 <= tol * <rho, rho>

    where ``P`` projects onto the current span. ``atol`` is an absolute
    floor on ``|rho|_F`` below which a matrix is treated as zero.

    In real mode (``real=True``) only the real part of each matrix is
    tracked and the ambient dimension is ``n(n+1)/2`` (real symmetric
    matrices); otherwise it is ``n**2``.

    Args:
        n: side length of the tracked square matrices.
        real: track real parts only.
        tol: relative residual threshold.
        atol: Frobenius norm at or below which a matrix counts as zero.
        dim: override the ambient dimension (defaults as above).
    """

    def __init__(self, n, real=False, tol=DEFAULT_SPAN_TOL, atol=0.0, dim=None):
        self.n = int(n)
        self.real = bool(real)
        self.tol = float(tol)
        self.atol = float(atol)
        if dim is None:
            dim = self.n * (self.n + 1) // 2 if self.real else self.n * self.n
        self.dim = int(dim)
        self._dtype = np.float64 if self.real else np.complex128
        self._basis = np.zeros((self.dim, self.n * self.n), dtype=self._dtype)
        self._size = 0

    def __len__(self):
        return self._size

    @property
    def full(self):
        return self._size >= self.dim

    @property
    def orthogonal_elements(self):
        """Stored orthonormal elements as ``(size, n, n)`` array."""
        return self._basis[: self._size].reshape(self._size, self.n, self.n).copy()

    def _vector(self, rho):
        rho = np.asarray(rho)
        if rho.shape != (self.n, self.n):
            raise ShapeError(f"expected ({self.n}, {self.n}) matrix, got {rho.shape}")
        if self.real:
            return np.ascontiguousarray(np.real(rho), dtype=np.float64).ravel()
        return np.ascontiguousarray(rho, dtype=np.complex128).ravel()

    def _residual(self, v):
        q = self._basis[: self._size]
        if self._size == 0:
            return v.copy()
        r = v - (q.conj() @ v) @ q
        # second pass keeps the residual orthogonal when v is nearly dependent
        r -= (q.conj() @ r) @ q
        return r

    def _decide(self, v):
        norm2 = float(np.vdot(v, v).real)
        if norm2 <= self.atol * self.atol:
            return True, None
        r = self._residual(v)
        res2 = float(np.vdot(r, r).real)
        return res2 <= self.tol * norm2, r

    def contains(self, rho):
        """True iff ``rho`` lies in the tracked span (within tolerance)."""
        inside, _ = self._decide(self._vector(rho))
        return inside

    def extend(self, rho):
        """Add ``rho`` if it is independent of the span.

        Returns True when the tracker grew, False otherwise.
        """
        v = self._vector(rho)
        if self.full:
            return False
        inside, r = self._decide(v)
        if inside:
            return False
        self._basis[self._size] = r / np.sqrt(np.vdot(r, r).real)
        self._size += 1
        return True

    def coefficients(self, rho):
        """Expansion coefficients ``<O_i, rho>`` on the stored elements."""
        v = self._vector(rho)
        return self._basis[: self._size].conj() @ v

    def project(self, rho):
        """Orthogonal projection of ``rho`` onto the span, as a matrix."""
        c = self.coefficients(rho)
        return (c @ self._basis[: self._size]).reshape(self.n, self.n)


def tracker_contains(tracker, rho):
    return tracker.contains(rho)


def tracker_extend(tracker, rho):
    return tracker.extend(rho)


def eliminate_rank(rows, tol=DEFAULT_SPAN_TOL):
    """Rank-style independence test of the last row against the others.

    Plain Gaussian elimination with row-wise complete pivoting, recomputed
    from scratch on every call. ``rows[:-1]`` must be linearly independent
    (as produced by the naive checker). Returns True iff the last row is
    in the span of the others, judged by the squared norm of its remainder
    relative to its own squared norm.
    """
    work = np.array(rows, dtype=np.result_type(rows, np.float64), copy=True)
    norms = np.sqrt(np.einsum("ij,ij->i", work.conj(), work).real)
    last = norms[-1]
    if last == 0.0:
        return True
    nz = norms > 0
    work[nz] /= norms[nz, None]
    k = work.shape[0] - 1
    for i in range(k):
        p = int(np.argmax(np.abs(work[i])))
        pivot = work[i, p]
        if pivot == 0:
            continue
        factors = work[i + 1:, p] / pivot
        work[i + 1:] -= np.outer(factors, work[i])
    rem = work[-1]
    return float(np.vdot(rem, rem).real) <= tol
