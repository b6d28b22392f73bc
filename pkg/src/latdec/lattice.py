"""Basis handling: QR factorization, LLL reduction, complex-to-real
conversion, and the brute-force oracles every verification path leans on.

Conventions
-----------
Columns of a basis matrix are the basis vectors.  QR factors are fixed to
a positive diagonal on R so that layer widths sigma / r_ii and search
intervals are unambiguous.  All values are immutable after construction
and safe to share between threads.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooLargeError, SingularBasisError

# Rank tolerance: |r_ii| at or below this means "singular".
_RANK_TOL = 1e-12

# Brute-force oracles enumerate (2*halfwidth+1)**n points; keep n small.
_ORACLE_MAX_N = 10

DEFAULT_BOX_HALFWIDTH = 3


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LatticeBasis:
    """A full-rank n x n real basis; columns generate the lattice."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"basis must be square and nonempty, got shape {m.shape}")
        if not np.isfinite(m).all():
            raise ValueError("basis entries must be finite")
        object.__setattr__(self, "matrix", _readonly(m))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class QrFactors:
    """Orthogonal Q and upper-triangular R with positive diagonal."""

    q: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=np.float64)
        r = np.asarray(self.r, dtype=np.float64)
        n = r.shape[0]
        if q.shape != (n, n) or r.shape != (n, n):
            raise ValueError("Q and R must be square with matching shape")
        if np.abs(q.T @ q - np.eye(n)).max() > 1e-9:
            raise ValueError("Q is not orthogonal within 1e-9")
        if n > 1 and np.abs(r[np.tril_indices(n, -1)]).max() > 1e-12:
            raise ValueError("R is not upper triangular within 1e-12")
        if np.abs(np.diag(r)).min() <= _RANK_TOL:
            raise SingularBasisError("R has a vanishing diagonal entry")
        object.__setattr__(self, "q", _readonly(q))
        object.__setattr__(self, "r", _readonly(r))

    @property
    def n(self) -> int:
        return self.r.shape[0]


def _int_det(m) -> int:
    """Exact determinant of an integer matrix (fraction-free Bareiss)."""
    a = [[int(v) for v in row] for row in m]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


@dataclass(frozen=True)
class UnimodularTransform:
    """Integer change of basis with determinant +-1."""

    matrix: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.matrix)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError("transform must be square")
        if not np.issubdtype(u.dtype, np.integer):
            raise ValueError("transform must be integer valued")
        if abs(_int_det(u)) != 1:
            raise ValueError("transform determinant is not +-1")
        object.__setattr__(self, "matrix", _readonly(u.astype(np.int64)))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def qr_decompose(basis: LatticeBasis) -> QrFactors:
    """QR-factor the basis, flipping Q column signs so every r_ii > 0.

    Raises SingularBasisError when a diagonal magnitude falls at or below
    1e-12 (rank-deficient input).
    """
    q, r = np.linalg.qr(basis.matrix)
    d = np.diag(r).copy()
    if np.abs(d).min() <= _RANK_TOL:
        raise SingularBasisError("basis is rank deficient (|r_ii| <= 1e-12)")
    flip = np.where(d < 0.0, -1.0, 1.0)
    q = q * flip[np.newaxis, :]
    r = r * flip[:, np.newaxis]
    return QrFactors(q=q, r=r)


def min_diag(r: QrFactors) -> float:
    """Smallest |r_ii|; feeds the default width policy sigma = min/(2 sqrt(pi))."""
    return float(np.abs(np.diag(r.r)).min())


def complex_to_real(h: np.ndarray, c: np.ndarray) -> tuple[LatticeBasis, np.ndarray]:
    """Expand an n x n complex system into the equivalent 2n x 2n real one.

    Returns ([[Re H, -Im H], [Im H, Re H]], [Re c; Im c]).  Integer decoding
    of the real model is decoding of the complex model with independent
    real/imaginary coordinates.
    """
    h = np.asarray(h, dtype=np.complex128)
    c = np.asarray(c, dtype=np.complex128).reshape(-1)
    b = np.block([[h.real, -h.imag], [h.imag, h.real]])
    y = np.concatenate([c.real, c.imag])
    return LatticeBasis(b), y


def lll_reduce(basis: LatticeBasis, delta: float = 0.75,
               ) -> tuple[LatticeBasis, UnimodularTransform]:
    """LLL-reduce the basis, returning (reduced basis, unimodular transform).

    Floating-point Gram-Schmidt drives the size-reduction and Lovasz tests;
    the integer transform U is tracked alongside so that output = input @ U
    exactly (the returned matrix is recomputed as input @ U).  delta in
    (0.25, 1], default 0.75.
    """
    if not 0.25 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0.25, 1], got {delta}")
    from . import _backend

    u = _backend.kernels.lll_kernel(np.asarray(basis.matrix, dtype=np.float64), delta)
    transform = UnimodularTransform(np.asarray(u, dtype=np.int64))
    reduced = LatticeBasis(basis.matrix @ transform.matrix.astype(np.float64))
    return reduced, transform


def _check_oracle_dims(n: int):
    if n > _ORACLE_MAX_N:
        raise DimensionTooLargeError(
            f"brute-force oracle limited to n <= {_ORACLE_MAX_N}, got n = {n}")


def _babai_point(r: QrFactors, y: np.ndarray) -> np.ndarray:
    """Nearest-plane rounding, used only to center the oracle boxes."""
    from . import _backend

    return np.asarray(_backend.kernels.babai_kernel(r.r, np.asarray(y, dtype=np.float64)))


def _box_points(center: np.ndarray, halfwidth: int) -> np.ndarray:
    """All integer points in the closed box center +- halfwidth, as rows."""
    ranges = [np.arange(c - halfwidth, c + halfwidth + 1) for c in center]
    pts = np.array(list(itertools.product(*ranges)), dtype=np.int64)
    return pts


def brute_force_cvp(r: QrFactors, y: np.ndarray,
                    box_halfwidth: int = DEFAULT_BOX_HALFWIDTH,
                    ) -> tuple[np.ndarray, float]:
    """Exhaustively scan the integer box around the nearest-plane point.

    Returns (argmin x, distance).  The optimum is the true closest vector
    only when it falls inside the box; callers keep the noise small enough
    that halfwidth 3 provably contains it.
    """
    _check_oracle_dims(r.n)
    y = np.asarray(y, dtype=np.float64)
    pts = _box_points(_babai_point(r, y), box_halfwidth)
    d2 = ((pts @ r.r.T - y) ** 2).sum(axis=1)
    i = int(np.argmin(d2))
    return pts[i].copy(), float(math.sqrt(d2[i]))


def enumerate_in_radius_naive(r: QrFactors, y: np.ndarray, d_radius: float,
                              box_halfwidth: int = DEFAULT_BOX_HALFWIDTH,
                              ) -> set[tuple[int, ...]]:
    """Exactly {x in box : ||Rx - y|| <= d_radius}, by exhaustive scan."""
    _check_oracle_dims(r.n)
    y = np.asarray(y, dtype=np.float64)
    pts = _box_points(_babai_point(r, y), box_halfwidth)
    d2 = ((pts @ r.r.T - y) ** 2).sum(axis=1)
    keep = d2 <= d_radius * d_radius
    return {tuple(int(v) for v in p) for p in pts[keep]}


def gram_schmidt_coefficients(b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gram-Schmidt vectors (columns) and mu coefficients of a basis.

    Test helper for the size-reduction and Lovasz predicates; mu[i, j] is
    the projection coefficient of column i onto orthogonalized column j.
    """
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[1]
    bstar = np.zeros_like(b)
    mu = np.zeros((n, n))
    for i in range(n):
        v = b[:, i].copy()
        for j in range(i):
            mu[i, j] = (b[:, i] @ bstar[:, j]) / (bstar[:, j] @ bstar[:, j])
            v -= mu[i, j] * bstar[:, j]
        bstar[:, i] = v
    return bstar, mu


def is_lll_reduced(b: np.ndarray, delta: float = 0.75, tol: float = 1e-9) -> bool:
    """Size-reduction plus Lovasz condition check, via direct predicates."""
    bstar, mu = gram_schmidt_coefficients(b)
    n = b.shape[1]
    for i in range(n):
        for j in range(i):
            if abs(mu[i, j]) > 0.5 + tol:
                return False
    norms = (bstar ** 2).sum(axis=0)
    for k in range(1, n):
        if norms[k] < (delta - mu[k, k - 1] ** 2) * norms[k - 1] - tol:
            return False
    return True
