"""Coordinate arithmetic for the truncated output Hilbert space.

Points of the (possibly infinite-dimensional) output space are represented
by their first d_Y coordinates in a fixed orthonormal basis; a point is just
a finite 1-d float array. Truncation level d_Y is a declared parameter of
every experiment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Orthonormality tolerance: double-precision head-room.
ORTHO_TOL = 1e-12


def as_point(u) -> np.ndarray:
    """Validate and return a coordinate vector as a float64 array."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ValueError(f"expected a 1-d coordinate vector, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("coordinates must be finite")
    return u


def inner(u, v) -> float:
    """Euclidean inner product of two coordinate vectors."""
    u, v = as_point(u), as_point(v)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")
    return float(np.dot(u, v))


def norm(u) -> float:
    return float(np.linalg.norm(as_point(u)))


@dataclass(frozen=True)
class OrthonormalBasis:
    """d_Y orthonormal columns; the j-th basis vector is columns[:, j]."""

    columns: np.ndarray

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=float)
        if cols.ndim != 2 or cols.shape[0] != cols.shape[1]:
            raise ValueError("basis must be a square matrix of column vectors")
        gram = cols.T @ cols
        if not np.allclose(gram, np.eye(cols.shape[1]), atol=ORTHO_TOL, rtol=0.0):
            raise ValueError("columns are not orthonormal to 1e-12")
        object.__setattr__(self, "columns", cols)

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    @staticmethod
    def identity(dim: int) -> "OrthonormalBasis":
        return OrthonormalBasis(np.eye(dim))


def change_basis(u, basis: OrthonormalBasis) -> np.ndarray:
    """Coordinates (<u, b_1>, ..., <u, b_dY>) of u in the given basis.

    An orthonormal change of coordinates, so norms and inner products are
    preserved (up to roundoff).
    """
    u = as_point(u)
    if u.shape[0] != basis.dim:
        raise ValueError(f"dimension mismatch: {u.shape[0]} vs {basis.dim}")
    return basis.columns.T @ u


def gram_schmidt(mat) -> OrthonormalBasis:
    """Orthonormal basis from the columns of a full-rank square matrix."""
    mat = np.asarray(mat, dtype=float)
    q, r = np.linalg.qr(mat)
    if np.any(np.abs(np.diag(r)) < 1e-10):
        raise ValueError("matrix columns are not linearly independent")
    # Fix signs so the result is a deterministic function of the input.
    q = q * np.sign(np.diag(r))
    return OrthonormalBasis(q)


def random_orthonormal_basis(dim: int, rng: np.random.Generator) -> OrthonormalBasis:
    while True:
        mat = rng.standard_normal((dim, dim))
        try:
            return gram_schmidt(mat)
        except ValueError:  # pragma: no cover - essentially impossible draw
            continue
