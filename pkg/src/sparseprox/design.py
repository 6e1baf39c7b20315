"""Design-matrix storage shared by every loss.

A :class:`DesignMatrix` wraps either a dense row-major array or a
compressed-sparse-row matrix (backed by ``scipy.sparse``) behind one product
interface, so losses and solvers never branch on the storage kind.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, InvalidDataError

__all__ = ["DesignMatrix"]


class DesignMatrix:
    """Matrix A of the regression losses, dense or CSR.

    Parameters
    ----------
    storage :
        Either a 2-d ``numpy.ndarray`` (copied to float64, C order) or a
        ``scipy.sparse.csr_matrix`` / ``csr_array``.
    """

    def __init__(self, storage):
        if sp.issparse(storage):
            mat = storage.tocsr().astype(np.float64)
            _check_csr(mat)
            if not np.all(np.isfinite(mat.data)):
                raise InvalidDataError("matrix contains NaN or Inf")
            self._mat = mat
            self.is_sparse = True
        else:
            arr = np.ascontiguousarray(storage, dtype=np.float64)
            if arr.ndim != 2:
                raise DimensionMismatchError(f"expected 2-d array, got ndim={arr.ndim}")
            if not np.all(np.isfinite(arr)):
                raise InvalidDataError("matrix contains NaN or Inf")
            self._mat = arr
            self.is_sparse = False

    @classmethod
    def from_csr(cls, indptr, indices, values, shape) -> "DesignMatrix":
        """Build from a raw CSR triplet (row offsets, column indices, values)."""
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        n_rows, n_cols = shape
        if len(indptr) != n_rows + 1:
            raise InvalidDataError("CSR offsets must have n_rows + 1 entries")
        if np.any(np.diff(indptr) < 0):
            raise InvalidDataError("CSR offsets must be nondecreasing")
        if indptr[-1] != len(values) or len(indices) != len(values):
            raise InvalidDataError("last CSR offset must equal nnz")
        if len(indices) and (indices.min() < 0 or indices.max() >= n_cols):
            raise InvalidDataError("CSR column index out of range")
        return cls(sp.csr_matrix((values, indices, indptr), shape=(n_rows, n_cols)))

    @property
    def shape(self) -> tuple[int, int]:
        return self._mat.shape

    @property
    def n_rows(self) -> int:
        return self._mat.shape[0]

    @property
    def n_cols(self) -> int:
        return self._mat.shape[1]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """A @ x."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_cols,):
            raise DimensionMismatchError(
                f"x has shape {x.shape}, expected ({self.n_cols},)"
            )
        return np.asarray(self._mat @ x)

    def rmatvec(self, r: np.ndarray) -> np.ndarray:
        """A.T @ r."""
        r = np.asarray(r, dtype=np.float64)
        if r.shape != (self.n_rows,):
            raise DimensionMismatchError(
                f"r has shape {r.shape}, expected ({self.n_rows},)"
            )
        return np.asarray(self._mat.T @ r)

    def row(self, i: int) -> np.ndarray:
        if self.is_sparse:
            return np.asarray(self._mat.getrow(i).todense()).ravel()
        return self._mat[i]

    def to_dense(self) -> np.ndarray:
        if self.is_sparse:
            return np.asarray(self._mat.todense())
        return self._mat.copy()

    def gram_dense(self) -> np.ndarray:
        """A.T @ A as a dense array (small problems only)."""
        dense = self.to_dense()
        return dense.T @ dense

    def __repr__(self) -> str:
        kind = "csr" if self.is_sparse else "dense"
        return f"DesignMatrix({self.n_rows}x{self.n_cols}, {kind})"


def _check_csr(mat: sp.csr_matrix) -> None:
    indptr = mat.indptr
    if np.any(np.diff(indptr) < 0):
        raise InvalidDataError("CSR offsets must be nondecreasing")
    if indptr[-1] != mat.nnz:
        raise InvalidDataError("last CSR offset must equal nnz")
    if mat.nnz and (mat.indices.min() < 0 or mat.indices.max() >= mat.shape[1]):
        raise InvalidDataError("CSR column index out of range")
