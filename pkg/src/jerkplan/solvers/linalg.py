"""Normal-equation factorization ``A diag(d) A^T`` with a banded fast path.

The velocity-planning constraint matrix couples only neighbouring grid
points, so after a reverse Cuthill-McKee permutation the normal matrix is
banded with a small half-bandwidth. The sparsity pattern is analysed once;
every interior-point iteration then only rescales the stored products.
"""

import logging

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

log = logging.getLogger(__name__)


def _column_pairs(A):
    """Lower-triangle (row, row', column, coef) contributions of A diag(d) A^T."""
    A = sp.csc_matrix(A)
    counts = np.diff(A.indptr)
    rows_out, cols_out, coef_out, var_out = [], [], [], []
    for k in np.unique(counts):
        if k == 0:
            continue
        cols = np.flatnonzero(counts == k)
        starts = A.indptr[cols]
        idx = starts[:, None] + np.arange(k)[None, :]
        r = A.indices[idx]
        v = A.data[idx]
        ti, tj = np.tril_indices(k)
        ra, rb = r[:, ti], r[:, tj]
        hi = np.maximum(ra, rb)
        lo = np.minimum(ra, rb)
        rows_out.append(hi.ravel())
        cols_out.append(lo.ravel())
        coef_out.append((v[:, ti] * v[:, tj]).ravel())
        var_out.append(np.repeat(cols, ti.size))
    if not rows_out:
        empty = np.zeros(0, dtype=int)
        return empty, empty, np.zeros(0), empty
    return (np.concatenate(rows_out), np.concatenate(cols_out),
            np.concatenate(coef_out), np.concatenate(var_out))


class NormalEquations:
    """Repeatedly factor and solve ``(A diag(d) A^T + reg I) y = r``.

    ``fallbacks`` counts how often the banded Cholesky broke down and the
    dense path had to take over.
    """

    def __init__(self, A, band_ratio=0.25):
        self.A = sp.csr_matrix(A)
        self.AT = self.A.T.tocsr()
        m = self.A.shape[0]
        self.m = m
        hi, lo, coef, var = _column_pairs(self.A)
        key = hi.astype(np.int64) * m + lo
        uniq, inverse = np.unique(key, return_inverse=True)
        self._assemble = sp.csr_matrix(
            (coef, (inverse, var)), shape=(uniq.size, self.A.shape[1]))
        self._hi = (uniq // m).astype(int)
        self._lo = (uniq % m).astype(int)

        pattern = sp.coo_matrix(
            (np.ones(uniq.size), (self._hi, self._lo)), shape=(m, m)).tocsr()
        pattern = pattern + pattern.T
        perm = reverse_cuthill_mckee(pattern, symmetric_mode=True) if m else np.zeros(0, int)
        iperm = np.empty(m, dtype=int)
        iperm[perm] = np.arange(m)
        self.perm = perm
        pi, pj = iperm[self._hi], iperm[self._lo]
        row = np.maximum(pi, pj)
        col = np.minimum(pi, pj)
        offset = row - col
        self.bandwidth = int(offset.max()) if offset.size else 0
        self.banded = m > 0 and (self.bandwidth + 1) < band_ratio * m
        self._band_index = offset * m + col
        self._dense_rows = pi
        self._dense_cols = pj
        self.fallbacks = 0
        self._factor = None
        self._mode = None
        self._d = None
        self._reg = 0.0

    def _values(self, d):
        return self._assemble @ d

    def factor(self, d, reg=0.0):
        """Factor ``A diag(d) A^T + reg I``; ``reg`` is bumped on breakdown."""
        self._d = d
        data = self._values(d)
        diag_max = data[self._hi == self._lo].max() if self.m else 1.0
        reg = max(reg, 1e-17 * max(diag_max, 1.0))
        if self.banded:
            ab = np.zeros((self.bandwidth + 1, self.m))
            ab.flat[self._band_index] = data
            for _ in range(4):
                trial = ab.copy()
                trial[0] += reg
                try:
                    self._factor = sla.cholesky_banded(trial, lower=True, check_finite=False)
                    self._mode = "banded"
                    self._reg = reg
                    return
                except sla.LinAlgError:
                    reg *= 1e3
            self.fallbacks += 1
            log.debug("banded Cholesky broke down; falling back to dense")
        M = np.zeros((self.m, self.m))
        M[self._dense_rows, self._dense_cols] = data
        M[self._dense_cols, self._dense_rows] = data
        for _ in range(6):
            try:
                self._factor = sla.cho_factor(M + reg * np.eye(self.m), lower=True,
                                              check_finite=False)
                self._mode = "dense"
                self._reg = reg
                return
            except sla.LinAlgError:
                reg = max(reg * 1e3, 1e-12)
        # Last resort: symmetric eigendecomposition pseudo-inverse.
        w, V = np.linalg.eigh(M)
        w_inv = np.where(w > 1e-14 * max(w.max(), 1.0), 1.0 / np.maximum(w, 1e-300), 0.0)
        self._factor = (V, w_inv)
        self._mode = "eig"
        self.fallbacks += 1
        self._reg = 0.0

    def _raw_solve(self, rhs):
        if self._mode == "banded":
            out = np.empty_like(rhs)
            out[self.perm] = sla.cho_solve_banded((self._factor, True), rhs[self.perm],
                                                  check_finite=False)
            return out
        if self._mode == "dense":
            out = np.empty_like(rhs)
            out[self.perm] = sla.cho_solve(self._factor, rhs[self.perm], check_finite=False)
            return out
        V, w_inv = self._factor
        out = np.empty_like(rhs)
        out[self.perm] = V @ (w_inv * (V.T @ rhs[self.perm]))
        return out

    def matvec(self, y):
        return self.A @ (self._d * (self.AT @ y))

    def solve(self, rhs, refine=6):
        """Solve with iterative refinement, stopping once the residual stalls."""
        y = self._raw_solve(rhs)
        r = rhs - self.matvec(y)
        res = np.abs(r).max(initial=0.0)
        scale = 1e-15 * (np.abs(rhs).max(initial=0.0) + 1e-300)
        for _ in range(refine):
            if res <= scale:
                break
            y_new = y + self._raw_solve(r)
            r_new = rhs - self.matvec(y_new)
            res_new = np.abs(r_new).max(initial=0.0)
            if not res_new < 0.5 * res:
                if res_new < res:
                    y, r, res = y_new, r_new, res_new
                break
            y, r, res = y_new, r_new, res_new
        return y
