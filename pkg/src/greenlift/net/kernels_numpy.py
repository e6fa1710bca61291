"""NumPy fallback for the two hot elementwise kernels.

A batch of jets is one array of shape (N, C, width): column 0 values,
columns 1..m first derivatives along the m tracked input directions,
columns 1+m.. the row-major m*m second-derivative block.  ``T`` carries the
precomputed tanh of the value row.  The compiled twin in ``_speedups``
fuses these loops; layouts and results match to rounding.
"""

from __future__ import annotations

import numpy as np


def tanh_jet(A: np.ndarray, Z: np.ndarray, T: np.ndarray, m: int, order: int) -> None:
    """Push the jet batch A through tanh, writing into Z (may alias A)."""
    s1 = 1.0 - T * T
    Ja = A[:, 1:1 + m, :]
    if order == 2:
        s2 = -2.0 * T * s1
        n, _, w = A.shape
        Ha = A[:, 1 + m:, :].reshape(n, m, m, w)
        # (Ja_i*Ja_j) first: keeps (i,j)/(j,i) bitwise equal
        Z[:, 1 + m:, :] = (
            (Ja[:, :, None, :] * Ja[:, None, :, :]) * s2[:, None, None, :]
            + s1[:, None, None, :] * Ha
        ).reshape(n, m * m, w)
    Z[:, 1:1 + m, :] = s1[:, None, :] * Ja
    Z[:, 0, :] = T


def tanh_jet_vjp(A: np.ndarray, Zbar: np.ndarray, Abar: np.ndarray,
                 T: np.ndarray, m: int, order: int) -> None:
    """Adjoint of ``tanh_jet``: cotangents Zbar on the output jet become
    cotangents Abar on the pre-activation jet (Abar must not alias Zbar)."""
    s1 = 1.0 - T * T
    s2 = -2.0 * T * s1
    vb = Zbar[:, 0, :]
    Jb = Zbar[:, 1:1 + m, :]
    Ja = A[:, 1:1 + m, :]
    if order == 2:
        s3 = -2.0 * s1 * s1 + 4.0 * (T * T) * s1
        n, _, w = A.shape
        Ha = A[:, 1 + m:, :].reshape(n, m, m, w)
        Hb = Zbar[:, 1 + m:, :].reshape(n, m, m, w)
        hsym = Hb + np.swapaxes(Hb, 1, 2)
        Abar[:, 0, :] = (s1 * vb + s2 * (Jb * Ja).sum(axis=1)
                         + s3 * np.einsum("nijw,niw,njw->nw", Hb, Ja, Ja)
                         + s2 * np.einsum("nijw,nijw->nw", Hb, Ha))
        Abar[:, 1:1 + m, :] = (s1[:, None, :] * Jb
                               + s2[:, None, :] * np.einsum("nijw,njw->niw", hsym, Ja))
        Abar[:, 1 + m:, :] = (s1[:, None, None, :] * Hb).reshape(n, m * m, w)
    else:
        Abar[:, 0, :] = s1 * vb + s2 * (Jb * Ja).sum(axis=1)
        Abar[:, 1:1 + m, :] = s1[:, None, :] * Jb
