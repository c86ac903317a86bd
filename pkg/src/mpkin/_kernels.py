"""Hot numeric kernels.

Each kernel exists twice: an explicit-loop version compiled with numba and
a vectorised numpy version.  ``MPKIN_DISABLE_NUMBA=1`` (or numba missing)
selects the numpy path at import time.  The sparse LU kernels have no
vectorised form; without numba the linear algebra goes through SuperLU
instead (see ``mpkin.linalg``).
"""

from __future__ import annotations

import math
import os

import numpy as np

try:  # pragma: no cover - exercised through the env flag
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("MPKIN_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


def _njit(fn):
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


FS_A = 0.75
FS_B = 0.283


# -- Fuchs-Sutugin uptake coefficient --------------------------------------


def uptake_coefficient_numpy(radius, diff_coeff, mean_free_path, alpha):
    """Per-particle uptake coefficient k_c = 4 pi r D f_fs(Kn, alpha) and dk_c/dr."""
    r = np.asarray(radius, dtype=np.float64)
    kn = mean_free_path / r
    num = FS_A * alpha * (1.0 + kn)
    den = kn * kn + kn * (1.0 + FS_B * alpha) + FS_A * alpha
    f = num / den
    dfdkn = (FS_A * alpha * den - num * (2.0 * kn + 1.0 + FS_B * alpha)) / (den * den)
    kc = 4.0 * math.pi * r * diff_coeff * f
    dkc_dr = 4.0 * math.pi * diff_coeff * (f - kn * dfdkn)
    return kc, dkc_dr


def _uptake_coefficient_loop(radius, diff_coeff, mean_free_path, alpha):
    n = radius.shape[0]
    kc = np.empty(n)
    dkc = np.empty(n)
    for i in range(n):
        kn = mean_free_path / radius[i]
        num = FS_A * alpha * (1.0 + kn)
        den = kn * kn + kn * (1.0 + FS_B * alpha) + FS_A * alpha
        f = num / den
        dfdkn = (FS_A * alpha * den - num * (2.0 * kn + 1.0 + FS_B * alpha)) / (den * den)
        kc[i] = 4.0 * math.pi * radius[i] * diff_coeff * f
        dkc[i] = 4.0 * math.pi * diff_coeff * (f - kn * dfdkn)
    return kc, dkc


uptake_coefficient_numba = _njit(_uptake_coefficient_loop)


# -- scatter-add -----------------------------------------------------------


def scatter_add_numpy(out, index, values):
    out += np.bincount(index, weights=values, minlength=out.shape[0])
    return out


def _scatter_add_loop(out, index, values):
    for i in range(index.shape[0]):
        out[index[i]] += values[i]
    return out


scatter_add_numba = _njit(_scatter_add_loop)


# -- mass-action rates -----------------------------------------------------


def mass_action_numpy(conc, qty, k):
    """Rates k * prod_j conc[:, j]**qty[:, j] for a batch of channels.

    ``conc`` and ``qty`` are (n_channels, max_reactants); padding uses qty 0.
    Returns the rates and d rate / d conc with the same shape as ``conc``.
    """
    n, m = conc.shape
    powered = np.where(qty > 0, conc ** qty, 1.0)
    rate = k * np.prod(powered, axis=1)
    deriv = np.zeros((n, m))
    for j in range(m):
        others = k.copy()
        for l in range(m):
            if l != j:
                others = others * powered[:, l]
        q = qty[:, j]
        dj = np.where(q > 0, q * conc[:, j] ** np.maximum(q - 1, 0), 0.0)
        deriv[:, j] = dj * others
    return rate, deriv


def _mass_action_loop(conc, qty, k):
    n, m = conc.shape
    rate = np.empty(n)
    deriv = np.zeros((n, m))
    for r in range(n):
        prod = k[r]
        for j in range(m):
            if qty[r, j] > 0:
                prod *= conc[r, j] ** qty[r, j]
        rate[r] = prod
        for j in range(m):
            q = qty[r, j]
            if q == 0:
                continue
            d = k[r] * q * conc[r, j] ** (q - 1)
            for l in range(m):
                if l != j and qty[r, l] > 0:
                    d *= conc[r, l] ** qty[r, l]
            deriv[r, j] = d
    return rate, deriv


mass_action_numba = _njit(_mass_action_loop)


# -- sparse LU on a frozen filled pattern (row-oriented, static pivots) ----


def _lu_factor_loop(indptr, indices, data, diag, work, pivot_tol):
    """In-place LU of a CSR matrix whose pattern already contains all fill.

    Returns -1 on success, otherwise the row whose pivot fell below
    ``pivot_tol`` times the largest entry of the original row.
    """
    n = indptr.shape[0] - 1
    for i in range(n):
        start = indptr[i]
        end = indptr[i + 1]
        rowmax = 0.0
        for p in range(start, end):
            work[indices[p]] = p
            a = abs(data[p])
            if a > rowmax:
                rowmax = a
        for p in range(start, diag[i]):
            k = indices[p]
            lik = data[p] / data[diag[k]]
            data[p] = lik
            if lik != 0.0:
                for q in range(diag[k] + 1, indptr[k + 1]):
                    data[work[indices[q]]] -= lik * data[q]
        for p in range(start, end):
            work[indices[p]] = -1
        piv = abs(data[diag[i]])
        if piv == 0.0 or piv <= pivot_tol * rowmax or not math.isfinite(piv):
            return i
    return -1


def _lu_solve_loop(indptr, indices, data, diag, x):
    n = indptr.shape[0] - 1
    for i in range(n):
        s = x[i]
        for p in range(indptr[i], diag[i]):
            s -= data[p] * x[indices[p]]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for p in range(diag[i] + 1, indptr[i + 1]):
            s -= data[p] * x[indices[p]]
        x[i] = s / data[diag[i]]
    return x


lu_factor_numba = _njit(_lu_factor_loop)
lu_solve_numba = _njit(_lu_solve_loop)
lu_factor_python = _lu_factor_loop
lu_solve_python = _lu_solve_loop


if USE_NUMBA:
    uptake_coefficient = uptake_coefficient_numba
    scatter_add = scatter_add_numba
    mass_action = mass_action_numba
else:
    uptake_coefficient = uptake_coefficient_numpy
    scatter_add = scatter_add_numpy
    mass_action = mass_action_numpy
