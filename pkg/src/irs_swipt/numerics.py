"""
Dense complex linear algebra shared by the optimisation modules.

Matrices are plain ``numpy`` arrays; Hermitian inputs are validated on entry
and symmetrised so that round-off in the caller never leaks into an
eigendecomposition.
"""

import numpy as np

HERMITIAN_TOL = 1e-12


class InvalidInput(ValueError):
    """Raised when an argument violates an operation's preconditions."""


def herm(x):
    """Conjugate transpose over the last two axes."""
    return np.swapaxes(np.conj(x), -1, -2)


def outer(v):
    """Rank-one Hermitian matrix ``v v^H``."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def as_hermitian(m, tol=HERMITIAN_TOL):
    """Validate ``m`` as Hermitian and return its exactly symmetrised copy.

    The tolerance is absolute for matrices with entries of order one and is
    scaled by the largest entry magnitude otherwise.
    """
    m = np.array(m, dtype=complex, copy=True)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InvalidInput(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m))))
    asym = np.max(np.abs(m - m.conj().T))
    if asym > tol * scale:
        raise InvalidInput(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    return 0.5 * (m + m.conj().T)


def _jacobi_pair(app, aqq, apq):
    # 2x2 unitary J with (J^H A J)_{pq} = 0 for A = [[app, apq], [conj(apq), aqq]]
    r = abs(apq)
    phase = apq / r
    theta = (aqq - app) / (2.0 * r)
    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    return np.array([[c, s * phase], [-s * np.conj(phase), c]], dtype=complex)


def hermitian_eig(m, tol=1e-15, max_sweeps=60):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    m : array_like
        Hermitian matrix.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm falls below
        ``tol * ||m||_F``.
    max_sweeps : int
        Safety cap on the number of full sweeps.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in descending order.
    eigenvectors : ndarray
        Unitary matrix whose columns are the matching eigenvectors.
    """
    a = as_hermitian(m)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        if np.linalg.norm(a - np.diag(np.diag(a))) <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                j = _jacobi_pair(a[p, p].real, a[q, q].real, apq)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ j
                a[idx, :] = j.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ j
    w = np.real(np.diag(a))
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def max_eigpair(m):
    """Largest eigenvalue of a Hermitian matrix with a unit eigenvector."""
    w, v = hermitian_eig(m)
    vec = v[:, 0]
    return float(w[0]), vec / np.linalg.norm(vec)


def is_psd(m, tol=1e-8):
    """True iff the smallest eigenvalue is at least ``-tol * max(1, ||m||_F)``."""
    if tol < 0:
        raise InvalidInput("tol must be non-negative")
    a = as_hermitian(m)
    lam_min = np.linalg.eigvalsh(a)[0]
    return bool(lam_min >= -tol * max(1.0, np.linalg.norm(a)))


def frobenius_inner(a, b):
    """Real part of ``Tr(a b)`` for Hermitian ``a`` and ``b``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise InvalidInput(f"dimension mismatch {a.shape} vs {b.shape}")
    # Tr(ab) = sum_ij a_ij b_ji = sum_ij a_ij conj(b_ij) for Hermitian b
    return float(np.real(np.sum(a * np.conj(b))))


def psd_sqrt(m):
    """Hermitian square root of a PSD matrix, negative eigenvalues clipped."""
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(w):
    return 10.0 * np.log10(np.asarray(w, dtype=float)) + 30.0
