"""Dense complex Hermitian linear-algebra kernel.

Everything in this module works on small dense complex matrices (the
largest objects in practice are 16x16).  The eigensolver is a cyclic
Jacobi iteration with complex 2x2 rotations: at these sizes it is accurate
to machine precision and, together with a fixed sweep order and a fixed
eigenvector phase convention, gives bitwise-deterministic output for a
given input.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import NumericalError, ValidationError

# Relative tolerance when deciding whether a matrix counts as Hermitian.
HERMITIAN_RTOL = 1e-12

# Jacobi iteration: hard sweep cap and off-diagonal convergence threshold
# relative to the Frobenius norm of the input.
JACOBI_MAX_SWEEPS = 100
JACOBI_OFFDIAG_RTOL = 1e-12

# Default relative cutoff below which eigenvalues are treated as zero when
# splitting a matrix into positive/negative parts.
DEFAULT_ZERO_TOL = 1e-10


class EigenSystem(NamedTuple):
    """Full spectrum of a Hermitian matrix.

    ``eigenvalues`` is a real vector sorted in descending order;
    ``eigenvectors[:, i]`` is the unit-norm eigenvector paired with
    ``eigenvalues[i]``, with the first component of magnitude above 1e-12
    rotated to be real and positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(m) -> np.ndarray:
    """Coerce input to a 2-d complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValidationError(f"expected a matrix, got an array of rank {a.ndim}")
    return a


def hermitize(m: np.ndarray) -> np.ndarray:
    """Return the Hermitian part (M + M†)/2."""
    return (m + m.conj().T) / 2.0


def is_hermitian(m, rtol: float = HERMITIAN_RTOL) -> bool:
    """Check max|M - M†| <= rtol * (1 + max|M|)."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        return False
    scale = 1.0 + (float(np.abs(a).max()) if a.size else 0.0)
    return float(np.abs(a - a.conj().T).max()) <= rtol * scale


def require_hermitian(m, what: str = "matrix") -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"{what} must be square, got shape {a.shape}")
    if a.shape[0] == 0:
        raise ValidationError(f"{what} must be non-empty")
    if not is_hermitian(a):
        raise ValidationError(f"{what} is not Hermitian within tolerance")
    return a


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Annihilate a[p, q] with a complex plane rotation; update a and v in place."""
    apq = a[p, q]
    r = abs(apq)
    phase = apq / r
    app = a[p, p].real
    aqq = a[q, q].real

    # 2x2 real symmetric [[app, r], [r, aqq]] after de-phasing the pq entry.
    tau = (aqq - app) / (2.0 * r)
    if tau >= 0.0:
        t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
    else:
        t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c

    # Column update by Q = diag(1, conj(phase)) @ [[c, s], [-s, c]].
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * np.conj(phase) * col_q
    a[:, q] = s * col_p + c * np.conj(phase) * col_q
    # Row update by Q†.
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * phase * row_q
    a[q, :] = s * row_p + c * phase * row_q

    a[p, p] = app - t * r
    a[q, q] = aqq + t * r
    a[p, q] = 0.0
    a[q, p] = 0.0

    col_p = v[:, p].copy()
    col_q = v[:, q].copy()
    v[:, p] = c * col_p - s * np.conj(phase) * col_q
    v[:, q] = s * col_p + c * np.conj(phase) * col_q


def _off_diagonal_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def hermitian_eig(m) -> EigenSystem:
    """Eigen-decompose a Hermitian matrix by cyclic Jacobi sweeps.

    Returns the full spectrum with orthonormal eigenvectors, eigenvalues
    sorted descending.  Deterministic for a fixed input: the sweep order is
    fixed, ties are resolved by a stable sort, and each eigenvector's phase
    is normalised so its first non-negligible component is real positive.

    Raises ValidationError for non-square or non-Hermitian input and
    NumericalError if the off-diagonal mass has not dropped below
    1e-12 * ||M||_F after 100 sweeps.
    """
    a = require_hermitian(m).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)

    fro = float(np.linalg.norm(a))
    if fro > 0.0:
        thresh = JACOBI_OFFDIAG_RTOL * fro
        skip = thresh / (n * n)
        converged = False
        for _ in range(JACOBI_MAX_SWEEPS):
            if _off_diagonal_norm(a) <= thresh:
                converged = True
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    if abs(a[p, q]) > skip:
                        _jacobi_rotate(a, v, p, q)
        else:
            converged = _off_diagonal_norm(a) <= thresh
        if not converged:
            raise NumericalError(
                f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps",
                residual=_off_diagonal_norm(a),
            )

    eigenvalues = np.diag(a).real.copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = v[:, order]

    # Phase convention: first component with |x| > 1e-12 made real positive.
    for j in range(n):
        col = vectors[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-12)
        if idx.size:
            lead = col[idx[0]]
            vectors[:, j] = col * (np.conj(lead) / abs(lead))

    return EigenSystem(eigenvalues, vectors)


def split_from_eigensystem(
    es: EigenSystem, zero_tol: float = DEFAULT_ZERO_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble (positive part, negative part) from an existing spectrum.

    Eigenvalues with |lambda| <= zero_tol * max|lambda| belong to neither
    part.  Both returned matrices are PSD and have orthogonal supports.
    """
    if zero_tol < 0.0:
        raise ValidationError("zero_tol must be non-negative")
    w, v = es
    n = v.shape[0]
    scale = float(np.abs(w).max()) if w.size else 0.0
    cutoff = zero_tol * scale

    pos = w > cutoff
    neg = w < -cutoff
    plus = np.zeros((n, n), dtype=np.complex128)
    minus = np.zeros((n, n), dtype=np.complex128)
    if pos.any():
        vp = v[:, pos]
        plus = hermitize((vp * w[pos]) @ vp.conj().T)
    if neg.any():
        vn = v[:, neg]
        minus = hermitize((vn * (-w[neg])) @ vn.conj().T)
    return plus, minus


def split_pos_neg(
    m, zero_tol: float = DEFAULT_ZERO_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Split a Hermitian matrix M into PSD parts with M = plus - minus.

    The two parts have support on orthogonal subspaces (plus @ minus = 0).
    """
    return split_from_eigensystem(hermitian_eig(m), zero_tol)


def spectral_norm(m) -> float:
    """Largest singular value of a (possibly rectangular) complex matrix."""
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    if a.shape[0] == a.shape[1] and is_hermitian(a):
        w = hermitian_eig(a).eigenvalues
        return float(np.abs(w).max())
    gram = a.conj().T @ a if a.shape[0] >= a.shape[1] else a @ a.conj().T
    w = hermitian_eig(hermitize(gram)).eigenvalues
    return float(np.sqrt(max(float(w[0]), 0.0)))


def project_psd(m) -> np.ndarray:
    """Nearest PSD matrix in Frobenius distance (negative eigenvalues clipped).

    Backed by LAPACK (np.linalg.eigh): this runs inside projection inner
    loops where the Jacobi solver would dominate the cost.
    """
    a = require_hermitian(m)
    w, v = np.linalg.eigh(hermitize(a))
    if w[0] >= 0.0:
        return a
    w = np.maximum(w, 0.0)
    return hermitize((v * w) @ v.conj().T)
