"""
Small dense complex linear algebra for two-qubit work.

Matrices are plain ``numpy`` arrays of shape (2, 2) or (4, 4); sets of
vectors are arrays of shape (k, 4) holding one vector per row. The basis
order for two qubits is |uu>, |ud>, |du>, |dd> (indices 0..3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotHermitian, NotPSD, RankDeficient, SingularOnRange

TOL_HERM = 1e-10
TOL_PSD = 1e-10
TOL_RANK = 1e-12

# Ties closer than this are ordered by eigenvector content instead of value.
_TIE_TOL = 1e-12

SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y).real.astype(complex)


@dataclass(frozen=True)
class HermitianEig:
    """Descending real spectrum with orthonormal eigenvectors in the columns."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T


def as_matrix(a, dims=(2, 4)) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in dims:
        raise ValueError(f"expected a square matrix of size {dims}, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_vectors(vectors) -> np.ndarray:
    v = np.atleast_2d(np.asarray(vectors, dtype=complex))
    if v.ndim != 2 or v.shape[1] != 4:
        raise ValueError(f"expected rows of 4-vectors, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two 2x2 operators in the |uu>,|ud>,|du>,|dd> order."""
    return np.kron(as_matrix(a, (2,)), as_matrix(b, (2,)))


def hermiticity_error(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - dagger(h)))) if h.size else 0.0


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so its first component of largest modulus is real positive."""
    v = np.asarray(v, dtype=complex)
    mags = np.abs(v)
    if mags.max() == 0.0:
        return v.copy()
    # first index within rounding of the maximum keeps the choice stable
    k = int(np.argmax(mags >= mags.max() * (1 - 1e-12)))
    return v * (np.conj(v[k]) / mags[k])


def _order(values: np.ndarray, vectors: np.ndarray) -> HermitianEig:
    cols = [fix_phase(vectors[:, j]) for j in range(vectors.shape[1])]
    idx = sorted(range(len(values)), key=lambda j: -values[j])
    # stable lexicographic tie-break inside clusters of (numerically) equal values
    out: list[int] = []
    i = 0
    while i < len(idx):
        j = i + 1
        while j < len(idx) and abs(values[idx[i]] - values[idx[j]]) <= _TIE_TOL * max(1.0, abs(values[idx[i]])):
            j += 1
        group = idx[i:j]
        if len(group) > 1:
            group.sort(key=lambda c: tuple(x for z in cols[c] for x in (-round(z.real, 12), -round(z.imag, 12))))
        out.extend(group)
        i = j
    vals = np.array([values[j] for j in out], dtype=float)
    vecs = np.column_stack([cols[j] for j in out])
    return HermitianEig(vals, vecs)


def hermitian_eig(h, tol_herm: float = TOL_HERM) -> HermitianEig:
    """
    Eigendecomposition of a Hermitian matrix.

    Values are sorted in descending order. Each eigenvector has its first
    largest-modulus component made real positive; equal values are ordered
    by the lexicographic order of those phase-fixed vectors.

    Raises
    ------
    NotHermitian
        If any entry of ``h - h^dagger`` exceeds ``tol_herm`` in modulus.
    """
    h = as_matrix(h)
    err = hermiticity_error(h)
    if err > tol_herm:
        raise NotHermitian(f"max |h - h^dagger| = {err:.3e} exceeds {tol_herm:.1e}")
    w, v = np.linalg.eigh(0.5 * (h + dagger(h)))
    return _order(w, v)


def jacobi_eig(h, tol: float = 1e-14, max_sweeps: int = 64, tol_herm: float = TOL_HERM) -> HermitianEig:
    """
    Cyclic complex Jacobi eigensolver.

    Independent of LAPACK; used to cross-check :func:`hermitian_eig`.
    Stops once the off-diagonal Frobenius mass drops below ``tol`` times the
    matrix norm.
    """
    h = as_matrix(h)
    err = hermiticity_error(h)
    if err > tol_herm:
        raise NotHermitian(f"max |h - h^dagger| = {err:.3e} exceeds {tol_herm:.1e}")
    a = 0.5 * (h + dagger(h))
    n = a.shape[0]
    q = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        # summed directly: total minus diagonal mass cancels catastrophically
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off < tol * scale:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                c = a[p, r]
                mag = abs(c)
                if mag < 1e-300:
                    continue
                phase = c / mag
                app, arr = a[p, p].real, a[r, r].real
                # real symmetric rotation on [[app, mag], [mag, arr]] after removing the phase
                zeta = (arr - app) / (2.0 * mag)
                t = np.sign(zeta) / (abs(zeta) + np.hypot(1.0, zeta)) if zeta != 0 else 1.0
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = t * cs
                rot = np.eye(n, dtype=complex)
                rot[p, p] = cs
                rot[p, r] = sn
                rot[r, p] = -sn * np.conj(phase)
                rot[r, r] = cs * np.conj(phase)
                a = dagger(rot) @ a @ rot
                q = q @ rot
    return _order(np.real(np.diag(a)), q)


def psd_sqrt(h, tol_psd: float = TOL_PSD, tol_herm: float = TOL_HERM) -> np.ndarray:
    """Hermitian square root of a positive semidefinite matrix."""
    eig = hermitian_eig(h, tol_herm=tol_herm)
    if eig.values.min() < -tol_psd:
        raise NotPSD(f"eigenvalue {eig.values.min():.3e} below -{tol_psd:.1e}")
    root = np.sqrt(np.clip(eig.values, 0.0, None))
    return (eig.vectors * root) @ dagger(eig.vectors)


def partial_transpose(rho, subsystem: int = 2) -> np.ndarray:
    """Transpose one tensor factor of a 4x4 operator."""
    r = as_matrix(rho, (4,)).reshape(2, 2, 2, 2)
    if subsystem == 2:
        r = r.transpose(0, 3, 2, 1)
    elif subsystem == 1:
        r = r.transpose(2, 1, 0, 3)
    else:
        raise ValueError("subsystem must be 1 or 2")
    return r.reshape(4, 4).copy()


def gram(vectors) -> np.ndarray:
    v = as_vectors(vectors)
    return v.conj() @ v.T


def dual_basis(vectors, tol_rank: float = TOL_RANK) -> np.ndarray:
    """
    Dual vectors within the span of a linearly independent set.

    The returned rows satisfy ``<dual_i|v_j> = delta_ij``.
    """
    v = as_vectors(vectors)
    g = gram(v)
    det = abs(np.linalg.det(g))
    if det <= tol_rank:
        raise RankDeficient(f"Gram determinant {det:.3e} not above {tol_rank:.1e}")
    # rows: dual_i = sum_k (G^-1)_{ki} v_k
    return np.linalg.solve(g.T, v)


def expansion_coefficients(m, basis) -> np.ndarray:
    """Coefficients ``a`` with ``m = sum_ij a_ij |phi_i><phi_j|`` on the span of ``basis``."""
    m = as_matrix(m, (4,))
    phi = as_vectors(basis).T
    # the SVD pseudo-inverse loses cond(phi) digits; inverting the Gram matrix would lose cond(phi)^2
    left = np.linalg.pinv(phi)
    return left @ m @ dagger(left)


def restricted_inverse(m, range_basis, tol_rank: float = TOL_RANK, tol_range: float = 1e-9) -> np.ndarray:
    """
    Inverse of ``m`` restricted to the span of ``range_basis``.

    ``m`` is expanded as ``sum a_ij |phi_i><phi_j|``; the inverse is
    ``sum b_ij |dual_i><dual_j|`` with ``b = a^-1``.

    Raises
    ------
    RankDeficient
        The basis vectors are not independent.
    SingularOnRange
        ``m`` does not live on the span, or its coefficient matrix is singular.
    """
    m = as_matrix(m, (4,))
    phi = as_vectors(range_basis)
    duals = dual_basis(phi, tol_rank=tol_rank)
    a = expansion_coefficients(m, phi)
    outside = np.max(np.abs(phi.T @ a @ phi.conj() - m))
    if outside > tol_range * max(1.0, np.max(np.abs(m))):
        raise SingularOnRange(f"operator leaves the span (residual {outside:.3e})")
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond * np.finfo(float).eps > 1e-2:
        raise SingularOnRange(f"coefficient matrix is singular (condition {cond:.3e})")
    b = np.linalg.inv(a)
    return duals.T @ b @ duals.conj()


def pseudo_inverse(h, rel_cutoff: float = 1e-10) -> np.ndarray:
    """Moore-Penrose inverse of a Hermitian PSD matrix via its spectrum."""
    eig = hermitian_eig(h)
    top = max(eig.values.max(), 0.0)
    keep = eig.values > rel_cutoff * max(top, 1e-300)
    vecs = eig.vectors[:, keep]
    return (vecs / eig.values[keep]) @ dagger(vecs)


def numerical_rank(vectors, rel_tol: float = 1e-9) -> int:
    s = np.linalg.svd(as_vectors(vectors), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))
