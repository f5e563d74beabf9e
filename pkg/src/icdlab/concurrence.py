"""
Concurrence and entanglement of formation for arbitrary two-qubit states.

The optimal pure-state ensemble follows Wootters' construction: the
spectral vectors ``v_i`` are mixed by a unitary ``U`` that brings the
complex-symmetric overlap matrix ``tau_ij = <v_i|v~_j>`` to nonnegative
diagonal form, giving the x-vectors; a Hadamard-signed, phase-weighted
recombination of those gives the z-vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qmat, qstate
from .errors import NotSymmetric, OutOfRange
from .qmat import SIGMA_YY

TOL_SYM = 1e-10

HADAMARD_SIGNS = np.array([[1, 1, 1, 1],
                           [1, 1, -1, -1],
                           [1, -1, 1, -1],
                           [1, -1, -1, 1]], dtype=float)

# theta_1 = 0, theta_2 = theta_3 = theta_4 = pi/2
MARGINAL_PHASES = (0.0, math.pi / 2, math.pi / 2, math.pi / 2)


@dataclass(frozen=True)
class ConcurrenceReport:
    lambdas: tuple
    concurrence: float
    eof: float

    def to_json(self) -> dict:
        return {"lambdas": list(self.lambdas), "concurrence": self.concurrence, "eof": self.eof}


@dataclass(frozen=True)
class TakagiResult:
    """Unitary ``u`` with ``u @ tau @ u.T == diag(lambdas)``."""

    u: np.ndarray
    lambdas: np.ndarray

    def residuals(self, tau) -> tuple[float, float]:
        """(max |u u^dagger - I|, max |u tau u^T - diag(lambdas)|)."""
        n = self.u.shape[0]
        unit = float(np.max(np.abs(self.u @ self.u.conj().T - np.eye(n))))
        diag = float(np.max(np.abs(self.u @ tau @ self.u.T - np.diag(self.lambdas))))
        return unit, diag


def binary_entropy(x: float, log_base: float = 2.0) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    h = -x * math.log(x) - (1.0 - x) * math.log(1.0 - x)
    return h / math.log(log_base)


def eof_from_concurrence(c: float, log_base: float = 2.0) -> float:
    """
    Entanglement of formation ``H(1/2 + sqrt(1 - c^2)/2)``.

    ``log_base`` is 2 for ebits or ``math.e`` for nats.
    """
    if not -1e-12 <= c <= 1.0 + 1e-12:
        raise OutOfRange(f"concurrence {c!r} outside [0, 1]")
    c = min(max(c, 0.0), 1.0)
    return binary_entropy(0.5 + 0.5 * math.sqrt(1.0 - c * c), log_base)


def subnormalized_eigenvectors(rho, cutoff: float = 1e-15) -> np.ndarray:
    """Rows ``sqrt(p_i) |psi_i>`` for the eigenvalues of ``rho`` above ``cutoff``."""
    eig = qmat.hermitian_eig(rho)
    keep = eig.values > cutoff
    return (eig.vectors[:, keep] * np.sqrt(eig.values[keep])).T


def tau_matrix(vset) -> np.ndarray:
    """``tau_ij = <v_i|v~_j>`` for rows ``v_i``; complex symmetric."""
    v = np.atleast_2d(np.asarray(vset, dtype=complex))
    tau = v.conj() @ SIGMA_YY @ v.conj().T
    return 0.5 * (tau + tau.T)


def _fixed_vectors(tau: np.ndarray, block: np.ndarray, sigma: float) -> list[np.ndarray]:
    # Orthonormal q in span(block) with tau @ conj(q) == sigma * q.
    # q -> tau conj(q) / sigma is an antiunitary involution on the span.
    # Dividing by a small sigma amplifies rounding in directions belonging to
    # larger singular values, so every image is projected back onto the span.
    found: list[np.ndarray] = []
    proj = block @ block.conj().T
    for k in range(block.shape[1]):
        q = block[:, k].copy()
        for b in found:
            q -= b * np.vdot(b, q)
        q /= np.linalg.norm(q)
        w = q + tau @ q.conj() / sigma
        if np.linalg.norm(w) < 1.0:
            w = 1j * q + tau @ (1j * q).conj() / sigma
        w = proj @ w
        for b in found:
            w -= b * np.vdot(b, w)
        found.append(w / np.linalg.norm(w))
    return found


def takagi(tau, tol_sym: float = TOL_SYM, cluster_tol: float = 1e-10) -> TakagiResult:
    """
    Symmetric factorization of a complex-symmetric matrix.

    Returns a unitary ``U`` with ``U tau U^T`` real, nonnegative, diagonal and
    sorted in descending order. The diagonal entries are the square roots of
    the eigenvalues of ``tau tau*``.

    Raises
    ------
    NotSymmetric
        If ``max |tau - tau^T|`` exceeds ``tol_sym``.
    """
    tau = np.atleast_2d(np.asarray(tau, dtype=complex))
    n = tau.shape[0]
    if tau.shape != (n, n):
        raise ValueError(f"tau must be square, got {tau.shape}")
    asym = float(np.max(np.abs(tau - tau.T))) if n else 0.0
    if asym > tol_sym:
        raise NotSymmetric(f"max |tau - tau^T| = {asym:.3e}")
    tau = 0.5 * (tau + tau.T)
    w, s, _ = np.linalg.svd(tau)
    scale = s[0] if n and s[0] > 0 else 1.0
    cols: list[np.ndarray] = []
    i = 0
    while i < n:
        j = i + 1
        while j < n and s[i] - s[j] <= cluster_tol * scale:
            j += 1
        sigma = float(np.mean(s[i:j]))
        if sigma <= 1e-14 * scale:
            cols.extend(w[:, k] for k in range(i, j))
        else:
            cols.extend(_fixed_vectors(tau, w[:, i:j], sigma))
        i = j
    u = np.column_stack(cols).conj().T if n else np.zeros((0, 0), complex)
    d = np.diag(u @ tau @ u.T)
    u = u * np.exp(-0.5j * np.angle(d))[:, None]
    lam = np.real(np.diag(u @ tau @ u.T))
    order = np.argsort(-lam, kind="stable")
    return TakagiResult(u[order], np.clip(lam[order], 0.0, None))


def x_vectors(vset, tk: TakagiResult) -> np.ndarray:
    """Rows ``x_i = sum_j U*_ij v_j``; then ``<x_i|x~_j> = lambda_i delta_ij``."""
    v = np.atleast_2d(np.asarray(vset, dtype=complex))
    return tk.u.conj() @ v


def wootters_ensemble(x, phases=MARGINAL_PHASES) -> np.ndarray:
    """
    Rows ``z_a = 1/2 sum_j h_aj exp(i phase_j) x_j`` with Hadamard signs ``h``.

    Each ``z_a`` has ``<z_a|z~_a> = 1/4 sum_j exp(2i phase_j) lambda_j``; with
    the default phases that is ``(lambda_1 - lambda_2 - lambda_3 - lambda_4)/4``.
    Fewer than four x-vectors are padded with zeros.
    """
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    if x.shape[0] > 4:
        raise ValueError("at most four x-vectors")
    if x.shape[0] < 4:
        x = np.vstack([x, np.zeros((4 - x.shape[0], x.shape[1]), complex)])
    ph = np.exp(1j * np.asarray(phases, dtype=float))
    return 0.5 * (HADAMARD_SIGNS * ph) @ x


def optimal_ensemble(rho) -> np.ndarray:
    """Subnormalized decomposition of ``rho`` whose average concurrence is ``C(rho)``."""
    v = subnormalized_eigenvectors(rho)
    x = x_vectors(v, takagi(tau_matrix(v)))
    return wootters_ensemble(x)


def _pad4(values) -> tuple:
    vals = sorted((float(x) for x in values), reverse=True)
    return tuple((vals + [0.0] * 4)[:4])


def concurrence_general(rho, log_base: float = 2.0) -> ConcurrenceReport:
    """
    Wootters concurrence of any two-qubit density matrix.

    The lambdas are the singular values of ``tau`` built from the spectral
    vectors of ``rho``; they coincide with the square roots of the
    eigenvalues of ``rho rho~``.
    """
    rho = qstate.density(rho)
    v = subnormalized_eigenvectors(rho)
    lam = _pad4(np.linalg.svd(tau_matrix(v), compute_uv=False)) if len(v) else (0.0,) * 4
    c = max(0.0, lam[0] - lam[1] - lam[2] - lam[3])
    c = min(c, 1.0)
    return ConcurrenceReport(lam, c, eof_from_concurrence(c, log_base))


def lambdas_via_r(rho) -> tuple:
    """Square roots of the eigenvalues of ``sqrt(rho) rho~ sqrt(rho)``, clamped at zero."""
    root = qmat.psd_sqrt(rho)
    h = root @ qstate.spin_flip(rho) @ root
    vals = qmat.hermitian_eig(0.5 * (h + h.conj().T)).values
    # tiny negative eigenvalues are rounding noise
    return _pad4(np.sqrt(np.clip(vals, 0.0, None)))


def average_concurrence(vectors) -> float:
    """``sum_i |<v_i|v~_i>|`` for a subnormalized pure-state ensemble."""
    v = np.atleast_2d(np.asarray(vectors, dtype=complex))
    return float(np.sum(np.abs(np.einsum("ia,ab,ib->i", v.conj(), SIGMA_YY, v.conj()))))
