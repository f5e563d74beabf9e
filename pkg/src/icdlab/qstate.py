"""Two-qubit states: validation, mixtures, spin flip, PPT diagnostics, JSON forms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qmat
from .errors import InvalidDensity, InvalidWeights
from .qmat import SIGMA_YY

TOL_STATE = 1e-10


def density(matrix, tol: float = TOL_STATE) -> np.ndarray:
    """Validate a 4x4 density matrix and return it as a complex array."""
    try:
        rho = qmat.as_matrix(matrix, (4,))
    except ValueError as exc:
        raise InvalidDensity(str(exc)) from None
    herm = qmat.hermiticity_error(rho)
    if herm > tol:
        raise InvalidDensity(f"not Hermitian (max deviation {herm:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise InvalidDensity(f"trace {tr!r} differs from 1")
    low = np.linalg.eigvalsh(0.5 * (rho + qmat.dagger(rho)))[0]
    if low < -tol:
        raise InvalidDensity(f"negative eigenvalue {low:.3e}")
    return rho


def pure_state(amplitudes, tol: float = TOL_STATE) -> np.ndarray:
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if psi.shape != (4,) or not np.all(np.isfinite(psi)):
        raise InvalidDensity(f"expected 4 finite amplitudes, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise InvalidDensity(f"state norm {norm!r} differs from 1")
    return psi


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


@dataclass(frozen=True)
class WeightedEnsemble:
    """Pure states (rows of ``states``) with nonnegative mixing weights."""

    weights: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        s = np.atleast_2d(np.asarray(self.states, dtype=complex))
        if s.shape[0] != w.shape[0]:
            raise InvalidWeights(f"{w.shape[0]} weights for {s.shape[0]} states")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", s)

    def __len__(self):
        return len(self.weights)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def normalized(self) -> "WeightedEnsemble":
        return WeightedEnsemble(self.weights / self.total, self.states)

    def operator(self) -> np.ndarray:
        """Unnormalized sum of weighted projectors."""
        return (self.states.T * self.weights) @ self.states.conj()

    def to_json(self) -> dict:
        return {"weights": [float(w) for w in self.weights],
                "amplitudes": [vector_to_json(s) for s in self.states]}

    @classmethod
    def from_json(cls, doc: dict) -> "WeightedEnsemble":
        states = [vector_from_json(a) for a in doc["amplitudes"]]
        return cls(np.array(doc["weights"], dtype=float), np.array(states).reshape(len(states), 4))


def mix(ensemble: WeightedEnsemble, tol: float = TOL_STATE) -> np.ndarray:
    """Density matrix ``sum_i w_i |s_i><s_i|`` of a normalized ensemble."""
    w = ensemble.weights
    if np.any(w < -tol):
        raise InvalidWeights(f"negative weight {w.min():.3e}")
    if abs(w.sum() - 1.0) > tol:
        raise InvalidWeights(f"weights sum to {w.sum()!r}")
    norms = np.linalg.norm(ensemble.states, axis=1)
    if np.any(np.abs(norms - 1.0) > tol):
        raise InvalidWeights("ensemble states must be normalized")
    return density(ensemble.operator(), tol=max(tol, 1e-9))


def spin_flip(rho) -> np.ndarray:
    """``(sigma_y x sigma_y) rho* (sigma_y x sigma_y)``."""
    rho = qmat.as_matrix(rho, (4,))
    return SIGMA_YY @ rho.conj() @ SIGMA_YY


def flip_vector(psi) -> np.ndarray:
    """``|psi~> = (sigma_y x sigma_y)|psi*>``."""
    return SIGMA_YY @ np.conj(np.asarray(psi, dtype=complex))


def preconcurrence(psi) -> complex:
    """``<psi|psi~>``; its modulus is the concurrence of a normalized state."""
    psi = np.asarray(psi, dtype=complex)
    return complex(np.vdot(psi, flip_vector(psi)))


def pure_concurrence(psi) -> float:
    """Concurrence ``2|ad - bc|`` of a (not necessarily normalized) pure state."""
    psi = np.asarray(psi, dtype=complex)
    return float(abs(preconcurrence(psi)) / np.vdot(psi, psi).real)


def ppt_min_eigenvalue(rho) -> float:
    """Smallest eigenvalue of the partial transpose on the second qubit."""
    pt = qmat.partial_transpose(rho, subsystem=2)
    return float(np.linalg.eigvalsh(0.5 * (pt + qmat.dagger(pt)))[0])


def is_ppt_separable(rho, tol_psd: float = qmat.TOL_PSD) -> bool:
    # exact in 2x2 by Peres-Horodecki; boundary states within tol_psd count as separable
    return ppt_min_eigenvalue(rho) >= -tol_psd


def matrix_to_json(m) -> list:
    """Row-major list of ``[re, im]`` pairs."""
    return [[float(z.real), float(z.imag)] for z in np.asarray(m, dtype=complex).reshape(-1)]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape == (16, 2):
        arr = arr.reshape(4, 4, 2)
    if arr.shape != (4, 4, 2):
        raise ValueError(f"expected 16 [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def vector_to_json(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex).reshape(-1)]


def vector_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape != (4, 2):
        raise ValueError(f"expected 4 [re, im] pairs, got shape {arr.shape}")
    return arr[:, 0] + 1j * arr[:, 1]


def density_to_json(rho) -> dict:
    return {"matrix": matrix_to_json(rho)}


def density_from_json(doc: dict) -> np.ndarray:
    return density(matrix_from_json(doc["matrix"]))


def state_to_json(psi) -> dict:
    return {"amplitudes": vector_to_json(psi)}


def state_from_json(doc: dict) -> np.ndarray:
    return pure_state(vector_from_json(doc["amplitudes"]))
