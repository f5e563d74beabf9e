"""
Iso-concurrence decomposable (ICD) states.

An ICD state mixes four orthonormal states, each with concurrence sin(2 theta):

    psi_1 = cos t |uu> + sin t |dd>      psi_3 = cos t |ud> + sin t |du>
    psi_2 = sin t |uu> - cos t |dd>      psi_4 = sin t |ud> - cos t |du>

so ``rho = sum_i p_i |psi_i><psi_i|`` lives on a tetrahedron for each angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import qmat
from .concurrence import TakagiResult
from .errors import InvalidParams, ThetaOutOfRange

SUM_TOL = 1e-9
# a decimal input off by exactly SUM_TOL can land a few ulps beyond it in binary
_SUM_SLACK = 1e-15

SEPARABLE = "Separable"
REGIONS = (SEPARABLE, "Entangled1", "Entangled2", "Entangled3", "Entangled4")


@dataclass(frozen=True)
class ICDParams:
    """A point ``p`` of the probability simplex plus the basis angle ``theta``."""

    p: tuple
    theta: float

    def __post_init__(self):
        try:
            p = np.asarray(self.p, dtype=float).reshape(-1)
            theta = float(self.theta)
        except (TypeError, ValueError) as exc:
            raise InvalidParams(str(exc)) from None
        if p.shape != (4,) or not np.all(np.isfinite(p)) or not math.isfinite(theta):
            raise InvalidParams(f"need four finite probabilities and a finite angle, got {self.p!r}, {self.theta!r}")
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise InvalidParams(f"probabilities must lie in [0, 1], got {p.tolist()}")
        p = np.clip(p, 0.0, 1.0)
        total = p.sum()
        if abs(total - 1.0) > SUM_TOL + _SUM_SLACK:
            raise InvalidParams(f"probabilities sum to {total!r}, not 1")
        if not 0.0 < theta < math.pi / 2:
            raise ThetaOutOfRange(f"theta = {theta!r} must lie strictly between 0 and pi/2")
        object.__setattr__(self, "p", tuple(float(x) for x in p / total))
        object.__setattr__(self, "theta", theta)

    @property
    def sin2(self) -> float:
        return math.sin(2.0 * self.theta)

    @property
    def cos2(self) -> float:
        return math.cos(2.0 * self.theta)

    def permuted(self, perm) -> "ICDParams":
        return ICDParams(tuple(self.p[i] for i in perm), self.theta)

    def to_json(self) -> dict:
        return {"p": list(self.p), "theta": self.theta}

    @classmethod
    def from_json(cls, doc: dict) -> "ICDParams":
        return cls(tuple(doc["p"]), doc["theta"])


@dataclass(frozen=True)
class RegionLabel:
    """Region of the tetrahedron; ``slack`` is the signed violation of the binding inequality."""

    kind: str
    slack: float

    @property
    def index(self) -> int:
        """0 for separable, k for the region violating inequality k."""
        return REGIONS.index(self.kind)


class LambdaSpectrum(NamedTuple):
    labeled: tuple
    descending: tuple


def icd_basis(theta: float) -> np.ndarray:
    """The four basis states as rows, in the |uu>,|ud>,|du>,|dd> order."""
    if not 0.0 < theta < math.pi / 2:
        raise ThetaOutOfRange(f"theta = {theta!r} must lie strictly between 0 and pi/2")
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0, 0, s],
                     [s, 0, 0, -c],
                     [0, c, s, 0],
                     [0, s, -c, 0]], dtype=complex)


def icd_density(params: ICDParams) -> np.ndarray:
    psi = icd_basis(params.theta)
    return (psi.T * np.asarray(params.p)) @ psi.conj()


def _pair_root(a: float, b: float, s: float) -> float:
    # hypot keeps tiny probabilities from underflowing when squared
    return math.hypot(2.0 * math.sqrt(a) * math.sqrt(b), (a - b) * s)


def violations(params: ICDParams, literal: bool = False) -> np.ndarray:
    """
    ``lhs - rhs`` of the four separability inequalities; positive means violated.

    The corrected form carries ``sin(2 theta)`` on the left-hand side, e.g.
    ``(p1 - p2) sin2t <= sqrt(4 p3 p4 + (p3 - p4)^2 sin^2 2t)``. ``literal=True``
    drops that factor, reproducing the printed inequalities for comparison.
    """
    p1, p2, p3, p4 = params.p
    s = params.sin2
    k = 1.0 if literal else s
    r12, r34 = _pair_root(p1, p2, s), _pair_root(p3, p4, s)
    return np.array([(p1 - p2) * k - r34,
                     (p2 - p1) * k - r34,
                     (p3 - p4) * k - r12,
                     (p4 - p3) * k - r12])


def classify_region(params: ICDParams, literal: bool = False) -> RegionLabel:
    v = violations(params, literal=literal)
    k = int(np.argmax(v))
    if v[k] > 0.0:
        return RegionLabel(REGIONS[k + 1], float(v[k]))
    return RegionLabel(SEPARABLE, float(v[k]))


def concurrence_icd(params: ICDParams) -> float:
    """Closed-form concurrence, ``max(0, (p1 - p2) sin2t - sqrt(...))`` in region-1 position."""
    region = classify_region(params)
    if region.kind == SEPARABLE:
        return 0.0
    q = params.permuted(REGION_MAPS[region.kind][0])
    p1, p2, p3, p4 = q.p
    s = q.sin2
    return max(0.0, (p1 - p2) * s - _pair_root(p3, p4, s))


def lambda_spectrum_icd(params: ICDParams) -> LambdaSpectrum:
    p1, p2, p3, p4 = params.p
    s = params.sin2
    r12, r34 = _pair_root(p1, p2, s), _pair_root(p3, p4, s)
    labeled = (0.5 * ((p1 - p2) * s + r12),
               0.5 * ((p2 - p1) * s + r12),
               0.5 * ((p3 - p4) * s + r34),
               0.5 * ((p4 - p3) * s + r34))
    return LambdaSpectrum(labeled, tuple(sorted(labeled, reverse=True)))


def tau_icd(params: ICDParams) -> np.ndarray:
    """Closed-form ``tau`` for the vectors ``sqrt(p_i) psi_i``."""
    p1, p2, p3, p4 = params.p
    s, c = params.sin2, params.cos2
    t12 = math.sqrt(p1 * p2) * c
    t34 = math.sqrt(p3 * p4) * c
    return np.array([[-p1 * s, t12, 0, 0],
                     [t12, p2 * s, 0, 0],
                     [0, 0, p3 * s, -t34],
                     [0, 0, -t34, -p4 * s]], dtype=complex)


def _alpha_pair(a: float, b: float, s: float, c: float) -> tuple[float, float]:
    big = (a + b) * s
    root = _pair_root(a, b, s)
    bracket = 4.0 * a * b * c * c + big * big + big * root
    if bracket <= 1e-300:
        # empty block: any unitary works
        return 1.0, 0.0
    # square-rooted bracket in both denominators; the printed form is not unitary
    den = math.sqrt(bracket)
    return (big + root) / (math.sqrt(2.0) * den), math.sqrt(2.0 * a * b) * c / den


def alphas(params: ICDParams) -> tuple[float, float, float, float]:
    s, c = params.sin2, params.cos2
    p1, p2, p3, p4 = params.p
    return _alpha_pair(p1, p2, s, c) + _alpha_pair(p3, p4, s, c)


def unitary_U_icd(params: ICDParams) -> TakagiResult:
    """
    Block unitary bringing :func:`tau_icd` to ``diag(lambda_1..lambda_4)``.

    Rows and lambdas keep the labeling of :func:`lambda_spectrum_icd`, so
    they are not sorted; in region 1 and on its boundary ``lambda_1`` is
    the largest.
    """
    a1, a2, a3, a4 = alphas(params)
    u = np.array([[1j * a1, -1j * a2, 0, 0],
                  [a2, a1, 0, 0],
                  [0, 0, a3, -a4],
                  [0, 0, 1j * a4, 1j * a3]], dtype=complex)
    return TakagiResult(u, np.array(lambda_spectrum_icd(params).labeled))


def _local_unitaries() -> dict:
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)
    swap12 = qmat.tensor(z, eye) @ qmat.tensor(x, x)
    swap13 = qmat.tensor(eye, x)
    return {"Entangled1": np.eye(4, dtype=complex),
            "Entangled2": swap12,
            "Entangled3": swap13,
            "Entangled4": swap13 @ swap12}


# region -> (coordinate permutation, local unitary W) with
# W rho(p) W^dagger = rho(p[perm]) and W psi_k ~ psi_1
REGION_MAPS = {
    kind: (perm, w)
    for (kind, w), perm in zip(_local_unitaries().items(),
                               [(0, 1, 2, 3), (1, 0, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0)])
}
REGION_MAPS[SEPARABLE] = REGION_MAPS["Entangled1"]


def to_region1(params: ICDParams, kind: str | None = None) -> tuple[ICDParams, np.ndarray]:
    """Coordinates of the locally equivalent point in region-1 position and the local unitary used."""
    kind = kind or classify_region(params).kind
    perm, w = REGION_MAPS[kind]
    return params.permuted(perm), w


def from_region1(params1: ICDParams, kind: str) -> ICDParams:
    perm, _ = REGION_MAPS[kind]
    inverse = np.argsort(perm)
    return params1.permuted(inverse)
