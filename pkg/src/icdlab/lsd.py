"""
Lewenstein-Sanpera decomposition of ICD states.

For a region-1 state ``rho = lam * rho_s + (1 - lam) |psi_1><psi_1|`` with

    lam = 1 - p1 + p2 + sqrt(4 p3 p4 / sin^2(2t) + (p3 - p4)^2)

puts ``rho_s`` on the separable boundary. Its product ensemble is built from
the Wootters x-vectors of ``rho_s`` with phases (0, pi/2, pi/2, pi/2), and
:func:`verify_optimality` certifies it against the single and pairwise
maximality conditions of the best separable approximation.
Other entangled regions are handled through local unitaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from . import icd as icdmod
from . import qmat, qstate
from .concurrence import wootters_ensemble, x_vectors
from .errors import IcdLabError, NotOnBoundary, NotRegion1, ThetaOutOfRange
from .icd import ICDParams, REGION_MAPS, SEPARABLE
from .qstate import WeightedEnsemble

BRANCHES = ("FullRank", "P2Zero", "P3Zero", "P4Zero", "Rank2", "Pure")

ZERO_TOL = 1e-9
SEAM_TOL = 1e-6
TOL_RECON = 1e-10
TOL_PAIR = 1e-8
TOL_PRODUCT = 1e-9
TOL_BOUNDARY = 1e-9
# below this the separable part is dropped: the quotients can no longer be resolved
LAM_FLOOR = 1e-11
# spectral cross-check cutoff, far above the rounding floor of a rank-deficient 4x4
PINV_CUTOFF = 1e-14


@dataclass(frozen=True)
class LSDecomposition:
    """
    ``rho = lam * rho_s + (1 - lam) |pure_part><pure_part|``.

    ``bsa`` holds normalized product states with weights already multiplied
    by ``lam``, so together with the pure part it is one normalized ensemble
    for ``rho``; :attr:`bsa_normalized` gives the ensemble of ``rho_s`` alone.
    """

    lam: float
    params: ICDParams
    region: str
    sep_params: ICDParams | None
    pure_part: np.ndarray | None
    bsa: WeightedEnsemble | None = None

    @property
    def bsa_normalized(self) -> WeightedEnsemble | None:
        if self.bsa is None or self.lam <= 0.0:
            return None
        return WeightedEnsemble(self.bsa.weights / self.lam, self.bsa.states)

    def separable_density(self) -> np.ndarray | None:
        return None if self.sep_params is None else icdmod.icd_density(self.sep_params)

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((4, 4), dtype=complex)
        if self.sep_params is not None:
            out += self.lam * icdmod.icd_density(self.sep_params)
        if self.pure_part is not None:
            out += (1.0 - self.lam) * qstate.projector(self.pure_part)
        return out

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "params": self.params.to_json(),
            "region": self.region,
            "sep_params": None if self.sep_params is None else self.sep_params.to_json(),
            "pure_part": None if self.pure_part is None else qstate.state_to_json(self.pure_part),
            "bsa": None if self.bsa is None else self.bsa.to_json(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LSDecomposition":
        sep = doc.get("sep_params")
        pure = doc.get("pure_part")
        bsa = doc.get("bsa")
        return cls(
            lam=float(doc["lambda"]),
            params=ICDParams.from_json(doc["params"]),
            region=doc.get("region") or icdmod.classify_region(ICDParams.from_json(doc["params"])).kind,
            sep_params=None if sep is None else ICDParams.from_json(sep),
            pure_part=None if pure is None else qstate.vector_from_json(pure["amplitudes"]),
            bsa=None if bsa is None else WeightedEnsemble.from_json(bsa),
        )


@dataclass(frozen=True)
class Check:
    label: str
    passed: bool
    residual: float
    note: str = ""

    def to_json(self) -> dict:
        out = {"label": self.label, "passed": bool(self.passed), "residual": float(self.residual)}
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class OptimalityVerdict:
    branch: str
    single_maximality: list = field(default_factory=list)
    pair_maximality: list = field(default_factory=list)
    checks: list = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in (*self.single_maximality, *self.pair_maximality, *self.checks))

    @property
    def max_residual(self) -> float:
        res = [c.residual for c in (*self.single_maximality, *self.pair_maximality)]
        return max(res, default=0.0)

    def failures(self) -> list:
        return [c for c in (*self.single_maximality, *self.pair_maximality, *self.checks) if not c.passed]

    def to_json(self) -> dict:
        return {
            "branch": self.branch,
            "overall": bool(self.overall),
            "single_maximality": [c.to_json() for c in self.single_maximality],
            "pair_maximality": [c.to_json() for c in self.pair_maximality],
            "checks": [c.to_json() for c in self.checks],
        }


def separable_weight(params: ICDParams) -> float:
    """Closed-form ``lam`` in region-1 position (values >= 1 mean separable)."""
    p1, p2, p3, p4 = params.p
    s = params.sin2
    if s < 1e-12:
        raise ThetaOutOfRange(f"sin(2 theta) = {s:.3e} too small")
    # 1 - p1 written as p2 + p3 + p4 to avoid cancellation near the vertex
    return (p2 + p3 + p4) + p2 + _sep_root(p3, p4, s)


def _sep_root(p3: float, p4: float, s: float) -> float:
    return math.hypot(2.0 * math.sqrt(p3) * math.sqrt(p4) / s, p3 - p4)


def lsd_closed_form(params: ICDParams) -> LSDecomposition:
    """
    Optimal decomposition of a region-1 ICD state.

    Raises
    ------
    NotRegion1
        The point does not violate the first separability inequality.
    ThetaOutOfRange
        ``sin(2 theta)`` is below 1e-12.
    """
    region = icdmod.classify_region(params)
    if region.kind != "Entangled1":
        raise NotRegion1(f"point is in region {region.kind}")
    lam = separable_weight(params)
    pure = icdmod.icd_basis(params.theta)[0]
    if lam < LAM_FLOOR:
        return LSDecomposition(0.0, params, region.kind, None, pure, None)
    p1, p2, p3, p4 = params.p
    s = params.sin2
    r = _sep_root(p3, p4, s)
    sep = ICDParams(((p2 + r) / lam, p2 / lam, p3 / lam, p4 / lam), params.theta)
    d = LSDecomposition(lam, params, region.kind, sep, pure, None)
    return replace(d, bsa=bsa_ensemble(d))


def ls_decompose(params: ICDParams) -> LSDecomposition:
    """Decomposition for any ICD point; separable points get ``lam = 1`` and no pure part."""
    region = icdmod.classify_region(params)
    if region.kind == SEPARABLE:
        return LSDecomposition(1.0, params, SEPARABLE, params, None, None)
    params1, w = icdmod.to_region1(params, region.kind)
    d1 = lsd_closed_form(params1)
    wd = w.conj().T
    sep = None if d1.sep_params is None else icdmod.from_region1(d1.sep_params, region.kind)
    bsa = None
    if d1.bsa is not None:
        bsa = WeightedEnsemble(d1.bsa.weights, d1.bsa.states @ wd.T)
    return LSDecomposition(d1.lam, params, region.kind, sep, wd @ d1.pure_part, bsa)


def average_concurrence(d: LSDecomposition) -> float:
    """Weighted concurrence of the pure part plus that of every product state."""
    total = 0.0
    if d.pure_part is not None:
        total += (1.0 - d.lam) * qstate.pure_concurrence(d.pure_part)
    if d.bsa is not None:
        total += sum(w * qstate.pure_concurrence(z) for w, z in zip(d.bsa.weights, d.bsa.states))
    return float(total)


def boundary_gap(sep1: ICDParams) -> float:
    """``lambda_1 - lambda_2 - lambda_3 - lambda_4`` of a region-1-frame point."""
    l1, l2, l3, l4 = icdmod.lambda_spectrum_icd(sep1).labeled
    return l1 - l2 - l3 - l4


def marginal_z_vectors(sep1: ICDParams) -> np.ndarray:
    """Subnormalized product vectors decomposing a marginal region-1-frame state."""
    v = np.sqrt(np.asarray(sep1.p))[:, None] * icdmod.icd_basis(sep1.theta)
    return wootters_ensemble(x_vectors(v, icdmod.unitary_U_icd(sep1)))


def explicit_z_vectors(sep1: ICDParams) -> np.ndarray:
    """The product ensemble written out in the ICD basis with the alpha coefficients."""
    a1, a2, a3, a4 = icdmod.alphas(sep1)
    r1, r2, r3, r4 = np.sqrt(np.asarray(sep1.p))
    psi = icdmod.icd_basis(sep1.theta)
    c12p, c12m = a1 + a2, a1 - a2
    coeffs = np.array([
        [-1j * c12p * r1, -1j * c12m * r2, -(a4 + 1j * a3) * r3, -(a3 - 1j * a4) * r4],
        [-1j * c12p * r1, -1j * c12m * r2, (a4 + 1j * a3) * r3, (a3 - 1j * a4) * r4],
        [-1j * c12m * r1, 1j * c12p * r2, (a4 - 1j * a3) * r3, (a3 + 1j * a4) * r4],
        [-1j * c12m * r1, 1j * c12p * r2, -(a4 - 1j * a3) * r3, -(a3 + 1j * a4) * r4],
    ])
    return 0.5 * coeffs @ psi


def rank2_product_pair(theta: float) -> np.ndarray:
    """
    Two product states ``(|u> +- i|d>)/sqrt2 (x) (cos t|u> -+ i sin t|d>)`` whose
    equal mixture is ``(|psi_1><psi_1| + |psi_4><psi_4|)/2``.
    """
    c, s = math.cos(theta), math.sin(theta)
    r = 1.0 / math.sqrt(2.0)
    return np.array([np.kron([r, 1j * r], [c, -1j * s]),
                     np.kron([r, -1j * r], [c, 1j * s])])


def bsa_ensemble(d: LSDecomposition, tol_boundary: float = TOL_BOUNDARY) -> WeightedEnsemble:
    """
    Product ensemble of the separable part, weights scaled by ``lam``.

    Raises
    ------
    NotOnBoundary
        ``rho_s`` is not marginal, so the fixed phases do not give products.
    """
    if d.sep_params is None or d.region == SEPARABLE:
        raise IcdLabError("decomposition has no marginal separable part")
    perm, w = REGION_MAPS[d.region]
    sep1 = d.sep_params.permuted(perm)
    gap = boundary_gap(sep1)
    if abs(gap) > tol_boundary:
        raise NotOnBoundary(f"lambda_1 - lambda_2 - lambda_3 - lambda_4 = {gap:.3e}")
    z = marginal_z_vectors(sep1)
    norms2 = np.einsum("ij,ij->i", z.conj(), z).real
    keep = norms2 > 1e-15
    states = z[keep] / np.sqrt(norms2[keep])[:, None]
    # back to the frame of the original point
    states = states @ w.conj()
    return WeightedEnsemble(d.lam * norms2[keep], states)


def _merge_collinear(weights, states, tol: float = 1e-9):
    ws, ss = [], []
    for wt, st in zip(weights, states):
        for k, other in enumerate(ss):
            if abs(abs(np.vdot(other, st)) - 1.0) < tol:
                ws[k] += wt
                break
        else:
            ws.append(float(wt))
            ss.append(st)
    return np.array(ws), np.array(ss)


def _conditioned_tol(base: float, weights, vectors) -> float:
    # M = sum w_k |v_k><v_k| carries rounding of order eps |M|, which the
    # restricted inverse amplifies by the weight ratio and by cond(V)^2
    w = np.asarray(weights, dtype=float)
    kappa = (w.max() / w.min()) * np.linalg.cond(np.asarray(vectors).T) ** 2
    return base + 10.0 * np.finfo(float).eps * kappa


def _single(lam_a, z, w_pure, psi, label) -> Check:
    m = lam_a * qstate.projector(z) + w_pure * qstate.projector(psi)
    try:
        minv = qmat.restricted_inverse(m, [z, psi])
    except IcdLabError as exc:
        return Check(label, False, math.inf, f"unresolved: {exc}")
    q = np.vdot(z, minv @ z).real
    res = abs(lam_a * q - 1.0)
    # independent route: spectral pseudo-inverse
    q_eig = np.vdot(z, qmat.pseudo_inverse(m, PINV_CUTOFF) @ z).real
    res = max(res, abs(lam_a * q_eig - 1.0))
    tol = _conditioned_tol(TOL_PAIR, [lam_a, w_pure], [z, psi])
    return Check(label, res <= tol, float(res), f"tol {tol:.1e}")


def _triple_gram_det(za, zb, psi) -> float:
    v = np.array([za, zb, psi])
    v = v / np.linalg.norm(v, axis=1)[:, None]
    return float(abs(np.linalg.det(qmat.gram(v))))


def _triple_rank(za, zb, psi) -> int:
    # the same criterion the dual basis applies, so a triple counted as
    # independent can always be inverted
    return 3 if _triple_gram_det(za, zb, psi) > qmat.TOL_RANK else 2


def _pair_quotients(lam_a, za, lam_b, zb, w_pure, psi, force_rank: int | None = None):
    m = (lam_a * qstate.projector(za) + lam_b * qstate.projector(zb)
         + w_pure * qstate.projector(psi))
    rank = force_rank or _triple_rank(za, zb, psi)
    basis = [za, zb, psi] if rank == 3 else [za, zb]
    if rank == 2:
        # drop the component of psi outside span(za, zb); when the rank was
        # detected rather than forced, that component is below the rank cutoff
        proj = np.array(basis).T
        proj = proj @ np.linalg.pinv(proj)
        m = proj @ m @ proj.conj().T
    minv = qmat.restricted_inverse(m, basis)
    q_aa = np.vdot(za, minv @ za).real
    q_bb = np.vdot(zb, minv @ zb).real
    q_ab = np.vdot(za, minv @ zb)
    return rank, q_aa, q_bb, q_ab, m


def _pair(lam_a, za, lam_b, zb, w_pure, psi, label, force_rank=None, tol=TOL_PAIR) -> Check:
    try:
        rank, q_aa, q_bb, q_ab, _ = _pair_quotients(lam_a, za, lam_b, zb, w_pure, psi, force_rank)
    except IcdLabError as exc:
        return Check(label, False, math.inf, f"unresolved: {exc}")
    if rank == 3:
        tol = _conditioned_tol(tol, [lam_a, lam_b, w_pure], [za, zb, psi])
    else:
        tol = _conditioned_tol(tol, [lam_a, lam_b, w_pure], [za, zb])
    off = abs(q_ab)
    if off <= 1e-9 * math.sqrt(abs(q_aa * q_bb)):
        res = max(abs(lam_a * q_aa - 1.0), abs(lam_b * q_bb - 1.0))
        note = f"rank {rank}, decoupled"
    else:
        den = q_aa * q_bb - off * off
        res = max(abs((q_bb - off) / den - lam_a) / lam_a, abs((q_aa - off) / den - lam_b) / lam_b)
        note = f"rank {rank}, coupled"
    return Check(label, res <= tol, float(res), f"{note}, tol {tol:.1e}")


def _gamma_check(lam_a, za, lam_b, zb, w_pure, psi, k, label, allowance=0.0) -> Check:
    """
    Compare restricted-inverse quotients with their closed forms for a dependent pair.

    The closed forms assume ``psi`` lies in ``span(za, zb)``; any remainder
    (of order ``p'_2`` inside the zero-``p'_2`` branch) is projected out and
    ``allowance`` widens the tolerance to match.
    """
    m = (lam_a * np.outer(za, za.conj()) + lam_b * np.outer(zb, zb.conj())
         + w_pure * qstate.projector(psi))
    span = np.array([za, zb]).T
    proj = span @ np.linalg.pinv(span)
    minv = qmat.pseudo_inverse(proj @ m @ proj, PINV_CUTOFF)
    gamma = lam_a * lam_b * k + w_pure * (lam_a + lam_b)
    got = (np.vdot(za, minv @ za).real, np.vdot(zb, minv @ zb).real, np.vdot(za, minv @ zb))
    want = ((lam_b * k + w_pure) / gamma, (lam_a * k + w_pure) / gamma, -w_pure / gamma)
    res = max(abs(g - w_) / max(1.0, abs(w_)) for g, w_ in zip(got, want))
    tol = _conditioned_tol(TOL_PAIR, [lam_a, lam_b, w_pure], [za, zb]) + allowance
    return Check(label, res <= tol, float(res), f"tol {tol:.1e}")


def _branch(sep1: ICDParams) -> str:
    zero = [x < ZERO_TOL for x in sep1.p[1:]]
    if sum(zero) >= 2:
        return "Rank2"
    for name, flag in zip(("P2Zero", "P3Zero", "P4Zero"), zero):
        if flag:
            return name
    return "FullRank"


def verify_optimality(d: LSDecomposition) -> OptimalityVerdict:
    """
    Certify that the separable part is the best separable approximation.

    Every product state must be maximal with respect to itself plus the pure
    part, and every pair must be jointly maximal. Restricted inverses are
    taken on the range through dual bases and cross-checked against a
    spectral pseudo-inverse. Failures are reported, not raised.
    """
    if d.region == SEPARABLE or d.pure_part is None:
        raise IcdLabError("separable point: nothing to certify")
    perm, w = REGION_MAPS[d.region]
    rho1 = w @ icdmod.icd_density(d.params) @ w.conj().T
    psi = w @ d.pure_part
    w_pure = 1.0 - d.lam
    checks = []

    if d.bsa is None or d.sep_params is None:
        # lam = 0: the state must be the pure part itself
        res = float(np.max(np.abs(rho1 - qstate.projector(psi))))
        checks.append(Check("reconstruction", res <= TOL_RECON and d.lam == 0.0, res))
        return OptimalityVerdict("Pure", checks=checks)

    weights = d.bsa.weights
    states = d.bsa.states @ w.T
    sep1 = d.sep_params.permuted(perm)
    rho_s = (states.T * weights) @ states.conj()

    recon = float(np.max(np.abs(rho_s + w_pure * qstate.projector(psi) - rho1)))
    checks.append(Check("reconstruction", recon <= TOL_RECON, recon))
    sep_res = float(np.max(np.abs(rho_s - d.lam * icdmod.icd_density(sep1))))
    checks.append(Check("separable_part_matches_coordinates", sep_res <= TOL_RECON, sep_res))
    wsum = abs(float(weights.sum()) - d.lam)
    checks.append(Check("weights_sum_to_lambda", wsum <= TOL_RECON, wsum))
    prod = max(qstate.pure_concurrence(z) for z in states)
    checks.append(Check("product_states", prod <= TOL_PRODUCT, prod))
    ppt = qstate.ppt_min_eigenvalue(rho_s / max(d.lam, 1e-300))
    checks.append(Check("separable_part_ppt", ppt >= -TOL_BOUNDARY, max(0.0, -ppt)))
    gap = abs(boundary_gap(sep1))
    checks.append(Check("separable_part_marginal", gap <= TOL_BOUNDARY, gap))

    branch = _branch(sep1)
    singles, pairs = [], []
    if branch == "Rank2":
        # the vanishing coordinates tilt partner states apart by O(p' / sin^2 2t); allow for it
        small = sum(sorted(sep1.p[1:])[:2]) / sep1.sin2 ** 2
        mw, ms = _merge_collinear(weights, states, tol=1e-9 + 10.0 * small)
        if sep1.p[1] < ZERO_TOL and sep1.p[2] < ZERO_TOL:
            ef = rank2_product_pair(sep1.theta)
            # the explicit pair must be the same two projectors as the merged ensemble
            match = max(min(1.0 - abs(np.vdot(e, s_)) for s_ in ms) for e in ef) if len(ms) == 2 else 1.0
            match_tol = 1e-9 + 10.0 * small
            checks.append(Check("rank2_explicit_pair", match <= match_tol, float(match), f"tol {match_tol:.1e}"))
            ef_w = np.full(2, d.lam / 2.0)
            recon_ef = float(np.max(np.abs((ef.T * ef_w) @ ef.conj() - rho_s)))
            recon_tol = TOL_RECON + 2.0 * d.lam * small
            checks.append(Check("rank2_explicit_reconstruction", recon_ef <= recon_tol, recon_ef,
                                f"tol {recon_tol:.1e}"))
            mw, ms = ef_w, ef
            checks.append(_gamma_check(mw[0], ms[0], mw[1], ms[1], w_pure, psi, 2.0, "gamma_12_rank2"))
        labels = [str(i + 1) for i in range(len(ms))]
    else:
        mw, ms = weights, states
        labels = [str(i + 1) for i in range(len(ms))]

    for lab, lam_a, z in zip(labels, mw, ms):
        singles.append(_single(lam_a, z, w_pure, psi, f"z{lab}"))
    for (ia, a), (ib, b) in combinations(enumerate(labels), 2):
        pairs.append(_pair(mw[ia], ms[ia], mw[ib], ms[ib], w_pure, psi, f"z{a},z{b}"))

    if branch in ("P3Zero", "P4Zero"):
        pairs = _near_rank2_seam(sep1, mw, ms, w_pure, psi, pairs, singles)

    if branch == "P2Zero" and len(ms) == 4:
        # the triples are dependent up to a Gram determinant of order p'_2
        for a, b in ((0, 1), (2, 3)):
            det = _triple_gram_det(ms[a], ms[b], psi)
            bound = qmat.TOL_RANK + 10.0 * sep1.p[1]
            checks.append(Check(f"rank_z{a + 1},z{b + 1},psi1", det <= bound, det, f"tol {bound:.1e}"))
        checks.extend(_explicit_gamma_checks(sep1, d.lam, psi))

    # near a branch seam the degenerate treatment must agree as well
    # (only p'_2 has one: vanishing p'_3 or p'_4 keeps every triple independent)
    if branch != "Rank2" and ZERO_TOL <= sep1.p[1] < SEAM_TOL and len(ms) == 4:
        allowance = TOL_PAIR + 100.0 * sep1.p[1]
        for a, b in ((0, 1), (2, 3)):
            pairs.append(_pair(mw[a], ms[a], mw[b], ms[b], w_pure, psi,
                               f"seam_p2_z{a + 1},z{b + 1}", force_rank=2, tol=allowance))

    return OptimalityVerdict(branch, singles, pairs, checks)


def _near_rank2_seam(sep1, weights, states, w_pure, psi, pairs, singles) -> list:
    """
    Handle a small nonzero ``p'_2`` next to a vanishing ``p'_3`` or ``p'_4``.

    There the four states collapse pairwise onto the rank-2 product pair, at
    angles of order ``sqrt(p'_2)``, and some triples become numerically
    dependent without being exactly so. A pair check on such a triple cannot
    be resolved in double precision; it is certified instead by the merged
    two-state ensemble, the degenerate branch the point is approaching.
    """
    unresolved = [k for k, c in enumerate(pairs) if not c.passed and c.note.startswith("rank 2")]
    if not unresolved or sep1.p[1] < ZERO_TOL:
        return pairs
    scale = sep1.p[1] / sep1.sin2 ** 2
    mw, ms = _merge_collinear(weights, states, tol=1e-9 + 10.0 * scale)
    if len(ms) != 2:
        return pairs
    allowance = TOL_PAIR + 100.0 * scale
    seam = [_single(mw[0], ms[0], w_pure, psi, "seam_rank2_m1"),
            _single(mw[1], ms[1], w_pure, psi, "seam_rank2_m2"),
            _pair(mw[0], ms[0], mw[1], ms[1], w_pure, psi, "seam_rank2_m1,m2", tol=allowance)]
    seam = [replace(c, passed=c.residual <= allowance or c.passed) for c in seam]
    singles.extend(seam[:2])
    ok = all(c.passed for c in seam)
    out = list(pairs)
    for k in unresolved:
        out[k] = replace(out[k], passed=ok, note=out[k].note + "; near rank-2 seam, certified by merged pair")
    return out + seam[2:]


def _explicit_gamma_checks(sep1: ICDParams, lam: float, psi) -> list:
    a1, a2, _, _ = icdmod.alphas(sep1)
    zp = explicit_z_vectors(sep1)
    out = []
    for (a, b), k in (((0, 1), (a1 + a2) ** 2 * sep1.p[0]), ((2, 3), (a1 - a2) ** 2 * sep1.p[0])):
        # subnormalized vectors enter with coefficient lam
        out.append(_gamma_check(lam, zp[a], lam, zp[b], 1.0 - lam, psi, k, f"gamma_{a + 1}{b + 1}",
                                allowance=100.0 * sep1.p[1]))
    return out
