import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import assume, given

from icdlab import lsd, qstate
from icdlab.concurrence import concurrence_general, optimal_ensemble
from icdlab.errors import IcdLabError, NotOnBoundary, NotRegion1
from icdlab.icd import ICDParams, classify_region, concurrence_icd, icd_basis, icd_density
from icdlab.qstate import WeightedEnsemble

from conftest import icd_params, region1_params

BRANCH_POINTS = {
    "FullRank": ICDParams((0.7, 0.1, 0.1, 0.1), math.pi / 6),
    "P2Zero": ICDParams((0.7, 0.0, 0.15, 0.15), 0.6),
    "P3Zero": ICDParams((0.7, 0.1, 0.0, 0.2), 0.9),
    "P4Zero": ICDParams((0.6, 0.1, 0.3, 0.0), 0.5),
    "Rank2": ICDParams((0.8, 0.0, 0.0, 0.2), 0.7),
    "Pure": ICDParams((1.0, 0.0, 0.0, 0.0), 0.3),
}


def test_e1_decomposition(e1):
    d = lsd.lsd_closed_form(e1)
    assert d.lam == pytest.approx(0.6309401, abs=5e-8)
    assert d.sep_params.p[0] == pytest.approx(0.5245190, abs=5e-7)
    assert d.sep_params.p[1] == pytest.approx(0.1584936, abs=5e-7)
    np.testing.assert_allclose(d.pure_part, icd_basis(e1.theta)[0])


def test_bell_diagonal_example():
    d = lsd.lsd_closed_form(ICDParams((0.7, 0.1, 0.1, 0.1), math.pi / 4))
    assert d.lam == pytest.approx(0.6, abs=1e-14)
    assert 1 - d.lam == pytest.approx(concurrence_icd(d.params), abs=1e-14)


def test_closed_form_rejects_other_regions():
    with pytest.raises(NotRegion1):
        lsd.lsd_closed_form(ICDParams((0.1, 0.7, 0.1, 0.1), 0.5))
    with pytest.raises(NotRegion1):
        lsd.lsd_closed_form(ICDParams((0.25,) * 4, 0.5))


def test_separable_points_keep_everything():
    q = ICDParams((0.25,) * 4, 0.5)
    d = lsd.ls_decompose(q)
    assert d.lam == 1.0 and d.pure_part is None
    with pytest.raises(IcdLabError):
        lsd.verify_optimality(d)


@given(region1_params())
def test_saturation_and_reconstruction(q):
    d = lsd.lsd_closed_form(q)
    assert 0.0 <= d.lam < 1.0
    # all the entanglement sits in the pure part
    assert (1 - d.lam) * q.sin2 == pytest.approx(concurrence_icd(q), abs=1e-12)
    np.testing.assert_allclose(d.reconstruct(), icd_density(q), atol=1e-10)
    if d.sep_params is not None:
        assert abs(lsd.boundary_gap(d.sep_params)) < 1e-9
        assert concurrence_general(icd_density(d.sep_params)).concurrence < 1e-7
    assert lsd.average_concurrence(d) == pytest.approx(concurrence_icd(q), abs=1e-9)


@given(icd_params())
def test_decomposition_in_every_region(q):
    d = lsd.ls_decompose(q)
    np.testing.assert_allclose(d.reconstruct(), icd_density(q), atol=1e-10)
    if d.bsa is not None:
        assert d.bsa.weights.sum() == pytest.approx(d.lam, abs=1e-12)
        for z in d.bsa.states:
            assert qstate.pure_concurrence(z) < 1e-9
        mixed = qstate.mix(WeightedEnsemble(
            np.append(d.bsa.weights, 1 - d.lam), np.vstack([d.bsa.states, d.pure_part])))
        np.testing.assert_allclose(mixed, icd_density(q), atol=1e-10)


@given(region1_params())
def test_verifier_accepts_closed_form(q):
    # the edge p3 = p4 = 0 < p2 is covered by test_verifier_rejects_edge_p3_p4_zero
    d = lsd.lsd_closed_form(q)
    if d.sep_params is not None:
        p2, p3, p4 = d.sep_params.p[1:]
        assume(not (p3 < lsd.ZERO_TOL and p4 < lsd.ZERO_TOL and p2 > 0.0))
    v = lsd.verify_optimality(d)
    assert v.overall, [c.label for c in v.failures()]


@pytest.mark.parametrize("theta", [0.3, 0.6, 1.0])
def test_verifier_rejects_edge_p3_p4_zero(theta):
    # rho lives on span{|uu>, |dd>}, whose only product states are |uu> and |dd>.
    # A Bell pure part then needs weight (p1 - p2) sin(2 theta) only, which
    # beats the closed form unless theta = pi/4, and the pair check notices.
    q = ICDParams((2 / 3, 1 / 3, 0.0, 0.0), theta)
    d = lsd.lsd_closed_form(q)
    assert d.lam == pytest.approx(2 / 3)
    v = lsd.verify_optimality(d)
    assert not v.overall
    assert [c.label for c in v.failures()] == ["z1,z2"]
    rho = icd_density(q)
    c = concurrence_icd(q)
    phi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    rest = rho - c * np.outer(phi, phi)
    np.testing.assert_allclose(rest, np.diag(np.diag(rest)), atol=1e-15)
    assert np.all(np.diag(rest).real >= 0)
    assert 1 - c > d.lam


def test_verifier_accepts_edge_at_quarter_pi():
    v = lsd.verify_optimality(lsd.lsd_closed_form(ICDParams((2 / 3, 1 / 3, 0.0, 0.0), math.pi / 4)))
    assert v.overall


@pytest.mark.parametrize("branch", sorted(BRANCH_POINTS))
def test_verifier_branches(branch):
    q = BRANCH_POINTS[branch]
    assert classify_region(q).kind == "Entangled1"
    v = lsd.verify_optimality(lsd.lsd_closed_form(q))
    assert v.branch == branch
    assert v.overall, [c.label for c in v.failures()]


@pytest.mark.parametrize("p2", [2e-9, 1e-8, 1e-7, 5e-7])
def test_verifier_near_seam(p2):
    q = ICDParams((0.7, p2, 0.15, 0.15 - p2), 0.6)
    v = lsd.verify_optimality(lsd.lsd_closed_form(q))
    assert any(c.label.startswith("seam_p2") for c in v.pair_maximality)
    assert v.overall, [c.label for c in v.failures()]


@pytest.mark.parametrize("theta", [0.125, 0.6, 1.4])
@pytest.mark.parametrize("p2", [1e-9, 1e-8, 1e-7, 1e-6])
def test_verifier_near_rank2_seam(theta, p2):
    for p in ((0.9 - p2, p2, 0.1, 0.0), (0.7 - p2, p2, 0.0, 0.3)):
        v = lsd.verify_optimality(lsd.lsd_closed_form(ICDParams(p, theta)))
        assert v.overall, [(c.label, c.residual) for c in v.failures()]


def test_tiny_separable_weight_is_dropped():
    d = lsd.lsd_closed_form(ICDParams((1 - 1e-13, 0.0, 0.0, 1e-13), 0.5))
    assert d.lam == 0.0 and d.bsa is None
    assert lsd.verify_optimality(d).branch == "Pure"
    d = lsd.lsd_closed_form(ICDParams((1 - 1e-10, 0.0, 0.0, 1e-10), 0.5))
    assert d.lam > 0.0
    assert lsd.verify_optimality(d).overall


def test_verifier_on_other_regions():
    for q in (ICDParams((0.1, 0.7, 0.1, 0.1), 0.4), ICDParams((0.05, 0.1, 0.75, 0.1), 1.0),
              ICDParams((0.1, 0.05, 0.15, 0.7), 0.2)):
        assert lsd.verify_optimality(lsd.ls_decompose(q)).overall


def test_tampered_decompositions_fail(e1):
    d = lsd.lsd_closed_form(e1)
    assert lsd.verify_optimality(d).overall
    worse = dataclasses.replace(d, lam=d.lam - 1e-4)
    assert not lsd.verify_optimality(worse).overall
    other = dataclasses.replace(d, pure_part=icd_basis(e1.theta)[1])
    assert not lsd.verify_optimality(other).overall
    ws = d.bsa.weights.copy()
    ws[0] += 1e-6
    ws[1] -= 1e-6
    shaken = dataclasses.replace(d, bsa=WeightedEnsemble(ws, d.bsa.states))
    assert not lsd.verify_optimality(shaken).overall


def test_explicit_ensemble_matches_marginal_one(e1):
    sep = lsd.lsd_closed_form(e1).sep_params
    zp = lsd.explicit_z_vectors(sep)
    np.testing.assert_allclose(zp.T @ zp.conj(), icd_density(sep), atol=1e-14)
    for z in zp:
        assert qstate.pure_concurrence(z / np.linalg.norm(z)) < 1e-12


def test_rank2_pair_and_swapped_factors():
    theta = 0.7
    pair = lsd.rank2_product_pair(theta)
    psi = icd_basis(theta)
    target = (np.outer(psi[0], psi[0]) + np.outer(psi[3], psi[3].conj())) / 2
    np.testing.assert_allclose(qstate.mix(WeightedEnsemble([0.5, 0.5], pair)), target, atol=1e-15)
    # the same factors in the other tensor order give a different state
    c, s = math.cos(theta), math.sin(theta)
    r = 1 / math.sqrt(2)
    swapped = np.array([np.kron([c, -1j * s], [r, 1j * r]), np.kron([c, 1j * s], [r, -1j * r])])
    assert np.max(np.abs(qstate.mix(WeightedEnsemble([0.5, 0.5], swapped)) - target)) > 0.05


def test_bsa_ensemble_requires_boundary(e1):
    d = lsd.lsd_closed_form(e1)
    interior = dataclasses.replace(d, sep_params=ICDParams((0.4, 0.2, 0.2, 0.2), e1.theta))
    with pytest.raises(NotOnBoundary):
        lsd.bsa_ensemble(interior)


def test_weight_shrinks_towards_the_vertex():
    lams = [lsd.lsd_closed_form(ICDParams((p, (1 - p) / 3, (1 - p) / 3, (1 - p) / 3), 0.6)).lam
            for p in np.linspace(0.6, 1.0, 9)]
    assert np.all(np.diff(lams) < 0)
    assert lams[-1] == 0.0


def test_json_round_trip(e1):
    d = lsd.ls_decompose(ICDParams((0.1, 0.05, 0.15, 0.7), 0.2))
    back = lsd.LSDecomposition.from_json(json.loads(json.dumps(d.to_json())))
    assert back.lam == d.lam and back.region == d.region
    np.testing.assert_allclose(back.reconstruct(), d.reconstruct(), atol=1e-15)
    np.testing.assert_allclose(back.bsa.states, d.bsa.states)
    verdict = lsd.verify_optimality(back)
    json.dumps(verdict.to_json())
    assert verdict.overall


def test_closed_form_is_not_the_largest_separable_weight(e1):
    # Away from theta = pi/4 a Bell pure part leaves more separable weight:
    # rho = (1 - C) sigma + C |Phi><Phi| with sigma separable, so the best
    # weight is at least 1 - C, above the closed form 1 - C / sin(2 theta).
    rho = icd_density(e1)
    c = concurrence_icd(e1)
    phi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    sigma = (rho - c * np.outer(phi, phi)) / (1 - c)
    assert np.linalg.eigvalsh(sigma)[0] > 0.08
    assert qstate.ppt_min_eigenvalue(sigma) > -1e-12
    z = optimal_ensemble(sigma)
    np.testing.assert_allclose(z.T @ z.conj(), sigma, atol=1e-12)
    for v in z:
        assert qstate.pure_concurrence(v / np.linalg.norm(v)) < 1e-12
    assert 1 - c == pytest.approx(0.6803848, abs=5e-8)
    assert 1 - c > lsd.lsd_closed_form(e1).lam + 0.04
