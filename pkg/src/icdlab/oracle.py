"""
Independent numerical ground truth.

Nothing here uses the closed forms of :mod:`icdlab.icd` or :mod:`icdlab.lsd`:

* :func:`bsa_numeric` searches pure states ``psi`` for the largest weight
  ``lam`` such that ``rho - (1 - lam) |psi><psi|`` stays positive and has a
  positive partial transpose (exact separability for two qubits);
* :func:`min_avg_concurrence_sample` samples pure-state decompositions;
* :func:`random_icd` and :func:`random_density` draw test inputs.

All randomness comes from ``numpy``'s PCG64 bit generator seeded through a
``SeedSequence``, so results are deterministic functions of the inputs and
the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qmat, qstate
from .concurrence import average_concurrence, optimal_ensemble, subnormalized_eigenvectors
from .icd import ICDParams

RNG_ALGORITHM = "PCG64"

LAMBDA_TOL = 1e-10      # bisection width in lam
FEASIBLE_TOL = 1e-12    # eigenvalues above -FEASIBLE_TOL count as nonnegative
RANGE_CUTOFF = 1e-12    # relative eigenvalue cutoff for the range of rho
CHUNK = 16384           # candidates per vectorized batch
REFINE_BATCH = 64
MIN_STEP = 1e-9


@dataclass(frozen=True)
class OracleReport:
    """Outcome of :func:`bsa_numeric`; ``numeric_lambda`` is a feasible (lower-bound) weight."""

    numeric_lambda: float
    best_pure_part: np.ndarray
    sample_count: int
    min_avg_concurrence: float
    pt_min_eig: float
    seed: int
    rng_algorithm: str = RNG_ALGORITHM

    def to_json(self) -> dict:
        return {"numeric_lambda": self.numeric_lambda,
                "best_pure_part": qstate.vector_to_json(self.best_pure_part),
                "sample_count": self.sample_count,
                "min_avg_concurrence": self.min_avg_concurrence,
                "pt_min_eig": self.pt_min_eig,
                "seed": self.seed,
                "rng_algorithm": self.rng_algorithm}

    @classmethod
    def from_json(cls, doc: dict) -> "OracleReport":
        return cls(float(doc["numeric_lambda"]), qstate.vector_from_json(doc["best_pure_part"]),
                   int(doc["sample_count"]), float(doc["min_avg_concurrence"]),
                   float(doc["pt_min_eig"]), int(doc["seed"]), doc.get("rng_algorithm", RNG_ALGORITHM))


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; accepts an integer seed, a ``SeedSequence`` or a ``Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed if isinstance(seed, np.random.SeedSequence)
                                               else np.random.SeedSequence(int(seed))))


def split_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """``n`` independent child generators of one seed."""
    return [make_rng(s) for s in np.random.SeedSequence(int(seed)).spawn(n)]


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _pt_batch(m: np.ndarray) -> np.ndarray:
    # partial transpose on the second qubit for a stack of 4x4 operators
    n = m.shape[0]
    return m.reshape(n, 2, 2, 2, 2).transpose(0, 1, 4, 3, 2).reshape(n, 4, 4)


class _Problem:
    """Feasibility data for one ``rho``: its range and partial transpose."""

    def __init__(self, rho: np.ndarray):
        self.rho = rho
        w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
        keep = w > RANGE_CUTOFF * max(w.max(), 1e-300)
        self.values = w[keep]
        self.range = v[:, keep]                   # columns span the range of rho
        self.null = v[:, ~keep]
        self.pt = qmat.partial_transpose(rho)

    @property
    def rank(self) -> int:
        return self.range.shape[1]

    def states(self, coords: np.ndarray) -> np.ndarray:
        """Normalized 4-vectors (rows) from range coordinates (rows)."""
        psi = coords @ self.range.T
        return psi / np.linalg.norm(psi, axis=1, keepdims=True)

    def psd_cap(self, psi: np.ndarray) -> np.ndarray:
        """Largest ``t`` with ``rho - t |psi><psi|`` positive: ``1 / <psi|rho^+|psi>`` on the range."""
        a = psi @ self.range.conj()
        leak = np.sum(np.abs(psi @ self.null.conj()) ** 2, axis=1) if self.null.size else 0.0
        cap = 1.0 / np.sum(np.abs(a) ** 2 / self.values, axis=1)
        return np.where(leak > 1e-12, 0.0, np.minimum(cap, 1.0))

    def _pt_stack(self, psi: np.ndarray, t: np.ndarray) -> np.ndarray:
        proj = psi[:, :, None] * psi.conj()[:, None, :]
        return self.pt[None] - t[:, None, None] * _pt_batch(proj)

    def pt_floor(self, psi: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Smallest eigenvalue of the partial transpose of ``rho - t |psi><psi|``."""
        return np.linalg.eigvalsh(self._pt_stack(psi, t))[:, 0]

    def pt_positive(self, psi: np.ndarray, t: np.ndarray) -> np.ndarray:
        """
        Sign test for the partial transpose of ``rho - t |psi><psi|``, valid for ``t <= cap``.

        The partial transpose of a positive two-qubit operator has at most
        one negative eigenvalue, so it is positive exactly when its
        determinant is nonnegative; a determinant is cheaper than a spectrum.
        """
        return np.linalg.det(self._pt_stack(psi, t)).real >= 0.0

    def _bisect(self, psi, lo, hi, test) -> np.ndarray:
        # lo infeasible, hi feasible; shrink to LAMBDA_TOL keeping hi feasible
        lo, hi = lo.copy(), hi.copy()
        for _ in range(int(math.ceil(math.log2(1.0 / LAMBDA_TOL))) + 2):
            live = np.flatnonzero(hi - lo > LAMBDA_TOL)
            if live.size == 0:
                break
            mid = 0.5 * (lo[live] + hi[live])
            feas = test(psi[live], mid)
            hi[live[feas]] = mid[feas]
            lo[live[~feas]] = mid[~feas]
        return hi

    def _climb(self, psi: np.ndarray, cap: np.ndarray, steps: int = 64):
        """
        Golden-section ascent of the concave floor on ``[0, cap]``.

        Returns the last probe, whether it is feasible, and the highest floor
        seen (a search merit for infeasible candidates). A candidate stops
        as soon as a probe is feasible, or when the concave envelope of its
        probes shows the floor stays negative. Rank-deficient states can
        have a single feasible point at a kink, hence the many steps.
        """
        g = (math.sqrt(5.0) - 1.0) / 2.0
        n = psi.shape[0]
        a, b = np.zeros(n), cap.copy()
        fa = np.full(n, self.pt_floor(psi[:1], np.zeros(1))[0])
        fb = self.pt_floor(psi, b)
        m1, m2 = b - g * b, g * b
        f1, f2 = self.pt_floor(psi, m1), self.pt_floor(psi, m2)
        t_out = np.where(f1 >= f2, m1, m2)
        peak = np.maximum.reduce([fa, fb, f1, f2])
        found = np.maximum(f1, f2) >= -FEASIBLE_TOL
        live = ~found
        for _ in range(steps):
            live &= _envelope_max(a, m1, m2, b, fa, f1, f2, fb) >= -FEASIBLE_TOL
            idx = np.flatnonzero(live)
            if idx.size == 0:
                break
            left = f1[idx] >= f2[idx]
            # left: keep [a, m2]; otherwise keep [m1, b]
            na = np.where(left, a[idx], m1[idx])
            nfa = np.where(left, fa[idx], f1[idx])
            nb = np.where(left, m2[idx], b[idx])
            nfb = np.where(left, f2[idx], fb[idx])
            keep_t = np.where(left, m1[idx], m2[idx])
            keep_f = np.where(left, f1[idx], f2[idx])
            new_t = np.where(left, nb - g * (nb - na), na + g * (nb - na))
            new_f = self.pt_floor(psi[idx], new_t)
            a[idx], fa[idx], b[idx], fb[idx] = na, nfa, nb, nfb
            m1[idx] = np.where(left, new_t, keep_t)
            f1[idx] = np.where(left, new_f, keep_f)
            m2[idx] = np.where(left, keep_t, new_t)
            f2[idx] = np.where(left, keep_f, new_f)
            hit = new_f >= -FEASIBLE_TOL
            t_out[idx] = new_t
            peak[idx] = np.maximum(peak[idx], new_f)
            found[idx] = hit
            live[idx[hit]] = False
        return t_out, found, peak

    def weights(self, psi: np.ndarray, merit: bool = False):
        """
        Maximal feasible ``lam`` per candidate row, or ``nan`` if none exists.

        With ``t = 1 - lam`` the partial-transpose floor is concave in ``t``,
        so the feasible ``t`` form an interval; its left end is found by
        bisection once a feasible point is known. With ``merit=True`` a
        second array scores every row: ``lam`` when feasible, otherwise the
        (negative) highest partial-transpose floor seen, which still points
        the search towards feasibility.
        """
        n = psi.shape[0]
        cap = self.psd_cap(psi)
        hi = cap.copy()
        floor_cap = self.pt_floor(psi, hi)
        ok = floor_cap >= -FEASIBLE_TOL
        score = np.where(cap > 0, floor_cap, -np.inf)
        bad = np.flatnonzero(~ok & (cap > 0))
        if bad.size:
            t_peak, found, peak = self._climb(psi[bad], cap[bad])
            hi[bad] = t_peak
            ok[bad] = found
            score[bad] = peak
        idx = np.flatnonzero(ok)
        lo = np.zeros(n)
        t = hi.copy()
        t[idx] = self._bisect(psi[idx], lo[idx], hi[idx], self.pt_positive)
        # confirm with the spectrum; redo any disagreement the slow way
        wrong = idx[self.pt_floor(psi[idx], t[idx]) < -FEASIBLE_TOL]
        if wrong.size:
            test = lambda v, s: self.pt_floor(v, s) >= -FEASIBLE_TOL
            t[wrong] = self._bisect(psi[wrong], lo[wrong], hi[wrong], test)
        lams = np.where(ok, 1.0 - t, np.nan)
        if merit:
            return lams, np.where(ok, lams, np.minimum(score, -FEASIBLE_TOL))
        return lams


def _line_at(x0, y0, x1, y1, t):
    dx = np.where(x1 - x0 == 0.0, 1.0, x1 - x0)
    return y0 + (y1 - y0) * (t - x0) / dx


def _min_lines_max(lo, hi, p, q):
    """Upper bound on ``max over [lo, hi]`` of the minimum of two lines ``p`` and ``q``."""
    (px0, py0, px1, py1), (qx0, qy0, qx1, qy1) = p, q
    best = np.maximum(np.minimum(_line_at(px0, py0, px1, py1, lo), _line_at(qx0, qy0, qx1, qy1, lo)),
                      np.minimum(_line_at(px0, py0, px1, py1, hi), _line_at(qx0, qy0, qx1, qy1, hi)))
    sp = (py1 - py0) / np.where(px1 - px0 == 0.0, 1.0, px1 - px0)
    sq = (qy1 - qy0) / np.where(qx1 - qx0 == 0.0, 1.0, qx1 - qx0)
    with np.errstate(divide="ignore", invalid="ignore"):
        tx = (qy0 - sq * qx0 - py0 + sp * px0) / (sp - sq)
    inside = np.isfinite(tx) & (tx > lo) & (tx < hi)
    cross = _line_at(px0, py0, px1, py1, np.where(inside, tx, lo))
    return np.where(inside, np.maximum(best, cross), best)


def _envelope_max(a, m1, m2, b, fa, f1, f2, fb):
    """
    Upper bound on a concave function on ``[a, b]`` from four samples.

    Outside the interval of a chord a concave function lies below the
    chord's line; on each of the three pieces two such lines apply.
    """
    left = (a, fa, m1, f1)
    mid = (m1, f1, m2, f2)
    right = (m2, f2, b, fb)
    return np.maximum.reduce([_min_lines_max(a, m1, mid, right),
                              _min_lines_max(m1, m2, left, right),
                              _min_lines_max(m2, b, left, mid)])


def is_feasible(rho, psi, lam: float, tol: float = FEASIBLE_TOL) -> bool:
    """``rho - (1 - lam)|psi><psi|`` is positive with positive partial transpose (within ``tol``)."""
    rest = np.asarray(rho, dtype=complex) - (1.0 - lam) * qstate.projector(psi)
    rest = 0.5 * (rest + rest.conj().T)
    if np.linalg.eigvalsh(rest)[0] < -tol:
        return False
    return qstate.ppt_min_eigenvalue(rest) >= -tol


def _lex_key(psi: np.ndarray) -> tuple:
    v = qmat.fix_phase(psi)
    return tuple(x for z in v for x in (round(z.real, 12), round(z.imag, 12)))


def _better(lam_a: float, psi_a, lam_b: float, psi_b) -> bool:
    """Tie-break: larger weight, then lexicographically smaller phase-fixed amplitudes."""
    if lam_a != lam_b:
        return lam_a > lam_b
    return _lex_key(psi_a) < _lex_key(psi_b)


def _best_of(lams: np.ndarray, psi: np.ndarray) -> tuple[float, int | None]:
    """Weight and row index of the best candidate under :func:`_better`."""
    if lams.size == 0 or np.all(np.isnan(lams)):
        return -math.inf, None
    top = np.nanmax(lams)
    best = None
    for i in np.flatnonzero(lams == top):
        if best is None or _better(top, psi[i], top, psi[best]):
            best = int(i)
    return float(top), best


def bsa_numeric(rho, budget: int, seed: int, trials: int = 64) -> OracleReport:
    """
    Randomized search for the best separable approximation weight.

    ``budget`` pure candidates are scored: about half are complex-Gaussian
    vectors inside the range of ``rho`` (its eigenvectors are always
    included), the rest refine the incumbent by a pattern search with a
    shrinking step, restarting from the next-best sample when the step
    collapses. Each score is the largest ``lam`` for which
    ``rho - (1 - lam)|psi><psi|`` is positive and PPT, so the returned weight
    is a lower bound on the optimal one.
    """
    rho = qstate.density(rho)
    budget = max(int(budget), 1)
    rng_sample, rng_refine, rng_conc = split_rngs(seed, 3)
    prob = _Problem(rho)
    pt_min = qstate.ppt_min_eigenvalue(rho)
    avg = min_avg_concurrence_sample(rho, trials, rng_conc)
    top_vec = prob.range[:, -1]
    if pt_min >= -FEASIBLE_TOL:
        return OracleReport(1.0, qmat.fix_phase(top_vec), 0, avg, pt_min, int(seed))

    r = prob.rank
    if r == 1:
        # an entangled pure state: its only decomposition is itself
        return OracleReport(0.0, qmat.fix_phase(top_vec), 0, avg, pt_min, int(seed))
    n_sample = max(1, budget // 2)
    starts_c: list[np.ndarray] = []
    starts_l: list[float] = []
    best_l, best_c = -math.inf, None

    def consider(coords, lams):
        nonlocal best_l, best_c
        psi = prob.states(coords)
        lam, i = _best_of(lams, psi)
        if i is not None and (best_c is None or _better(lam, psi[i], best_l, prob.states(best_c[None])[0])):
            best_l, best_c = lam, coords[i]
        return lam, i

    done = 0
    first = np.eye(r, dtype=complex)[:min(r, n_sample)]
    while done < n_sample:
        m = min(CHUNK, n_sample - done)
        coords = _complex_normal(rng_sample, (m, r))
        if done == 0:
            coords[:first.shape[0]] = first
        lams, score = prob.weights(prob.states(coords), merit=True)
        consider(coords, lams)
        keep = np.argsort(score)[::-1][:8]
        starts_c.extend(coords[keep])
        starts_l.extend(score[keep])
        done += m

    order = np.argsort(starts_l)[::-1]
    queue = [starts_c[i] for i in order]
    center = queue[0].copy()
    center_l = starts_l[order[0]]
    step = 0.1
    eye = np.eye(r, dtype=complex)
    moves = np.vstack([eye, -eye, 1j * eye, -1j * eye])
    while done < budget:
        m = min(REFINE_BATCH, budget - done)
        n_rand = max(m - moves.shape[0], 0)
        cand_dirs = np.vstack([moves, _complex_normal(rng_refine, (n_rand, r)) / math.sqrt(2 * r)])[:m]
        coords = center[None] / np.linalg.norm(center) + step * cand_dirs
        lams, score = prob.weights(prob.states(coords), merit=True)
        done += m
        consider(coords, lams)
        i = int(np.argmax(score))
        if score[i] > center_l:
            center, center_l = coords[i], score[i]
            step *= 1.5
        else:
            step *= 0.5
        if step < MIN_STEP:
            queue = queue[1:] if len(queue) > 1 else queue
            center = queue[0].copy()
            center_l = -math.inf
            step = 0.1

    if best_c is None:
        return OracleReport(0.0, qmat.fix_phase(top_vec), done, avg, pt_min, int(seed))
    psi = prob.states(best_c[None])[0]
    lam = min(max(best_l, 0.0), 1.0)
    # the bisection keeps the feasible side; confirm with the full predicate
    while lam > 0.0 and not is_feasible(rho, psi, lam):
        lam = max(lam - LAMBDA_TOL, 0.0)
    return OracleReport(lam, qmat.fix_phase(psi), done, avg, pt_min, int(seed))


def min_avg_concurrence_sample(rho, trials: int, seed) -> float:
    """
    Smallest average concurrence over sampled pure-state decompositions of ``rho``.

    Trial 0 is the Wootters ensemble; the others mix the spectral vectors
    with a random isometry into 4 to 8 states.
    """
    rho = qstate.density(rho)
    rng = make_rng(seed)
    v = subnormalized_eigenvectors(rho)
    best = average_concurrence(optimal_ensemble(rho))
    r = v.shape[0]
    for _ in range(1, max(int(trials), 1)):
        size = int(rng.integers(max(4, r), 9))
        q, _ = np.linalg.qr(_complex_normal(rng, (size, r)))
        best = min(best, average_concurrence(q @ v))
    return float(best)


def random_icd(seed) -> ICDParams:
    """``p`` uniform on the simplex, ``theta`` uniform on ``[0.05, pi/2 - 0.05]``."""
    rng = make_rng(seed)
    e = rng.exponential(size=4)
    theta = rng.uniform(0.05, math.pi / 2 - 0.05)
    return ICDParams(tuple(e / e.sum()), theta)


def random_density(seed) -> np.ndarray:
    """Hilbert-Schmidt random state ``G G^dagger / tr(G G^dagger)``."""
    rng = make_rng(seed)
    g = _complex_normal(rng, (4, 4))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)
