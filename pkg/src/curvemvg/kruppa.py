"""Tangency constraints tying an epipolar geometry to curve duals.

A curve seen in two views links the unknown (F, e1) through one polynomial
identity: composing the second dual form with p -> F p must be proportional
to composing the first dual form with p -> e1 x p.  Restricting both sides
to a probe line and cross-multiplying coefficients eliminates the unknown
scale and leaves m scalar conditions per curve, where m is the class of the
image.  Stacking curves cuts the seven-dimensional manifold of epipolar
geometries down to the solution set explored here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import polycore as pc
from .curve_models import RationalCurve3D, fit_dual_image_curve
from .polycore import HomogeneousPolynomial
from .projective_cameras import (
    Camera,
    EpipolarGeometry,
    GeometryError,
    adjugate3,
    cross_matrix,
    fundamental,
    join_points,
    line_span_points,
    plucker_matrix,
)


class KruppaError(ValueError):
    """Raised for invalid constraint instances or indeterminate diagnostics."""


@dataclass
class KruppaInstance:
    """Dual forms of one curve in two views plus the true pairing data."""

    phi1: HomogeneousPolynomial
    phi2: HomogeneousPolynomial
    eg: EpipolarGeometry

    def __post_init__(self):
        if self.phi1.num_vars != 3 or self.phi2.num_vars != 3:
            raise KruppaError("dual forms live on the dual plane (three variables)")
        if self.phi1.degree != self.phi2.degree:
            raise KruppaError("the two dual forms must share their degree")
        if self.phi1.degree < 2:
            raise KruppaError("class must be at least 2")

    @property
    def m(self) -> int:
        return self.phi1.degree


def build_instance(curve: RationalCurve3D, cam1: Camera, cam2: Camera) -> KruppaInstance:
    """Synthetic route: fit both duals and pair them with the true geometry."""
    phi1, _ = fit_dual_image_curve(curve, cam1)
    phi2, _ = fit_dual_image_curve(curve, cam2)
    return KruppaInstance(phi1, phi2, fundamental(cam1, cam2))


def _probe_pool(rng: np.random.Generator, count: int = 5):
    for _ in range(count):
        yield rng.standard_normal(3), rng.standard_normal(3)


def constraint_vector(phi1: HomogeneousPolynomial, phi2: HomogeneousPolynomial,
                      e1, F, probe: tuple[np.ndarray, np.ndarray],
                      pivot: int | None = None) -> np.ndarray:
    """Scale-eliminated tangency conditions on one probe line.

    Restricts ``phi2(F p)`` and ``phi1(e1 x p)`` to the line spanned by the
    probe points and returns the m independent cross-differences against the
    pivot coefficient (strongest by default), normalized by both coefficient
    norms.  Callers that difference repeated evaluations should freeze the
    pivot so the output stays smooth in (e1, F).
    """
    a, b = probe
    m = phi1.degree
    G = cross_matrix(e1)
    u = pc.restrict_to_line(phi2, np.asarray(F) @ a, np.asarray(F) @ b).coeffs
    v = pc.restrict_to_line(phi1, G @ a, G @ b).coeffs
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu <= 1e-13 or nv <= 1e-13:
        raise KruppaError("probe line degenerates both restricted forms")
    k = int(np.argmax(np.abs(u) + np.abs(v))) if pivot is None else pivot
    idx = [i for i in range(m + 1) if i != k]
    return (u[idx] * v[k] - u[k] * v[idx]) / (nu * nv)


def gen_kruppa_constraints(inst: KruppaInstance,
                           probe: tuple[np.ndarray, np.ndarray] | None = None,
                           rng: np.random.Generator | None = None) -> np.ndarray:
    """Constraint vector of one instance at its stored epipolar geometry."""
    if probe is not None:
        return constraint_vector(inst.phi1, inst.phi2, inst.eg.e1, inst.eg.F, probe)
    rng = np.random.default_rng(0) if rng is None else rng
    last: Exception | None = None
    for cand in _probe_pool(rng):
        try:
            return constraint_vector(inst.phi1, inst.phi2, inst.eg.e1, inst.eg.F, cand)
        except (KruppaError, pc.PolynomialError) as err:
            last = err
    raise KruppaError(f"no usable probe line found: {last}")


def detection_response(inst: KruppaInstance, rng: np.random.Generator | None = None,
                       n_probes: int = 3) -> float:
    """Largest constraint magnitude over several independent probe lines.

    A single probe can land near the kernel of the probe-restricted
    constraint Jacobian and answer a genuinely wrong geometry with a
    deceptively small vector; the max over a few probes is the statistic
    that separates truth (still at fit-noise level) from perturbations.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    best = 0.0
    used = 0
    last: Exception | None = None
    for cand in _probe_pool(rng, count=max(2 * n_probes, 5)):
        try:
            vec = constraint_vector(inst.phi1, inst.phi2, inst.eg.e1, inst.eg.F, cand)
        except (KruppaError, pc.PolynomialError) as err:
            last = err
            continue
        best = max(best, float(np.abs(vec).max()))
        used += 1
        if used == n_probes:
            break
    if used == 0:
        raise KruppaError(f"no usable probe line found: {last}")
    return best


def classical_kruppa_residual(eg: EpipolarGeometry, C1, C2) -> float:
    """Proportionality residual of the two matrix sides of the conic case.

    For conics with matrices C1, C2 the tangency identity collapses to
    ``[e1]_x^T adj(C1) [e1]_x ~ F^T adj(C2) F``; the residual is the largest
    normalized cross-difference between the two symmetric matrices.
    """
    C1 = np.asarray(C1, dtype=float)
    C2 = np.asarray(C2, dtype=float)
    if C1.shape != (3, 3) or C2.shape != (3, 3):
        raise KruppaError("conic matrices are 3x3")
    G = cross_matrix(eg.e1)
    lhs = G.T @ adjugate3(C1) @ G
    rhs = eg.F.T @ adjugate3(C2) @ eg.F
    return pc.proportionality_residual(lhs.ravel(), rhs.ravel())


@dataclass
class TangencyData:
    """Epipolar-tangent points of one curve under one camera pair."""

    baseline: np.ndarray          # Plucker vector of the join of centers
    params: np.ndarray            # real tangency parameters (angle chart)
    Q: np.ndarray                 # (k, 4) space points
    q1: np.ndarray                # (k, 3) images in view 1
    q2: np.ndarray                # (k, 3) images in view 2
    expected: int                 # class m of the curve
    n_complex: int                # tangencies lost to complex parameters

    @property
    def deficit(self) -> bool:
        return self.n_complex > 0


def tangency_points(curve: RationalCurve3D, cam1: Camera, cam2: Camera) -> TangencyData:
    """Parameters where the epipolar plane of the pair is tangent to the curve.

    The tangency condition is the vanishing of det[O1, O2, dP/dt, dP/ds],
    a binary form of degree 2d-2 whose roots are found numerically; repeated
    roots mean the pair sits on a non-generic tangency and are rejected.
    """
    O1, O2 = cam1.center, cam2.center
    Ct, Cs = curve.partial_matrices()
    dm1 = curve.degree - 1
    # det[O1,O2,A,B] = sum_{k<l} D_kl (A_k B_l - A_l B_k), with A, B binary forms
    coeff = np.zeros(2 * dm1 + 1)
    for k in range(4):
        for l in range(k + 1, 4):
            rows = [r for r in range(4) if r not in (k, l)]
            D = ((-1) ** (k + l)) * (O1[rows[0]] * O2[rows[1]] - O1[rows[1]] * O2[rows[0]])
            if D == 0.0:
                continue
            coeff += D * (np.convolve(Ct[k], Cs[l]) - np.convolve(Ct[l], Cs[k]))
    scale = np.abs(coeff).max()
    if scale == 0.0:
        raise GeometryError("tangency form vanished identically (degenerate pair)")
    coeff = coeff / scale
    m = 2 * curve.degree - 2
    lead = np.abs(coeff) > 1e-11
    first = int(np.argmax(lead))  # leading zeros are roots at s = 0, i.e. theta = 0
    params = [0.0] * first
    n_complex = 0
    for r in np.roots(coeff[first:]):
        if abs(r.imag) > 1e-8 * max(1.0, abs(r)):
            n_complex += 1
            continue
        params.append(_polish_tangency(coeff, float(np.arctan2(1.0, r.real)) % np.pi))
    params = sorted(p % np.pi for p in params)
    for a, b in zip(params, params[1:]):
        if abs(a - b) < 1e-7:
            raise GeometryError("repeated tangency parameters: non-generic camera pair")
    Q = np.stack([curve.point(th) for th in params]) if params else np.zeros((0, 4))
    q1 = Q @ cam1.M.T if len(params) else np.zeros((0, 3))
    q2 = Q @ cam2.M.T if len(params) else np.zeros((0, 3))
    if len(params):
        q1 = q1 / np.linalg.norm(q1, axis=1, keepdims=True)
        q2 = q2 / np.linalg.norm(q2, axis=1, keepdims=True)
    return TangencyData(join_points(O1, O2), np.asarray(params), Q, q1, q2, m, n_complex)


def _polish_tangency(coeff: np.ndarray, theta: float) -> float:
    # Newton steps on the dehomogenized angle chart
    n = coeff.shape[0] - 1
    for _ in range(40):
        t, s = np.cos(theta), np.sin(theta)
        ks = np.arange(n + 1)
        mono = t ** (n - ks) * s ** ks
        g = float(coeff @ mono)
        dmono = -(n - ks) * np.where(n - ks >= 1, t ** np.maximum(n - ks - 1, 0), 0.0) * s ** (ks + 1) \
            + ks * t ** (n - ks + 1) * np.where(ks >= 1, s ** np.maximum(ks - 1, 0), 0.0)
        dg = float(coeff @ dmono)
        if dg == 0.0:
            break
        step = g / dg
        theta -= step
        if abs(step) < 1e-14:
            break
    return theta % np.pi


def quadric_degeneracy(td: TangencyData, rel_tol: float = 1e-8) -> bool:
    """Whether some quadric contains the baseline and every tangency point.

    Three points pin the baseline (a quadric through three collinear points
    contains the line), so with m tangencies the test matrix has 3 + m rows
    against the ten quadric coefficients; a numerically defective rank means
    the degeneracy is present.
    """
    basis = pc.enumerate_monomials(4, 2)
    A, B = line_span_points(td.baseline)
    line_pts = np.stack([A, B, A + B])
    line_pts = line_pts / np.linalg.norm(line_pts, axis=1, keepdims=True)
    pts = np.vstack([line_pts, td.Q]) if td.Q.size else line_pts
    rows = pc.monomial_rows(basis, pts)
    rows = rows / np.linalg.norm(rows, axis=1, keepdims=True)
    rank, _ = pc.numerical_rank(rows, rel_tol=rel_tol, gap_floor=1.0)
    return rank < basis.size


def epipolar_chart(eg: EpipolarGeometry):
    """Local 7-parameter chart of the epipolar manifold around ``eg``.

    Two parameters move each epipole inside its projective chart and three
    move the rank-2 core with both kernels pinned; returns a callable
    ``theta -> (e1, F)`` with ``theta = 0`` reproducing the input.
    """
    U, s, Vt = np.linalg.svd(eg.F)
    v1, v2 = Vt[0], Vt[1]
    u1, u2 = U[:, 0], U[:, 1]
    e1_0, e2_0 = Vt[2], U[:, 2]
    S0 = np.diag(s[:2])
    # complement of span(S0) inside 2x2 matrices
    q, _ = np.linalg.qr(np.column_stack([S0.ravel(), np.eye(4)]))
    S_dirs = [q[:, k].reshape(2, 2) for k in range(1, 4)]

    def chart(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        theta = np.asarray(theta, dtype=float)
        e1 = e1_0 + theta[0] * v1 + theta[1] * v2
        e1 = e1 / np.linalg.norm(e1)
        e2 = e2_0 + theta[2] * u1 + theta[3] * u2
        e2 = e2 / np.linalg.norm(e2)
        # bases of the perpendicular planes, smooth near theta = 0
        V = _complete_basis(e1, v1, v2)
        W = _complete_basis(e2, u1, u2)
        S = S0 + theta[4] * S_dirs[0] + theta[5] * S_dirs[1] + theta[6] * S_dirs[2]
        F = W @ S @ V.T
        return e1, F / np.linalg.norm(F)

    return chart


def _complete_basis(e: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # orthonormal basis of the plane orthogonal to e, seeded by a, b
    x = a - (a @ e) * e
    x = x / np.linalg.norm(x)
    y = b - (b @ e) * e - (b @ x) * x
    y = y / np.linalg.norm(y)
    return np.column_stack([x, y])


def stacked_constraints(instances, e1, F, owners: list[int],
                        probes: list[tuple[np.ndarray, np.ndarray]],
                        pivots: list[int] | None = None) -> np.ndarray:
    pivots = [None] * len(probes) if pivots is None else pivots
    vals = [constraint_vector(instances[o].phi1, instances[o].phi2, e1, F, probe, pivot)
            for o, probe, pivot in zip(owners, probes, pivots)]
    return np.concatenate(vals)


def _draw_probes(instances, rng: np.random.Generator, e1, F, per_instance: int = 1):
    """Probe lines with pivots frozen at the given geometry.

    Returns parallel lists (owner index, probe, pivot).  Constraints from a
    single probe line have a badly conditioned differential even when the
    variety is cut transversally, so rank and descent work draws at least two
    lines per instance.
    """
    owners, probes, pivots = [], [], []
    G = cross_matrix(np.asarray(e1))
    for idx, inst in enumerate(instances):
        found = 0
        for cand in _probe_pool(rng, count=5 * per_instance):
            try:
                constraint_vector(inst.phi1, inst.phi2, e1, F, cand)
            except (KruppaError, pc.PolynomialError):
                continue
            a, b = cand
            u = pc.restrict_to_line(inst.phi2, np.asarray(F) @ a, np.asarray(F) @ b).coeffs
            v = pc.restrict_to_line(inst.phi1, G @ a, G @ b).coeffs
            owners.append(idx)
            probes.append(cand)
            pivots.append(int(np.argmax(np.abs(u) + np.abs(v))))
            found += 1
            if found == per_instance:
                break
        if found < per_instance:
            raise KruppaError("not enough usable probe lines for one instance")
    return owners, probes, pivots


def solution_dimension(instances, eg_truth: EpipolarGeometry,
                       step: float = 1e-6, rank_tol: float = 1e-7,
                       gap_floor: float = 10.0,
                       rng: np.random.Generator | None = None,
                       probes_per_instance: int = 2) -> int:
    """Local dimension of the constraint variety at the true geometry.

    Differentiates the stacked constraints through the 7-chart by central
    differences and reads off 7 minus the numerical rank; a singular-value
    gap under ``gap_floor`` at the cut is reported as indeterminate rather
    than rounded to a dimension.  Every probe restriction contains the true
    variety, so stacking several lines per curve tightens conditioning
    without overshooting the codimension.
    """
    instances = list(instances)
    if not instances:
        raise KruppaError("need at least one curve instance")
    rng = np.random.default_rng(1234) if rng is None else rng
    chart = epipolar_chart(eg_truth)
    owners, probes, pivots = _draw_probes(instances, rng, eg_truth.e1, eg_truth.F,
                                          per_instance=probes_per_instance)

    def func(theta: np.ndarray) -> np.ndarray:
        e1, F = chart(theta)
        return stacked_constraints(instances, e1, F, owners, probes, pivots)

    n_out = probes_per_instance * sum(inst.m for inst in instances)
    J = np.empty((n_out, 7))
    for k in range(7):
        d = np.zeros(7)
        d[k] = step
        J[:, k] = (func(d) - func(-d)) / (2 * step)
    rank, gap = pc.numerical_rank(J, rel_tol=rank_tol, gap_floor=gap_floor)
    if gap < gap_floor:
        raise KruppaError(
            f"rank of the constraint Jacobian is indeterminate (gap {gap:.2f})")
    return 7 - rank


@dataclass
class RefineResult:
    eg: EpipolarGeometry
    residual: float
    iterations: int


def refine_epipolar(eg_init: EpipolarGeometry, instances,
                    max_iter: int = 60, tol: float = 1e-9,
                    rng: np.random.Generator | None = None,
                    probes_per_instance: int = 3) -> RefineResult:
    """Gauss-Newton descent of the stacked constraints over the 7-chart.

    Returns the refined geometry with the final residual norm; a residual
    plateau above 1e-6 raises, since that means the initial geometry is not
    in the attraction basin of any solution.
    """
    instances = list(instances)
    rng = np.random.default_rng(99) if rng is None else rng
    chart = epipolar_chart(eg_init)
    owners, probes, pivots = _draw_probes(instances, rng, eg_init.e1, eg_init.F,
                                          per_instance=probes_per_instance)

    def func(theta: np.ndarray) -> np.ndarray:
        e1, F = chart(theta)
        return stacked_constraints(instances, e1, F, owners, probes, pivots)

    theta = np.zeros(7)
    r = func(theta)
    cost = float(r @ r)
    lam = 1e-6
    iterations = 0
    for _ in range(max_iter):
        if np.sqrt(cost) < tol:
            break
        J = np.empty((r.shape[0], 7))
        for k in range(7):
            d = np.zeros(7)
            d[k] = 1e-7
            J[:, k] = (func(theta + d) - func(theta - d)) / 2e-7
        improved = False
        for _ in range(25):
            H = J.T @ J + lam * np.eye(7)
            try:
                delta = np.linalg.solve(H, -J.T @ r)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            r_new = func(theta + delta)
            cost_new = float(r_new @ r_new)
            if cost_new < cost:
                theta = theta + delta
                r, cost = r_new, cost_new
                lam = max(lam / 5, 1e-12)
                improved = True
                iterations += 1
                break
            lam *= 10
        if not improved:
            break
    residual = float(np.sqrt(cost))
    if residual > 1e-6:
        raise KruppaError(f"refinement stalled at residual {residual:.2e}")
    e1, F = chart(theta)
    return RefineResult(EpipolarGeometry.from_F(F), residual, iterations)
