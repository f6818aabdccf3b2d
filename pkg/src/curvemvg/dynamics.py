"""Motion classification and recovery for unsynchronized ray observations.

Cameras observing a moving point need no shared clock: every detection,
whenever it was taken, back-projects to an optical ray that meets the
trajectory.  The geometry of the resulting line family in Plucker space
decides the motion class.  Rays through a static point fill a 2-plane, rays
meeting a moving-on-a-line point lie in one hyperplane whose normal is
itself a line, and rays meeting a degree-d trajectory satisfy a degree-d
form, which is exactly the fitting problem the reconstruct module solves.

Classification walks those models simplest-first with strict acceptance
gates, so the winner is the lowest-complexity explanation of the rays.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import polycore as pc
from .projective_cameras import (
    PluckerLine,
    grassmann_residual,
    incidence,
    join_points,
    point_line_matrix,
    swap_blocks,
)
from .reconstruct import (
    ChowForm,
    InsufficientViews,
    ReconstructionError,
    chow_view_cap,
    fit_chow_from_lines,
    views_for_chow,
)


class DynamicsError(ValueError):
    """A recovery routine was run on data that does not support its model."""


@dataclass(frozen=True)
class RayObservation:
    """One detection lifted to the optical ray that must meet the trajectory."""

    camera_id: int
    point_id: int
    time_id: int
    ray: PluckerLine


@dataclass
class MotionClass:
    """Classifier verdict: the accepted model and the evidence behind it.

    kind is one of "static", "line", "conic", "curve", or "unclassified";
    degree is set for the fitted-form kinds (2 for conic, d for curve).
    trace keeps each stage's deciding numbers, including for the stages
    that rejected.
    """

    kind: str
    model: object | None
    degree: int | None = None
    residual: float = 0.0
    trace: dict = field(default_factory=dict)


def lift_observations(cams, detections) -> list[RayObservation]:
    """Back-project detections to rays; no synchronization is assumed.

    Each detection is (camera_id, point_id, time_id, image point).  A
    detection sitting at its camera's center has no ray and is skipped with
    a warning.
    """
    out = []
    for ci, pi, ti, p in detections:
        p = np.asarray(p, dtype=float)
        if np.linalg.norm(p) <= 1e-12:
            warnings.warn(
                f"detection (cam {ci}, point {pi}, frame {ti}) is at the "
                "camera center; skipped")
            continue
        L = cams[ci].ray_matrix @ p
        if np.linalg.norm(L) <= 1e-12 * np.linalg.norm(p):
            warnings.warn(
                f"detection (cam {ci}, point {pi}, frame {ti}) back-projects "
                "to no ray; skipped")
            continue
        out.append(RayObservation(ci, pi, ti, PluckerLine(L)))
    return out


def _ray_rows(rays) -> tuple[np.ndarray, list[np.ndarray] | None]:
    """Unit ray vectors plus per-camera blocks when camera ids are known."""
    if isinstance(rays, np.ndarray):
        mat = rays / np.linalg.norm(rays, axis=1, keepdims=True)
        return mat, None
    mat = np.array([r.ray.v for r in rays])
    groups: dict[int, list[int]] = {}
    for i, r in enumerate(rays):
        groups.setdefault(r.camera_id, []).append(i)
    blocks = [mat[idx] for _, idx in sorted(groups.items())]
    return mat, blocks


def recover_static_point(rays, tol: float = 1e-7) -> np.ndarray:
    """Least-squares common point of the rays.

    Stacks the incidence matrices of all rays; the common point is the
    nullvector.  Raises when any ray passes farther than tol from it.
    """
    mat, _ = _ray_rows(rays)
    if mat.shape[0] < 2:
        raise DynamicsError("need at least two rays to intersect")
    A = np.vstack([point_line_matrix(L) for L in mat])
    _, _, Vt = np.linalg.svd(A)
    P = Vt[-1]
    P = pc.sign_normalize(P)
    worst = max(np.linalg.norm(point_line_matrix(L) @ P) for L in mat)
    if worst > tol:
        raise DynamicsError(
            f"rays do not meet at one point (worst incidence {worst:.2e} > {tol:.1e})")
    return P


def recover_line_motion(rays, tol: float = 1e-8,
                        quadric_gate: float = 1e-4) -> PluckerLine:
    """The support line of rays that all meet one line.

    The rays satisfy a single linear form; its normal, re-read through the
    incidence pairing, is the Plucker vector of the support line, finished
    with one Newton projection onto the line quadric.
    """
    mat, _ = _ray_rows(rays)
    if mat.shape[0] < 6:
        raise DynamicsError("need at least six rays to pin a hyperplane")
    _, s, Vt = np.linalg.svd(mat)
    if s[4] / s[0] < 1e-8:
        raise DynamicsError(
            "hyperplane is not unique (ray span is degenerate); "
            "the rays look concurrent, not collinear-meeting")
    h = Vt[-1]
    cand = swap_blocks(h)
    qres = grassmann_residual(cand)
    if qres > quadric_gate:
        raise DynamicsError(
            f"hyperplane normal misses the line quadric ({qres:.2e} > "
            f"{quadric_gate:.1e}); not a line motion")
    # one Newton step: Q(L) = L.swap(L)/2 has gradient swap(L)
    grad = swap_blocks(cand)
    cand = cand - (cand @ grad / 2.0) * grad / (grad @ grad)
    line = PluckerLine(cand)
    worst = max(abs(incidence(L, line.v)) for L in mat)
    if worst > tol:
        raise DynamicsError(
            f"recovered line misses some rays (worst pairing {worst:.2e} > {tol:.1e})")
    return line


def recover_trajectory_chow(rays, d: int, rank_tol: float = 1e-7,
                            enforce_rank: bool = True) -> ChowForm:
    """Degree-d form vanishing on the rays, via the reconstruct fitting core."""
    mat, blocks = _ray_rows(rays)
    return fit_chow_from_lines(mat, d, per_view_blocks=blocks, rank_tol=rank_tol,
                               enforce_rank=enforce_rank)


def _holdout_split(n: int, every: int = 5) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(n)
    held = idx[::every]
    train = np.setdiff1d(idx, held)
    return train, held


def classify_motion(rays, d_max: int = 3, tol: float | None = None,
                    noise_sigma: float = 0.0) -> MotionClass:
    """Simplest accepted motion model for one point's rays.

    Stages: static (rays span a 2-plane and meet at a point), line (one
    hyperplane whose normal is itself a line), then fitted forms of degree
    2..d_max validated on held-out rays.  Acceptance thresholds scale with
    the declared image noise; with none they sit at exact-arithmetic levels.
    Returns "unclassified" with the residual trace when nothing accepts.
    """
    mat, blocks = _ray_rows(rays)
    n = mat.shape[0]
    if n < 8:
        raise DynamicsError("need at least eight rays to classify")
    eff_tol = max(1e-7, 10.0 * noise_sigma) if tol is None else tol
    rank_gate = max(1e-8, 20.0 * noise_sigma)
    trace: dict = {"n_rays": n, "tol": eff_tol}

    # static: the ray vectors span only a 2-plane of lines
    s = np.linalg.svd(mat, compute_uv=False)
    span_gap = s[3] / s[2]
    trace["static_span_gap"] = span_gap
    if span_gap <= rank_gate:
        point_tol = max(eff_tol, 30.0 * noise_sigma)
        try:
            P = recover_static_point(mat, tol=point_tol)
        except DynamicsError as err:
            trace["static_reject"] = str(err)
        else:
            worst = max(np.linalg.norm(point_line_matrix(L) @ P) for L in mat)
            trace["static_residual"] = worst
            return MotionClass("static", P, residual=worst, trace=trace)

    # line: exactly one vanishing hyperplane, normal on the quadric
    null_gap = s[5] / s[4] if s[4] > 0 else 1.0
    trace["line_null_gap"] = null_gap
    if null_gap <= rank_gate:
        try:
            line = recover_line_motion(
                mat, tol=max(eff_tol, 30.0 * noise_sigma),
                quadric_gate=max(1e-4, 50.0 * noise_sigma))
        except DynamicsError as err:
            trace["line_reject"] = str(err)
        else:
            worst = max(abs(incidence(L, line.v)) for L in mat)
            trace["line_residual"] = worst
            return MotionClass("line", line, degree=1, residual=worst, trace=trace)

    # fitted forms, lowest degree first.  The fit itself never rejects: a
    # wrong-degree or off-curve batch just yields a form that evaluates
    # large on the held-out rays, which is the only gate that scales
    # gracefully with noise (rank thresholds do not: the weakest true
    # direction and the noise floor overlap across instances).
    train, held = _holdout_split(n)
    for d in range(2, d_max + 1):
        train_blocks = None
        if blocks is not None:
            train_set = set(train.tolist())
            train_blocks = []
            pos = 0
            for b in blocks:
                take = [j for j in range(b.shape[0]) if pos + j in train_set]
                pos += b.shape[0]
                if take:
                    train_blocks.append(b[take])
        try:
            G = fit_chow_from_lines(mat[train], d, per_view_blocks=train_blocks,
                                    enforce_rank=False)
        except (InsufficientViews, ReconstructionError) as err:
            trace[f"degree{d}_reject"] = str(err)
            continue
        worst = max(abs(G(L)) for L in mat[held])
        trace[f"degree{d}_holdout"] = worst
        trace[f"degree{d}_gap"] = G.gap
        if worst <= eff_tol:
            kind = "conic" if d == 2 else "curve"
            return MotionClass(kind, G, degree=d, residual=worst, trace=trace)
    return MotionClass("unclassified", None, trace=trace)


@dataclass
class LocalizeResult:
    """Where a ray meets the trajectory; all tied candidates are reported."""

    point: np.ndarray
    parameter: float
    score: float
    candidates: list[tuple[float, np.ndarray, float]]
    ambiguous: bool


def localize_on_ray(G: ChowForm, ray: PluckerLine, tol: float = 1e-6,
                    n_samples: int = 512, rng: np.random.Generator | None = None,
                    hint=None) -> LocalizeResult:
    """Scan a ray for its meeting points with the trajectory of G.

    Membership scoring joins each candidate point with fixed probe points;
    on the trajectory every such joining line satisfies G.  The scan is
    polished locally; a secant ray legitimately yields several minima, so
    ties below tol are reported, never resolved silently.
    """
    if rng is None:
        rng = np.random.default_rng(2024)
    probes = rng.standard_normal((4, 4))
    A, B = ray.span_points()
    A = A / np.linalg.norm(A)
    B = B / np.linalg.norm(B)

    def point_at(t: float) -> np.ndarray:
        P = np.cos(t) * A + np.sin(t) * B
        return P / np.linalg.norm(P)

    def score(t: float) -> float:
        P = point_at(t)
        return max(abs(G(join_points(P, R))) for R in probes)

    ts = np.linspace(0.0, np.pi, n_samples, endpoint=False)
    vals = np.array([score(t) for t in ts])
    minima = []
    for i in range(n_samples):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[(i + 1) % n_samples]:
            minima.append(i)

    step = np.pi / n_samples
    candidates = []
    for i in minima:
        lo, hi = ts[i] - step, ts[i] + step
        # golden-section polish on the bracket
        for _ in range(60):
            m1 = lo + 0.382 * (hi - lo)
            m2 = lo + 0.618 * (hi - lo)
            if score(m1) < score(m2):
                hi = m2
            else:
                lo = m1
        t_best = 0.5 * (lo + hi)
        v = score(t_best)
        if v <= tol:
            candidates.append((t_best, point_at(t_best), v))
    # dedup: minima from adjacent grid cells polish to the same root
    candidates.sort(key=lambda c: c[0])
    dedup: list[tuple[float, np.ndarray, float]] = []
    for c in candidates:
        if dedup and min(abs(c[0] - dedup[-1][0]),
                         np.pi - abs(c[0] - dedup[-1][0])) < 10 * step:
            if c[2] < dedup[-1][2]:
                dedup[-1] = c
            continue
        dedup.append(c)
    if not dedup:
        raise DynamicsError(
            f"no membership minimum below {tol:.1e} along the ray "
            f"(best {vals.min():.2e})")
    dedup.sort(key=lambda c: c[2])
    best = dedup[0]
    if hint is not None:
        h = np.asarray(hint, dtype=float)
        h = h / np.linalg.norm(h)
        best = min(dedup, key=lambda c: 1.0 - abs(c[1] @ h))
    return LocalizeResult(best[1], best[0], best[2], dedup, len(dedup) > 1)
