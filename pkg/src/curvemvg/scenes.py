"""Seeded synthetic scene generation: cameras, trajectories, noise.

All randomness flows through explicit generators so a scene is a pure
function of its seed; nothing in here touches global RNG state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curve_models import RationalCurve3D, preset_curve
from .projective_cameras import Camera, join_points, point_line_matrix


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def look_at_rotation(position, target, up) -> np.ndarray:
    """World-to-camera rotation with the optical axis through the target."""
    position = np.asarray(position, dtype=float)
    z = np.asarray(target, dtype=float) - position
    z = z / np.linalg.norm(z)
    x = np.cross(np.asarray(up, dtype=float), z)
    if np.linalg.norm(x) < 1e-8:
        raise ValueError("up direction is parallel to the viewing axis")
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return np.stack([x, y, z])


def random_camera(rng: np.random.Generator, radius: tuple[float, float] = (3.5, 7.0),
                  target_jitter: float = 0.4) -> Camera:
    """Camera at a random standoff looking near the origin, generic internals."""
    direction = rng.standard_normal(3)
    direction /= np.linalg.norm(direction)
    position = direction * rng.uniform(*radius)
    target = rng.standard_normal(3) * target_jitter
    while True:
        up = rng.standard_normal(3)
        axis = target - position
        if np.linalg.norm(np.cross(up, axis)) > 1e-3 * np.linalg.norm(up) * np.linalg.norm(axis):
            break
    R = look_at_rotation(position, target, up)
    t = -R @ position
    f = rng.uniform(0.8, 1.6)
    alpha = rng.uniform(0.9, 1.15)
    s = rng.uniform(-0.05, 0.05)
    u0, v0 = rng.uniform(-0.15, 0.15, size=2)
    return Camera.from_parameters(f, alpha, s, u0, v0, R, t)


def camera_ring(rng: np.random.Generator, count: int) -> list[Camera]:
    """Cameras spread around the scene with jittered poses."""
    cams = []
    for k in range(count):
        base = 2.0 * np.pi * k / count
        phi = base + rng.uniform(-0.2, 0.2)
        elev = rng.uniform(-0.5, 0.7)
        direction = np.array([np.cos(phi) * np.cos(elev),
                              np.sin(phi) * np.cos(elev),
                              np.sin(elev)])
        position = direction * rng.uniform(4.0, 6.5)
        target = rng.standard_normal(3) * 0.3
        up = rng.standard_normal(3)
        R = look_at_rotation(position, target, up)
        cams.append(Camera.from_parameters(
            rng.uniform(0.8, 1.6), rng.uniform(0.9, 1.15), rng.uniform(-0.05, 0.05),
            rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), R, -R @ position))
    return cams


def add_image_noise(p, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Isotropic Gaussian perturbation of a unit-normalized image point."""
    p = np.asarray(p, dtype=float)
    p = p / np.linalg.norm(p)
    if sigma == 0.0:
        return p
    q = p + sigma * rng.standard_normal(3)
    return q / np.linalg.norm(q)


@dataclass
class Trajectory:
    """A moving (or fixed) point with a parametric position law."""

    kind: str                      # static | line | conic | cubic
    curve: RationalCurve3D | None  # None for static
    anchor: np.ndarray | None = None

    def position(self, time: float) -> np.ndarray:
        if self.kind == "static":
            return self.anchor
        return self.curve.point(time)


def make_trajectory(kind: str, rng: np.random.Generator) -> Trajectory:
    """Seeded trajectory preset for the motion classifier."""
    if kind == "static":
        P = np.concatenate([rng.standard_normal(3), [rng.uniform(0.7, 1.3)]])
        return Trajectory("static", None, anchor=P / np.linalg.norm(P))
    if kind == "line":
        C = rng.standard_normal((4, 2))
        return Trajectory("line", RationalCurve3D(C))
    if kind == "conic":
        return Trajectory("conic", preset_curve("conic", int(rng.integers(2**31))))
    if kind == "cubic":
        return Trajectory("cubic", preset_curve("twisted_cubic", int(rng.integers(2**31))))
    raise ValueError(f"unknown trajectory kind {kind!r}")


@dataclass
class DynamicScene:
    """Unsynchronized observations of one moving point by several cameras."""

    cameras: list[Camera]
    trajectory: Trajectory
    detections: list[tuple[int, int, int, np.ndarray]] = field(default_factory=list)
    noise_sigma: float = 0.0


def lines_missing_points(points, rng: np.random.Generator, count: int,
                         min_gap: float = 0.25) -> np.ndarray:
    """Random lines that stay clear of every given point by min_gap.

    Almost every random line misses a curve, but near-misses evaluate small
    on any form that vanishes on the curve; separation oracles need lines
    bounded away from it.
    """
    points = np.asarray(points, dtype=float)
    points = points / np.linalg.norm(points, axis=1, keepdims=True)
    kept = []
    while len(kept) < count:
        L = join_points(rng.standard_normal(4), rng.standard_normal(4))
        L = L / np.linalg.norm(L)
        gap = min(np.linalg.norm(point_line_matrix(L) @ P) for P in points)
        if gap >= min_gap:
            kept.append(L)
    return np.array(kept)


def observe_trajectory(kind: str, rng: np.random.Generator, n_cameras: int = 10,
                       frames_per_camera: int = 15, noise_sigma: float = 0.0,
                       point_id: int = 0) -> DynamicScene:
    """Sample a trajectory with per-camera clocks that share no common rate."""
    traj = make_trajectory(kind, rng)
    cams = camera_ring(rng, n_cameras)
    scene = DynamicScene(cams, traj, noise_sigma=noise_sigma)
    for ci, cam in enumerate(cams):
        offset = rng.uniform(0, np.pi)
        stride = rng.uniform(0.8, 1.25) * np.pi / frames_per_camera
        for k in range(frames_per_camera):
            time = offset + stride * k + rng.uniform(0, 0.1 * stride)
            P = traj.position(time)
            p = cam.project(P)
            if np.linalg.norm(p) <= 1e-9:
                continue
            scene.detections.append(
                (ci, point_id, k, add_image_noise(p, noise_sigma, rng)))
    return scene
