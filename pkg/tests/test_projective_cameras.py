import numpy as np
import pytest

from curvemvg import projective_cameras as pcam
from curvemvg.projective_cameras import (Camera, EpipolarGeometry, PluckerLine,
                                         fundamental)


def rng():
    return np.random.default_rng(101)


def test_join_meet_duality():
    r = rng()
    P, Q = r.standard_normal(4), r.standard_normal(4)
    L = pcam.join_points(P, Q)
    assert pcam.grassmann_residual(L) < 1e-12
    # the line comes back as the meet of two planes through it
    A, B = pcam.line_span_planes(L)
    M = pcam.meet_planes(A, B)
    from curvemvg.polycore import proportionality_residual
    assert proportionality_residual(L, M) < 1e-10


def test_incidence_iff_meeting():
    r = rng()
    P, Q, R = r.standard_normal(4), r.standard_normal(4), r.standard_normal(4)
    L1 = pcam.join_points(P, Q)
    L2 = pcam.join_points(P, R)       # shares the point P
    L3 = pcam.join_points(r.standard_normal(4), r.standard_normal(4))
    assert abs(pcam.incidence(L1, L2)) < 1e-12
    assert abs(pcam.incidence(L1, L3)) > 1e-6
    assert abs(pcam.incidence(L1, L1)) < 1e-12   # Grassmann relation


def test_plucker_line_validation():
    bad = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])   # violates the quadric
    with pytest.raises(pcam.GeometryError):
        PluckerLine(bad)
    r = rng()
    L = PluckerLine.from_points(r.standard_normal(4), r.standard_normal(4))
    assert abs(np.linalg.norm(L.v) - 1.0) < 1e-12


def test_point_line_matrix_kernel():
    r = rng()
    P, Q = r.standard_normal(4), r.standard_normal(4)
    L = pcam.join_points(P, Q)
    W = pcam.point_line_matrix(L)
    assert np.linalg.norm(W @ P) < 1e-10
    assert np.linalg.norm(W @ Q) < 1e-10
    assert np.linalg.norm(W @ r.standard_normal(4)) > 1e-6


def test_meet_line_plane():
    r = rng()
    L = pcam.join_points(r.standard_normal(4), r.standard_normal(4))
    A = r.standard_normal(4)
    X = pcam.meet_line_plane(L, A)
    assert abs(X @ A) < 1e-10
    assert np.linalg.norm(pcam.point_line_matrix(L) @ X) < 1e-10


def test_camera_center_and_ray():
    r = rng()
    cam = Camera(r.standard_normal((3, 4)))
    assert np.linalg.norm(cam.M @ cam.center) < 1e-10
    p = r.standard_normal(3)
    ray = pcam.optical_ray(cam, p)
    # the ray passes through the center and reprojects to p
    assert abs(np.linalg.norm(pcam.point_line_matrix(ray.v) @ cam.center)) < 1e-10
    P0, Q0 = pcam.line_span_points(ray.v)
    for X in (P0, Q0):
        q = cam.M @ X
        if np.linalg.norm(q) > 1e-8:
            from curvemvg.polycore import proportionality_residual
            assert proportionality_residual(q, p) < 1e-8


def test_ray_matrix_inverts_projection():
    r = rng()
    cam = Camera(r.standard_normal((3, 4)))
    X = r.standard_normal(4)
    p = cam.M @ X
    L = cam.ray_matrix @ p
    # the back-projected line contains X
    assert np.linalg.norm(pcam.point_line_matrix(L) @ X) < 1e-9 * np.linalg.norm(L)


def test_line_image_consistency():
    r = rng()
    cam = Camera(r.standard_normal((3, 4)))
    P, Q = r.standard_normal(4), r.standard_normal(4)
    L = pcam.join_points(P, Q)
    l = pcam.line_image(cam, L)
    for X in (P, Q):
        assert abs(l @ (cam.M @ X)) < 1e-9


def test_fundamental_rank_and_epipoles(cams):
    for i in range(3):
        eg = fundamental(cams[i], cams[i + 1])
        s = np.linalg.svd(eg.F, compute_uv=False)
        assert s[2] / s[0] < 1e-12
        assert np.linalg.norm(eg.F @ eg.e1) < 1e-10
        assert np.linalg.norm(eg.e2 @ eg.F) < 1e-10


def test_fundamental_matches_point_correspondences(cams):
    r = rng()
    eg = fundamental(cams[0], cams[1])
    for _ in range(10):
        X = r.standard_normal(4)
        p1, p2 = cams[0].M @ X, cams[1].M @ X
        assert abs(p2 @ eg.F @ p1) < 1e-10


def test_epipolar_line_through_correspondence(cams):
    r = rng()
    eg = fundamental(cams[0], cams[1])
    X = r.standard_normal(4)
    l2 = eg.F @ (cams[0].M @ X)
    assert abs(l2 @ (cams[1].M @ X)) < 1e-10


def test_plane_homography_transfers(cams):
    r = rng()
    plane = r.standard_normal(4)
    H = pcam.homography(cams[0], cams[1], plane)
    from curvemvg.polycore import proportionality_residual
    for _ in range(5):
        # a point on the plane
        ns = np.linalg.svd(plane[None, :])[2][1:]
        X = ns.T @ r.standard_normal(3)
        assert proportionality_residual(H @ (cams[0].M @ X), cams[1].M @ X) < 1e-8


def test_plane_homography_maps_epipoles(cams):
    # any plane avoiding both centers sends e1 to e2: the baseline pierces
    # the plane in a point whose second image is the epipole
    from curvemvg.polycore import proportionality_residual
    r = rng()
    eg = fundamental(cams[0], cams[1])
    for _ in range(5):
        H = pcam.homography(cams[0], cams[1], r.standard_normal(4))
        assert proportionality_residual(H @ eg.e1, eg.e2) < 1e-9


def test_canonical_pair_reproduces_F(cams):
    from curvemvg.polycore import proportionality_residual
    eg = fundamental(cams[2], cams[5])
    c1, c2 = pcam.canonical_pair(eg)
    eg2 = fundamental(c1, c2)
    assert proportionality_residual(eg.F.ravel(), eg2.F.ravel()) < 1e-8


def test_triangulate_round_trip(cams):
    r = rng()
    from curvemvg.polycore import proportionality_residual
    X = r.standard_normal(4)
    p1, p2 = cams[0].M @ X, cams[1].M @ X
    Y = pcam.triangulate(cams[0], p1, cams[1], p2)
    assert proportionality_residual(X, Y) < 1e-8


def test_line_map_acts_on_plucker():
    r = rng()
    V = r.standard_normal((4, 4))
    P, Q = r.standard_normal(4), r.standard_normal(4)
    L = pcam.join_points(P, Q)
    from curvemvg.polycore import proportionality_residual
    assert proportionality_residual(pcam.line_map(V) @ L,
                                    pcam.join_points(V @ P, V @ Q)) < 1e-10


def test_adjugate3():
    r = rng()
    A = r.standard_normal((3, 3))
    assert np.allclose(pcam.adjugate3(A) @ A, np.linalg.det(A) * np.eye(3),
                       atol=1e-10)
