import numpy as np
import pytest

from roi_nbv.geometry import Pose
from roi_nbv.roi_detection import (HsiThreshold, PixelCluster, array_objectives, detect_clusters,
                                   detect_clusters_from_mask, match_target, objective, rgb_to_hsi,
                                   select_reference_target)
from roi_nbv.scene_sim import ARRAY_CAMERA, LabeledImage, array_poses, occluded_fruit_scene, render


def blank(w=16, h=12):
    return LabeledImage(np.full((h, w), -2, dtype=np.int32), np.full((h, w), np.inf), Pose.identity(), ARRAY_CAMERA)


def test_detect_two_blobs():
    m = np.zeros((10, 10), dtype=bool)
    m[1:3, 1:3] = True
    m[6:9, 5:9] = True
    cl = sorted(detect_clusters_from_mask(m, min_cluster_px=1), key=lambda c: c.pixel_count)
    assert [c.pixel_count for c in cl] == [4, 12]
    assert np.allclose(cl[0].centroid_px, [2.0, 2.0])
    assert np.allclose(cl[1].centroid_px, [7.0, 7.5])


def test_diagonal_pixels_are_separate_and_small_dropped():
    m = np.zeros((5, 5), dtype=bool)
    m[0, 0] = m[1, 1] = True
    assert len(detect_clusters_from_mask(m, min_cluster_px=1)) == 2
    assert detect_clusters_from_mask(m, min_cluster_px=2) == []
    assert detect_clusters_from_mask(np.zeros((4, 4), dtype=bool)) == []


def test_reference_selection_and_tiebreak():
    a = PixelCluster(10, (2.0, 2.0), image_size=(20, 20))
    b = PixelCluster(10, (9.0, 11.0), image_size=(20, 20))
    c = PixelCluster(3, (10.0, 10.0), image_size=(20, 20))
    assert select_reference_target([a, b, c]) is b
    assert select_reference_target([a, PixelCluster(11, (0.5, 0.5))]).pixel_count == 11
    assert select_reference_target([]) is None


def test_match_target_respects_min_size():
    ref = PixelCluster(20, (10.0, 10.0))
    near_small = PixelCluster(3, (10.0, 10.5))
    far_big = PixelCluster(20, (30.0, 10.0))
    assert match_target(ref, [near_small, far_big], 5) is far_big
    assert match_target(ref, [near_small], 5) is None


def test_objective_is_area_fraction():
    img = blank(16, 12)
    assert objective(img, None) == 0.0
    assert objective(img, PixelCluster(48, (1.0, 1.0))) == pytest.approx(48 / 192)


def test_array_objectives_no_target():
    f, match = array_objectives([blank()] * 9)
    assert np.all(f == 0) and match.reference is None


def test_array_objectives_on_scene():
    s = occluded_fruit_scene(0)
    imgs = [render(s, p, ARRAY_CAMERA) for p in array_poses(s.initial_pose)]
    f, match = array_objectives(imgs)
    assert f.shape == (9,) and f[0] > 0
    ref = detect_clusters(imgs[0])
    assert match.reference.pixel_count == max(c.pixel_count for c in ref)
    assert match.reference.fruit_ids == frozenset({0})
    assert 0 < match.reference.mean_depth < 0.3


def test_hsi_threshold():
    rgb = np.array([[[0.9, 0.1, 0.1], [0.1, 0.8, 0.1], [0.5, 0.5, 0.5], [0.9, 0.1, 0.2]]])
    hsi = rgb_to_hsi(rgb)
    assert hsi[0, 0, 0] == pytest.approx(0.0, abs=1e-5)
    assert hsi[0, 1, 0] == pytest.approx(2 * np.pi / 3, abs=1e-6)
    assert hsi[0, 2, 1] == pytest.approx(0.0, abs=1e-9)
    assert list(HsiThreshold()(rgb)[0]) == [True, False, False, True]
