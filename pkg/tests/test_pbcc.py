import itertools

import numpy as np
import pytest

from cncood import (
    ImageTensor,
    RngStream,
    apply_pbcc,
    box_extent,
    gaussian_clusters_2d,
    pbcc_2d,
    pbcc_pairing,
    sample_box,
)
from cncood.datasets import LabeledImageSet


def _const_image(value, h=4, w=4, c=1):
    return ImageTensor(np.full((h, w, c), value, dtype=np.float32))


def test_box_extent_shrink_rule():
    # r_w = W * sqrt(1 - lambda): 32 * sqrt(0.25) = 16
    assert box_extent(32, 0.75) == 16
    assert box_extent(32, 1.0) == 0
    assert box_extent(32, 0.0) == 32


def test_sample_box_bounds_and_clipping():
    rng = RngStream(0)
    for lam in (0.0, 0.3, 0.75, 1.0):
        for _ in range(200):
            box = sample_box(32, 24, lam, rng)
            assert 0 <= box.r_x < 32 and 0 <= box.r_y < 24
            assert box.r_x + box.r_w <= 32
            assert box.r_y + box.r_h <= 24
            assert box.r_w <= box_extent(32, lam)
            assert box.r_h <= box_extent(24, lam)


def test_sample_box_rejects_bad_lambda():
    with pytest.raises(ValueError):
        sample_box(8, 8, 1.5, RngStream(0))
    with pytest.raises(ValueError):
        sample_box(8, 8, -0.1, RngStream(0))


def test_apply_pbcc_empty_and_full_box():
    a = _const_image(0.0)
    b = _const_image(1.0)
    empty = sample_box(4, 4, 1.0, RngStream(1))
    assert apply_pbcc(a, b, empty) == a  # M all ones -> x_a

    rng = RngStream(0)
    while True:  # find the origin box so the full image is covered
        full = sample_box(4, 4, 0.0, rng)
        if full.r_x == 0 and full.r_y == 0:
            break
    assert apply_pbcc(a, b, full) == b


def test_apply_pbcc_pixel_counts():
    from cncood.pbcc import CropBox

    a = _const_image(0.0)
    b = _const_image(1.0)
    out = apply_pbcc(a, b, CropBox(0, 0, 2, 2, 0.75))
    flat = out.data.reshape(-1)
    assert int((flat == 1.0).sum()) == 4
    assert int((flat == 0.0).sum()) == 12


def test_apply_pbcc_pixel_provenance():
    rng = np.random.default_rng(3)
    a = ImageTensor(rng.random((6, 5, 3), dtype=np.float32))
    b = ImageTensor(rng.random((6, 5, 3), dtype=np.float32))
    box = sample_box(5, 6, 0.4, RngStream(9))
    out = apply_pbcc(a, b, box)
    from_a = out.data == a.data
    from_b = out.data == b.data
    assert np.all(from_a | from_b)


def test_apply_pbcc_dim_mismatch():
    with pytest.raises(ValueError):
        apply_pbcc(_const_image(0.0, h=4), _const_image(0.0, h=5),
                   sample_box(4, 4, 0.5, RngStream(0)))


def test_pbcc_2d_endpoints_and_midpoint():
    p1, p2 = np.array([0.0, 0.0]), np.array([2.0, 2.0])
    assert np.array_equal(pbcc_2d(p1, p2, 1.0), p1)
    assert np.array_equal(pbcc_2d(p1, p2, 0.0), p2)
    assert np.array_equal(pbcc_2d(p1, p2, 0.5), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        pbcc_2d(p1, p2, 1.2)


def test_pbcc_2d_outputs_in_convex_hull():
    # hull-membership oracle over 1e4 combinations of 4-cluster data
    data = gaussian_clusters_2d(
        4, 100, [[0, 0], [1, 0], [0, 1], [1, 1]], 0.1, RngStream(5)
    )
    rng = RngStream(17)
    pts = data.points
    hull = _convex_hull(pts)
    for i in range(10_000):
        ia, ib = rng.integer(len(pts)), rng.integer(len(pts))
        lam = rng.uniform()
        out = pbcc_2d(pts[ia], pts[ib], lam)
        assert _inside_hull(hull, out[None, :]).all()


def _convex_hull(points):
    pts = sorted(map(tuple, points))

    def build(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and (
                (out[-1][0] - out[-2][0]) * (p[1] - out[-2][1])
                - (out[-1][1] - out[-2][1]) * (p[0] - out[-2][0])
            ) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = build(pts)
    upper = build(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def _inside_hull(hull, pts, tol=1e-9):
    edge = np.roll(hull, -1, axis=0) - hull
    rel = pts[:, None, :] - hull[None, :, :]
    cross = edge[None, :, 0] * rel[:, :, 1] - edge[None, :, 1] * rel[:, :, 0]
    return np.all(cross >= -tol, axis=1)


def _tiny_image_set():
    rng = np.random.default_rng(0)
    images = tuple(
        ImageTensor(rng.random((4, 4, 1), dtype=np.float32)) for _ in range(8)
    )
    labels = np.array([1, 1, 2, 2, 3, 3, 4, 4])
    return LabeledImageSet(images, labels, class_count=4)


def test_pairing_cycles_all_label_pairs():
    data = _tiny_image_set()
    stream = pbcc_pairing(data, (0.0, 1.0), RngStream(3))
    # 4 choose 2 = 6 distinct pairs per cycle; all labels are K+1 = 5
    seen = [next(stream) for _ in range(6)]
    assert all(lab == 5 for _, lab in seen)


def test_pairing_lambda_one_emits_class_a_image():
    rng = np.random.default_rng(1)
    images = (
        ImageTensor(rng.random((4, 4, 1), dtype=np.float32)),
        ImageTensor(rng.random((4, 4, 1), dtype=np.float32)),
    )
    data = LabeledImageSet(images, np.array([1, 2]), class_count=2)
    img, lab = next(pbcc_pairing(data, (1.0, 1.0), RngStream(0)))
    assert lab == 3
    assert img == images[0]  # lambda = 1 -> empty box -> pure class-A image


def test_pairing_deterministic():
    data = _tiny_image_set()
    a = list(itertools.islice(pbcc_pairing(data, (0.0, 1.0), RngStream(12)), 10))
    b = list(itertools.islice(pbcc_pairing(data, (0.0, 1.0), RngStream(12)), 10))
    for (img_a, _), (img_b, _) in zip(a, b):
        assert img_a == img_b


def test_pairing_needs_two_classes():
    rng = np.random.default_rng(0)
    images = (ImageTensor(rng.random((2, 2, 1), dtype=np.float32)),)
    data = LabeledImageSet(images, np.array([1]), class_count=1)
    with pytest.raises(ValueError):
        next(pbcc_pairing(data, (0.0, 1.0), RngStream(0)))
