import hashlib
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import ASSET_SPECS, asset_path
from wmcap.imaging import (
    GrayImage,
    PgmError,
    load_pgm,
    partition_pairs,
    reconstruct_image,
    save_pgm,
)


def write_pgm_bytes(tmp_path, raw: bytes):
    path = tmp_path / "img.pgm"
    path.write_bytes(raw)
    return path


def test_load_minimal_pgm(tmp_path):
    path = write_pgm_bytes(tmp_path, b"P5\n2 1\n255\n" + bytes([10, 12]))
    img = load_pgm(path)
    assert (img.width, img.height) == (2, 1)
    assert img.data.tolist() == [[10, 12]]


def test_load_pgm_with_comments(tmp_path):
    raw = b"P5\n# a comment\n2 # trailing\n2\n# another\n255\n" + bytes([1, 2, 3, 4])
    img = load_pgm(write_pgm_bytes(tmp_path, raw))
    assert img.data.tolist() == [[1, 2], [3, 4]]


def test_load_pgm_rejects_16bit(tmp_path):
    path = write_pgm_bytes(tmp_path, b"P5\n2 1\n65535\n" + bytes(4))
    with pytest.raises(PgmError, match="maxval"):
        load_pgm(path)


def test_load_pgm_rejects_p6(tmp_path):
    with pytest.raises(PgmError, match="P5"):
        load_pgm(write_pgm_bytes(tmp_path, b"P6\n1 1\n255\n" + bytes(3)))


def test_load_pgm_truncated_raster_reports_offset(tmp_path):
    with pytest.raises(PgmError, match="byte"):
        load_pgm(write_pgm_bytes(tmp_path, b"P5\n4 4\n255\n" + bytes(7)))


def test_load_pgm_bad_header_token(tmp_path):
    with pytest.raises(PgmError):
        load_pgm(write_pgm_bytes(tmp_path, b"P5\nwide 1\n255\n" + bytes(2)))


def test_save_load_round_trip(tmp_path):
    img = GrayImage(3, 2, np.arange(6, dtype=np.uint8).reshape(2, 3))
    path = tmp_path / "out.pgm"
    save_pgm(img, path)
    assert load_pgm(path) == img


@pytest.mark.parametrize("name", sorted(ASSET_SPECS))
def test_asset_images_pinned(name):
    img = load_pgm(asset_path(name))
    assert (img.width, img.height) == (512, 512)
    assert img.n_pixels == 262144
    assert hashlib.sha256(img.data.tobytes()).hexdigest() == ASSET_SPECS[name]


def test_partition_horizontal_even():
    img = GrayImage(2, 1, np.array([[10, 12]], np.uint8))
    seq = partition_pairs(img, "horizontal")
    assert seq.pairs.tolist() == [[10, 12]]
    assert seq.n_residual == 0


def test_partition_horizontal_odd_width():
    img = GrayImage(3, 1, np.array([[10, 12, 99]], np.uint8))
    seq = partition_pairs(img, "horizontal")
    assert seq.pairs.tolist() == [[10, 12]]
    assert seq.residuals.tolist() == [99]
    assert seq.origin == (3, 1, 1)


def test_partition_order_is_row_major():
    img = GrayImage(4, 2, np.arange(8, dtype=np.uint8).reshape(2, 4))
    seq = partition_pairs(img, "horizontal")
    assert seq.pairs.tolist() == [[0, 1], [2, 3], [4, 5], [6, 7]]


def test_partition_vertical():
    img = GrayImage(2, 3, np.arange(6, dtype=np.uint8).reshape(3, 2))
    seq = partition_pairs(img, "vertical")
    assert seq.pairs.tolist() == [[0, 2], [1, 3]]
    assert seq.residuals.tolist() == [4, 5]


def test_partition_pair_count(camera):
    seq = partition_pairs(camera, "horizontal")
    assert seq.n_pairs == (512 // 2) * 512 == 131072


def test_reconstruct_inverse_trivial():
    img = GrayImage(3, 1, np.array([[10, 12, 99]], np.uint8))
    seq = partition_pairs(img)
    assert reconstruct_image(seq, [99]) == img


def test_reconstruct_rejects_bad_residuals():
    img = GrayImage(3, 1, np.array([[10, 12, 99]], np.uint8))
    seq = partition_pairs(img)
    with pytest.raises(ValueError, match="residual"):
        reconstruct_image(seq, [])


def test_round_trip_on_assets(asset_images):
    for img in asset_images.values():
        for policy in ("horizontal", "vertical"):
            assert reconstruct_image(partition_pairs(img, policy)) == img


@settings(max_examples=60, deadline=None)
@given(
    data=arrays(np.uint8, st.tuples(st.integers(1, 17), st.integers(1, 17))),
    policy=st.sampled_from(["horizontal", "vertical"]),
)
def test_round_trip_property(data, policy):
    img = GrayImage(data.shape[1], data.shape[0], data)
    seq = partition_pairs(img, policy)
    assert reconstruct_image(seq) == img


def test_partition_deterministic(camera):
    a = partition_pairs(camera)
    b = partition_pairs(camera)
    assert np.array_equal(a.pairs, b.pairs)


def test_gray_image_rejects_bad_dims():
    with pytest.raises(ValueError):
        GrayImage(0, 1, np.zeros((1, 0), np.uint8))
