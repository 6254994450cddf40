import numpy as np
import pytest

from wmcap.cooc import build_cooc, tally
from wmcap.imaging import GrayImage, partition_pairs
from wmcap.oracle import (
    EmbeddingError,
    PayloadUnderrun,
    Watermark,
    collect_aux,
    embed_multi,
    embed_optimal,
    embed_pass,
    extract_and_restore,
    gen_watermark,
    variance_experiment,
    watermark_bits_needed,
)
from wmcap.schemes import get_scheme, pack


@pytest.fixture(scope="module")
def coltuc():
    return get_scheme("coltuc")


@pytest.fixture(scope="module")
def tian():
    return get_scheme("tian")


def img_from(rows):
    arr = np.asarray(rows, np.uint8)
    return GrayImage(arr.shape[1], arr.shape[0], arr)


def test_gen_watermark_degenerate():
    assert gen_watermark(8, 0.0, 3).bits.tolist() == [0] * 8
    assert gen_watermark(8, 1.0, 3).bits.tolist() == [1] * 8


def test_gen_watermark_deterministic():
    a = gen_watermark(1000, 0.37, 99)
    b = gen_watermark(1000, 0.37, 99)
    assert np.array_equal(a.bits, b.bits)


def test_gen_watermark_ones_fraction():
    wm = gen_watermark(10**6, 0.6, 42)
    assert abs(wm.ones_fraction - 0.6) < 0.002


def test_embed_pass_single_pair(coltuc):
    out, st, cur = embed_pass(coltuc, [pack(10, 12)], (np.array([1], np.uint8), 0))
    assert out == [pack(9, 15)]
    assert st.embedded_bits == 1 and st.watermark_bits == 1 and cur == 1


def test_embed_pass_flag_only_pair(coltuc):
    flat = [pack(5, 18)]
    out, st, cur = embed_pass(coltuc, flat, (np.zeros(0, np.uint8), 0))
    assert out == [pack(4, 18)]
    assert collect_aux(coltuc, flat) == ([1], [])
    assert st.flag_bits == 1 and not st.feasible and cur == 0


def test_embed_pass_tian_expandable(tian):
    out, st, _ = embed_pass(tian, [pack(206, 201)], (np.array([1], np.uint8), 0))
    # aux (compressed location map + flags) cannot fit in one pair: infeasible,
    # but the transform itself is still reported
    assert not st.feasible
    flags, locmap = collect_aux(tian, [pack(206, 201)])
    assert flags == [] and locmap == [1]


def test_embed_pass_underrun(coltuc):
    with pytest.raises(PayloadUnderrun):
        embed_pass(coltuc, [pack(10, 12)], (np.zeros(0, np.uint8), 0))


def test_embed_multi_two_passes(coltuc):
    img = img_from([[10, 12]])
    rec = embed_multi(coltuc, img, Watermark(np.array([1, 0], np.uint8), 0.5, 0), 2)
    assert rec.watermarked.data.tolist() == [[8, 14]]
    assert rec.achieved_capacity == 2
    rec2 = embed_multi(coltuc, img, Watermark(np.array([1, 1], np.uint8), 0.5, 0), 2)
    assert rec2.watermarked.data.tolist() == [[8, 15]]


def test_embed_multi_stops_when_infeasible(coltuc):
    img = img_from([[5, 18]])
    rec = embed_multi(coltuc, img, Watermark(np.zeros(4, np.uint8), 0.0, 0), 3)
    assert rec.passes_completed == 0
    assert rec.watermarked == img
    assert rec.achieved_capacity == 0


def test_tian_oracle_rejects_narrow_threshold():
    narrow = get_scheme("tian", theta_h=40)
    img = img_from([[10, 12, 14, 16]])
    with pytest.raises(EmbeddingError, match="theta_h"):
        embed_multi(narrow, img, Watermark(np.zeros(8, np.uint8), 0.0, 0), 1)


@pytest.mark.parametrize("name", ["coltuc", "tian"])
@pytest.mark.parametrize("passes", [1, 2, 3, 4])
def test_round_trip_camera_crop(camera, name, passes):
    sch = get_scheme(name)
    img = GrayImage(96, 96, camera.data[200:296, 200:296])
    wm = gen_watermark(watermark_bits_needed(img, passes), 0.5, 7)
    rec = embed_multi(sch, img, wm, passes)
    cover, bits = extract_and_restore(sch, rec.watermarked, rec.passes_completed)
    assert cover == img
    assert len(bits) == rec.achieved_capacity
    assert np.array_equal(bits, wm.bits[: len(bits)])


def test_round_trip_odd_dimensions(coltuc, camera):
    img = GrayImage(97, 95, camera.data[:95, :97])
    wm = gen_watermark(watermark_bits_needed(img, 2), 0.4, 1)
    rec = embed_multi(coltuc, img, wm, 2)
    cover, bits = extract_and_restore(coltuc, rec.watermarked, rec.passes_completed)
    assert cover == img
    assert np.array_equal(bits, wm.bits[: len(bits)])


def test_round_trip_vertical_pairing(tian, camera):
    img = GrayImage(64, 64, camera.data[300:364, 300:364])
    wm = gen_watermark(watermark_bits_needed(img, 2), 0.5, 2)
    rec = embed_multi(tian, img, wm, 2, pairing="vertical")
    cover, bits = extract_and_restore(tian, rec.watermarked, rec.passes_completed, pairing="vertical")
    assert cover == img
    assert np.array_equal(bits, wm.bits[: len(bits)])


def test_tampered_image_detected_or_mismatched(tian, camera):
    img = GrayImage(64, 64, camera.data[:64, :64])
    wm = gen_watermark(watermark_bits_needed(img, 2), 0.5, 3)
    rec = embed_multi(tian, img, wm, 2)
    tampered = rec.watermarked.data.copy()
    tampered[::3, ::3] ^= 0x55  # corrupt a spread of pixels
    try:
        cover, bits = extract_and_restore(tian, GrayImage(64, 64, tampered), rec.passes_completed)
    except (RuntimeError, ValueError):
        return  # decode error is an acceptable outcome
    assert cover != img or not np.array_equal(bits, wm.bits[: len(bits)])


def test_aux_accounting_matches_stage0_tallies(camera):
    # the oracle's emitted aux counts at stage 0 equal the exact region tallies
    img = GrayImage(128, 128, camera.data[:128, :128])
    seq = partition_pairs(img)
    cm = build_cooc(seq)
    for name in ("coltuc", "tian"):
        sch = get_scheme(name)
        t0 = tally(sch, cm)
        wm = gen_watermark(watermark_bits_needed(img, 1), 0.5, 4)
        rec = embed_multi(sch, img, wm, 1)
        assert rec.stats[0].flag_bits == t0.size_F
        assert rec.stats[0].embedded_bits == t0.size_I
        if sch.has_location_map:
            assert t0.size_L == seq.n_pairs


def test_capacity_accounting_identity(camera, coltuc):
    img = GrayImage(128, 128, camera.data[64:192, 64:192])
    wm = gen_watermark(watermark_bits_needed(img, 3), 0.5, 5)
    rec = embed_multi(coltuc, img, wm, 3)
    assert rec.achieved_capacity == sum(s.embedded_bits - s.aux_bits for s in rec.stats)


def test_embed_optimal_stops(camera, coltuc):
    img = GrayImage(96, 96, camera.data[100:196, 100:196])
    rec = embed_optimal(coltuc, img, 0.5, 0, max_passes=12)
    assert 1 <= rec.passes_completed <= 12
    assert all(s.watermark_bits > 0 for s in rec.stats)
    cover, bits = extract_and_restore(coltuc, rec.watermarked, rec.passes_completed)
    assert cover == img


def test_variance_experiment_zero_for_identical_seeds(coltuc, camera, monkeypatch):
    # identical seeds across trials must give identically zero deviation
    import wmcap.oracle as oracle_mod

    img = GrayImage(64, 64, camera.data[:64, :64])
    orig = oracle_mod.gen_watermark
    monkeypatch.setattr(oracle_mod, "gen_watermark", lambda n, p, seed: orig(n, p, 123))
    stds = oracle_mod.variance_experiment(coltuc, img, 0.6, 2, trials=3)
    assert stds == [0.0, 0.0]


def test_variance_experiment_small(coltuc, camera):
    img = GrayImage(128, 128, camera.data[128:256, 128:256])
    stds = variance_experiment(coltuc, img, 0.6, 2, trials=5)
    assert len(stds) == 2
    assert all(s >= 0.0 for s in stds)


def test_bit_file_round_trip(tmp_path):
    from wmcap.oracle import read_bits, write_bits

    bits = gen_watermark(1001, 0.3, 6).bits
    path = tmp_path / "wm.bits"
    write_bits(bits, path)
    assert np.array_equal(read_bits(path), bits)
    # truncated payload is detected
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(ValueError, match="truncated"):
        read_bits(path)


def test_psnr_values(camera):
    from wmcap.oracle import psnr

    assert psnr(camera, camera) == float("inf")
    noisy = camera.data.copy()
    noisy[0, 0] ^= 1
    assert psnr(camera, GrayImage(512, 512, noisy)) > 50.0
