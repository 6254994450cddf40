import numpy as np
import pytest

from helpers import brute_force_net_max, brute_force_pair
from wmcap.bounds import (
    bound_capacity,
    build_extremal_tables,
    max_capacity_search,
    max_net_payload_table,
)
from wmcap.capacity import estimate
from wmcap.cooc import CoocMatrix, build_cooc
from wmcap.imaging import GrayImage, partition_pairs
from wmcap.schemes import N_CELLS, get_scheme, pack


@pytest.fixture(scope="module")
def coltuc():
    return get_scheme("coltuc")


@pytest.fixture(scope="module")
def tian():
    return get_scheme("tian")


IDX = pack(10, 12)


def test_max_total_examples(coltuc):
    ext = build_extremal_tables(coltuc, "I", 4)
    assert ext.max_total_size[IDX] == 3.0       # the branch that never leaves the domain
    assert ext.max_total_size[pack(5, 18)] == 0.0  # the no-bit chain never embeds


def test_single_pass_is_indicator(coltuc):
    ext = build_extremal_tables(coltuc, "I", 1)
    assert np.array_equal(ext.max_total_size, coltuc.base_grid("I"))


def test_max_total_monotone_in_passes(coltuc, tian):
    for sch in (coltuc, tian):
        prev = build_extremal_tables(sch, "I", 1).max_total_size
        for P in (2, 3, 4):
            cur = build_extremal_tables(sch, "I", P).max_total_size
            assert (cur >= prev - 1e-12).all()
            prev = cur


def test_max_total_bounded_by_passes(coltuc, tian):
    for sch in (coltuc, tian):
        for P in (1, 3):
            ext = build_extremal_tables(sch, "I", P)
            assert ext.max_total_size.max() <= P


@pytest.mark.parametrize("name", ["coltuc", "tian"])
def test_extremal_tables_match_enumeration_sampled(name):
    sch = get_scheme(name)
    rng = np.random.default_rng(11)
    cells = rng.integers(0, N_CELLS, size=30)
    P = 4
    for kind in ("I", "F"):
        ext = build_extremal_tables(sch, kind, P)
        grid = sch.base_grid(kind)
        for i in cells:
            x, y = int(i) >> 8, int(i) & 255
            bf = brute_force_pair(sch, x, y, P, 0.5, grid)
            assert ext.max_total_size[i] == bf["total_max"]
            for k in range(P):
                assert ext.min_size_by_stage[k][i] == bf["stage_min"][k]
    # ones extremes for the flag stream
    ext = build_extremal_tables(sch, "F", P)
    ones = sch.ones_grid("F")
    for i in cells:
        x, y = int(i) >> 8, int(i) & 255
        bf = brute_force_pair(sch, x, y, P, 0.5, ones)
        for k in range(P):
            assert ext.max_ones_by_stage[k][i] == bf["stage_max"][k]
            assert ext.min_ones_by_stage[k][i] == bf["stage_min"][k]


def test_net_payload_matches_enumeration_sampled(coltuc):
    rng = np.random.default_rng(13)
    cells = rng.integers(0, N_CELLS, size=50)
    net = max_net_payload_table(coltuc, 4)
    payload = coltuc.size_grid("I")
    cost = coltuc.size_grid("F")
    for i in cells:
        x, y = int(i) >> 8, int(i) & 255
        assert net[i] == brute_force_net_max(coltuc, x, y, 4, payload, cost)
    assert net[IDX] == 2.0  # every depth-4 evolution of (10,12) collects one flag


def test_bound_single_pair_trajectory(coltuc):
    cm = CoocMatrix({IDX: 1.0})
    trace = [bound_capacity(coltuc, cm, P).bound_bits for P in (1, 2, 3, 4)]
    assert trace == [1.0, 2.0, 3.0, 2.0]


def test_bound_dominates_estimate_single_pair(coltuc):
    # sanity: at p=0.6 over 4 passes the estimate is 2.6 - 1.4 = 1.2
    cm = CoocMatrix({IDX: 1.0})
    est = estimate(coltuc, cm, 0.6, 4, "tree").total_capacity
    assert est == pytest.approx(1.2, abs=1e-9)
    assert bound_capacity(coltuc, cm, 4).bound_bits >= est


def test_search_single_pair(coltuc):
    rep = max_capacity_search(coltuc, CoocMatrix({IDX: 1.0}), 8)
    assert rep.eta_max == 3.0
    assert rep.eta_max_passes == 3
    assert not rep.cap_hit
    assert [e.bound_bits for e in rep.entries] == [1.0, 2.0, 3.0, 2.0]


def test_search_inert_image(coltuc):
    rep = max_capacity_search(coltuc, CoocMatrix({pack(0, 255): 5.0}), 4)
    assert rep.eta_max == 0.0
    assert rep.entries[0].passes == 1


def test_coltuc_bound_reduces_to_payload_term(coltuc):
    cm = CoocMatrix({IDX: 2.0, pack(40, 40): 1.0})
    e = bound_capacity(coltuc, cm, 3)
    assert e.locmap_term == 0.0
    assert e.flag_term == 0.0
    assert e.bound_bits == e.payload_term


def test_tian_all_ones_locmap_term_vanishes(tian):
    # mass that stays expandable for every evolution: the max- and min-ones
    # location fractions are both 1, so the entropy cost term is zero
    cm = CoocMatrix({pack(128, 128): 10.0})
    e = bound_capacity(tian, cm, 1)
    assert e.locmap_term == 0.0
    assert e.bound_bits == 10.0


def test_bound_dominance_on_image_grid(camera):
    crop = GrayImage(128, 128, camera.data[128:256, 128:256])
    cm = build_cooc(partition_pairs(crop))
    for name in ("coltuc", "tian"):
        sch = get_scheme(name)
        for P in (1, 2, 3, 4):
            bound = bound_capacity(sch, cm, P).bound_bits
            for p in np.arange(0.1, 0.95, 0.2):
                est = estimate(sch, cm, float(p), P, "tree").total_capacity
                assert bound >= est - 1e-9, (name, P, p)


def test_bound_report_serialization(coltuc):
    rep = max_capacity_search(coltuc, CoocMatrix({IDX: 1.0}), 4, n_pixels=4)
    d = rep.to_dict()
    assert d["eta_max_bits"] == 3.0
    assert d["eta_max_bpp"] == pytest.approx(0.75)
    assert len(d["entries"]) == len(rep.entries)


def test_rejects_bad_passes(coltuc):
    with pytest.raises(ValueError):
        bound_capacity(coltuc, CoocMatrix({IDX: 1.0}), 0)
    with pytest.raises(ValueError):
        max_capacity_search(coltuc, CoocMatrix({IDX: 1.0}), 0)
