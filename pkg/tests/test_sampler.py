from __future__ import annotations

import math
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roomforge.corpus import room_to_doc
from roomforge.geometry import footprint, padded_footprint, rect_inside_polygon, rects_intersect
from roomforge.params import AbutmentPattern, CellPmf, CountModel, EmbellishmentModels, SmallPlacement
from roomforge.rng import Rng, tv_distance
from roomforge.sampler import (
    ceiling_grid,
    embellish_ceiling,
    embellish_small,
    embellish_walls,
    sample_furniture,
    sample_furniture_with_counts,
    sample_layout,
    sample_num_instances,
    walk_abutment,
)
from roomforge.scene import Category, Layout, Opening, PlacedInstance, rect_boundary
from roomforge.synth import CABINET_CHAIN

from helpers import chain_paths


def _pmf(**bins):
    p = [0.0] * 6
    for k, v in bins.items():
        p[int(k[1:])] = v
    return tuple(p)


def test_degenerate_count_pmfs():
    zero = CountModel(_pmf(b0=1.0))
    two = CountModel(_pmf(b2=1.0))
    assert {sample_num_instances(zero, 0, Rng(1, i)) for i in range(200)} == {0}
    assert {sample_num_instances(two, 0, Rng(1, i)) for i in range(200)} == {2}


def test_tail_mean_matches_series():
    lam = 7.0
    ks = np.arange(5, 200)
    logp = ks * math.log(lam) - lam - np.array([math.lgamma(k + 1) for k in ks])
    p = np.exp(logp)
    oracle = float((ks * p).sum() / p.sum())
    cm = CountModel(_pmf(b5=1.0), rate=lam)
    rng = Rng(4)
    draws = [sample_num_instances(cm, 0, rng) for _ in range(10_000)]
    assert min(draws) > 4
    assert np.mean(draws) == pytest.approx(oracle, rel=0.02)


def test_bucket_conditioning_used():
    cm = CountModel(_pmf(b1=1.0), by_bucket=(None, _pmf(b3=1.0), None))
    assert sample_num_instances(cm, 0, Rng(0)) == 1
    assert sample_num_instances(cm, 1, Rng(0)) == 3


def test_abutment_walk_matches_path_enumeration():
    pat = AbutmentPattern("abut:cabinet+fridge", ("cabinet", "fridge"), CABINET_CHAIN)
    exact = chain_paths(CABINET_CHAIN, pat.states, 4)
    exact["longer"] = 1.0 - sum(exact.values())
    rng = Rng(12)
    counts = Counter()
    for _ in range(20_000):
        seq = walk_abutment(pat, rng)
        counts[seq if len(seq) <= 4 else "longer"] += 1
    emp = {k: v / 20_000 for k, v in counts.items()}
    assert tv_distance(emp, exact) <= 0.03


def test_abutment_walk_respects_max_length():
    loop = ((0, 1, 0), (0, 1, 0), (0, 0, 1))
    pat = AbutmentPattern("abut:cabinet", ("cabinet",), loop)
    assert len(walk_abutment(pat, Rng(0), max_len=5)) == 5


@pytest.mark.parametrize("n, w, d, grid", [(1, 4, 4, (1, 1)), (5, 6, 3, (3, 2)), (0, 4, 4, (0, 0)), (4, 4, 4, (2, 2))])
def test_ceiling_grid(n, w, d, grid):
    assert ceiling_grid(n, w, d) == grid


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.floats(1.0, 12.0), st.floats(1.0, 12.0))
def test_ceiling_grid_holds_count(n, w, d):
    cols, rows = ceiling_grid(n, w, d)
    assert cols * rows >= n
    assert cols * (rows - 1) < n


def _zero_counts(params):
    return {k: CountModel.point(0) for k in params.counts}


def test_all_zero_counts_give_no_furniture(params):
    p = replace(params, counts=_zero_counts(params))
    assert sample_furniture(p, "bedroom", Rng(1)) == []


def test_single_model_single_cell(params):
    counts = _zero_counts(params)
    counts[("wardrobe", "bedroom")] = CountModel(_pmf(b1=1.0))
    cells = dict(params.cells, wardrobe=CellPmf.point("N"))
    p = replace(params, counts=counts, cells=cells)
    out = sample_furniture(p, "bedroom", Rng(2))
    assert len(out) == 1 and out[0].cell == "N" and out[0].unit == "wardrobe"


def test_ceiling_lights_center_single(params):
    counts = dict(params.counts)
    counts[("ceiling_lamp", "bathroom")] = CountModel(_pmf(b1=1.0))
    p = replace(params, counts=counts)
    lay = Layout("bathroom", rect_boundary(4, 2))
    (lamp,) = embellish_ceiling(p, "bathroom", lay, Rng(0))
    assert (lamp.x, lamp.z) == (2.0, 1.0)


def test_ceiling_five_in_two_to_one_room(params):
    counts = dict(params.counts)
    counts[("ceiling_lamp", "bathroom")] = CountModel(_pmf(b5=1.0), rate=5.0001)
    p = replace(params, counts=counts)
    lay = Layout("bathroom", rect_boundary(6, 3))
    lights = embellish_ceiling(p, "bathroom", lay, Rng(0))
    assert len(lights) >= 6
    xs = sorted({round(i.x, 6) for i in lights})
    zs = sorted({round(i.z, 6) for i in lights})
    assert len(xs) * len(zs) == len(lights)
    assert len(xs) >= len(zs)


def test_no_ceiling_mass_no_lights(params):
    p = replace(params, embellishments=replace(params.embellishments, ceiling_pmf={}))
    assert embellish_ceiling(p, "bedroom", Layout("bedroom", rect_boundary(4, 4)), Rng(0)) == []


def test_blocked_walls_drop_pictures(params):
    counts = dict(params.counts)
    counts[("picture", "bedroom")] = CountModel(_pmf(b1=1.0))
    p = replace(params, counts=counts)
    doors = tuple(Opening("door", w, 2.0, 4.0) for w in range(4))
    lay = Layout("bedroom", rect_boundary(4, 4), (), doors)
    assert embellish_walls(p, lay, Rng(0)) == []


def test_no_wall_mass_no_wall_objects(params):
    p = replace(params, counts=_zero_counts(params))
    assert embellish_walls(p, Layout("bedroom", rect_boundary(4, 4)), Rng(0)) == []


def test_wall_heights_follow_learned_normal(params):
    rng = Rng(5)
    lay = Layout("living_room", rect_boundary(8, 8))
    heights = []
    while len(heights) < 5_000:
        heights += [i.position[1] for i in embellish_walls(params, lay, rng) if i.model_id == "picture"]
    assert np.mean(heights[:5_000]) == pytest.approx(1.5, abs=0.02)


def _with_store(params, configs):
    store = {("desk", "office"): tuple(configs)}
    return replace(params, embellishments=replace(params.embellishments, small_configs=store))


def test_empty_store_no_small_objects(params):
    p = replace(params, embellishments=EmbellishmentModels())
    lay = Layout("office", rect_boundary(4, 4), (PlacedInstance("desk", (2, 0, 2), 0.0),))
    assert embellish_small(p, "office", lay, Rng(0)) == []


def test_single_config_replicated(params):
    books = (SmallPlacement("book", (0.1, 0.2), 0.0, 0.0), SmallPlacement("book", (-0.1, -0.2), 0.0, 0.0))
    p = _with_store(params, [books])
    lay = Layout("office", rect_boundary(6, 6),
                 (PlacedInstance("desk", (2, 0, 2), 0.0), PlacedInstance("desk", (4, 0, 4), math.pi / 2)))
    out = embellish_small(p, "office", lay, Rng(0))
    assert len(out) == 4
    got = sorted((round(i.x, 6), round(i.z, 6)) for i in out)
    # second desk is turned a quarter: (u, v) -> (-v, u)
    want = sorted([(2.1, 2.2), (1.9, 1.8), (3.8, 4.1), (4.2, 3.9)])
    assert got == pytest.approx(want)
    assert all(i.position[1] == pytest.approx(0.75) for i in out)


def test_config_choice_uniform(params):
    configs = [(SmallPlacement("book", (0.05 * k, 0.0), 0.0, 0.0),) for k in range(3)]
    p = _with_store(params, configs)
    lay = Layout("office", rect_boundary(4, 4), (PlacedInstance("desk", (2, 0, 2), 0.0),))
    rng = Rng(3)
    picks = Counter(round((embellish_small(p, "office", lay, rng)[0].x - 2.0) / 0.05) for _ in range(10_000))
    for k in range(3):
        assert abs(picks[k] / 10_000 - 1 / 3) <= 0.03


def test_seed_determinism(params):
    a = sample_layout(params, Rng(42))
    b = sample_layout(params, Rng(42))
    assert room_to_doc(a) == room_to_doc(b)


def test_bedroom_only_params(params):
    p = replace(params, room_type_pmf={"bedroom": 1.0})
    assert {sample_layout(p, Rng(9, i)).room_type.value for i in range(30)} == {"bedroom"}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["bedroom", "living_room", "kitchen", "dining_room", "office", "bathroom", "storage"]))
def test_class_counts_match_pending(params, seed, rt):
    draw = sample_furniture_with_counts(params, rt, Rng(seed))
    cat = params.catalog
    seen = Counter(cat.class_of(m.model_id) for p in draw.pending for m in p.members)
    assert seen == Counter({k: v for k, v in draw.class_counts.items() if v})


def test_given_unit_replaces_one_draw(params):
    pinned = sample_furniture(params, "bedroom", Rng(0))
    beds = [p for p in pinned if p.unit == "bed_double"]
    draw = sample_furniture_with_counts(params, "bedroom", Rng(0), given=beds[:1])
    assert not any(p.unit == "bed_double" for p in draw.pending)
    assert draw.class_counts["bed"] == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32))
def test_sampled_layouts_sound(params, seed):
    lay = sample_layout(params, Rng(seed))
    cat = params.catalog
    furn = [i for i in lay.instances if cat.category_of(i.model_id) == Category.FURNITURE]
    rects = [padded_footprint(i, cat) for i in furn]
    for r in rects:
        assert rect_inside_polygon(r, lay.boundary, tol=1e-6)
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            assert not rects_intersect(rects[i], rects[j])
    # small objects rest on some furniture top
    for s in lay.instances:
        if cat.category_of(s.model_id) == Category.SMALL_OBJECT:
            assert any(footprint(f, cat).contains_point(s.x, s.z, 1e-6) for f in furn)
