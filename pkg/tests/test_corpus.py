from __future__ import annotations

import json
import math
from collections import Counter

import pytest

from roomforge.corpus import (
    CorpusError,
    TrainingCorpus,
    corpus_from_doc,
    corpus_to_doc,
    load_corpus,
    save_corpus,
)
from roomforge.rng import Rng, stable_seed
from roomforge.scene import Category, ModelCatalog, ModelRecord, PlacedInstance, normalize_yaw
from roomforge.synth import (
    ItemRecipe,
    RoomRecipe,
    SyntheticCorpusSpec,
    default_catalog,
    default_synthetic_spec,
    generate_synthetic_corpus,
    generate_with_log,
    spec_from_doc,
    spec_to_doc,
)

CATALOG_DOC = {
    "models": [
        {"model_id": "bed_a", "class": "bed", "category": "furniture", "depth_m": 2.0, "width_m": 1.6, "height_m": 0.5},
        {"model_id": "lamp", "class": "lamp", "category": "ceiling-object", "depth_m": 0.3, "width_m": 0.3, "height_m": 0.2},
    ]
}


def _doc(rooms):
    return {"format": "roomforge-corpus", "version": 1, "catalog": CATALOG_DOC, "rooms": rooms}


BEDROOM = {
    "type": "bedroom",
    "polygon": [[0, 0], [4, 0], [4, 3], [0, 3]],
    "openings": [{"kind": "door", "wall": 2, "offset": 1.0, "width": 0.9}],
    "objects": [
        {"model": "bed_a", "pos": [2.0, 0.0, 1.0], "yaw": math.pi / 2},
        {"model": "lamp", "pos": [2.0, 2.6, 1.5], "yaw": 0.0},
    ],
}


def test_empty_room_list_gives_empty_corpus():
    assert len(corpus_from_doc(_doc([]))) == 0


def test_hand_fixture_counts():
    c = corpus_from_doc(_doc([BEDROOM]))
    assert len(c) == 1
    room = c.rooms[0]
    assert room.room_type.value == "bedroom"
    assert [i.model_id for i in room.instances] == ["bed_a", "lamp"]
    assert room.openings[0].wall == 2


def test_unknown_model_error_names_id():
    bad = json.loads(json.dumps(BEDROOM))
    bad["objects"][0]["model"] = "ghost_chair"
    with pytest.raises(CorpusError, match="ghost_chair"):
        corpus_from_doc(_doc([bad]))


def test_unlabeled_rooms_are_dropped_and_counted():
    c = corpus_from_doc(_doc([BEDROOM, {**BEDROOM, "type": None}]))
    assert len(c) == 1 and c.dropped_unlabeled == 1


@pytest.mark.parametrize(
    "mutate, needle",
    [
        (lambda r: r.update(type="garage"), "room type"),
        (lambda r: r.update(polygon=[[0, 0], [4, 1], [0, 3]]), "axis-aligned"),
        (lambda r: r["openings"][0].update(wall=9), "out of range"),
        (lambda r: r["objects"][0].update(pos=[1.0, "x"]), "malformed"),
        (lambda r: r["objects"][0].update(pos=[1.0, 0.0, float("nan")]), "finite"),
    ],
)
def test_malformed_rooms_rejected(mutate, needle):
    room = json.loads(json.dumps(BEDROOM))
    mutate(room)
    with pytest.raises(CorpusError, match=needle):
        corpus_from_doc(_doc([room]))


def test_parse_error_reports_position(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{"rooms": [\n  oops]')
    with pytest.raises(CorpusError, match="line 2"):
        load_corpus(p)


def test_house_grouping_is_flattened():
    c = corpus_from_doc({"catalog": CATALOG_DOC, "houses": [{"rooms": [BEDROOM]}, {"rooms": [BEDROOM, BEDROOM]}]})
    assert len(c) == 3


def test_external_catalog_path(tmp_path):
    (tmp_path / "cat.json").write_text(json.dumps(CATALOG_DOC))
    (tmp_path / "c.json").write_text(json.dumps({"catalog_path": "cat.json", "rooms": [BEDROOM]}))
    c = load_corpus(tmp_path / "c.json")
    assert c.catalog_ref == "cat.json" and "bed_a" in c.catalog


@pytest.mark.parametrize("rooms", [[], [BEDROOM], [BEDROOM, {**BEDROOM, "type": "office"}]])
def test_fixture_round_trip(tmp_path, rooms):
    c = corpus_from_doc(_doc(rooms))
    save_corpus(c, tmp_path / "c.json")
    assert load_corpus(tmp_path / "c.json") == c


def test_synthetic_round_trip_structural(tmp_path):
    c = generate_synthetic_corpus(default_synthetic_spec(500), 5)
    save_corpus(c, tmp_path / "c.json")
    back = load_corpus(tmp_path / "c.json")
    assert back.catalog == c.catalog
    assert len(back) == 500
    for a, b in zip(c.rooms, back.rooms):
        assert a.room_type == b.room_type and a.boundary == b.boundary and a.openings == b.openings
        assert [(i.model_id, i.position, i.yaw) for i in a.instances] == [(i.model_id, i.position, i.yaw) for i in b.instances]


def test_save_to_unwritable_path_fails(tmp_path):
    c = corpus_from_doc(_doc([BEDROOM]))
    with pytest.raises(CorpusError, match="cannot write"):
        save_corpus(c, tmp_path / "missing_dir" / "c.json")


def test_catalog_rejects_bad_records():
    with pytest.raises(ValueError):
        ModelRecord("x", "x", Category.FURNITURE, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="duplicate"):
        ModelCatalog.from_records([ModelRecord("x", "x", Category.FURNITURE, 1, 1, 1)] * 2)


def test_yaw_normalized_into_range():
    assert PlacedInstance("bed_a", (0, 0, 0), -math.pi / 2).yaw == pytest.approx(3 * math.pi / 2)
    assert normalize_yaw(2 * math.pi) == 0.0
    assert 0.0 <= normalize_yaw(-1e-18) < 2 * math.pi


def _single_item_spec(n_rooms, count):
    rec = RoomRecipe(items=(ItemRecipe("wardrobe", count, {"N": 1.0}),), doors=0)
    return SyntheticCorpusSpec(n_rooms, {"bedroom": 1.0}, default_catalog(), {"bedroom": rec})


def test_degenerate_count_gives_exactly_one_each_room():
    c = generate_synthetic_corpus(_single_item_spec(200, {"1": 1.0}), 1)
    assert all(sum(i.model_id == "wardrobe" for i in r.instances) == 1 for r in c.rooms)


def test_planted_count_frequency_within_binomial_bound():
    c = generate_synthetic_corpus(_single_item_spec(10_000, {"1": 0.3, "2": 0.7}), 2)
    freq = Counter(sum(i.model_id == "wardrobe" for i in r.instances) for r in c.rooms)
    # 3.5 binomial standard errors at n = 10k is about 0.016
    assert abs(freq[2] / 10_000 - 0.7) <= 0.02


def test_same_seed_same_bytes(tmp_path):
    spec = default_synthetic_spec(300)
    for name in ("a.json", "b.json"):
        save_corpus(generate_synthetic_corpus(spec, 9), tmp_path / name)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_log_matches_corpus():
    c, log = generate_with_log(default_synthetic_spec(200), 4)
    assert len(log.rooms) == len(c.rooms)
    for room, rl in zip(c.rooms, log.rooms):
        assert all(0 <= i < len(room.instances) for i in rl.cells)


def test_spec_document_round_trip():
    spec = default_synthetic_spec(50)
    assert spec_from_doc(json.loads(json.dumps(spec_to_doc(spec)))) == spec


def test_invalid_spec_rejected():
    with pytest.raises(ValueError):
        _single_item_spec(10, {"1": 0.5})


def test_rng_streams_are_reproducible_and_independent():
    a = [Rng(7, 1).random() for _ in range(3)]
    assert a == [Rng(7, 1).random() for _ in range(3)]
    assert Rng(7, 1).random() != Rng(7, 2).random()
    assert stable_seed("a", 1) == stable_seed("a", 1) != stable_seed("a", 2)


def test_training_corpus_len():
    assert len(TrainingCorpus((), default_catalog())) == 0


def test_corpus_to_doc_embeds_catalog():
    doc = corpus_to_doc(corpus_from_doc(_doc([BEDROOM])))
    assert doc["catalog"]["models"][0]["model_id"] == "bed_a"
