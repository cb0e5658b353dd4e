"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that the terminal summary prints,
then asserts it, so a failure shows both in the summary and in pytest's
own report.
"""

from __future__ import annotations

import math
import statistics
import time
from collections import Counter

import numpy as np
import pytest
from shapely.geometry import Polygon

from roomforge import bench
from roomforge.constraints import ClearanceOverride, ConstraintSpec, Exhausted, sample_constrained
from roomforge.export import export_scene, generate
from roomforge.params import COUNT_BINS
from roomforge.patterns import mine_abutments, mine_motifs
from roomforge.raster import check_traversability
from roomforge.rng import Rng, tv_distance
from roomforge.sampler import sample_layout, walk_abutment
from roomforge.scene import CELLS, Category
from roomforge.synth import abutment_spec, generate_synthetic_corpus, generate_with_log, motif_spec
from roomforge.validate import flood_fill_traversable, instance_polygon, side_strip, validate_layout

from helpers import BLOCKS, chain_paths, corridor_layout, random_spec, random_traversal_fixture, record

TV_MAX = 0.05
PAD_TOL = 0.02
RATE_REL = 0.05
CHAIN_TOL = 0.02
WALK_TV_MAX = 0.03
MOTIF_RECALL = 0.95
CLEARANCE_RATE = 0.99


def _tail_mean(lam: float, kmax: int = 200) -> float:
    # E[X | X > 4] for X ~ Poisson(lam), summed in log space
    logp = [k * math.log(lam) - lam - math.lgamma(k + 1) for k in range(kmax)]
    w = [math.exp(v) for v in logp[5:]]
    return sum(k * p for k, p in zip(range(5, kmax), w)) / sum(w)


def _expected_count(pmf: dict[str, float], tail_rate: float) -> float:
    total = sum(int(b) * pmf.get(b, 0.0) for b in COUNT_BINS if b != ">4")
    if pmf.get(">4", 0.0):
        total += pmf[">4"] * _tail_mean(tail_rate)
    return total


def _planted(pmf: dict[str, float]) -> dict[str, float]:
    return {b: pmf.get(b, 0.0) for b in COUNT_BINS}


# --- 1: soundness of unconstrained samples ------------------------------------------------------


def test_criterion_1_unconstrained_samples_are_sound(params):
    cat = params.catalog
    t0 = time.perf_counter()
    bad = []
    for seed in range(1_000):
        rep = validate_layout(sample_layout(params, Rng(seed)), cat)
        if not rep.ok:
            bad.append((seed, rep.violations[:2]))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed <= 300.0
    record(1, ok, f"1000 samples, {len(bad)} with overlap or out-of-bounds, {elapsed:.1f} s total (limit 300 s)")
    assert ok, bad[:5]


# --- 2 and 10: timing table ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def bench_rows(params):
    return {r.name: r for r in bench.run_bench(params, runs=40, repeats=3)}


def _interleaved_medians(params, specs: dict[str, ConstraintSpec], seeds: int = 100, repeats: int = 5) -> dict[str, float]:
    # sub-millisecond timings drift with machine load, so every spec is
    # timed on the same seed back to back and the fastest repeat kept
    times: dict[str, list[float]] = {n: [] for n in specs}
    for seed in range(seeds):
        for name, spec in specs.items():
            best = math.inf
            for _ in range(repeats):
                t0 = time.perf_counter()
                sample_constrained(params, spec, seed)
                best = min(best, time.perf_counter() - t0)
            times[name].append(best)
    return {n: statistics.median(v) for n, v in times.items()}


def test_criterion_2_sampling_speed(params):
    specs = bench.bench_specs(params)
    medians = _interleaved_medians(params, {n: specs[n] for n in ("unconstrained", "room type", "class exclusion")})
    base = medians.pop("unconstrained")
    ratios = {n: m / base for n, m in medians.items()}
    ok = base <= 0.1 and all(r <= 1.5 for r in ratios.values())
    detail = ", ".join(f"{n} {r:.2f}x" for n, r in ratios.items())
    record(2, ok, f"unconstrained median {base * 1000:.2f} ms (limit 100 ms); {detail} (limit 1.5x)")
    assert ok


def test_criterion_10_bench_table(bench_rows):
    rows = [bench_rows[n] for n in bench.ROWS]
    ok = len(rows) == 9 and bench.ordering_holds(rows)
    by = bench_rows
    record(10, ok, f"9 rows; size+doors+windows {by['size+doors+windows'].mean_s * 1000:.1f} ms >= "
                   f"room size {by['room size'].mean_s * 1000:.1f} ms >= unconstrained {by['unconstrained'].mean_s * 1000:.1f} ms")
    print(bench.format_table(rows))
    assert ok


# --- 3: planted distributions recovered ---------------------------------------------------------


def test_criterion_3_planted_distributions_recovered(default_spec, params):
    worst: dict[str, tuple[float, str]] = {}

    def note(kind, tv, what):
        if tv > worst.get(kind, (-1.0, ""))[0]:
            worst[kind] = (tv, what)

    note("room type", tv_distance(params.room_type_pmf, default_spec.room_type_pmf), "")

    owners: dict[str, list] = {}
    for rt, rec in default_spec.recipes.items():
        for it in rec.items:
            note("counts", tv_distance(params.counts[(it.model, rt)].as_dict(), _planted(it.count)), f"{it.model}/{rt}")
            owners.setdefault(it.model, []).append((rt, it))
        for w in rec.wall:
            note("counts", tv_distance(params.counts[(w.model, rt)].as_dict(), _planted(w.count)), f"{w.model}/{rt}")
        if rec.ceiling is not None:
            note("ceiling models", tv_distance(params.embellishments.ceiling_pmf[rt], rec.ceiling.models), rt)
            for model in rec.ceiling.models:
                note("counts", tv_distance(params.counts[(model, rt)].as_dict(), _planted(rec.ceiling.count)),
                     f"{model}/{rt}")
        for ab in rec.abutments:
            unit = next(p.unit for p in params.abutments.values() if set(ab.models) <= set(p.models))
            note("counts", tv_distance(params.counts[(unit, rt)].as_dict(), _planted(ab.count)), f"{unit}/{rt}")
        for mo in rec.motifs:
            unit = next(m.unit for m in params.motifs.values() if len(m.classes) == len(mo.models))
            note("counts", tv_distance(params.counts[(unit, rt)].as_dict(), _planted(mo.count)), f"{unit}/{rt}")

    for model, items in owners.items():
        # a model shared by room types is pooled, weighted by expected instances
        mix = dict.fromkeys(CELLS, 0.0)
        total = 0.0
        for rt, it in items:
            w = default_spec.room_type_pmf[rt] * _expected_count(it.count, it.tail_rate)
            total += w
            for c, p in it.cells.items():
                mix[c] += w * p
        note("cells", tv_distance(params.cells[model].as_dict(), {c: p / total for c, p in mix.items()}), model)

        it = items[0][1]
        if len(items) == 1 and it.cells.get("interior", 0.0) > 0:
            om = params.orientations[model]
            learned = {**{i: om.p_aligned * a for i, a in enumerate(om.aligned_pmf)}, "free": 1.0 - om.p_aligned}
            planted = {**{i: it.p_aligned * a for i, a in enumerate(it.aligned)}, "free": 1.0 - it.p_aligned}
            note("orientation", tv_distance(learned, planted), model)

    pad_err = max(
        max(abs(a - b) for a, b in zip(params.paddings[pr.model].mean, pr.mean))
        for rec in default_spec.recipes.values() for pr in rec.probes
    )
    kitchen = next(it for it in default_spec.recipes["kitchen"].items if it.tail_rate)
    rate = params.counts[(kitchen.model, "kitchen")].rate
    oracle = _tail_mean(kitchen.tail_rate)
    rate_err = abs(rate - oracle) / oracle

    ok = all(tv <= TV_MAX for tv, _ in worst.values()) and pad_err <= PAD_TOL and rate_err <= RATE_REL
    parts = [f"{k} TV {tv:.3f}{' (' + w + ')' if w else ''}" for k, (tv, w) in worst.items()]
    record(3, ok, "; ".join(parts) + f" (limit {TV_MAX}); padding err {pad_err:.3f} (limit {PAD_TOL}); "
                  f"tail rate {rate:.2f} vs {oracle:.2f} ({rate_err:.1%}, limit 5%)")
    assert ok


# --- 4: motif mining -----------------------------------------------------------------------------


def test_criterion_4_motif_recovery():
    corpus, log = generate_with_log(motif_spec(200), 21)
    lib = mine_motifs(corpus)
    planted = {(r, frozenset(idxs)) for r, rl in enumerate(log.rooms) for _, idxs in rl.motifs}
    recall = 0.0
    if len(lib.motifs) == 1:
        (mid,) = lib.motifs
        claimed = {(r, frozenset(idxs)) for r, idxs in lib.claims[mid]}
        recall = len(planted & claimed) / len(planted)
    scatter = mine_motifs(generate_synthetic_corpus(motif_spec(200, scatter=True), 22))
    ok = len(lib.motifs) == 1 and recall >= MOTIF_RECALL and not scatter.motifs
    record(4, ok, f"planted: {len(lib.motifs)} motif, {recall:.1%} of 200 occurrences (limit 95%); "
                  f"scattered: {len(scatter.motifs)} motifs")
    assert ok


# --- 5: abutment chains ----------------------------------------------------------------------------


def test_criterion_5_abutment_chain():
    spec = abutment_spec(2_500)
    corpus, log = generate_with_log(spec, 31)
    n_rows = sum(len(rl.rows) for rl in log.rooms)
    lib = mine_abutments(corpus)
    (pat,) = lib.patterns.values()
    planted = np.array(spec.recipes["kitchen"].abutments[0].matrix)
    err = float(np.abs(np.array(pat.matrix) - planted).max())

    max_len = 4
    exact = chain_paths(pat.matrix, pat.states, max_len)
    exact["longer"] = 1.0 - sum(exact.values())
    rng = Rng(55)
    draws = Counter()
    for _ in range(20_000):
        seq = walk_abutment(pat, rng)
        draws[seq if len(seq) <= max_len else "longer"] += 1
    tv = tv_distance({k: v / 20_000 for k, v in draws.items()}, exact)

    ok = n_rows == 5_000 and err <= CHAIN_TOL and tv <= WALK_TV_MAX
    record(5, ok, f"{n_rows} rows, max matrix error {err:.4f} (limit {CHAIN_TOL}); "
                  f"20000 walks TV {tv:.4f} vs enumeration (limit {WALK_TV_MAX})")
    assert ok


# --- 6: constrained samples satisfy their specs -------------------------------------------------------


def test_criterion_6_random_specs_validated(params):
    cat = params.catalog
    failures, exhausted, accepted = [], [], 0
    for k in range(200):
        spec = random_spec(params, k)
        try:
            res = sample_constrained(params, spec, k, max_attempts=500)
        except Exhausted as exc:
            exhausted.append((k, exc.tallies))
            continue
        accepted += 1
        rep = validate_layout(res.layout, cat, spec)
        if not rep.ok:
            failures.append((k, rep.violations))
    ok = not failures and accepted > 0
    record(6, ok, f"{accepted} accepted, {len(failures)} validator failures; "
                  f"{len(exhausted)} exhausted (reported separately)")
    assert ok, failures[:3]


# --- 7: traversability matches a flood-fill oracle ------------------------------------------------


def test_criterion_7_traversability_agrees():
    disagree = []
    for k in range(200):
        lay = random_traversal_fixture(k)
        if check_traversability(lay, BLOCKS) != flood_fill_traversable(lay, BLOCKS):
            disagree.append(k)
    wide, narrow = corridor_layout(0.6), corridor_layout(0.4)
    named = (check_traversability(wide, BLOCKS) and not check_traversability(narrow, BLOCKS))
    ok = not disagree and named
    record(7, ok, f"{200 - len(disagree)}/200 random fixtures agree; 0.6 m corridor passes, 0.4 m blocks: {named}")
    assert ok, disagree


# --- 8: clearance override ------------------------------------------------------------------------


def test_criterion_8_clearance_override(params):
    cat = params.catalog
    spec = ConstraintSpec(room_type="bedroom", clearances=(ClearanceOverride("bed", "left", 0.9),))
    depth = 0.9 - 1e-3
    clear = total = 0
    for seed in range(500):
        layout = sample_constrained(params, spec, seed).layout
        room = Polygon(layout.boundary).buffer(1e-3)
        furn = [i for i in layout.instances if cat.category_of(i.model_id) == Category.FURNITURE]
        for inst in furn:
            if cat.class_of(inst.model_id) != "bed":
                continue
            strip = side_strip(inst, cat, "left", depth)
            others = [instance_polygon(o, cat) for o in furn if o is not inst]
            total += 1
            clear += room.contains(strip) and not any(strip.buffer(-5e-4).intersects(o) for o in others)
    rate = clear / total if total else 0.0
    ok = total >= 500 and rate >= CLEARANCE_RATE
    record(8, ok, f"{clear}/{total} beds keep 0.9 m clear on the left ({rate:.1%}, limit 99%)")
    assert ok


# --- 9: determinism ---------------------------------------------------------------------------------


def test_criterion_9_byte_identical_exports(params):
    spec = ConstraintSpec(room_type="bedroom", traversability=True)
    mismatched = []
    for seed in range(20):
        runs = [export_scene(*_gen(params, seed, spec, threads)) for threads in (1, 1, 8)]
        if len(set(runs)) != 1:
            mismatched.append(seed)
    ok = not mismatched
    record(9, ok, f"20 seeds exported twice single-threaded and once with 8 threads: {len(mismatched)} mismatches")
    assert ok, mismatched


def _gen(params, seed, spec, threads):
    layout, prov = generate(params, seed, spec, threads=threads)
    return layout, params.catalog, prov

