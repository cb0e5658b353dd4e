"""Motif and abutment mining.

Abutments are mined first: rows of flush objects become Markov chains over
CAD models.  Motifs are then mined among the remaining furniture by
clustering the displacements of K-tuples of classes relative to a base
object.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import TrainingCorpus
from .dpmm import dpmm_fit
from .geometry import OrientedRect, abutting, footprint, rects_intersect, world_to_local
from .params import START, TERMINAL, AbutmentPattern, Motif, MotifOccurrence, TrainConfig
from .rng import stable_seed
from .scene import Category, ModelCatalog, normalize_yaw

InstanceRef = tuple[int, int]  # (room index, instance index)


class UnionFind:
    def __init__(self) -> None:
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smaller key becomes the root so grouping is order independent
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def groups(self) -> dict:
        out: dict = defaultdict(list)
        for x in sorted(self.parent):
            out[self.find(x)].append(x)
        return dict(out)


# --- Markov chains ------------------------------------------------------------------


def markov_mle(sequences: Iterable[Sequence[str]], models: Sequence[str] | None = None) -> tuple[tuple[str, ...], np.ndarray]:
    """Row-normalized transition counts over ``START, *models, TERMINAL``.

    Rows never left in the data put all mass on TERMINAL.
    """
    seqs = [tuple(s) for s in sequences]
    if not seqs:
        raise ValueError("markov_mle needs at least one sequence")
    if models is None:
        models = sorted({m for s in seqs for m in s})
    states = (START, *models, TERMINAL)
    index = {s: i for i, s in enumerate(states)}
    counts = np.zeros((len(states), len(states)))
    for s in seqs:
        path = (START, *s, TERMINAL)
        for a, b in zip(path, path[1:]):
            counts[index[a], index[b]] += 1
    totals = counts.sum(axis=1, keepdims=True)
    mat = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    mat[totals[:, 0] == 0, -1] = 1.0
    return states, mat


@dataclass
class AbutmentLibrary:
    patterns: dict[str, AbutmentPattern]
    # per pattern: (room, instance indices in canonical reading order)
    rows: dict[str, list[tuple[int, tuple[int, ...]]]] = field(default_factory=dict)

    def claimed(self) -> set[InstanceRef]:
        return {(r, i) for rows in self.rows.values() for r, idxs in rows for i in idxs}


def _furniture(corpus: TrainingCorpus, room: int) -> list[int]:
    cat = corpus.catalog
    return [i for i, inst in enumerate(corpus.rooms[room].instances) if cat.category_of(inst.model_id) == Category.FURNITURE]


def room_sequences(corpus: TrainingCorpus, room: int, config: TrainConfig) -> tuple[list[tuple[int, ...]], set[int]]:
    """Abutting rows in one room as instance-index paths, plus instances touching nobody.

    Components that are not simple paths (branches or cycles) are ignored.
    """
    cat = corpus.catalog
    insts = corpus.rooms[room].instances
    idx = _furniture(corpus, room)
    rects = {i: footprint(insts[i], cat) for i in idx}
    adj: dict[int, list[int]] = {i: [] for i in idx}
    for a, b in itertools.combinations(idx, 2):
        if abutting(rects[a], rects[b], config.gap_tol, config.min_overlap):
            adj[a].append(b)
            adj[b].append(a)
    seen: set[int] = set()
    out: list[tuple[int, ...]] = []
    lone: set[int] = set()
    for i in idx:
        if i in seen:
            continue
        comp, stack = [], [i]
        seen.add(i)
        while stack:
            j = stack.pop()
            comp.append(j)
            for k in adj[j]:
                if k not in seen:
                    seen.add(k)
                    stack.append(k)
        if len(comp) == 1:
            lone.add(i)
            continue
        n_edges = sum(len(adj[j]) for j in comp) // 2
        if n_edges != len(comp) - 1 or any(len(adj[j]) > 2 for j in comp):
            continue
        start = min(j for j in comp if len(adj[j]) == 1)
        path, prev = [start], None
        while True:
            nxt = [k for k in adj[path[-1]] if k != prev]
            if not nxt:
                break
            prev = path[-1]
            path.append(nxt[0])
        models = [insts[j].model_id for j in path]
        if models[::-1] < models:
            path.reverse()
        out.append(tuple(path))
    return out, lone


def mine_abutments(corpus: TrainingCorpus, config: TrainConfig | None = None) -> AbutmentLibrary:
    """Group abutting rows into model-disjoint Markov-chain patterns.

    Rows of length >= 3 define the model sets (merged transitively).  Each
    set's chain is then fitted on every row built only from its models,
    including rows of length 1 and 2 and objects that abut nothing, so short
    realizations of the chain are not censored.
    """
    config = config or TrainConfig()
    per_room = [room_sequences(corpus, r, config) for r in range(len(corpus.rooms))]
    uf = UnionFind()
    for r, (seqs, _) in enumerate(per_room):
        insts = corpus.rooms[r].instances
        for s in seqs:
            if len(s) >= 3:
                models = [insts[i].model_id for i in s]
                for m in models:
                    uf.find(m)
                for a, b in zip(models, models[1:]):
                    uf.union(a, b)
    sets = {tuple(sorted(g)) for g in uf.groups().values()}
    owner = {m: s for s in sets for m in s}
    rows: dict[tuple[str, ...], list[tuple[int, tuple[int, ...]]]] = defaultdict(list)
    for r, (seqs, lone) in enumerate(per_room):
        insts = corpus.rooms[r].instances
        for s in seqs:
            models = {insts[i].model_id for i in s}
            owners = {owner.get(m) for m in models}
            if len(owners) == 1 and None not in owners:
                rows[owners.pop()].append((r, s))
        for i in sorted(lone):
            m = insts[i].model_id
            if m in owner:
                rows[owner[m]].append((r, (i,)))
    lib = AbutmentLibrary({}, {})
    for s in sorted(sets):
        if s not in rows:
            continue
        seqs = [tuple(corpus.rooms[r].instances[i].model_id for i in idxs) for r, idxs in rows[s]]
        states, mat = markov_mle(seqs, s)
        pid = "abut:" + "+".join(s)
        lib.patterns[pid] = AbutmentPattern(pid, s, tuple(tuple(float(v) for v in row) for row in mat))
        lib.rows[pid] = sorted(rows[s])
    return lib


# --- motifs -------------------------------------------------------------------------------


def tuple_key(classes: Iterable[str]) -> tuple[str, ...]:
    """Canonical class tuple: base class first, then the rest sorted.

    The base is the alphabetically first class occurring once in the tuple
    (falling back to the first class when every class repeats), so a single
    anchor such as a table is preferred over one of several chairs.
    """
    cs = sorted(classes)
    singles = [c for c in cs if cs.count(c) == 1]
    base = singles[0] if singles else cs[0]
    rest = list(cs)
    rest.remove(base)
    return (base, *rest)


@dataclass
class _Occ:
    room: int
    idxs: tuple[int, ...]  # base first, then canonical member order
    vec: tuple[float, ...]


@dataclass
class MotifCandidate:
    key: tuple[str, ...]
    n_points: int
    accepted_clusters: int
    areas: list[list[float]] = field(default_factory=list)


@dataclass
class MotifLibrary:
    motifs: dict[str, Motif]
    claims: dict[str, list[tuple[int, tuple[int, ...]]]] = field(default_factory=dict)
    candidates: list[MotifCandidate] = field(default_factory=list)

    def claimed(self) -> set[InstanceRef]:
        return {(r, i) for occ in self.claims.values() for r, idxs in occ for i in idxs}


def _room_table(corpus: TrainingCorpus, exclude: set[InstanceRef]):
    """Per room: class -> list of (instance index, x, z, yaw) for eligible furniture."""
    cat = corpus.catalog
    out = []
    for r, room in enumerate(corpus.rooms):
        by_cls: dict[str, list[tuple[int, float, float, float]]] = defaultdict(list)
        for i, inst in enumerate(room.instances):
            if (r, i) in exclude or cat.category_of(inst.model_id) != Category.FURNITURE:
                continue
            by_cls[cat.class_of(inst.model_id)].append((i, inst.x, inst.z, inst.yaw))
        out.append(dict(by_cls))
    return out


def _occurrences(table, key: tuple[str, ...]) -> list[_Occ]:
    base_cls = key[0]
    need: dict[str, int] = defaultdict(int)
    for c in key[1:]:
        need[c] += 1
    classes = sorted(need)
    out: list[_Occ] = []
    for r, by_cls in enumerate(table):
        if base_cls not in by_cls or any(len(by_cls.get(c, ())) < need[c] + (c == base_cls) for c in classes):
            continue
        for b in by_cls[base_cls]:
            bi, bx, bz, byaw = b
            pools = []
            for c in classes:
                cands = [e for e in by_cls[c] if e[0] != bi]
                pools.append(list(itertools.combinations(cands, need[c])))
            for combo in itertools.product(*pools):
                members = []
                for c, group in zip(classes, combo):
                    loc = sorted((world_to_local(bx, bz, byaw, e[1], e[2]), e[0]) for e in group)
                    members.extend(loc)
                vec = tuple(v for (uv, _) in members for v in uv)
                out.append(_Occ(r, (bi, *[i for _, i in members]), vec))
    return out


def _occurrence_record(corpus: TrainingCorpus, occ: _Occ) -> MotifOccurrence:
    insts = corpus.rooms[occ.room].instances
    base = insts[occ.idxs[0]]
    models = tuple(insts[i].model_id for i in occ.idxs)
    offsets = ((0.0, 0.0),) + tuple((occ.vec[2 * j], occ.vec[2 * j + 1]) for j in range(len(occ.idxs) - 1))
    yaws = tuple(normalize_yaw(insts[i].yaw - base.yaw) for i in occ.idxs)
    return MotifOccurrence(models, offsets, yaws)


def occurrence_rects(occ: MotifOccurrence, catalog: ModelCatalog) -> list[OrientedRect]:
    """Member footprints with the base object at the origin facing +x."""
    return [
        OrientedRect(u, v, catalog[m].depth / 2, catalog[m].width / 2, y)
        for m, (u, v), y in zip(occ.models, occ.offsets, occ.yaws)
    ]


def occurrence_valid(occ: MotifOccurrence, catalog: ModelCatalog) -> bool:
    rs = occurrence_rects(occ, catalog)
    return not any(rects_intersect(a, b) for a, b in itertools.combinations(rs, 2))


def mine_motifs(
    corpus: TrainingCorpus,
    k_max: int = 4,
    config: TrainConfig | None = None,
    exclude: set[InstanceRef] | None = None,
) -> MotifLibrary:
    """Cluster K-tuple displacements and keep tight, well-supported clusters.

    Discovery runs bottom-up over K with apriori pruning: a K-tuple is only
    fitted when each of its (K-1)-sub-tuples produced an accepted cluster.
    Assembly then runs top-down, largest K first, and each physical instance
    may belong to at most one motif occurrence; clusters left with fewer than
    ``n_min`` unclaimed occurrences are dropped.
    """
    config = config or TrainConfig()
    if k_max < 2:
        raise ValueError("k_max must be >= 2")
    table = _room_table(corpus, exclude or set())
    cat = corpus.catalog

    class_counts: dict[str, int] = defaultdict(int)
    for by_cls in table:
        for c, items in by_cls.items():
            class_counts[c] += len(items)
    classes = sorted(class_counts)

    accepted: dict[tuple[str, ...], list[tuple[np.ndarray, np.ndarray, list[_Occ]]]] = {}
    lib = MotifLibrary({}, {})
    keys = sorted({tuple_key(p) for p in itertools.combinations_with_replacement(classes, 2)})
    for k in range(2, k_max + 1):
        if k > 2:
            prev = [key for key in accepted if len(key) == k - 1]
            extend = sorted({c for key in accepted for c in key})
            cand = set()
            for key in prev:
                for c in extend:
                    new = tuple_key((*key, c))
                    subs = {tuple_key(new[:j] + new[j + 1:]) for j in range(len(new))}
                    if all(s in accepted for s in subs):
                        cand.add(new)
            keys = sorted(cand)
        for key in keys:
            occs = _occurrences(table, key)
            if len(occs) < config.n_min:
                continue
            X = np.array([o.vec for o in occs])
            sample = X
            if len(X) > config.dpmm_max_points:
                gen = np.random.Generator(np.random.PCG64(stable_seed("motif-subsample", *key)))
                pick = np.sort(gen.choice(len(X), config.dpmm_max_points, replace=False))
                sample = X[pick]
            res = dpmm_fit(
                sample,
                alpha=config.dpmm_alpha,
                truncation=config.dpmm_truncation,
                max_iters=config.dpmm_max_iters,
                tol=config.dpmm_tol,
                seed=stable_seed("motif-init", *key),
                sigma_min=config.sigma_min,
            )
            labels = res.assign(X)
            sizes = np.bincount(labels, minlength=res.truncation)
            areas = []
            good = []
            for c in range(res.truncation):
                if sizes[c] == 0:
                    continue
                sd = np.sqrt(res.variances[c])
                area = [4 * math.pi * sd[2 * j] * sd[2 * j + 1] for j in range(k - 1)]
                areas.append(area)
                if sizes[c] >= config.n_min and max(area) <= config.tau_area:
                    good.append(c)
            lib.candidates.append(MotifCandidate(key, len(occs), len(good), areas))
            if good:
                accepted[key] = [
                    (res.means[c], res.variances[c], [o for o, l in zip(occs, labels) if l == c]) for c in good
                ]

    # assembly: largest K first, then bigger clusters, then key order
    order = sorted(
        ((key, j) for key, cl in accepted.items() for j in range(len(cl))),
        key=lambda t: (-len(t[0]), -len(accepted[t[0]][t[1]][2]), t[0], t[1]),
    )
    claimed: set[InstanceRef] = set()
    serial: dict[tuple[str, ...], int] = defaultdict(int)
    for key, j in order:
        mean, var, occs = accepted[key][j]
        taken, records = [], []
        for o in sorted(occs, key=lambda o: (o.room, o.idxs)):
            refs = [(o.room, i) for i in o.idxs]
            if any(ref in claimed for ref in refs):
                continue
            rec = _occurrence_record(corpus, o)
            if not occurrence_valid(rec, cat):
                continue
            claimed.update(refs)
            taken.append(o)
            records.append(rec)
        if len(taken) < config.n_min:
            for o in taken:
                claimed.difference_update((o.room, i) for i in o.idxs)
            continue
        mid = f"motif:{'+'.join(key)}#{serial[key]}"
        serial[key] += 1
        lib.motifs[mid] = Motif(mid, key, tuple(float(v) for v in mean), tuple(float(v) for v in var), tuple(records))
        lib.claims[mid] = [(o.room, o.idxs) for o in taken]
    return lib
