"""Readable summaries of learned parameters."""

from __future__ import annotations

from dataclasses import dataclass

from .params import LearnedParams
from .scene import Category


@dataclass(frozen=True)
class ClassStats:
    cls: str
    models: int
    p_edge: float | None
    p_aligned: float | None


def class_stats(params: LearnedParams) -> list[ClassStats]:
    """Per furniture class: chance of standing at a wall and of a right-angle yaw.

    Wall chance averages the class's models equally; the alignment chance
    weights models by how many interior observations backed them.
    """
    cat = params.catalog
    out = []
    for cls in cat.classes():
        models = [m for m in cat.models_of_class(cls) if cat.category_of(m) == Category.FURNITURE]
        if not models:
            continue
        edges = [params.cells[m].p_edge for m in models if m in params.cells]
        orients = [params.orientations[m] for m in models if m in params.orientations]
        p_edge = sum(edges) / len(edges) if edges else None
        p_aligned = None
        if orients:
            total = sum(o.n_obs for o in orients)
            if total > 0:
                p_aligned = sum(o.p_aligned * o.n_obs for o in orients) / total
            else:
                p_aligned = sum(o.p_aligned for o in orients) / len(orients)
        out.append(ClassStats(cls, len(models), p_edge, p_aligned))
    return out


def format_report(stats: list[ClassStats]) -> str:
    def cell(v: float | None) -> str:
        return "   -  " if v is None else f"{v:6.3f}"

    width = max([len("class")] + [len(s.cls) for s in stats])
    lines = [f"{'class':<{width}}  models  p_edge  p_aligned(pi/2)"]
    for s in sorted(stats, key=lambda s: s.cls):
        lines.append(f"{s.cls:<{width}}  {s.models:6d}  {cell(s.p_edge)}  {cell(s.p_aligned)}")
    return "\n".join(lines) + "\n"
