"""Builders for the standard test graphs."""

from __future__ import annotations

import math

from .graphs import Edge, MetricGraph, VertexCondition, delta, dirichlet


def _cond(spec) -> VertexCondition:
    if isinstance(spec, VertexCondition):
        return spec
    if spec == "dirichlet":
        return dirichlet()
    return delta(float(spec))


def interval(length: float = math.pi, left="delta:0", right="delta:0",
             potential=(), name: str = "interval") -> MetricGraph:
    """Single edge a--b.  Endpoint conditions accept a chi value, a
    VertexCondition, or the string 'dirichlet'."""
    def parse(s):
        if isinstance(s, str) and s.startswith("delta:"):
            return delta(float(s.split(":")[1]))
        return _cond(s)

    return MetricGraph(
        vertices=(("a", parse(left)), ("b", parse(right))),
        edges=(Edge("e1", "a", "b", length, tuple(potential)),),
        name=name,
    )


def circle(length: float = 2 * math.pi, chi: float = 0.0, name: str = "circle") -> MetricGraph:
    return MetricGraph(
        vertices=(("v", delta(chi)),),
        edges=(Edge("loop", "v", "v", length),),
        name=name,
    )


def lasso(loop: float = 3.0, tail: float = 1.0, name: str = "lasso") -> MetricGraph:
    """A loop attached to a pendant edge with a Neumann tip."""
    return MetricGraph(
        vertices=(("j", delta(0.0)), ("t", delta(0.0))),
        edges=(Edge("loop", "j", "j", loop), Edge("tail", "j", "t", tail)),
        name=name,
    )


def figure_eight(l1: float = 1.0, l2: float = 1.41421356, name: str = "figure-eight") -> MetricGraph:
    return MetricGraph(
        vertices=(("v", delta(0.0)),),
        edges=(Edge("loop1", "v", "v", l1), Edge("loop2", "v", "v", l2)),
        name=name,
    )


def dumbbell(l1: float = 1.0, l2: float = 1.3, bridge: float = 0.85,
             name: str = "dumbbell") -> MetricGraph:
    return MetricGraph(
        vertices=(("u", delta(0.0)), ("v", delta(0.0))),
        edges=(
            Edge("loop1", "u", "u", l1),
            Edge("bridge", "u", "v", bridge),
            Edge("loop2", "v", "v", l2),
        ),
        name=name,
    )


def star(lengths=(1.0, 1.2, 1.43), chi_center: float = 0.0, name: str = "star") -> MetricGraph:
    """Star tree: central vertex joined to one Neumann leaf per length."""
    verts = [("c", delta(chi_center))]
    edges = []
    for i, ell in enumerate(lengths):
        verts.append((f"l{i}", delta(0.0)))
        edges.append(Edge(f"arm{i}", "c", f"l{i}", float(ell)))
    return MetricGraph(tuple(verts), tuple(edges), name=name)


def y_graph(lengths=(1.0, 1.2, 1.43), name: str = "y-graph") -> MetricGraph:
    return star(lengths, name=name)
