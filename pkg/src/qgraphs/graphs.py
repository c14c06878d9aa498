"""Compact metric graphs: data model, validation, cutting operations.

A metric graph is a combinatorial graph whose edges carry lengths and
piecewise-constant potentials.  Vertices carry delta-type conditions
(continuity plus a derivative-sum condition with strength chi) or, on
degree-1 vertices, a Dirichlet condition.  Points on edges are addressed
as (edge_id, t) with t the arclength coordinate from the edge's tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import DuplicatePoint, EpsilonTooLarge, InvalidGraph

_REL_TOL = 1e-12


@dataclass(frozen=True)
class VertexCondition:
    kind: str  # "delta" | "dirichlet"
    chi: float = 0.0

    def __post_init__(self):
        if self.kind not in ("delta", "dirichlet"):
            raise ValueError(f"unknown vertex condition kind {self.kind!r}")
        if not math.isfinite(self.chi):
            raise ValueError("chi must be finite")


def delta(chi: float = 0.0) -> VertexCondition:
    return VertexCondition("delta", float(chi))


def dirichlet() -> VertexCondition:
    return VertexCondition("dirichlet")


@dataclass(frozen=True)
class Edge:
    eid: str
    tail: str
    head: str
    length: float
    # (segment_length, q_value) pairs; empty means q == 0 on the whole edge
    potential: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.potential:
            object.__setattr__(self, "potential", ((float(self.length), 0.0),))

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head

    def potential_breakpoints(self) -> list[float]:
        """Interior t-coordinates where the potential value changes."""
        pts, acc = [], 0.0
        for seg_len, _ in self.potential[:-1]:
            acc += seg_len
            pts.append(acc)
        return pts

    def q_at(self, t: float) -> float:
        acc = 0.0
        for seg_len, q in self.potential:
            acc += seg_len
            if t <= acc + _REL_TOL * max(1.0, self.length):
                return q
        return self.potential[-1][1]


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple[tuple[str, VertexCondition], ...]
    edges: tuple[Edge, ...]
    name: str = ""

    # -- basic accessors -------------------------------------------------

    def vertex_ids(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.vertices)

    def condition(self, vid: str) -> VertexCondition:
        for v, cond in self.vertices:
            if v == vid:
                return cond
        raise KeyError(vid)

    def edge(self, eid: str) -> Edge:
        for e in self.edges:
            if e.eid == eid:
                return e
        raise KeyError(eid)

    def degree(self, vid: str) -> int:
        d = 0
        for e in self.edges:
            d += (e.tail == vid) + (e.head == vid)
        return d

    def total_length(self) -> float:
        return sum(e.length for e in self.edges)

    def max_abs_q(self) -> float:
        return max((abs(q) for e in self.edges for _, q in e.potential), default=0.0)

    def with_condition(self, vid: str, cond: VertexCondition) -> "MetricGraph":
        verts = tuple((v, cond if v == vid else c) for v, c in self.vertices)
        return replace(self, vertices=verts)


@dataclass(frozen=True)
class CutPoint:
    edge: str
    t: float
    label: int = 0


@dataclass(frozen=True)
class CutSet:
    cuts: tuple[CutPoint, ...] = ()
    family: str = "glued"  # glued | flux | imaginary_flux | robin
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.family not in ("glued", "flux", "imaginary_flux", "robin"):
            raise ValueError(f"unknown cut family {self.family!r}")
        if self.family != "glued" and len(self.params) != len(self.cuts):
            raise ValueError("parameter vector length must equal the number of cuts")

    def with_family(self, family: str, params=()) -> "CutSet":
        return CutSet(self.cuts, family, tuple(float(p) for p in params))

    def positions(self) -> tuple[tuple[str, float], ...]:
        return tuple((c.edge, c.t) for c in self.cuts)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    detail: str = ""

    def __str__(self):
        return f"{self.code}: {self.detail}" if self.detail else self.code


# ---------------------------------------------------------------------------
# validation and Betti number


def validate(graph: MetricGraph) -> list[Diagnostic]:
    """Return one diagnostic per violated invariant; empty list iff valid."""
    diags: list[Diagnostic] = []
    vids = [v for v, _ in graph.vertices]
    if len(set(vids)) != len(vids):
        diags.append(Diagnostic("DuplicateVertexId"))
    eids = [e.eid for e in graph.edges]
    if len(set(eids)) != len(eids):
        diags.append(Diagnostic("DuplicateEdgeId"))
    if not graph.edges:
        diags.append(Diagnostic("EmptyGraph", "graph has no edges"))

    vset = set(vids)
    for e in graph.edges:
        if e.length <= 0 or not math.isfinite(e.length):
            diags.append(Diagnostic("NonpositiveLength", f"edge {e.eid}"))
        if e.tail not in vset or e.head not in vset:
            diags.append(Diagnostic("UnknownVertex", f"edge {e.eid}"))
        seg_sum = sum(s for s, _ in e.potential)
        if any(s <= 0 for s, _ in e.potential):
            diags.append(Diagnostic("NonpositiveSegment", f"edge {e.eid}"))
        elif abs(seg_sum - e.length) > _REL_TOL * max(1.0, abs(e.length)):
            diags.append(Diagnostic("BadPotentialSum", f"edge {e.eid}"))

    for v, cond in graph.vertices:
        if graph.degree(v) == 0:
            diags.append(Diagnostic("UnreferencedVertex", f"vertex {v}"))
        if cond.kind == "dirichlet" and graph.degree(v) != 1:
            diags.append(Diagnostic("DirichletOnInternalVertex", f"vertex {v}"))

    if graph.edges and vset and not diags:
        if _component_count(graph) != 1:
            diags.append(Diagnostic("Disconnected"))
    return diags


def require_valid(graph: MetricGraph) -> None:
    diags = validate(graph)
    if diags:
        raise InvalidGraph("; ".join(str(d) for d in diags))


def betti(graph: MetricGraph) -> int:
    """First Betti number |E| - |V| + 1 of a connected graph."""
    require_valid(graph)
    return len(graph.edges) - len(graph.vertices) + 1


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True

    def n_classes(self) -> int:
        return len({self.find(x) for x in self.parent})


def _component_count(graph: MetricGraph) -> int:
    uf = _UnionFind(graph.vertex_ids())
    for e in graph.edges:
        uf.union(e.tail, e.head)
    return uf.n_classes()


def components(graph: MetricGraph) -> list[MetricGraph]:
    """Split a (possibly disconnected) graph into its connected components."""
    uf = _UnionFind(graph.vertex_ids())
    for e in graph.edges:
        uf.union(e.tail, e.head)
    roots: list[str] = []
    for v in graph.vertex_ids():
        r = uf.find(v)
        if r not in roots:
            roots.append(r)
    out = []
    for i, r in enumerate(roots):
        verts = tuple((v, c) for v, c in graph.vertices if uf.find(v) == r)
        edges = tuple(e for e in graph.edges if uf.find(e.tail) == r)
        out.append(MetricGraph(verts, edges, name=f"{graph.name}/c{i}"))
    return out


# ---------------------------------------------------------------------------
# spanning tree cuts


def spanning_tree_cuts(graph: MetricGraph, tree_edges=None, positions=None) -> CutSet:
    """One cut per non-tree edge; exactly betti(graph) cuts.

    The default tree takes edges greedily in declaration order; positions
    default to edge midpoints.  `tree_edges` may pin an explicit spanning
    tree (list of edge ids), `positions` a {edge_id: t} override.
    """
    require_valid(graph)
    if tree_edges is not None:
        tree = set(tree_edges)
        uf = _UnionFind(graph.vertex_ids())
        for e in graph.edges:
            if e.eid in tree and not uf.union(e.tail, e.head):
                raise InvalidGraph(f"tree_edges contain a cycle at {e.eid}")
        if uf.n_classes() != 1 or len(tree) != len(graph.vertices) - 1:
            raise InvalidGraph("tree_edges is not a spanning tree")
        non_tree = [e for e in graph.edges if e.eid not in tree]
    else:
        uf = _UnionFind(graph.vertex_ids())
        non_tree = [e for e in graph.edges if not uf.union(e.tail, e.head)]

    cuts = []
    for j, e in enumerate(non_tree):
        t = e.length / 2.0
        if positions and e.eid in positions:
            t = float(positions[e.eid])
        if not 0.0 < t < e.length:
            raise InvalidGraph(f"cut position outside edge {e.eid}")
        cuts.append(CutPoint(e.eid, t, label=j))
    return CutSet(tuple(cuts))


# ---------------------------------------------------------------------------
# severing / subdividing edges at interior points


def _split_potential(edge: Edge, t: float) -> tuple[tuple, tuple]:
    """Potential lists of the two half-edges [0,t] and [t, length]."""
    left, right = [], []
    acc = 0.0
    for seg_len, q in edge.potential:
        lo, hi = acc, acc + seg_len
        if hi <= t + 1e-15 * edge.length:
            left.append((seg_len, q))
        elif lo >= t - 1e-15 * edge.length:
            right.append((seg_len, q))
        else:
            left.append((t - lo, q))
            right.append((hi - t, q))
        acc = hi
    return tuple(left), tuple(right)


def _group_points(graph: MetricGraph, points) -> dict[str, list[float]]:
    by_edge: dict[str, list[float]] = {}
    for eid, t in points:
        e = graph.edge(eid)
        if not 0.0 < t < e.length:
            raise DuplicatePoint(f"point ({eid}, {t}) is not interior")
        by_edge.setdefault(eid, []).append(float(t))
    for eid, ts in by_edge.items():
        ts.sort()
        gap = 1e-12 * max(1.0, graph.edge(eid).length)
        for a, b in zip(ts, ts[1:]):
            if b - a < gap:
                raise DuplicatePoint(f"coincident points on edge {eid}")
    return by_edge


def _rebuild(graph, points, vertex_factory):
    """Split edges at the given points; vertex_factory decides the new vertex ids
    and conditions and may create one (subdivision) or two (severing) vertices per point."""
    by_edge = _group_points(graph, points)
    new_vertices = list(graph.vertices)
    new_edges = []
    for e in graph.edges:
        ts = by_edge.get(e.eid)
        if not ts:
            new_edges.append(e)
            continue
        cur = e
        offset = 0.0
        for i, t in enumerate(ts):
            tl = t - offset
            left_pot, right_pot = _split_potential(cur, tl)
            left_vid, right_vid, conds = vertex_factory(e.eid, i, t)
            for vid, cond in conds:
                new_vertices.append((vid, cond))
            new_edges.append(
                Edge(f"{cur.eid}#{i}", cur.tail, left_vid, tl, left_pot)
            )
            cur = Edge(cur.eid, right_vid, cur.head, cur.length - tl, right_pot)
            offset = t
        new_edges.append(Edge(f"{cur.eid}#{len(ts)}", cur.tail, cur.head, cur.length, cur.potential))
    return MetricGraph(tuple(new_vertices), tuple(new_edges), name=graph.name)


def subdivide_at(graph: MetricGraph, points) -> MetricGraph:
    """Insert transparent Delta(0) degree-2 vertices at interior edge points.

    Metric and spectrum are unchanged; betti is unchanged.
    """
    def factory(eid, i, t):
        vid = f"{eid}:{t:.12g}"
        return vid, vid, [(vid, delta(0.0))]

    return _rebuild(graph, points, factory)


def sever_at(graph: MetricGraph, points, condition: VertexCondition | None = None) -> MetricGraph:
    """Cut the graph open at interior edge points, producing two new leaf
    vertices per point (Dirichlet by default).  Result may be disconnected."""
    cond = condition if condition is not None else dirichlet()

    def factory(eid, i, t):
        minus = f"{eid}:{t:.12g}-"
        plus = f"{eid}:{t:.12g}+"
        return minus, plus, [(minus, cond), (plus, cond)]

    return _rebuild(graph, points, factory)


def split_vertex_dirichlet(graph: MetricGraph, vid: str) -> MetricGraph:
    """Impose a Dirichlet condition at a vertex of any degree by splitting it
    into one Dirichlet leaf per incident edge end."""
    new_vertices = [(v, c) for v, c in graph.vertices if v != vid]
    new_edges = []
    k = 0
    for e in graph.edges:
        tail, head = e.tail, e.head
        if tail == vid:
            tail = f"{vid}@{e.eid}:0"
            new_vertices.append((tail, dirichlet()))
            k += 1
        if head == vid:
            head = f"{vid}@{e.eid}:1"
            new_vertices.append((head, dirichlet()))
            k += 1
        new_edges.append(replace(e, tail=tail, head=head))
    if k == 0:
        raise InvalidGraph(f"vertex {vid} not found on any edge")
    return MetricGraph(tuple(new_vertices), tuple(new_edges), name=graph.name)


# ---------------------------------------------------------------------------
# nodal-set combinatorics

def _pieces(graph: MetricGraph, points) -> tuple[list, _UnionFind]:
    """Edge pieces after severing the graph at the given interior points.

    A piece is (edge_id, end0, end1) where an end is a vertex id or None when
    the piece terminates at a severed point.  Pieces sharing a live vertex are
    unioned; a piece with two severed ends is its own component.
    """
    by_edge = _group_points(graph, points)
    pieces = []
    for e in graph.edges:
        ts = by_edge.get(e.eid)
        if not ts:
            pieces.append((e.eid, e.tail, e.head))
        else:
            ends = [e.tail] + [None] * len(ts) + [e.head]
            for i in range(len(ts) + 1):
                pieces.append((e.eid, ends[i], ends[i + 1]))
    uf = _UnionFind(list(range(len(pieces))) + list(graph.vertex_ids()))
    for i, (_, a, b) in enumerate(pieces):
        if a is not None:
            uf.union(a, i)
        if b is not None:
            uf.union(b, i)
    return pieces, uf


def component_count_removed(graph: MetricGraph, points) -> int:
    """Number of connected components of the graph minus the given points."""
    require_valid(graph)
    if not points:
        return 1
    pieces, uf = _pieces(graph, points)
    return len({uf.find(i) for i in range(len(pieces))})


def betti_removed(graph: MetricGraph, points) -> int:
    """Sum of Betti numbers of the components of the graph minus the points."""
    require_valid(graph)
    pieces, uf = _pieces(graph, points)
    n_edges: dict = {}
    n_verts: dict = {}
    for i, (_, a, b) in enumerate(pieces):
        if a is not None and b is not None:
            r = uf.find(i)
            n_edges[r] = n_edges.get(r, 0) + 1
    for v in graph.vertex_ids():
        r = uf.find(v)
        n_verts[r] = n_verts.get(r, 0) + 1
    total = 0
    for r, nv in n_verts.items():
        total += n_edges.get(r, 0) - nv + 1
    return total


def cut_for_nodal_set(graph: MetricGraph, zeros, eps: float | None = None) -> CutSet:
    """Cut points for a nodal set whose zeros may miss some cycles.

    Processes zeros in input order; a zero receives a cut (at distance eps
    along the edge) only when severing at it keeps the already-severed graph
    connected.  The number of cuts eta satisfies both eta = 1 + phi - nu and
    eta = betti(graph) - betti(graph minus zeros).
    """
    require_valid(graph)
    zeros = [(eid, float(t)) for eid, t in zeros]
    _group_points(graph, zeros)  # validates interiority / distinctness

    severed: list[tuple[str, float]] = []
    cut_positions: list[tuple[str, float]] = []
    for eid, t in zeros:
        if component_count_removed(graph, severed + [(eid, t)]) == 1:
            severed.append((eid, t))
            cut_positions.append(_offset_cut(graph, eid, t, zeros, cut_positions, eps))

    eta = len(cut_positions)
    phi = len(zeros)
    nu = component_count_removed(graph, zeros)
    if eta != 1 + phi - nu:
        raise InvalidGraph(f"cut count {eta} != 1 + phi - nu = {1 + phi - nu}")
    if eta != betti(graph) - betti_removed(graph, zeros):
        raise InvalidGraph("cut count does not match the Betti-number difference")
    cuts = tuple(CutPoint(eid, t, label=j) for j, (eid, t) in enumerate(cut_positions))
    return CutSet(cuts)


def _offset_cut(graph, eid, t, zeros, existing, eps):
    """Place a cut at distance eps from the zero, avoiding other marked points."""
    e = graph.edge(eid)
    step = eps if eps is not None else 1e-3 * e.length
    marked = [z[1] for z in zeros if z[0] == eid]
    marked += [c[1] for c in existing if c[0] == eid]
    marked += e.potential_breakpoints()
    clearance = 0.25 * step
    others = [m for m in marked if abs(m - t) > 1e-15 * e.length]
    for cand in (t + step, t - step):
        if not clearance < cand < e.length - clearance:
            continue
        if any(abs(cand - m) <= clearance for m in others):
            continue
        # nothing may sit between the zero and its cut, or the severing
        # would not be topologically equivalent to severing at the zero
        if any(min(t, cand) < m < max(t, cand) for m in others):
            continue
        return (eid, cand)
    raise EpsilonTooLarge(f"no room for a cut near ({eid}, {t}) with eps={step}")
