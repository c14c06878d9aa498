"""Graph-description files.

Format: three sections, one record per line, whitespace-insensitive
key=value fields.  `#` starts a comment.

    [vertices]
    id=v1 condition=delta:0.0
    id=v2 condition=dirichlet
    [edges]
    id=e1 from=v1 to=v2 length=3.14159 potential=1.5:0.0,1.64159:2.0
    [cuts]
    edge=e1 t=1.0 family=flux params=0.5

`potential` is optional (defaults to q=0); it is a comma-separated list of
len:q segments.  All cut lines must share one family; params holds one value
per cut line (omitted for family=glued).
"""

from __future__ import annotations

from pathlib import Path

from .graphs import CutPoint, CutSet, Edge, MetricGraph, delta, dirichlet


class GraphFileError(ValueError):
    pass


def _parse_condition(text: str):
    text = text.strip().lower()
    if text == "dirichlet":
        return dirichlet()
    if text.startswith("delta:"):
        return delta(float(text.split(":", 1)[1]))
    raise GraphFileError(f"bad condition {text!r}")


def _parse_potential(text: str):
    segs = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        ln, q = part.split(":")
        segs.append((float(ln), float(q)))
    return tuple(segs)


def _fields(line: str) -> dict[str, str]:
    out = {}
    for tok in line.split():
        if "=" not in tok:
            raise GraphFileError(f"expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k.strip().lower()] = v.strip()
    return out


def parse_graph(text: str, name: str = "") -> tuple[MetricGraph, CutSet]:
    vertices, edges, cut_rows = [], [], []
    section = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            section = line.strip("[]").strip().lower()
            if section not in ("vertices", "edges", "cuts"):
                raise GraphFileError(f"unknown section {section!r}")
            continue
        f = _fields(line)
        if section == "vertices":
            vertices.append((f["id"], _parse_condition(f["condition"])))
        elif section == "edges":
            edges.append(Edge(
                eid=f["id"], tail=f["from"], head=f["to"],
                length=float(f["length"]),
                potential=_parse_potential(f.get("potential", "")),
            ))
        elif section == "cuts":
            cut_rows.append(f)
        else:
            raise GraphFileError("record outside of any section")

    graph = MetricGraph(tuple(vertices), tuple(edges), name=name)
    if not cut_rows:
        return graph, CutSet()

    families = {r.get("family", "glued").lower() for r in cut_rows}
    if len(families) != 1:
        raise GraphFileError("all cut lines must share one family")
    family = families.pop()
    cuts, params = [], []
    for j, r in enumerate(cut_rows):
        cuts.append(CutPoint(r["edge"], float(r["t"]), label=j))
        if family != "glued":
            params.append(float(r["params"]))
    return graph, CutSet(tuple(cuts), family, tuple(params))


def read_graph_file(path) -> tuple[MetricGraph, CutSet]:
    path = Path(path)
    return parse_graph(path.read_text(), name=path.stem)


def format_graph(graph: MetricGraph, cutset: CutSet = CutSet()) -> str:
    lines = ["[vertices]"]
    for vid, cond in graph.vertices:
        c = "dirichlet" if cond.kind == "dirichlet" else f"delta:{cond.chi:.17g}"
        lines.append(f"id={vid} condition={c}")
    lines.append("[edges]")
    for e in graph.edges:
        pot = ",".join(f"{ln:.17g}:{q:.17g}" for ln, q in e.potential)
        lines.append(f"id={e.eid} from={e.tail} to={e.head} length={e.length:.17g} potential={pot}")
    if cutset.cuts:
        lines.append("[cuts]")
        for j, c in enumerate(cutset.cuts):
            row = f"edge={c.edge} t={c.t:.17g} family={cutset.family}"
            if cutset.family != "glued":
                row += f" params={cutset.params[j]:.17g}"
            lines.append(row)
    return "\n".join(lines) + "\n"


def write_graph_file(path, graph: MetricGraph, cutset: CutSet = CutSet()) -> None:
    Path(path).write_text(format_graph(graph, cutset))
