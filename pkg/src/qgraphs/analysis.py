"""Nodal analysis, Wronskian identities, and the auxiliary jump solutions.

Zeros of an eigenfunction are located segment by segment in closed form:
on a segment f = A c + B s is a shifted cosine (oscillatory), a two-term
exponential (hyperbolic), or affine, so its zeros need no root search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConditionMismatch,
    DirichletResonance,
    QGraphError,
    VertexZero,
)
from .graphs import MetricGraph, component_count_removed
from .solver import Eigenpair, SpectralProblem, _is_deep, _nullspace_count

VERTEX_ZERO_TOL = 1e-8   # |f(v)| below this times ||f||_inf is a vertex zero

_START, _END = 0, 1


def _segment_zeros(a, b, u, length, tol_t):
    """Zeros of the segment solution strictly inside (tol_t, length - tol_t).

    (a, b) are the value/derivative coefficients, or the decaying-exponential
    pair on deep hyperbolic segments.
    """
    z = u * length * length
    out = []
    if _is_deep(u, length):
        # f = a e^{-kt} + b e^{-k(l-t)}: at most one zero
        if a != 0.0 and -b / a > 0.0:
            kap = math.sqrt(-u)
            t = 0.5 * (length - math.log(-b / a) / kap)
            if tol_t < t < length - tol_t:
                out.append(t)
        elif a == 0.0 and b == 0.0:
            raise QGraphError("identically zero segment")
        return out
    if abs(z) < 1e-12:  # affine regime: f ~ A + B t
        if b != 0.0:
            t = -a / b
            if tol_t < t < length - tol_t:
                out.append(t)
        return out
    if u > 0:
        om = math.sqrt(u)
        r = math.hypot(a, b / om)
        if r == 0.0:
            raise QGraphError("identically zero segment")
        dlt = math.atan2(b / om, a)
        # f = r cos(om t - dlt); zeros at om t = dlt + pi/2 + m pi
        m = math.ceil((om * tol_t - dlt - math.pi / 2) / math.pi)
        while True:
            t = (dlt + math.pi / 2 + m * math.pi) / om
            if t >= length - tol_t:
                break
            if t > tol_t:
                out.append(t)
            m += 1
        return out
    kap = math.sqrt(-u)
    p, q = (a + b / kap) / 2.0, (a - b / kap) / 2.0
    # f = p e^{kap t} + q e^{-kap t}
    if p != 0.0 and -q / p > 0.0:
        t = math.log(-q / p) / (2.0 * kap)
        if tol_t < t < length - tol_t:
            out.append(t)
    elif p == 0.0 and q == 0.0:
        raise QGraphError("identically zero segment")
    return out


def zero_set(pair: Eigenpair) -> tuple[tuple[str, float], ...]:
    """Positions of the internal zeros, as (edge_id, t) sorted by edge order.

    Zeros sitting exactly on a transparent joint (potential breakpoint or
    glued cut) are counted once; a zero at a graph vertex raises VertexZero.
    Dirichlet leaves are not counted as zeros.
    """
    asm = pair.problem.assembler
    graph = pair.problem.graph
    scale = pair.max_abs()
    if scale == 0.0:
        raise QGraphError("zero eigenfunction")
    tol_f = VERTEX_ZERO_TOL * scale

    for vid, cond in graph.vertices:
        if cond.kind == "dirichlet":
            continue
        seg, side = asm.attachments[vid][0]
        t_eval = asm.segments[seg].t0 if side == _START else asm.segments[seg].t1
        if abs(pair.value_at(asm.segments[seg].eid, t_eval, "-" if side == _END else "+")) < tol_f:
            raise VertexZero(f"eigenfunction vanishes at vertex {vid}")

    zeros: list[tuple[str, float]] = []
    for i, seg in enumerate(asm.segments):
        a, b = pair.coefficients[i]
        ell = seg.length
        tol_t = 1e-9 * max(1.0, ell)
        for t in _segment_zeros(float(a), float(b), pair.value - seg.q, ell, tol_t):
            zeros.append((seg.eid, seg.t0 + t))
        # a zero exactly on an interior joint belongs to both segments; count
        # it from the left side only
        edge_len = graph.edge(seg.eid).length
        if seg.t1 < edge_len - 1e-12 * max(1.0, edge_len):
            if abs(pair.value_at(seg.eid, seg.t1, "-")) < tol_f:
                zeros.append((seg.eid, seg.t1))
    return tuple(zeros)


def count_zeros(pair: Eigenpair, graph: MetricGraph | None = None) -> int:
    """Number of internal zeros (Dirichlet leaves excluded)."""
    return len(zero_set(pair))


def nodal_domain_count(pair: Eigenpair, graph: MetricGraph | None = None) -> int:
    """Number of connected components after removing the zero set."""
    g = graph if graph is not None else pair.problem.graph
    return component_count_removed(g, zero_set(pair))


# ---------------------------------------------------------------------------
# Wronskians


def _check_same_lambda(f1: Eigenpair, f2: Eigenpair):
    if f1.problem.assembler.n != f2.problem.assembler.n:
        raise ConditionMismatch("solutions live on different segmentations")
    if abs(f1.value - f2.value) > 1e-8 * (1.0 + abs(f1.value)):
        raise ConditionMismatch("solutions have different lambda")


def _wronskian_at(f1, f2, eid, t, side):
    v1, d1 = f1.value_at(eid, t, side), f1.derivative_at(eid, t, side)
    v2, d2 = f2.value_at(eid, t, side), f2.derivative_at(eid, t, side)
    return v1 * d2 - d1 * v2


def wronskian_vertex_sum(f1: Eigenpair, f2: Eigenpair, vertex: str) -> float:
    """Sum over edges at `vertex` of the outward Wronskians of f1, f2.

    Vanishes whenever both solutions satisfy the same self-adjoint condition
    at the vertex.  Outward means the derivative leaves the edge through the
    vertex, so start attachments contribute -W and end attachments +W.
    """
    _check_same_lambda(f1, f2)
    asm = f1.problem.assembler
    total = 0.0
    for seg, side in asm.attachments[vertex]:
        s = asm.segments[seg]
        if side == _START:
            total -= _wronskian_at(f1, f2, s.eid, s.t0, "+")
        else:
            total += _wronskian_at(f1, f2, s.eid, s.t1, "-")
    return total


def wronskian_leaf_transfer(f1: Eigenpair, f2: Eigenpair, leaf_a: str, leaf_b: str):
    """Outward Wronskians (W_a, W_b) at two leaves; W_a = -W_b when the
    solutions share self-adjoint conditions at every other vertex."""
    _check_same_lambda(f1, f2)
    asm = f1.problem.assembler
    out = []
    for leaf in (leaf_a, leaf_b):
        atts = asm.attachments[leaf]
        if len(atts) != 1:
            raise ConditionMismatch(f"{leaf} is not a leaf")
        seg, side = atts[0]
        s = asm.segments[seg]
        if side == _START:
            out.append(-_wronskian_at(f1, f2, s.eid, s.t0, "+"))
        else:
            out.append(_wronskian_at(f1, f2, s.eid, s.t1, "-"))
    return tuple(out)


def homogeneous_solutions(problem: SpectralProblem, lam: float, free_vertices,
                          tol: float = 1e-7) -> list[Eigenpair]:
    """Solutions satisfying all conditions except those at `free_vertices`.

    Returns one (unnormalized-phase, L2-normalized) Eigenpair per nullspace
    direction of the reduced condition matrix.
    """
    M, _, _ = problem.assembler.build(
        np.array([lam]), problem.cutset.family, problem.cutset.params,
        drop_vertices=tuple(free_vertices),
    )
    if np.iscomplexobj(M):
        raise QGraphError("homogeneous solutions need a real family")
    n = problem.assembler.n
    if M.shape[1] == 0:  # every condition dropped: the whole space solves
        svals = np.zeros(0)
        vh = np.eye(n)
        dim = n
    else:
        _, svals, vh = np.linalg.svd(M[0])
        smax = max(float(svals[0]), 1.0)
        dim = n - len(svals) + int(np.sum(svals < tol * smax))
    residual = float(svals[-1]) if len(svals) else 0.0
    out = []
    for k in range(dim):
        vec = vh[-1 - k]
        coeffs = vec.reshape(-1, 2).copy()
        pair = Eigenpair(problem, float(lam), coeffs, 1.0, residual)
        coeffs = coeffs / math.sqrt(pair.l2_norm_sq())
        out.append(Eigenpair(problem, float(lam), coeffs, 1.0, residual))
    return out


# ---------------------------------------------------------------------------
# the rho solutions


@dataclass(frozen=True, eq=False)
class RhoSolution:
    """Solution with a unit jump at cut j: rho(c_j-) = 0, rho(c_j+) = 1,
    glued at all other cuts, original vertex conditions elsewhere."""

    pair: Eigenpair
    cut_index: int
    r_value: float    # rho'(c_j+) + rho'(c_j-), derivatives into the edges
    residual: float


def solve_rho(problem: SpectralProblem, lam: float, j: int) -> RhoSolution:
    asm = problem.assembler
    if j >= len(problem.cutset.cuts):
        raise IndexError(f"no cut {j}")
    M, b, _ = asm.build(np.array([lam]), "glued", (), rho_index=j)
    M, b = M[0], b[0]
    svals = np.linalg.svd(M, compute_uv=False)
    if svals[-1] < 1e-10 * max(float(svals[0]), 1.0):
        raise DirichletResonance(
            f"lambda = {lam} lies in the Dirichlet spectrum of cut {j}"
        )
    x = np.linalg.solve(M, b)
    residual = float(np.abs(M @ x - b).max())
    coeffs = x.reshape(-1, 2).copy()
    pair = Eigenpair(problem, float(lam), coeffs, 1.0, residual)
    fm, fp, dpm, dpp = pair.cut_trace(j)
    # into-edge derivatives at the two cut leaves: +d/dx at c+, -d/dx at c-
    r = dpp - dpm
    return RhoSolution(pair, j, float(r), residual)
