"""Parametric eigenvalue functions and their critical-point analysis.

Covers the three jump-condition families on a fixed cut geometry:
phase jumps (flux alpha), magnitude jumps (imaginary flux), and Robin
cuts (gamma), plus finite-difference Hessians, Morse indices, the pair
of mutually inverse maps between gamma- and alpha-parameters, and the
spectral symmetry points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import (
    BranchLost,
    DegenerateAtZero,
    DegenerateEigenvalue,
    EvaluationFailed,
    PathNotFound,
    SignFlipAtCut,
    ZeroAtCut,
)
from .graphs import CutSet, MetricGraph, _UnionFind
from .solver import (
    Eigenpair,
    SpectralProblem,
    _golden_min,
    _nullspace_count,
    eigenfunction,
    find_eigenvalues,
)


def wrap_angle(a: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    w = math.fmod(a, 2.0 * math.pi)
    if w > math.pi:
        w -= 2.0 * math.pi
    elif w <= -math.pi:
        w += 2.0 * math.pi
    return w


@dataclass(frozen=True)
class ParamPoint:
    """A point in parameter space for one eigenvalue branch."""

    family: str
    values: tuple[float, ...]
    index: int   # eigenvalue number, 1-based

    def __post_init__(self):
        if self.family == "flux":
            object.__setattr__(self, "values", tuple(wrap_angle(v) for v in self.values))


# ---------------------------------------------------------------------------
# fluxes from a vector potential


def flux_from_potential(graph: MetricGraph, cutset: CutSet, a_by_edge) -> tuple[float, ...]:
    """Fluxes alpha_j from a per-edge constant one-form.

    alpha_j integrates the potential around the fundamental cycle of the
    j-th cut edge: along the cut edge tail-to-head, then back through the
    spanning tree; reduced mod 2pi to (-pi, pi].
    """
    cut_edges = [c.edge for c in cutset.cuts]
    if len(set(cut_edges)) != len(cut_edges):
        raise PathNotFound("cut set has two cuts on one edge")
    tree = [e for e in graph.edges if e.eid not in set(cut_edges)]
    uf = _UnionFind(graph.vertex_ids())
    for e in tree:
        if not uf.union(e.tail, e.head):
            raise PathNotFound("non-cut edges contain a cycle")
    if uf.n_classes() != 1:
        raise PathNotFound("non-cut edges do not span the graph")

    adj: dict[str, list[tuple[str, str, float]]] = {v: [] for v in graph.vertex_ids()}
    for e in tree:
        a_e = float(a_by_edge.get(e.eid, 0.0))
        adj[e.tail].append((e.head, e.eid, a_e * e.length))
        adj[e.head].append((e.tail, e.eid, -a_e * e.length))

    def tree_integral(src, dst):
        if src == dst:
            return 0.0
        seen = {src: 0.0}
        stack = [src]
        while stack:
            v = stack.pop()
            for w, _, contrib in adj[v]:
                if w not in seen:
                    seen[w] = seen[v] + contrib
                    if w == dst:
                        return seen[w]
                    stack.append(w)
        raise PathNotFound(f"no tree path {src} -> {dst}")

    alphas = []
    for c in cutset.cuts:
        e = graph.edge(c.edge)
        total = float(a_by_edge.get(e.eid, 0.0)) * e.length + tree_integral(e.head, e.tail)
        alphas.append(wrap_angle(total))
    return tuple(alphas)


# ---------------------------------------------------------------------------
# eigenvalue branches


def lambda_n_alpha(graph: MetricGraph, cutset: CutSet, n: int, alpha,
                   lambda_min=None) -> float:
    """n-th eigenvalue (ascending, with multiplicity) under flux alpha."""
    prob = SpectralProblem(graph, cutset.with_family("flux", tuple(alpha)))
    return find_eigenvalues(prob, n, lambda_min=lambda_min).entry(n)


def lambda_m_gamma(graph: MetricGraph, cutset: CutSet, m: int, gamma,
                   lambda_min=None) -> float:
    """m-th eigenvalue of the Robin-cut operator H_gamma."""
    prob = SpectralProblem(graph, cutset.with_family("robin", tuple(gamma)))
    return find_eigenvalues(prob, m, lambda_min=lambda_min).entry(m)


def _refine_window(prob: SpectralProblem, center: float, width: float, n_grid: int = 41):
    """Real-line sigma_min minima inside [center-width, center+width]; returns
    refined (lambda, distance-to-center) candidates that are eigenvalues."""
    lams = np.linspace(center - width, center + width, n_grid)
    sig = prob.sigma_min(lams)
    cands = []
    for i in range(1, n_grid - 1):
        if sig[i] <= sig[i - 1] and sig[i] <= sig[i + 1]:
            g = lambda x: float(prob.sigma_min(np.array([x]))[0])
            tol = 1e-13 * (1.0 + abs(center))
            lam_c, _ = _golden_min(g, lams[i - 1], lams[i + 1], tol)
            svals = prob.singular_values(np.array([lam_c]))[0]
            if _nullspace_count(svals) >= 1:
                cands.append((abs(lam_c - center), lam_c))
    cands.sort()
    return [lam for _, lam in cands]


def lambda_n_ialpha_continued(graph: MetricGraph, cutset: CutSet, n: int, alpha,
                              path_steps: int = 8, return_pair: bool = False):
    """Real branch of the n-th eigenvalue under an imaginary flux.

    Follows the branch from alpha = 0 along a straight path in alpha space,
    locating at each step the nearest real sigma_min root; the trust window
    adapts to the previous movement, and the path is refined (up to 8x) when
    the branch moves too fast.  Lower eigenvalues may leave the real axis;
    they are irrelevant to the continued branch.
    """
    alpha = np.asarray(alpha, dtype=float)
    base = SpectralProblem(graph, cutset.with_family("glued"))
    spec0 = find_eigenvalues(base, n + 1)
    if not spec0.gap_ok(n):
        raise DegenerateAtZero(f"eigenvalue {n} is not simple at alpha = 0")
    lam0 = spec0.entry(n)
    gap_up = spec0.values[n] - lam0
    gap_dn = lam0 - spec0.values[n - 2] if n >= 2 else math.inf
    w0 = 0.45 * min(gap_up, gap_dn, 4.0 * (1.0 + abs(lam0)))

    steps = path_steps
    for _ in range(4):
        lam = lam0
        prev_delta = 0.0
        ok = True
        for k in range(1, steps + 1):
            a = alpha * (k / steps)
            prob = SpectralProblem(graph, cutset.with_family("imaginary_flux", tuple(a)))
            width = max(w0 / 4.0, 3.0 * abs(prev_delta))
            cands = _refine_window(prob, lam, width)
            if not cands:
                cands = _refine_window(prob, lam, 3.0 * width, n_grid=81)
            if not cands or abs(cands[0] - lam) > 5.0 * width:
                ok = False
                break
            prev_delta = cands[0] - lam
            lam = cands[0]
        if ok:
            if return_pair:
                final = SpectralProblem(graph, cutset.with_family("imaginary_flux", tuple(alpha)))
                return lam, eigenfunction(final, lam)
            return lam
        steps *= 2
    raise BranchLost(f"no real branch candidate after refining to {steps // 2} steps")


# ---------------------------------------------------------------------------
# gamma-tilde and the map R


def gamma_tilde(pair: Eigenpair, cutset: CutSet) -> tuple[float, ...]:
    """Log-derivatives of the eigenfunction at the cut points.

    gamma_j = psi'(c_j+)/psi(c_j+) with the derivative into the edge; the
    two-sided values are cross-checked against each other.
    """
    scale = pair.max_abs()
    out = []
    for eid, t in cutset.positions():
        fp = pair.value_at(eid, t, "+")
        fm = pair.value_at(eid, t, "-")
        if min(abs(fp), abs(fm)) < VERTEX_ZERO_AT_CUT * scale:
            raise ZeroAtCut(f"eigenfunction ~0 at cut ({eid}, {t})")
        g_plus = pair.derivative_at(eid, t, "+") / fp
        g_minus = pair.derivative_at(eid, t, "-") / fm
        if abs(g_plus - g_minus) > 1e-8 * (1.0 + abs(g_plus)):
            raise ZeroAtCut(
                f"two-sided log-derivatives disagree at ({eid}, {t}): "
                f"{g_plus} vs {g_minus}"
            )
        out.append(g_plus)
    return tuple(out)


VERTEX_ZERO_AT_CUT = 1e-8


def map_R(graph: MetricGraph, cutset: CutSet, m: int, gamma):
    """Forward map R: gamma -> alpha via the m-th Robin eigenfunction.

    exp(alpha_j) is the value ratio across cut j; the eigenvalue rides along:
    lambda_m(H_gamma) = lambda(H^{i alpha}).  Returns (alpha, lambda).
    """
    prob = SpectralProblem(graph, cutset.with_family("robin", tuple(gamma)))
    spec = find_eigenvalues(prob, m + 1)
    if not spec.gap_ok(m):
        raise DegenerateEigenvalue(f"Robin eigenvalue {m} is not simple")
    lam = spec.entry(m)
    g = eigenfunction(prob, lam)
    scale = g.max_abs()
    alphas = []
    for j in range(len(cutset.cuts)):
        fm, fp, _, _ = g.cut_trace(j)
        if min(abs(fm), abs(fp)) < VERTEX_ZERO_AT_CUT * scale:
            raise ZeroAtCut(f"Robin eigenfunction ~0 at cut {j}")
        ratio = fp / fm
        if ratio <= 0.0:
            raise SignFlipAtCut(f"value ratio {ratio} <= 0 at cut {j}")
        alphas.append(math.log(ratio))
    return tuple(alphas), lam


def map_R_inverse(graph: MetricGraph, cutset: CutSet, n: int, alpha,
                  path_steps: int = 8):
    """Inverse map: alpha -> gamma via the continued real eigenfunction of
    the imaginary-flux operator.  Returns (gamma, lambda)."""
    lam, pair = lambda_n_ialpha_continued(graph, cutset, n, alpha,
                                          path_steps=path_steps, return_pair=True)
    scale = pair.max_abs()
    gammas = []
    for j in range(len(cutset.cuts)):
        fm, fp, dpm, dpp = pair.cut_trace(j)
        if abs(fp) < VERTEX_ZERO_AT_CUT * scale:
            raise ZeroAtCut(f"continued eigenfunction ~0 at cut {j}")
        gammas.append(dpp / fp)
    return tuple(gammas), lam


# ---------------------------------------------------------------------------
# finite-difference Hessians and Morse indices


@dataclass(frozen=True, eq=False)
class HessianReport:
    """Symmetric finite-difference Hessian with its spectral classification."""

    matrix: np.ndarray
    step: float
    value: float                   # f at the expansion point
    gradient: np.ndarray
    eigenvalues: np.ndarray        # ascending
    morse_index: int
    n_positive: int
    n_degenerate: int
    nondegenerate: bool
    degen_tol: float

    @property
    def gradient_norm(self) -> float:
        return float(np.linalg.norm(self.gradient)) if self.gradient.size else 0.0


def _classify(matrix: np.ndarray, degen_tol: float):
    eigs = np.linalg.eigvalsh(matrix) if matrix.size else np.zeros(0)
    neg = int(np.sum(eigs < -degen_tol))
    pos = int(np.sum(eigs > degen_tol))
    deg = eigs.size - neg - pos
    return eigs, neg, pos, deg


def morse_index(report: HessianReport, degen_tol: float) -> tuple[int, bool]:
    """(number of negative eigenvalues, nondegeneracy flag) at a given tolerance."""
    _, neg, pos, deg = _classify(report.matrix, degen_tol)
    return neg, deg == 0


def _fd_hessian_once(f, point, h, f0):
    d = len(point)
    hess = np.zeros((d, d))
    grad = np.zeros(d)
    for i in range(d):
        e_i = np.zeros(d)
        e_i[i] = h
        fp, fm = f(point + e_i), f(point - e_i)
        hess[i, i] = (fp - 2.0 * f0 + fm) / (h * h)
        grad[i] = (fp - fm) / (2.0 * h)
        for j in range(i + 1, d):
            e_j = np.zeros(d)
            e_j[j] = h
            fpp = f(point + e_i + e_j)
            fpm = f(point + e_i - e_j)
            fmp = f(point - e_i + e_j)
            fmm = f(point - e_i - e_j)
            hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h * h)
    return hess, grad


def hessian_fd(f, point, h: float = 1e-3, degen_tol: float | None = None,
               richardson: bool = True) -> HessianReport:
    """Central-difference Hessian and gradient of a scalar function.

    One Richardson halving cancels the O(h^2) truncation term of both the
    Hessian and the gradient.
    """
    point = np.asarray(point, dtype=float)
    d = len(point)

    def safe(x):
        try:
            return float(f(np.asarray(x, dtype=float)))
        except Exception as exc:  # noqa: BLE001 - stencil failures become a typed error
            raise EvaluationFailed(f"stencil evaluation failed at {x}: {exc}") from exc

    f0 = safe(point) if d else float(f(point))
    if d == 0:
        eigs = np.zeros(0)
        return HessianReport(np.zeros((0, 0)), h, f0, np.zeros(0), eigs,
                             0, 0, 0, True, degen_tol or 0.0)

    hess, grad = _fd_hessian_once(safe, point, h, f0)
    if richardson:
        hess2, grad2 = _fd_hessian_once(safe, point, h / 2.0, f0)
        hess = (4.0 * hess2 - hess) / 3.0
        grad = (4.0 * grad2 - grad) / 3.0
    hess = 0.5 * (hess + hess.T)

    tol = degen_tol if degen_tol is not None else 1e-4 * (1.0 + abs(f0))
    eigs, neg, pos, deg = _classify(hess, tol)
    return HessianReport(hess, h, f0, grad, eigs, neg, pos, deg, deg == 0, tol)


# ---------------------------------------------------------------------------
# spectral symmetry


def symmetry_points(beta: int) -> list[tuple[float, ...]]:
    """The 2^beta centers of symmetry {0, pi}^beta of the flux spectrum."""
    return [tuple(math.pi * b for b in bits) for bits in product((0, 1), repeat=beta)]


def symmetry_spectrum_check(graph: MetricGraph, cutset: CutSet, sigma, alpha,
                            count: int) -> float:
    """Max entrywise deviation between the spectra at sigma - alpha and
    sigma + alpha over the first `count` eigenvalues."""
    sigma = np.asarray(sigma, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    lo = find_eigenvalues(
        SpectralProblem(graph, cutset.with_family("flux", tuple(sigma - alpha))), count)
    hi = find_eigenvalues(
        SpectralProblem(graph, cutset.with_family("flux", tuple(sigma + alpha))), count)
    return max(abs(a - b) for a, b in zip(lo.values, hi.values))
