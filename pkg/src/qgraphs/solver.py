"""Eigenvalues and eigenfunctions of metric-graph Schrodinger operators.

Each edge is divided into segments by potential breakpoints and cut points.
On a segment with constant q the solution is f(t) = A c(t) + B s(t) in the
unit-Wronskian basis c(0)=1, c'(0)=0, s(0)=0, s'(0)=1, so (A, B) are the
value and derivative at the segment start.  Vertex, continuity and cut
conditions assemble into a square secular matrix M(lambda) whose nullspace
vectors at an eigenvalue are exactly the eigenfunctions.

Hyperbolic growth (lambda << q, deep Robin wells) is handled by carrying the
transfer entries as mantissa * exp(scale) with one log-scale per segment;
rows are reduced to their largest scale and normalized, which changes
neither the nullspace nor the vanishing of sigma_min.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    DegenerateEigenvalue,
    InvalidGraph,
    NotAnEigenvalue,
    NotSelfAdjointFamily,
    QGraphError,
    ScanStepTooCoarse,
)
from .graphs import CutSet, MetricGraph, require_valid

MULT_TOL = 1e-7          # singular values below MULT_TOL * sigma_max count as nullspace
_DEDUPE_REL = 1e-9


def _nullspace_count(svals) -> int:
    """Number of near-zero singular values of an equilibrated matrix.

    The reference scale is floored at 1: at a maximally degenerate point the
    whole matrix can vanish (every condition row degenerates), in which case
    sigma_max itself is ~0 and all directions belong to the nullspace.
    """
    return int(np.sum(svals < MULT_TOL * max(float(svals[0]), 1.0)))
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_EXP_GUARD = 600.0       # |exponent| above which unscaled evaluation would overflow


def _basis(u, length):
    """Scaled basis data (c, s, c', s') * exp(-m) with m = |Im(sqrt(u)*length)|.

    c(t) = cos(sqrt(u) t), s(t) = sin(sqrt(u) t)/sqrt(u) evaluated at t=length;
    both are entire in u, so the square-root branch is irrelevant.
    """
    u = np.asarray(u, dtype=complex)
    om = np.sqrt(u)
    w = om * length
    m = np.abs(w.imag)
    e1 = np.exp(1j * w - m)
    e2 = np.exp(-1j * w - m)
    c = 0.5 * (e1 + e2)
    sin_scaled = (e1 - e2) / 2j
    z = u * (length * length)
    small = np.abs(z) < 1e-8
    om_safe = np.where(small, 1.0, om)
    s = np.where(
        small,
        length * (1.0 - z / 6.0 * (1.0 - z / 20.0 * (1.0 - z / 42.0))) * np.exp(-m),
        sin_scaled / om_safe,
    )
    cp = -u * s
    return c, s, cp, m


DEEP_EXP = 6.0   # switch to the decaying-exponential segment basis beyond this


def _deep_mask(u, length):
    """Lambda entries where a segment is deep in the hyperbolic regime."""
    u = np.atleast_1d(u)
    real_neg = (u.real < 0) & (u.imag == 0)
    return real_neg & (np.sqrt(np.maximum(-u.real, 0.0)) * length > DEEP_EXP)


def _is_deep(u: float, length: float) -> bool:
    return u < 0 and math.sqrt(-u) * length > DEEP_EXP


def segment_transfer(lam, q: float, length: float) -> np.ndarray:
    """Propagate (f, f') across a constant-q segment: unit-determinant 2x2 matrix."""
    if length <= 0:
        raise ValueError("segment length must be positive")
    c, s, cp, m = _basis(np.array([lam - q]), length)
    if m[0] > _EXP_GUARD:
        raise OverflowError("segment transfer would overflow; lambda - q too negative")
    scale = np.exp(m[0])
    T = np.array([[c[0], s[0]], [cp[0], c[0]]]) * scale
    if not np.iscomplexobj(np.asarray(lam)):
        T = T.real
    return T


@dataclass(frozen=True)
class _Segment:
    edge_pos: int
    eid: str
    t0: float
    t1: float
    q: float

    @property
    def length(self):
        return self.t1 - self.t0


_START, _END = 0, 1


class Assembler:
    """Secular-matrix assembly for one graph geometry (cut positions fixed).

    The jump family and its parameters are supplied per call, so one
    assembler serves a whole family of operators on the same cut graph.
    """

    def __init__(self, graph: MetricGraph, cut_positions=()):
        require_valid(graph)
        self.graph = graph
        self.cut_positions = tuple(cut_positions)
        self.segments: list[_Segment] = []
        # joints: ("continuity", segL, segR) or ("cut", j, segL, segR)
        self.joints: list[tuple] = []
        # vertex id -> list of (seg_index, side)
        self.attachments: dict[str, list[tuple[int, int]]] = {v: [] for v in graph.vertex_ids()}
        self._build_segments()
        self.n = 2 * len(self.segments)

    def _build_segments(self):
        cuts_by_edge: dict[str, list[tuple[float, int]]] = {}
        for j, (eid, t) in enumerate(self.cut_positions):
            e = self.graph.edge(eid)
            if not 0.0 < t < e.length:
                raise InvalidGraph(f"cut ({eid}, {t}) is not interior")
            cuts_by_edge.setdefault(eid, []).append((float(t), j))
        for eid, ts in cuts_by_edge.items():
            ts.sort()
            e = self.graph.edge(eid)
            near = 1e-12 * max(1.0, e.length)
            marks = [t for t, _ in ts] + e.potential_breakpoints()
            marks.sort()
            for a, b in zip(marks, marks[1:]):
                if b - a < near:
                    raise InvalidGraph(f"cut coincides with another breakpoint on {eid}")

        for pos, e in enumerate(self.graph.edges):
            breaks: list[tuple[float, object]] = [(t, "pot") for t in e.potential_breakpoints()]
            for t, j in cuts_by_edge.get(e.eid, []):
                breaks.append((t, j))
            breaks.sort(key=lambda x: x[0])
            pts = [0.0] + [t for t, _ in breaks] + [e.length]
            first = len(self.segments)
            for t0, t1 in zip(pts, pts[1:]):
                q = e.q_at(0.5 * (t0 + t1))
                self.segments.append(_Segment(pos, e.eid, t0, t1, q))
            last = len(self.segments) - 1
            self.attachments[e.tail].append((first, _START))
            self.attachments[e.head].append((last, _END))
            for k, (_, kind) in enumerate(breaks):
                segL, segR = first + k, first + k + 1
                if kind == "pot":
                    self.joints.append(("continuity", segL, segR))
                else:
                    self.joints.append(("cut", kind, segL, segR))

        self._cut_joint: dict[int, tuple[int, int]] = {}
        for j in self.joints:
            if j[0] == "cut":
                self._cut_joint[j[1]] = (j[2], j[3])

    def cut_segments(self, j: int) -> tuple[int, int]:
        """(left, right) segment indices of cut j."""
        return self._cut_joint[j]

    # -- assembly ---------------------------------------------------------

    def build(self, lams, family: str = "glued", params=(), rho_index=None,
              drop_vertices=()):
        """Equilibrated secular matrices for a batch of lambda values.

        Returns (M, b, labels): M has shape (K, rows, 2*segments); b is the
        inhomogeneous right side for the rho system (else None); labels names
        each row.  Rows are scale-reduced and normalized to unit max entry.
        """
        lams = np.atleast_1d(np.asarray(lams))
        K = lams.shape[0]
        complex_mode = np.iscomplexobj(lams) or family == "flux"

        # Per segment: linear functionals (value, derivative at both ends)
        # of the two unknowns.  The unknowns are (f, f') at the segment start
        # except on deep hyperbolic segments, where that representation is
        # exponentially ill-conditioned (couplings e^{-kappa l} drop below
        # roundoff of the O(1) entries) and the decaying-exponential pair
        # p e^{-kappa t} + r e^{-kappa (l - t)} is used instead.
        basis = []
        zeros_k = np.zeros(K)
        ones_k = np.ones(K)
        for seg in self.segments:
            u = lams - seg.q
            c, s, cp, m = _basis(u, seg.length)
            deep = _deep_mask(u, seg.length)
            if np.any(deep):
                kap = np.sqrt(np.where(deep, -u.real, 1.0))
                dec = np.where(deep, np.exp(-kap * seg.length), 0.0)
                vs = (ones_k, np.where(deep, dec, 0.0))
                ds = (np.where(deep, -kap, 0.0), np.where(deep, kap * dec, 1.0))
                ve = (np.where(deep, dec, c), np.where(deep, 1.0, s))
                de = (np.where(deep, -kap * dec, cp), np.where(deep, kap, c))
                scale_e = np.where(deep, 0.0, m)
            else:
                vs = (ones_k, zeros_k)
                ds = (zeros_k, ones_k)
                ve = (c, s)
                de = (cp, c)
                scale_e = m
            basis.append((vs, ds, ve, de, scale_e))

        def val(att):
            seg, side = att
            vs, ds, ve, de, scale_e = basis[seg]
            if side == _START:
                return [(2 * seg, vs[0], None), (2 * seg + 1, vs[1], None)]
            return [(2 * seg, ve[0], scale_e), (2 * seg + 1, ve[1], scale_e)]

        def der(att):
            seg, side = att
            vs, ds, ve, de, scale_e = basis[seg]
            if side == _START:
                return [(2 * seg, ds[0], None), (2 * seg + 1, ds[1], None)]
            return [(2 * seg, de[0], scale_e), (2 * seg + 1, de[1], scale_e)]

        def scaled(terms, factor):
            return [(col, factor * mant, sc) for col, mant, sc in terms]

        rows: list[list] = []
        labels: list[tuple] = []
        rhs: list[float] = []

        for vid, cond in self.graph.vertices:
            if vid in drop_vertices:
                continue
            atts = self.attachments[vid]
            if cond.kind == "dirichlet":
                rows.append(val(atts[0]))
                labels.append(("vertex", vid, "dirichlet"))
                rhs.append(0.0)
                continue
            a0 = atts[0]
            for a in atts[1:]:
                rows.append(val(a) + scaled(val(a0), -1.0))
                labels.append(("vertex", vid, "continuity"))
                rhs.append(0.0)
            sum_row: list = []
            for a in atts:
                sign = 1.0 if a[1] == _START else -1.0  # derivative into the edge
                sum_row += scaled(der(a), sign)
            sum_row += scaled(val(a0), -cond.chi)
            rows.append(sum_row)
            labels.append(("vertex", vid, "sum"))
            rhs.append(0.0)

        for joint in self.joints:
            if joint[0] == "continuity":
                _, segL, segR = joint
                rows.append(scaled(val((segR, _START)), 1.0) + scaled(val((segL, _END)), -1.0))
                labels.append(("joint", self.segments[segL].eid, "value"))
                rhs.append(0.0)
                rows.append(scaled(der((segR, _START)), 1.0) + scaled(der((segL, _END)), -1.0))
                labels.append(("joint", self.segments[segL].eid, "derivative"))
                rhs.append(0.0)
                continue

            _, j, segL, segR = joint
            L_end, R_start = (segL, _END), (segR, _START)
            if rho_index is not None and j == rho_index:
                rows.append(val(L_end))
                labels.append(("rho", j, "minus"))
                rhs.append(0.0)
                rows.append(val(R_start))
                labels.append(("rho", j, "plus"))
                rhs.append(1.0)
                continue
            fam = family if rho_index is None else "glued"
            if fam == "glued":
                factor = 1.0
            elif fam == "flux":
                factor = np.exp(1j * params[j])
            elif fam == "imaginary_flux":
                factor = math.exp(params[j])
            elif fam == "robin":
                gam = params[j]
                rows.append(der(R_start) + scaled(val(R_start), -gam))
                labels.append(("cut", j, "plus"))
                rhs.append(0.0)
                rows.append(der(L_end) + scaled(val(L_end), -gam))
                labels.append(("cut", j, "minus"))
                rhs.append(0.0)
                continue
            else:
                raise QGraphError(f"unknown family {fam!r}")
            rows.append(val(R_start) + scaled(val(L_end), -factor))
            labels.append(("cut", j, "value"))
            rhs.append(0.0)
            rows.append(der(R_start) + scaled(der(L_end), -factor))
            labels.append(("cut", j, "derivative"))
            rhs.append(0.0)

        M = np.zeros((K, len(rows), self.n), dtype=complex)
        b = np.zeros((K, len(rows))) if rho_index is not None else None
        for r, terms in enumerate(rows):
            row_scale = np.zeros(K)
            for _, _, sc in terms:
                if sc is not None:
                    row_scale = np.maximum(row_scale, sc)
            # normalize by the largest term magnitude, not the summed entry:
            # a row may legitimately cancel to ~0 at an eigenvalue and must
            # stay ~0 instead of being rescaled to noise of size one
            gauge = np.zeros(K)
            for col, mant, sc in terms:
                factor = np.exp((0.0 if sc is None else sc) - row_scale)
                term = mant * factor
                M[:, r, col] += term
                gauge = np.maximum(gauge, np.abs(term) * np.ones(K))
            gauge[gauge == 0.0] = 1.0
            M[:, r, :] /= gauge[:, None]
            if b is not None and rhs[r] != 0.0:
                b[:, r] = rhs[r] * np.exp(-row_scale) / gauge
        if not complex_mode:
            M = M.real.astype(float)
        return M, b, labels


@dataclass(frozen=True, eq=False)
class SpectralProblem:
    """A metric graph together with a cut set and jump-condition family."""

    graph: MetricGraph
    cutset: CutSet = CutSet()

    @cached_property
    def assembler(self) -> Assembler:
        return Assembler(self.graph, self.cutset.positions())

    @property
    def family(self) -> str:
        return self.cutset.family

    def matrices(self, lams):
        M, _, _ = self.assembler.build(lams, self.cutset.family, self.cutset.params)
        return M

    def singular_values(self, lams) -> np.ndarray:
        """All singular values (descending) of the equilibrated secular matrix, batched."""
        return np.linalg.svd(self.matrices(lams), compute_uv=False)

    def sigma_min(self, lams) -> np.ndarray:
        return self.singular_values(lams)[..., -1]

    def default_lambda_min(self) -> float:
        """Lower bound for the spectrum scan (trace-inequality estimate)."""
        x = sum(max(0.0, -c.chi) for _, c in self.graph.vertices)
        if self.cutset.family == "robin":
            x += sum(abs(g) for g in self.cutset.params)
        lmin = min(e.length for e in self.graph.edges)
        return -(self.graph.max_abs_q() + 2.0 * x * x + x / lmin) - 1.0


def secular_matrix(problem: SpectralProblem, lam) -> np.ndarray:
    """Equilibrated secular matrix at one lambda (nullspace = eigenfunctions)."""
    return problem.matrices(np.array([lam]))[0]


# ---------------------------------------------------------------------------
# eigenvalue location


@dataclass(frozen=True)
class ScanDiagnostics:
    scan_step: float          # step in the signed-sqrt(lambda) coordinate
    grid_points: int
    candidates: int
    lambda_min: float
    lambda_max_scanned: float


@dataclass(frozen=True, eq=False)
class Spectrum:
    values: tuple[float, ...]           # ascending, repeated with multiplicity
    multiplicities: tuple[int, ...]     # nullspace dimension at each entry
    residuals: tuple[float, ...]        # sigma_min at the refined eigenvalue
    diagnostics: ScanDiagnostics

    def entry(self, n: int) -> float:
        """n-th eigenvalue, 1-based."""
        return self.values[n - 1]

    def gap_ok(self, n: int, rel: float = 1e-6) -> bool:
        """True when the n-th entry is simple and separated from its neighbors."""
        lam = self.values[n - 1]
        tol = rel * (1.0 + abs(lam))
        if self.multiplicities[n - 1] != 1:
            return False
        if n >= 2 and abs(lam - self.values[n - 2]) < tol:
            return False
        if n < len(self.values) and abs(self.values[n] - lam) < tol:
            return False
        return True


def _golden_min(f, a, b, tol, max_iter=140):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while (b - a) > tol and it < max_iter:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        it += 1
    return (c, fc) if fc < fd else (d, fd)


def _lam_of_s(s):
    return s * abs(s)


class _WindowScanner:
    """Lipschitz-refined sigma_min sampling over one s-window.

    Eigenvalue dips are V-shaped zeros of sigma_min; clustered eigenvalues
    (e.g. arm resonances) can sit far closer than the mean Weyl spacing, so a
    uniform grid with local-minimum detection misses dips between samples.
    Instead, an interval is split until a slope bound proves sigma_min cannot
    reach zero inside it: with |d sigma/d s| <= C the minimum over [a, b] is
    at least (sigma(a) + sigma(b) - C (b - a)) / 2.
    """

    def __init__(self, problem, slope_floor):
        self.problem = problem
        self.slope = slope_floor
        self.evals = 0

    def _sigma(self, s_arr):
        self.evals += len(s_arr)
        return self.problem.sigma_min(_lam_of_s(np.asarray(s_arr)))

    def sample(self, s_lo, s_hi, step, depth_max=8, prune_eps=1e-3):
        n0 = max(3, int(math.ceil((s_hi - s_lo) / step)) + 1)
        s = np.linspace(s_lo, s_hi, n0)
        sig = self._sigma(s)
        pts = dict(zip(s.tolist(), sig.tolist()))
        self._bump_slope(s, sig)
        queue = [(s[i], s[i + 1], 0) for i in range(n0 - 1)]
        while queue:
            keep = []
            for a, b, depth in queue:
                fa, fb = pts[a], pts[b]
                lower = 0.5 * (fa + fb - 2.0 * self.slope * (b - a))
                if lower > prune_eps or depth >= depth_max:
                    continue
                keep.append((a, b, depth))
            if not keep:
                break
            mids = np.array([0.5 * (a + b) for a, b, _ in keep])
            sig_m = self._sigma(mids)
            queue = []
            for (a, b, depth), m, fm in zip(keep, mids, sig_m):
                pts[float(m)] = float(fm)
                self.slope = max(
                    self.slope,
                    2.2 * abs(fm - pts[a]) / (m - a),
                    2.2 * abs(pts[b] - fm) / (b - m),
                )
                queue.append((a, float(m), depth + 1))
                queue.append((float(m), b, depth + 1))
        s_sorted = np.array(sorted(pts))
        return s_sorted, np.array([pts[x] for x in s_sorted])

    def _bump_slope(self, s, sig):
        if len(s) >= 2:
            local = np.abs(np.diff(sig)) / np.diff(s)
            if local.size:
                self.slope = max(self.slope, 2.2 * float(local.max()))


def find_eigenvalues(problem: SpectralProblem, count: int, lambda_min=None, *,
                     scan_step=None, window_points: int = 64,
                     max_windows: int = 600) -> Spectrum:
    """First `count` eigenvalues at or above lambda_min, with multiplicity.

    Works window by window in the signed square-root coordinate s
    (lambda = s|s|), where eigenvalue spacing is asymptotically uniform.
    Each window is sampled on a grid with Lipschitz-bound refinement, local
    minima are polished by golden section, and near-zero singular values are
    counted for multiplicity.
    """
    if problem.cutset.family == "imaginary_flux":
        raise NotSelfAdjointFamily("imaginary_flux spectra require branch continuation")
    if count < 1:
        raise ValueError("count must be >= 1")
    if lambda_min is None:
        lambda_min = problem.default_lambda_min()

    total_len = problem.graph.total_length()
    step = scan_step if scan_step is not None else math.pi / (4.0 * total_len)
    s_start = math.copysign(math.sqrt(abs(lambda_min)), lambda_min)
    # |d sigma_min / d s| <= ||dM/ds||_F; entries vary like ell * sin(...), so
    # the bound scales with the longest edge times sqrt(#entries)
    ell_max = max(e.length for e in problem.graph.edges)
    n_seg = len(problem.assembler.segments)
    scanner = _WindowScanner(problem, slope_floor=8.0 * ell_max * math.sqrt(n_seg))

    found: list[tuple[float, int, float]] = []   # (lambda, mult, residual)
    n_found = 0
    candidates = 0

    def polish(a, b, s_mid):
        g = lambda s: float(problem.sigma_min(np.array([_lam_of_s(s)]))[0])
        tol = 5e-13 * (1.0 + abs(s_mid))
        s_star, _ = _golden_min(g, a, b, tol)
        return s_star

    width = window_points * step
    w = 0
    for w in range(max_windows):
        w_lo = s_start + w * width
        s_all, sig_all = scanner.sample(w_lo - step, w_lo + width + step, step)
        for i in range(1, len(s_all) - 1):
            if not (sig_all[i] <= sig_all[i - 1] and sig_all[i] <= sig_all[i + 1]):
                continue
            if sig_all[i] > 0.9 or not (w_lo <= s_all[i] < w_lo + width):
                continue
            candidates += 1
            s_star = polish(s_all[i - 1], s_all[i + 1], s_all[i])
            lam_star = _lam_of_s(s_star)
            svals = problem.singular_values(np.array([lam_star]))[0]
            mult = _nullspace_count(svals)
            if mult == 0:
                continue
            if found and abs(lam_star - found[-1][0]) < _DEDUPE_REL * (1.0 + abs(lam_star)):
                continue
            found.append((lam_star, mult, float(svals[-1])))
            n_found += mult
            if n_found >= count:
                break
        if n_found >= count:
            break
    else:
        raise ScanStepTooCoarse(
            f"found {n_found} of {count} eigenvalues scanning "
            f"lambda in [{lambda_min:.6g}, {_lam_of_s(s_start + max_windows * width):.6g}]; "
            "decrease scan_step or raise max_windows"
        )

    values, mults, residuals = [], [], []
    for lam, mult, res in found:
        for _ in range(mult):
            values.append(lam)
            mults.append(mult)
            residuals.append(res)
            if len(values) == count:
                break
        if len(values) == count:
            break

    diag = ScanDiagnostics(
        scan_step=step,
        grid_points=scanner.evals,
        candidates=candidates,
        lambda_min=lambda_min,
        lambda_max_scanned=_lam_of_s(s_start + (w + 1) * width),
    )
    return Spectrum(tuple(values), tuple(mults), tuple(residuals), diag)


# ---------------------------------------------------------------------------
# eigenfunctions


def _l2_integrals(u: float, length: float):
    """(Icc, Ics, Iss): integrals over [0, length] of c*c, c*s, s*s."""
    z = u * length * length
    if abs(z) < 1e-2:
        icc = length * (1.0 - z / 3.0 + z * z / 15.0 - 2.0 * z ** 3 / 315.0)
        ics = length ** 2 * (0.5 - z / 6.0 + z * z / 45.0 - z ** 3 / 630.0)
        iss = length ** 3 * (1.0 / 3.0 - z / 15.0 + 2.0 * z * z / 315.0 - z ** 3 / 2835.0)
        return icc, ics, iss
    om = complex(u) ** 0.5
    w = om * length
    if abs(w.imag) > 0.5 * _EXP_GUARD:
        raise OverflowError("eigenfunction norm overflow: segment too deep in the hyperbolic regime")
    s2 = (np.sin(2 * w) / (4 * om)).real
    icc = length / 2.0 + s2
    ics = ((1 - np.cos(2 * w)) / (4 * u)).real
    iss = (length / 2.0 - s2) / u
    return icc, ics, iss


def _l2_deep(p: float, r: float, u: float, length: float) -> float:
    """Integral of (p e^{-kt} + r e^{-k(l-t)})^2 over [0, length], k=sqrt(-u)."""
    kap = math.sqrt(-u)
    d = math.exp(-kap * length)
    half = (1.0 - d * d) / (2.0 * kap)
    return (p * p + r * r) * half + 2.0 * p * r * length * d


@dataclass(frozen=True, eq=False)
class Eigenpair:
    """One eigenvalue with per-segment (value, derivative) coefficients.

    Coefficients are those of the L2-normalized real eigenfunction; the
    residual is sigma_min of the equilibrated secular matrix at `value`.
    """

    problem: SpectralProblem
    value: float
    coefficients: np.ndarray     # shape (segments, 2)
    norm: float                  # scale applied to the raw nullspace vector
    residual: float

    # -- evaluation -------------------------------------------------------

    def _segment_for(self, eid: str, t: float, side: str = "+") -> int:
        asm = self.problem.assembler
        hits = [i for i, seg in enumerate(asm.segments) if seg.eid == eid]
        if not hits:
            raise KeyError(eid)
        edge_len = self.problem.graph.edge(eid).length
        tol = 1e-12 * max(1.0, edge_len)
        for i in hits:
            seg = asm.segments[i]
            if seg.t0 - tol <= t <= seg.t1 + tol:
                if abs(t - seg.t1) <= tol and side == "+" and i != hits[-1]:
                    continue
                if abs(t - seg.t0) <= tol and side == "-" and i != hits[0]:
                    return i - 1
                return i
        raise ValueError(f"t={t} outside edge {eid}")

    def _eval(self, seg_idx: int, t_local: float):
        seg = self.problem.assembler.segments[seg_idx]
        a, b = self.coefficients[seg_idx]
        u = self.value - seg.q
        if _is_deep(u, seg.length):
            kap = math.sqrt(-u)
            e1 = math.exp(-kap * t_local)
            e2 = math.exp(-kap * (seg.length - t_local))
            f = a * e1 + b * e2
            fp = -kap * a * e1 + kap * b * e2
            return float(f), float(fp)
        c, s, cp, m = _basis(np.array([u]), t_local)
        if m[0] > _EXP_GUARD:
            raise OverflowError("eigenfunction evaluation overflow")
        scale = math.exp(m[0])
        f = (a * c[0] + b * s[0]) * scale
        fp = (a * cp[0] + b * c[0]) * scale
        return float(f.real), float(fp.real)

    def value_at(self, eid: str, t: float, side: str = "+") -> float:
        i = self._segment_for(eid, t, side)
        seg = self.problem.assembler.segments[i]
        return self._eval(i, t - seg.t0)[0]

    def derivative_at(self, eid: str, t: float, side: str = "+") -> float:
        """Derivative with respect to the edge coordinate (tail-to-head)."""
        i = self._segment_for(eid, t, side)
        seg = self.problem.assembler.segments[i]
        return self._eval(i, t - seg.t0)[1]

    def cut_trace(self, j: int):
        """(f(c-), f(c+), f'(c-), f'(c+)) at cut j, derivatives in edge coordinate."""
        asm = self.problem.assembler
        segL, segR = asm.cut_segments(j)
        seg = asm.segments[segL]
        fm, fpm = self._eval(segL, seg.length)
        fp_, fpp = self.coefficients[segR]
        return fm, float(fp_), fpm, float(fpp)

    def segment_max_abs(self, seg_idx: int) -> float:
        seg = self.problem.assembler.segments[seg_idx]
        a, b = self.coefficients[seg_idx]
        u = self.value - seg.q
        ell = seg.length
        cands = [abs(self._eval(seg_idx, 0.0)[0]), abs(self._eval(seg_idx, ell)[0])]
        if _is_deep(u, ell):
            # interior extrema of p e^{-kt} + r e^{-k(l-t)} are exponentially
            # small; the endpoint values dominate
            return max(cands)
        if u > 1e-12:
            om = math.sqrt(u)
            r = math.hypot(a, b / om)
            dlt = math.atan2(b / om, a)
            k0 = math.ceil((0.0 - dlt) / math.pi)
            if (dlt + k0 * math.pi) / om < ell:
                cands.append(r)
        elif u < -1e-12:
            kap = math.sqrt(-u)
            p, qq = (a + b / kap) / 2.0, (a - b / kap) / 2.0
            if p != 0 and qq / p > 0:
                tc = math.log(qq / p) / (2 * kap)
                if 0.0 < tc < ell:
                    cands.append(abs(self._eval(seg_idx, tc)[0]))
        return max(cands)

    def max_abs(self) -> float:
        return max(self.segment_max_abs(i) for i in range(len(self.problem.assembler.segments)))

    def l2_norm_sq(self) -> float:
        total = 0.0
        for i, seg in enumerate(self.problem.assembler.segments):
            a, b = self.coefficients[i]
            u = self.value - seg.q
            if _is_deep(u, seg.length):
                total += _l2_deep(a, b, u, seg.length)
            else:
                icc, ics, iss = _l2_integrals(u, seg.length)
                total += a * a * icc + 2 * a * b * ics + b * b * iss
        return total


def eigenfunction(problem: SpectralProblem, lam: float) -> Eigenpair:
    """Extract the normalized eigenfunction at a simple eigenvalue."""
    M = secular_matrix(problem, lam)
    if np.iscomplexobj(M):
        raise QGraphError(
            "eigenfunction extraction needs a real secular matrix "
            "(families glued, robin, imaginary_flux)"
        )
    _, svals, vh = np.linalg.svd(M)
    mult = _nullspace_count(svals)
    if mult == 0:
        raise NotAnEigenvalue(f"sigma_min = {svals[-1]:.3e} at lambda = {lam}")
    if mult > 1:
        raise DegenerateEigenvalue(f"multiplicity {mult} at lambda = {lam}")
    vec = vh[-1]
    coeffs = vec.reshape(-1, 2).copy()

    pair = Eigenpair(problem, float(lam), coeffs, 1.0, float(svals[-1]))
    scale = 1.0 / math.sqrt(pair.l2_norm_sq())

    # fix the global sign: value at the first segment start >= 0, falling back
    # to the first significant coefficient when that value is ~0
    flat = np.abs(vec)
    tol = 1e-9 * flat.max()
    v0 = pair._eval(0, 0.0)[0]
    ref = v0 if abs(v0) > tol else vec[int(np.argmax(flat > tol))]
    sign = 1.0 if ref >= 0 else -1.0
    coeffs *= sign * scale
    return Eigenpair(problem, float(lam), coeffs, sign * scale, float(svals[-1]))
