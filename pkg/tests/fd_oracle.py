"""Independent finite-difference reference solver for metric-graph spectra.

P1 stiffness with lumped (trapezoid) mass on per-segment uniform grids,
assembled from the quadratic form: bond terms (f_i - f_j)^2 / h, vertex
terms chi_v f(v)^2, Dirichlet leaves eliminated.  A magnetic flux enters as
a phase on one bond of the cut edge (gauge-equivalent to any distribution).
Second-order accurate; Richardson extrapolation over a density pair removes
the h^2 term.

Deliberately shares nothing with the package's transfer-matrix solver.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


def _edge_grid(edge, points_per_unit):
    """Per-potential-segment node counts so q is constant on every bond."""
    counts = []
    for seg_len, q in edge.potential:
        counts.append((max(2, int(np.ceil(seg_len * points_per_unit))), seg_len, q))
    return counts


def fd_spectrum(graph, k, points_per_unit=1500, fluxes=None, sigma_shift=None):
    """First k eigenvalues at one resolution (no extrapolation).

    fluxes: optional {edge_id: phase} applied on the first bond of the edge.
    """
    fluxes = fluxes or {}
    index = {}
    n_nodes = 0

    def node(key):
        nonlocal n_nodes
        if key not in index:
            index[key] = n_nodes
            n_nodes += 1
        return index[key]

    dirichlet_ids = {v for v, c in graph.vertices if c.kind == "dirichlet"}
    rows, cols, k_vals = [], [], []
    mass = {}
    complex_mode = any(abs(p) > 0 for p in fluxes.values())

    def add_k(i, j, v):
        rows.append(i)
        cols.append(j)
        k_vals.append(v)

    def add_mass(i, v):
        mass[i] = mass.get(i, 0.0) + v

    for e in graph.edges:
        chain = []
        for si, (cnt, seg_len, q) in enumerate(_edge_grid(e, points_per_unit)):
            h = seg_len / cnt
            for b in range(cnt):
                chain.append((e.eid, si, b, h, q))
        # nodes: vertex / interior / vertex
        n_b = len(chain)
        keys = [("v", e.tail)] + [("i", e.eid, m) for m in range(n_b - 1)] + [("v", e.head)]
        phase = fluxes.get(e.eid, 0.0)
        for b, (eid, si, bi, h, q) in enumerate(chain):
            ka, kb = keys[b], keys[b + 1]
            drop_a = ka[0] == "v" and ka[1] in dirichlet_ids
            drop_b = kb[0] == "v" and kb[1] in dirichlet_ids
            ia = None if drop_a else node(ka)
            ib = None if drop_b else node(kb)
            hop = np.exp(1j * phase) / h if (b == 0 and phase) else 1.0 / h
            if ia is not None:
                add_k(ia, ia, 1.0 / h + q * h / 2.0)
                add_mass(ia, h / 2.0)
            if ib is not None:
                add_k(ib, ib, 1.0 / h + q * h / 2.0)
                add_mass(ib, h / 2.0)
            if ia is not None and ib is not None:
                add_k(ia, ib, -hop)
                add_k(ib, ia, -np.conj(hop))

    for v, cond in graph.vertices:
        if cond.kind == "delta" and cond.chi != 0.0 and ("v", v) in index:
            i = index[("v", v)]
            add_k(i, i, cond.chi)

    dtype = complex if complex_mode else float
    K = sp.coo_matrix((np.array(k_vals, dtype=dtype), (rows, cols)),
                      shape=(n_nodes, n_nodes)).tocsc()
    m_diag = np.zeros(n_nodes)
    for i, v in mass.items():
        m_diag[i] = v
    d_inv = 1.0 / np.sqrt(m_diag)
    A = sp.diags(d_inv) @ K @ sp.diags(d_inv)
    A = (A + A.conj().T) * 0.5

    if sigma_shift is None:
        chi_neg = sum(max(0.0, -c.chi) for _, c in graph.vertices)
        lmin = min(e.length for e in graph.edges)
        qmax = max((abs(q) for e in graph.edges for _, q in e.potential), default=0.0)
        sigma_shift = -(qmax + 2.0 * chi_neg ** 2 + chi_neg / lmin) - 2.0
    vals = spla.eigsh(A, k=k, sigma=sigma_shift, which="LM",
                      return_eigenvectors=False)
    return np.sort(vals.real)


def fd_spectrum_extrapolated(graph, k, points_per_unit=1500, fluxes=None):
    """Richardson pair (h, h/2): eliminates the O(h^2) eigenvalue error."""
    lo = fd_spectrum(graph, k, points_per_unit, fluxes)
    hi = fd_spectrum(graph, k, 2 * points_per_unit, fluxes)
    return (4.0 * hi - lo) / 3.0


def fd_eigenvector(graph, which, points_per_unit=1500):
    """(positions, values) of the `which`-th (1-based) eigenvector, for shape
    comparisons; positions are (edge_id, t) per interior node."""
    index = {}
    n_nodes = 0

    def node(key):
        nonlocal n_nodes
        if key not in index:
            index[key] = n_nodes
            n_nodes += 1
        return index[key]

    dirichlet_ids = {v for v, c in graph.vertices if c.kind == "dirichlet"}
    rows, cols, k_vals = [], [], []
    mass = {}
    loc = {}

    for e in graph.edges:
        chain = []
        for si, (cnt, seg_len, q) in enumerate(_edge_grid(e, points_per_unit)):
            h = seg_len / cnt
            for b in range(cnt):
                chain.append((h, q))
        n_b = len(chain)
        keys = [("v", e.tail)] + [("i", e.eid, m) for m in range(n_b - 1)] + [("v", e.head)]
        t = 0.0
        pos = {keys[0]: 0.0}
        for b, (h, q) in enumerate(chain):
            t += h
            pos[keys[b + 1]] = t
        for key, tt in pos.items():
            if key[0] == "i":
                loc.setdefault(key, (e.eid, tt))
        for b, (h, q) in enumerate(chain):
            ka, kb = keys[b], keys[b + 1]
            ia = None if (ka[0] == "v" and ka[1] in dirichlet_ids) else node(ka)
            ib = None if (kb[0] == "v" and kb[1] in dirichlet_ids) else node(kb)
            if ia is not None:
                rows.append(ia); cols.append(ia); k_vals.append(1.0 / h + q * h / 2.0)
                mass[ia] = mass.get(ia, 0.0) + h / 2.0
            if ib is not None:
                rows.append(ib); cols.append(ib); k_vals.append(1.0 / h + q * h / 2.0)
                mass[ib] = mass.get(ib, 0.0) + h / 2.0
            if ia is not None and ib is not None:
                rows.append(ia); cols.append(ib); k_vals.append(-1.0 / h)
                rows.append(ib); cols.append(ia); k_vals.append(-1.0 / h)

    for v, cond in graph.vertices:
        if cond.kind == "delta" and cond.chi != 0.0 and ("v", v) in index:
            i = index[("v", v)]
            rows.append(i); cols.append(i); k_vals.append(cond.chi)

    K = sp.coo_matrix((np.array(k_vals), (rows, cols)), shape=(n_nodes, n_nodes)).tocsc()
    m_diag = np.zeros(n_nodes)
    for i, v in mass.items():
        m_diag[i] = v
    d_inv = 1.0 / np.sqrt(m_diag)
    A = sp.diags(d_inv) @ K @ sp.diags(d_inv)
    A = (A + A.T) * 0.5
    chi_neg = sum(max(0.0, -c.chi) for _, c in graph.vertices)
    lmin = min(e.length for e in graph.edges)
    shift = -(2.0 * chi_neg ** 2 + chi_neg / lmin) - 2.0
    vals, vecs = spla.eigsh(A, k=which + 1, sigma=shift, which="LM")
    order = np.argsort(vals)
    vec = (sp.diags(d_inv) @ vecs[:, order[which - 1]])
    positions, samples = [], []
    for key, i in index.items():
        if key in loc:
            positions.append(loc[key])
            samples.append(vec[i])
    return positions, np.array(samples)
