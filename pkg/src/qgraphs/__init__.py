"""Spectra of Schrodinger operators on compact metric graphs.

Computes eigenvalues/eigenfunctions under parametric vertex and cut
conditions (magnetic flux, imaginary flux, Robin cuts) and verifies the
relations between nodal counts of eigenfunctions and Morse indices of the
eigenvalue functionals.
"""

from .graphs import (
    CutPoint,
    CutSet,
    Edge,
    MetricGraph,
    VertexCondition,
    betti,
    betti_removed,
    component_count_removed,
    components,
    cut_for_nodal_set,
    delta,
    dirichlet,
    sever_at,
    spanning_tree_cuts,
    split_vertex_dirichlet,
    subdivide_at,
    validate,
)
from .solver import (
    Eigenpair,
    SpectralProblem,
    Spectrum,
    eigenfunction,
    find_eigenvalues,
    secular_matrix,
    segment_transfer,
)

__all__ = [
    "CutPoint", "CutSet", "Edge", "MetricGraph", "VertexCondition",
    "betti", "betti_removed", "component_count_removed", "components",
    "cut_for_nodal_set", "delta", "dirichlet", "sever_at",
    "spanning_tree_cuts", "split_vertex_dirichlet", "subdivide_at", "validate",
    "Eigenpair", "SpectralProblem", "Spectrum", "eigenfunction",
    "find_eigenvalues", "secular_matrix", "segment_transfer",
]
