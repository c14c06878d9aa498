"""Exception types raised across the package."""


class QGraphError(Exception):
    """Base class for all qgraphs errors."""


class InvalidGraph(QGraphError):
    """Graph violates a structural invariant (see validate() for diagnostics)."""


class DuplicatePoint(QGraphError):
    """Two marked points on an edge coincide (or hit an existing breakpoint)."""


class EpsilonTooLarge(QGraphError):
    """A nodal-set cut offset would leave its segment or collide with another marked point."""


class PathNotFound(QGraphError):
    """Cut set is not consistent with a spanning tree of the graph."""


class ScanStepTooCoarse(QGraphError):
    """Eigenvalue scan found fewer eigenvalues than the Weyl count predicts."""


class NotSelfAdjointFamily(QGraphError):
    """Operation requires a real-spectrum family (glued, flux, robin)."""


class NotAnEigenvalue(QGraphError):
    """Secular matrix is not rank deficient at the requested value."""


class DegenerateEigenvalue(QGraphError):
    """Eigenvalue has multiplicity >= 2 where simplicity is required."""


class DegenerateAtZero(QGraphError):
    """Branch continuation requires a simple eigenvalue at zero parameter."""


class BranchLost(QGraphError):
    """Real-line continuation lost the eigenvalue branch."""


class VertexZero(QGraphError):
    """Eigenfunction vanishes at a vertex; nodal counts are ill-defined there."""


class ZeroAtCut(QGraphError):
    """Eigenfunction vanishes at a cut point; move the cut and retry."""


class SignFlipAtCut(QGraphError):
    """Eigenfunction changes sign across a cut; outside the neighborhood where R is defined."""


class ConditionMismatch(QGraphError):
    """Wronskian arguments do not solve the same equation with matching conditions."""


class DirichletResonance(QGraphError):
    """lambda lies in the Dirichlet spectrum of the cut point; rho is not defined."""


class ImproperPartition(QGraphError):
    """Partition points must be distinct interior edge points."""


class EvaluationFailed(QGraphError):
    """A stencil evaluation failed while building a finite-difference Hessian."""
