"""Bethe-box bounds and epsilon-approximate global Bethe free energy minimization
for binary pairwise models."""

from .bbp import BetheBounds, bbp_run, init_bounds
from .bethe import (
    HessianBounds,
    PseudoMarginals,
    bethe_free_energy,
    bethe_gradient,
    bethe_hessian,
    hessian_bounds,
    solve_xi,
    xi_bounds,
)
from .errors import (
    BetheError,
    ConsistencyError,
    DomainError,
    ModelError,
    ParseError,
    ResourceError,
    UnsupportedModelError,
)
from .mapcut import Labeling, extract_labeling, max_flow, minimize, reduce_to_cut
from .mesh import DiscreteEnergy, Mesh, build_energy, build_mesh, rectangle_slack
from .model import Mrf, flip, load_model, make_mrf, parse_model, random_model, random_tree, serialize_model, unbias_reparam
from .pipeline import OptimizeResult, optimize

__version__ = "0.1.0"
