"""lohelab: a numerical laboratory for Lohe-type tensor aggregation dynamics.

Simulates ensembles of same-shape complex tensors coupled through cubic
interactions plus a shared norm-preserving free flow, verifies the flow's
structural identities (norm conservation, contraction/matricization
equivalence, solution splitting, variance dissipation), and classifies the
emergent asymptotic states (complete aggregation vs. two-pole splits).
"""

from .diagnostics import (
    DiagnosticsRecord,
    PoleAssignment,
    classify_poles,
    decay_rate_fit,
    dissipation,
    dissipation_residual,
    order_parameter,
    variance,
)
from .dynamics import (
    NormDriftError,
    Trajectory,
    bipolar_ensemble,
    centroid,
    clustered_ensemble,
    fundamental_invariant,
    random_ensemble,
    rhs,
    simulate,
    simulate_batch,
    step,
)
from .freeflow import FreeFlowOp, free_flow_solve, split_verify, ssp_check, ssp_residual
from .reshape import ReshapePlan, cubic_fast, dematricize, matricize, plan
from .state import CouplingSet, EnsembleState, SimParams
from .tensors import (
    contract_cubic,
    ensemble_diameter,
    frobenius_inner,
    frobenius_norm,
    linear_offset,
)

__version__ = "0.1.0"

__all__ = [
    "CouplingSet",
    "DiagnosticsRecord",
    "EnsembleState",
    "FreeFlowOp",
    "NormDriftError",
    "PoleAssignment",
    "ReshapePlan",
    "SimParams",
    "Trajectory",
    "bipolar_ensemble",
    "centroid",
    "classify_poles",
    "clustered_ensemble",
    "contract_cubic",
    "cubic_fast",
    "decay_rate_fit",
    "dematricize",
    "dissipation",
    "dissipation_residual",
    "ensemble_diameter",
    "free_flow_solve",
    "frobenius_inner",
    "frobenius_norm",
    "fundamental_invariant",
    "linear_offset",
    "matricize",
    "order_parameter",
    "plan",
    "random_ensemble",
    "rhs",
    "simulate",
    "simulate_batch",
    "split_verify",
    "ssp_check",
    "ssp_residual",
    "step",
    "variance",
    "__version__",
]
