"""Finite-volume quantum lattice statistical mechanics: interactions, Gibbs states, certificates, quenches."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from ._settings import DEFAULT_CAP, cap_override, current_cap
from .errors import *  # noqa: F401,F403
from .operator_core import (
    DensityMatrix,
    LatticeOperator,
    SiteSpace,
    Volume,
    embed,
    matrix_function,
    operator_norm,
    partial_trace,
    trace_distance,
)
from .interactions import (
    Interaction,
    SubsetShape,
    br_norm,
    builtin,
    local_hamiltonian,
    physically_equivalent,
    specific_energy_observable,
    surface_energy,
)
from .thermodynamics import (
    ThermoPoint,
    WeakGibbsCertificate,
    extrapolate,
    gibbs_state,
    pressure,
    relative_entropy,
    thermo_point,
    variational_gap,
    von_neumann_entropy,
    weak_gibbs_certificate,
)
from .dynamics import (
    EvolutionContext,
    QuenchExperiment,
    cesaro_average,
    evolve_state,
    expansional,
    run_quench,
    sandwich_bounds,
)
from .fermions import FermionInteraction, jordan_wigner, number_conservation_audit
