"""Spectral toolkit for thin twisted waveguides.

Pipeline: cross-section Neumann modes and twist-coupling integrals ->
effective 1D Schrodinger operators with twist-induced potential and Robin
endpoint terms -> Floquet-Bloch band structures, gaps and gap-width
asymptotics -> transverse-mode Galerkin verification of the thin-limit
convergence and gap persistence.
"""

__version__ = "0.1.0"

from .effective import Operator1D, Spectrum1D, assemble_interval_operator, spectrum_1d
from .errors import (
    ConfigError,
    DegenerateModeError,
    MeshError,
    NotPositiveDefiniteError,
    SolverConvergenceError,
    TwistbandError,
)
from .floquet import (
    BandStructure,
    BorgDiagnostic,
    FiberOperator,
    GapAsymptotics,
    GapEntry,
    GapReport,
    ScaledGapStudy,
    assemble_fiber,
    band_structure,
    bands_and_gaps,
    borg_diagnostic,
    fiber_spectrum,
    gap_asymptotics,
    gap_width_at,
    periodic_antiperiodic_spectra,
    scaled_gap_study,
)
from .mesh import SectionGeometry, TriangleMesh, build_mesh, preset
from .section import (
    CouplingData,
    TransverseModeSet,
    assemble_neumann_forms,
    boundary_moment,
    coupling_constants,
    coupling_matrices,
    rayleigh_quotient,
    solve_transverse_modes,
    spectral_gap_check,
)
from .spectral import (
    EigenSolution,
    GeneralizedEigenProblem,
    lowest_eigenpairs,
    verify_solution,
)
from .twist import (
    SampledPotential,
    TwistProfile,
    effective_potential,
    fourier_coefficients,
    interval_grid,
    make_twist,
    periodic_grid,
    polynomial_twist,
    trig_twist,
    w_potential,
)
from .waveguide import (
    ChangeOfVariablesReport,
    ConvergenceReport,
    FullModelConfig,
    PersistenceResult,
    ReducedSystem,
    assemble_reduced,
    convergence_study,
    fiber_convergence_study,
    gap_persistence_check,
    shifted_spectrum,
    validate_change_of_variables,
)
