"""Transverse-mode Galerkin reduction of the full waveguide form.

The shifted form on the n-th channel is discretized by expanding over the
retained cross-section modes n..M (dropping modes 1..n-1 realizes the
orthogonal-complement constraint exactly) with P1 coefficient functions
along the axis.  The transverse energy enters only through the differences
(lambda_m - lambda_n)/eps^2, so the divergent part is never formed and no
catastrophic cancellation occurs at small eps.

The symmetric part of the first-order coupling is assembled through its
integrated-by-parts equivalent (endpoint terms minus an alpha''-weighted
mass), which makes the single-block reduction M = n coincide with the
effective 1D assembly entry for entry.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from . import _fem1d
from ._util import ordered_map
from .errors import ConfigError, DegenerateModeError
from .spectral import GeneralizedEigenProblem, lowest_eigenpairs
from .twist import interval_grid, periodic_grid


@dataclass(frozen=True)
class FullModelConfig:
    """Target channel n, half-width eps, transverse cutoff M, axis discretization."""

    n: int
    eps: float
    M: int
    s_nodes: int
    case: str = "interval"      # "interval" or "fiber"
    theta: float = 0.0          # fiber quasimomentum

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"mode index n must be >= 1, got {self.n}")
        if self.M < self.n:
            raise ConfigError(f"cutoff M={self.M} must be >= n={self.n}")
        if not (0.0 < self.eps <= 0.5):
            raise ConfigError(f"eps must lie in (0, 0.5], got {self.eps}")
        if self.s_nodes < 64:
            raise ConfigError(f"s_nodes must be >= 64, got {self.s_nodes}")
        if self.case not in ("interval", "fiber"):
            raise ConfigError(f"case must be 'interval' or 'fiber', got {self.case!r}")


@dataclass(frozen=True)
class ReducedSystem:
    config: FullModelConfig
    grid: np.ndarray
    mode_indices: tuple       # retained 1-based transverse modes n..M
    problem: GeneralizedEigenProblem


def assemble_reduced(config, modes, coupling, profile, *, allow_degenerate=False):
    """Block generalized eigenproblem for the shifted form over modes n..M."""
    n, M = config.n, config.M
    if M > modes.count or M > coupling.cutoff:
        raise ConfigError(
            f"cutoff M={M} exceeds available modes ({modes.count}) or coupling ({coupling.cutoff})"
        )
    if modes.degenerate_flags[n - 1] and not allow_degenerate:
        raise DegenerateModeError(f"target mode {n} is flagged degenerate")
    fiber = config.case == "fiber"
    if fiber != (profile.kind == "periodic"):
        raise ConfigError("fiber case needs a periodic twist, interval case an interval twist")

    if fiber:
        grid = periodic_grid(profile.period, config.s_nodes)
        theta = config.theta
        if abs(theta) > math.pi / profile.period * (1 + 1e-12):
            raise ConfigError(f"theta {theta} outside the Brillouin zone")
    else:
        grid = interval_grid(profile.a, profile.b, config.s_nodes)
        theta = 0.0

    dal = profile.dalpha(grid)
    ddal = profile.ddalpha(grid)
    nn = len(grid)

    K = _fem1d.stiffness(grid, periodic=fiber)
    Mm = _fem1d.mass(grid, periodic=fiber)
    M_a2 = _fem1d.mass(grid, periodic=fiber, weight=dal**2)
    M_dd = _fem1d.mass(grid, periodic=fiber, weight=ddal)
    Gs = _fem1d.weighted_skew(grid, dal, periodic=fiber)
    if fiber:
        sym_part = -0.5 * M_dd
        M_a1 = _fem1d.mass(grid, periodic=fiber, weight=dal)
        C = _fem1d.first_derivative_skew(grid, periodic=True)
        diag_base = K + (theta * theta) * Mm
    else:
        corners = _fem1d.corner_matrix(nn, float(dal[0]), float(dal[-1]))
        sym_part = 0.5 * (corners - M_dd)
        diag_base = K

    complex_blocks = fiber and theta != 0.0
    lam = modes.lambdas
    modes_kept = list(range(n, M + 1))
    blocks = []
    for k in modes_kept:
        row = []
        for m in modes_kept:
            a_km = coupling.A[k - 1, m - 1]
            a_mk = coupling.A[m - 1, k - 1]
            b_mk = coupling.B[m - 1, k - 1]
            block = (a_km + a_mk) * sym_part + (a_km - a_mk) * Gs + b_mk * M_a2
            if k == m:
                shift = (lam[m - 1] - lam[n - 1]) / (config.eps * config.eps)
                block = block + diag_base + shift * Mm
            if complex_blocks:
                block = block.astype(complex) + (1j * theta) * ((a_km - a_mk) * M_a1)
                if k == m:
                    block = block + (1j * theta) * C
            row.append(block)
        blocks.append(row)

    A = sp.block_array(blocks, format="csr")
    B = sp.block_diag([Mm] * len(modes_kept), format="csr")
    if complex_blocks:
        B = B.astype(complex)
    problem = GeneralizedEigenProblem(A=A, B=B)
    return ReducedSystem(config=config, grid=grid, mode_indices=tuple(modes_kept), problem=problem)


def shifted_spectrum(system, jmax, tol=1e-9):
    """Lowest jmax eigenvalues of the shifted form (already renormalized)."""
    if jmax > system.problem.dim // 4:
        raise ConfigError(f"jmax {jmax} too large for system of dimension {system.problem.dim}")
    sol = lowest_eigenpairs(system.problem, jmax, tol=tol, sigma=-1.0)
    return sol.values


@dataclass(frozen=True)
class ConvergenceReport:
    eps: np.ndarray
    values: np.ndarray        # (len(eps), jmax) shifted eigenvalues
    oracle: np.ndarray
    errors: np.ndarray        # absolute errors
    monotone_errors: bool     # errors nonincreasing as eps decreases
    monotone_values: bool     # shifted values nondecreasing as eps decreases
    final_ok: bool            # smallest-eps error below threshold
    threshold: float


def _study(config, modes, coupling, profile, eps_list, oracle_values, jmax, threshold,
           allow_degenerate=False):
    eps = np.asarray(eps_list, dtype=float)
    if len(eps) < 3 or np.any(np.diff(eps) >= 0):
        raise ConfigError("eps_list must be strictly decreasing with at least 3 values")
    oracle = np.asarray(oracle_values, dtype=float)
    if len(oracle) < jmax:
        raise ConfigError(f"oracle provides {len(oracle)} values, need jmax={jmax}")
    oracle = oracle[:jmax]

    def solve(e):
        system = assemble_reduced(replace(config, eps=float(e)), modes, coupling, profile,
                                  allow_degenerate=allow_degenerate)
        return shifted_spectrum(system, jmax)

    values = np.vstack(ordered_map(solve, eps))
    errors = np.abs(values - oracle)
    slack = 1e-8 * np.maximum(1.0, np.abs(oracle))
    monotone_errors = bool(np.all(np.diff(errors, axis=0) <= slack))
    monotone_values = bool(np.all(np.diff(values, axis=0) >= -slack))
    rel_final = errors[-1] / np.maximum(1.0, np.abs(oracle))
    final_ok = bool(np.max(rel_final) <= threshold)
    return ConvergenceReport(eps=eps, values=values, oracle=oracle, errors=errors,
                             monotone_errors=monotone_errors, monotone_values=monotone_values,
                             final_ok=final_ok, threshold=threshold)


def convergence_study(config, modes, coupling, profile, eps_list, oracle, jmax,
                      threshold=0.01, allow_degenerate=False):
    """Shifted interval spectra against the effective 1D oracle across an eps sweep."""
    if config.case != "interval":
        raise ConfigError("convergence_study runs the interval case")
    return _study(config, modes, coupling, profile, eps_list, oracle.values, jmax, threshold,
                  allow_degenerate=allow_degenerate)


def fiber_convergence_study(config, modes, coupling, profile, eps_list, oracle_values, jmax,
                            threshold=0.01, allow_degenerate=False):
    """Shifted fiber spectra against the effective band values k_{n,j}(theta)."""
    if config.case != "fiber":
        raise ConfigError("fiber_convergence_study runs the fiber case")
    return _study(config, modes, coupling, profile, eps_list, oracle_values, jmax, threshold,
                  allow_degenerate=allow_degenerate)


@dataclass(frozen=True)
class PersistenceResult:
    status: str           # "ok" or "skipped"
    j: int
    eps: float
    margin: float         # (min E_{j+1} - max E_j) - half_gap
    half_gap: float
    min_upper: float
    max_lower: float


def gap_persistence_check(config, modes, coupling, profile, eps, j, gap,
                          theta_count=9, allow_degenerate=False):
    """Check min_theta E_{j+1} - max_theta E_j >= |G_j| / 2 in the full model."""
    if not gap.is_open:
        return PersistenceResult(status="skipped", j=j, eps=float(eps), margin=float("nan"),
                                 half_gap=0.0, min_upper=float("nan"), max_lower=float("nan"))
    L = profile.period
    thetas = np.linspace(-math.pi / L, math.pi / L, theta_count)

    def solve(th):
        cfg = replace(config, case="fiber", eps=float(eps), theta=float(th))
        system = assemble_reduced(cfg, modes, coupling, profile,
                                  allow_degenerate=allow_degenerate)
        return shifted_spectrum(system, j + 1)

    spectra = np.vstack(ordered_map(solve, thetas))
    max_lower = float(spectra[:, j - 1].max())
    min_upper = float(spectra[:, j].min())
    half_gap = 0.5 * gap.width
    return PersistenceResult(status="ok", j=j, eps=float(eps),
                             margin=(min_upper - max_lower) - half_gap,
                             half_gap=half_gap, min_upper=min_upper, max_lower=max_lower)


@dataclass(frozen=True)
class ChangeOfVariablesReport:
    metric_residual: float      # max |J J^T - G|
    det_residual: float         # max |det J - eps^2|
    inverse_residual: float     # max |J J_inv - I| with the closed-form inverse


def validate_change_of_variables(profile, eps, sample_points):
    """Check the straightening map's Jacobian identities at sample points."""
    pts = np.asarray(sample_points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ConfigError("sample_points must be an array of (s, y1, y2) rows")
    met = det = inv = 0.0
    eye = np.eye(3)
    for s, y1, y2 in pts:
        al = float(profile.alpha(np.array([s]))[0])
        dal = float(profile.dalpha(np.array([s]))[0])
        ca, sa = math.cos(al), math.sin(al)
        z_perp = y1 * sa + y2 * ca
        z_par = y1 * ca - y2 * sa
        J = np.array([
            [1.0, -eps * dal * z_perp, eps * dal * z_par],
            [0.0, eps * ca, eps * sa],
            [0.0, -eps * sa, eps * ca],
        ])
        G = np.array([
            [1.0 + eps**2 * dal**2 * (y1**2 + y2**2), -eps**2 * dal * y2, eps**2 * dal * y1],
            [-eps**2 * dal * y2, eps**2, 0.0],
            [eps**2 * dal * y1, 0.0, eps**2],
        ])
        J_inv = np.array([
            [1.0, dal * y2, -dal * y1],
            [0.0, ca / eps, -sa / eps],
            [0.0, sa / eps, ca / eps],
        ])
        met = max(met, float(np.abs(J @ J.T - G).max()))
        det = max(det, abs(float(np.linalg.det(J)) - eps**2))
        inv = max(inv, float(np.abs(J @ J_inv - eye).max()))
    return ChangeOfVariablesReport(metric_residual=met, det_residual=det, inverse_residual=inv)
