"""Effective 1D operator -d^2/ds^2 + V_n on a bounded interval.

The operator is realized through its quadratic form, including the two
endpoint terms +C2 alpha'(b) |w(b)|^2 - C2 alpha'(a) |w(a)|^2 that encode
the Robin conditions w'(a) = -C2 alpha'(a) w(a), w'(b) = -C2 alpha'(b) w(b).
No essential constraints are imposed and no difference stencil is modified,
so the assembled matrix is symmetric by construction.
"""

from dataclasses import dataclass

import numpy as np

from . import _fem1d
from .errors import ConfigError
from .spectral import GeneralizedEigenProblem, lowest_eigenpairs
from .twist import interval_grid


@dataclass(frozen=True)
class Operator1D:
    """Assembled stiffness/mass pair for the interval operator."""

    grid: np.ndarray
    v_values: np.ndarray
    r_a: float            # C2 * alpha'(a)
    r_b: float            # C2 * alpha'(b)
    problem: GeneralizedEigenProblem

    @property
    def nodes(self):
        return len(self.grid)


@dataclass(frozen=True)
class Spectrum1D:
    values: np.ndarray
    nodes: int
    boundary: tuple       # (r_a, r_b) echo


def assemble_interval_operator(V, profile, c2, nodes):
    """P1 assembly of the form with potential V and the two boundary terms."""
    if profile.kind != "interval":
        raise ConfigError("interval operator needs an interval twist profile")
    if nodes < 64:
        raise ConfigError(f"nodes must be >= 64, got {nodes}")
    if len(V.grid) != nodes:
        raise ConfigError(f"potential sampled on {len(V.grid)} nodes, expected {nodes}")
    expected = interval_grid(profile.a, profile.b, nodes)
    if not np.allclose(V.grid, expected, rtol=0, atol=1e-9 * max(1.0, profile.length)):
        raise ConfigError("potential grid does not match the profile interval")

    r_a = float(c2 * profile.dalpha(np.array([profile.a]))[0])
    r_b = float(c2 * profile.dalpha(np.array([profile.b]))[0])

    K = _fem1d.stiffness(V.grid)
    A = K + _fem1d.mass(V.grid, weight=V.values) + _fem1d.corner_matrix(nodes, r_a, r_b)
    B = _fem1d.mass(V.grid)
    problem = GeneralizedEigenProblem(A=A, B=B)
    return Operator1D(grid=V.grid, v_values=V.values, r_a=r_a, r_b=r_b, problem=problem)


def _lower_bound(op):
    # mu_1 >= -||V^-|| - 2 r^2 - 2 r / (b - a), from the trace inequality.
    r_tot = abs(op.r_a) + abs(op.r_b)
    span = float(op.grid[-1] - op.grid[0])
    return min(0.0, float(op.v_values.min())) - 2.0 * r_tot**2 - 2.0 * r_tot / span - 1.0


def spectrum_1d(op, jmax, tol=1e-9):
    """jmax smallest eigenvalues of the interval operator."""
    if jmax >= op.nodes // 4:
        raise ConfigError(f"jmax {jmax} too large for {op.nodes} nodes")
    sol = lowest_eigenpairs(op.problem, jmax, tol=tol, sigma=_lower_bound(op))
    return Spectrum1D(values=sol.values, nodes=op.nodes, boundary=(op.r_a, op.r_b))
