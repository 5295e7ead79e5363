"""Neumann eigenproblem on the cross-section and twist-coupling integrals.

P1 elements with quadrature that is exact for every integrand that appears
(degree <= 2 on triangles via the edge-midpoint rule, degree <= 3 on boundary
edges via two-point Gauss).  The rotation generator is fixed to
R = [[0, -1], [1, 0]], so <grad u, R y> is the angular derivative about the
origin; only the sign of C2 (and of the A matrix) depends on this choice.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateModeError, TwistbandError
from .spectral import GeneralizedEigenProblem, lowest_eigenpairs

_GAUSS2 = (0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0))


def _triangle_geometry(mesh):
    """Per-triangle barycentric gradient coefficients and edge midpoints."""
    tris = mesh.triangles
    p = mesh.vertices[tris]          # (M, 3, 2)
    areas = mesh.areas
    # grad lambda_i = (b_i, c_i) / (2A), cyclic differences of the other two vertices
    b = np.stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1], p[:, 0, 1] - p[:, 1, 1]], axis=1)
    c = np.stack([p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0], p[:, 1, 0] - p[:, 0, 0]], axis=1)
    grads = np.stack([b, c], axis=2) / (2.0 * areas)[:, None, None]   # (M, 3, 2)
    mids = 0.5 * (p + np.roll(p, -1, axis=1))                          # (M, 3, 2) midpoints
    return grads, mids


def assemble_neumann_forms(mesh):
    """P1 stiffness/mass pair for the Neumann Laplacian on the mesh (no constraints)."""
    tris = mesh.triangles
    areas = mesh.areas
    grads, _ = _triangle_geometry(mesh)

    n = mesh.num_vertices
    rows, cols, kdata, mdata = [], [], [], []
    mass_local = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    for i in range(3):
        for j in range(3):
            rows.append(tris[:, i])
            cols.append(tris[:, j])
            kdata.append(areas * np.einsum("md,md->m", grads[:, i, :], grads[:, j, :]))
            mdata.append(areas * mass_local[i, j])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    K = sp.coo_array((np.concatenate(kdata), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_array((np.concatenate(mdata), (rows, cols)), shape=(n, n)).tocsr()
    K = 0.5 * (K + K.T)   # symmetrize assembly roundoff
    return GeneralizedEigenProblem(A=K, B=M)


@dataclass(frozen=True)
class TransverseModeSet:
    """Mass-orthonormal Neumann eigenpairs of the cross-section."""

    lambdas: np.ndarray
    mode_values: np.ndarray      # (num_vertices, count)
    degenerate_flags: np.ndarray
    mesh: object
    problem: GeneralizedEigenProblem

    @property
    def count(self):
        return len(self.lambdas)

    def mode(self, n):
        """Nodal values of mode n (1-based, n=1 is the constant mode)."""
        return self.mode_values[:, n - 1]


def solve_transverse_modes(problem, count, degeneracy_tol=1e-6, *, mesh, tol=1e-9):
    """Lowest `count` Neumann modes with degeneracy flags and fixed signs."""
    if count < 2:
        raise ValueError("count must be >= 2")
    extra = min(count + 1, problem.dim)
    sol = lowest_eigenpairs(problem, extra, tol=tol)
    values = sol.values.copy()
    vectors = sol.vectors.copy()
    if values[0] < -1e-8:
        raise TwistbandError(
            f"lowest Neumann eigenvalue {values[0]:.3e} is negative: broken discretization"
        )

    # The first Neumann mode is analytically constant; snap it to the exact
    # constant so the n=1 coupling constants vanish at roundoff level, and
    # re-orthogonalize the rest against it.
    M = problem.B
    if abs(values[0]) < 1e-8:
        ones = np.ones(problem.dim)
        const = ones / np.sqrt(ones @ (M @ ones))
        vectors[:, 0] = const
        for i in range(1, vectors.shape[1]):
            v = vectors[:, i]
            v = v - const * (const @ (M @ v))
            v = v / np.sqrt(np.real(v @ (M @ v)))
            vectors[:, i] = v

    for i in range(count):
        col = vectors[:, i]
        k = int(np.argmax(np.abs(col)))
        if col[k] < 0:
            vectors[:, i] = -col

    flags = np.zeros(count, dtype=bool)
    for i in range(count):
        gaps = []
        if i > 0:
            gaps.append(values[i] - values[i - 1])
        if i + 1 < len(values):
            gaps.append(values[i + 1] - values[i])
        if gaps and min(gaps) < degeneracy_tol * max(values[i], 1.0):
            flags[i] = True

    lam = values[:count].copy()
    vec = vectors[:, :count].copy()
    for arr in (lam, vec, flags):
        arr.setflags(write=False)
    return TransverseModeSet(lambdas=lam, mode_values=vec, degenerate_flags=flags,
                             mesh=mesh, problem=problem)


@dataclass(frozen=True)
class CouplingData:
    """Twist-coupling constants and matrices over the retained modes.

    A[m, k] = int_S <grad u_{m+1}, R y> u_{k+1} dy   (0-based storage)
    B[m, k] = int_S <grad u_{m+1}, R y> <grad u_{k+1}, R y> dy
    C1[m] = B[m, m], C2[m] = A[m, m] by the same quadrature.
    """

    C1: np.ndarray
    C2: np.ndarray
    A: np.ndarray
    B: np.ndarray

    @property
    def cutoff(self):
        return len(self.C1)

    def constants(self, n):
        """(C1, C2) for mode n (1-based)."""
        return float(self.C1[n - 1]), float(self.C2[n - 1])


def _mode_triangle_data(modes, indices):
    """Per-triangle gradients and midpoint values for the selected modes (1-based)."""
    mesh = modes.mesh
    tris = mesh.triangles
    grads, mids = _triangle_geometry(mesh)
    ry = np.stack([-mids[:, :, 1], mids[:, :, 0]], axis=2)   # R y at midpoints, R = [[0,-1],[1,0]]

    gdot = {}
    umid = {}
    for n in indices:
        u = modes.mode(n)
        unodes = u[tris]                                       # (M, 3)
        gvec = np.einsum("mi,mid->md", unodes, grads)          # (M, 2) constant gradient
        gdot[n] = np.einsum("md,mqd->mq", gvec, ry)            # <grad u, R y> at midpoints
        umid[n] = 0.5 * (unodes + np.roll(unodes, -1, axis=1))  # u at midpoints
    return gdot, umid


def _coupling_pair(mesh, gdot, umid, m, k):
    w = mesh.areas / 3.0
    a_mk = float(np.sum(w[:, None] * gdot[m] * umid[k]))
    b_mk = float(np.sum(w[:, None] * gdot[m] * gdot[k]))
    return a_mk, b_mk


def boundary_moment(modes, m, k):
    """Boundary Gram entry: contour integral of u_m u_k <R y, nu> (1-based m, k)."""
    mesh = modes.mesh
    um = modes.mode(m)
    uk = modes.mode(k)
    pa = mesh.vertices[mesh.boundary_edges[:, 0]]
    pb = mesh.vertices[mesh.boundary_edges[:, 1]]
    nu = mesh.boundary_normals
    lens = np.hypot(*(pb - pa).T)
    ua, ub = um[mesh.boundary_edges[:, 0]], um[mesh.boundary_edges[:, 1]]
    va, vb = uk[mesh.boundary_edges[:, 0]], uk[mesh.boundary_edges[:, 1]]
    total = 0.0
    for t in _GAUSS2:
        y = pa + t * (pb - pa)
        ry = np.stack([-y[:, 1], y[:, 0]], axis=1)
        rn = np.einsum("ed,ed->e", ry, nu)
        total += 0.5 * np.sum(lens * (ua + t * (ub - ua)) * (va + t * (vb - va)) * rn)
    return float(total)


def coupling_constants(modes, n, *, allow_degenerate=False):
    """(C1, C2) for mode n; C2 is cross-checked against its boundary form."""
    if not (1 <= n <= modes.count):
        raise ValueError(f"mode index {n} outside 1..{modes.count}")
    if modes.degenerate_flags[n - 1]:
        if not allow_degenerate:
            raise DegenerateModeError(
                f"mode {n} is flagged degenerate; coupling constants are basis-dependent"
            )
        warnings.warn(f"mode {n} is degenerate; coupling constants are basis-dependent")

    gdot, umid = _mode_triangle_data(modes, (n,))
    c2, c1 = _coupling_pair(modes.mesh, gdot, umid, n, n)
    c2_boundary = 0.5 * boundary_moment(modes, n, n)
    scale = max(1.0, abs(c2))
    if abs(c2 - c2_boundary) > 10.0 * modes.mesh.h * scale:
        raise TwistbandError(
            f"interior/boundary C2 quadratures disagree: {c2} vs {c2_boundary}"
        )
    return c1, c2


def coupling_matrices(modes, cutoff):
    """CouplingData over modes 1..cutoff."""
    if not (1 <= cutoff <= modes.count):
        raise ValueError(f"cutoff {cutoff} outside 1..{modes.count}")
    if np.any(modes.degenerate_flags[:cutoff]):
        warnings.warn("coupling matrices include degenerate modes; entries are basis-dependent")

    indices = range(1, cutoff + 1)
    gdot, umid = _mode_triangle_data(modes, indices)
    A = np.zeros((cutoff, cutoff))
    B = np.zeros((cutoff, cutoff))
    for m in indices:
        for k in indices:
            a_mk, b_mk = _coupling_pair(modes.mesh, gdot, umid, m, k)
            A[m - 1, k - 1] = a_mk
            B[m - 1, k - 1] = b_mk
    B = 0.5 * (B + B.T)
    return CouplingData(C1=np.diag(B).copy(), C2=np.diag(A).copy(), A=A, B=B)


def rayleigh_quotient(problem, v):
    num = float(np.real(v @ (problem.A @ v)))
    den = float(np.real(v @ (problem.B @ v)))
    return num / den


def spectral_gap_check(modes, k, trials=16):
    """Worst Rayleigh quotient over trial functions mass-projected off modes 1..k.

    The min-max inequality puts this at or above lambda_{k+1}.
    """
    if k + 1 > modes.count:
        raise ValueError(f"need mode {k + 1} available, have {modes.count}")
    problem = modes.problem
    M = problem.B
    rng = np.random.default_rng(90210 + 17 * k + trials)
    worst = np.inf
    for _ in range(trials):
        v = rng.standard_normal(problem.dim)
        for i in range(k):
            u = modes.mode_values[:, i]
            v = v - u * (u @ (M @ v))
        nrm = np.sqrt(v @ (M @ v))
        if nrm < 1e-12:
            continue
        worst = min(worst, rayleigh_quotient(problem, v))
    return worst
