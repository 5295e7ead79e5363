"""Floquet-Bloch machinery for the periodic effective operators.

Fibers (-i d/ds + theta)^2 + V on one period with periodic identification,
band functions over the Brillouin zone [-pi/L, pi/L], band/gap extraction at
the zone endpoints, periodic/antiperiodic spectra (the antiperiodic operator
is realized as the theta = pi/L fiber), first-order gap-width asymptotics in
the potential strength, the Borg constant-potential diagnostic, and the
scaled comparison of the full twist potential against its quadratic part.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._util import ordered_map
from .errors import ConfigError
from .spectral import GeneralizedEigenProblem, lowest_eigenpairs
from .twist import SampledPotential, fourier_coefficients

DEFAULT_THETA_COUNT = 65
DEFAULT_BAND_TOL = 1e-6
DEFAULT_GAP_TOL = 1e-4


def _check_fiber_inputs(V, L, theta, nodes):
    if V.period is None:
        raise ConfigError("fiber assembly needs a periodic potential")
    if abs(V.period - L) > 1e-12 * max(1.0, L):
        raise ConfigError(f"potential period {V.period} does not match L={L}")
    if len(V.grid) != nodes:
        raise ConfigError(f"potential sampled on {len(V.grid)} nodes, expected {nodes}")
    if abs(theta) > math.pi / L * (1 + 1e-12):
        raise ConfigError(f"theta {theta} outside the Brillouin zone [-pi/L, pi/L]")


def _potential_fourier(V):
    """Plain Fourier coefficients c_j = (1/L) int V exp(-2 pi i j s / L) ds.

    Exact for band-limited samples (the twist potentials are finite trig
    series); grid start offsets enter through a phase.
    """
    n = len(V.grid)
    spect = np.fft.rfft(V.values) / n
    s0 = V.grid[0]
    L = V.period
    js = np.arange(len(spect))
    return spect * np.exp(-2j * np.pi * js * s0 / L)


def _fourier_bandwidth(coeffs):
    mags = np.abs(coeffs)
    scale = max(mags.max(), 1e-300)
    sig = np.nonzero(mags > 1e-13 * scale)[0]
    return int(sig.max()) if len(sig) else 0


@dataclass(frozen=True)
class FiberOperator:
    """Assembled fiber at quasimomentum theta (Fourier-Galerkin basis)."""

    theta: float
    L: float
    grid: np.ndarray
    v_values: np.ndarray
    mmax: int                      # plane waves exp(2 pi i m s / L), |m| <= mmax
    problem: GeneralizedEigenProblem


def assemble_fiber(V, L, theta, nodes, mmax=None):
    """Fourier-consistent assembly of int |w' + i theta w|^2 + V |w|^2.

    In the orthonormal plane-wave basis the form is the Hermitian Toeplitz
    matrix diag((theta + 2 pi m / L)^2) + [c_{m-k}], exact for band-limited
    potentials, so the free dispersion carries no discretization artifacts.
    """
    _check_fiber_inputs(V, L, theta, nodes)
    coeffs = _potential_fourier(V)
    bw = _fourier_bandwidth(coeffs)
    if mmax is None:
        mmax = max(8, bw + 12)
    if bw >= len(V.grid) // 2:
        raise ConfigError("potential is not resolved by its grid (aliasing)")

    ms = np.arange(-mmax, mmax + 1)
    dim = len(ms)
    A = np.zeros((dim, dim), dtype=complex)
    kin = (theta + 2.0 * math.pi * ms / L) ** 2
    A[np.diag_indices(dim)] = kin
    for j in range(0, min(bw, 2 * mmax) + 1):
        c = coeffs[j]
        if j == 0:
            A[np.diag_indices(dim)] += c.real
            continue
        rows = np.arange(j, dim)
        A[rows, rows - j] += c            # (m) - (k) = j  ->  coefficient c_j
        A[rows - j, rows] += np.conj(c)
    B = sp.identity(dim, format="csr")
    return FiberOperator(theta=float(theta), L=float(L), grid=V.grid, v_values=V.values,
                         mmax=int(mmax), problem=GeneralizedEigenProblem(A=sp.csr_array(A), B=B))


def fiber_spectrum(V, L, theta, count, tol=1e-9, mmax=None):
    """Lowest `count` eigenvalues of the theta fiber."""
    if mmax is None:
        coeffs = _potential_fourier(V)
        mmax = max(8, count + _fourier_bandwidth(coeffs) + 12)
    fiber = assemble_fiber(V, L, theta, len(V.grid), mmax=mmax)
    return lowest_eigenpairs(fiber.problem, count, tol=tol).values


@dataclass(frozen=True)
class BandStructure:
    """Band functions k_j(theta) on a symmetric theta grid including 0, +-pi/L."""

    thetas: np.ndarray
    k: np.ndarray              # (jmax, theta_count)
    L: float
    jmax: int
    band_tol: float
    violations: tuple          # invariant defects above band_tol
    warnings: tuple            # defects within band_tol

    @property
    def ok(self):
        return not self.violations

    @property
    def zone_center_index(self):
        return len(self.thetas) // 2

    def band_spread(self):
        """Per-band spread max_theta k - min_theta k (nonconstancy measure)."""
        return self.k.max(axis=1) - self.k.min(axis=1)


def band_structure(V, L, theta_count=DEFAULT_THETA_COUNT, jmax=8,
                   band_tol=DEFAULT_BAND_TOL, tol=1e-9):
    """Solve every fiber of the theta grid and check symmetry/monotonicity."""
    if theta_count < 9 or theta_count % 2 == 0:
        raise ConfigError(f"theta_count must be odd and >= 9, got {theta_count}")
    thetas = np.linspace(-math.pi / L, math.pi / L, theta_count)
    thetas[theta_count // 2] = 0.0

    spectra = ordered_map(lambda th: fiber_spectrum(V, L, th, jmax, tol=tol), thetas)
    k = np.column_stack(spectra)

    violations = []
    warnings_ = []

    def tolerance(value):
        return band_tol * (1.0 + abs(value))

    mid = theta_count // 2
    for j in range(jmax):
        for i in range(mid):
            defect = abs(k[j, i] - k[j, theta_count - 1 - i])
            if defect > tolerance(k[j, i]):
                violations.append(f"band {j + 1}: symmetry defect {defect:.3e} at theta index {i}")
            elif defect > 0.1 * tolerance(k[j, i]):
                warnings_.append(f"band {j + 1}: symmetry defect {defect:.3e} at theta index {i}")
        right = k[j, mid:]
        steps = np.diff(right)
        if (j + 1) % 2 == 0:
            steps = -steps
        bad = steps < -tolerance(np.abs(right[:-1]).max())
        if np.any(bad):
            violations.append(
                f"band {j + 1}: monotonicity defect {float(steps.min()):.3e} on [0, pi/L]"
            )

    return BandStructure(thetas=thetas, k=k, L=float(L), jmax=jmax, band_tol=band_tol,
                         violations=tuple(violations), warnings=tuple(warnings_))


@dataclass(frozen=True)
class GapEntry:
    j: int
    lower: float
    upper: float
    width: float
    is_open: bool


@dataclass(frozen=True)
class GapReport:
    bands: tuple          # (lower, upper) per band, ordered
    gaps: tuple           # GapEntry per j = 1..jmax-1
    gap_tol: float

    def open_gaps(self):
        return tuple(g for g in self.gaps if g.is_open)


def bands_and_gaps(bs, gap_tol=DEFAULT_GAP_TOL):
    """Bands and gaps from the zone endpoint values.

    Odd bands run [k_j(0), k_j(pi/L)] and gap j opens at theta = pi/L; even
    bands run [k_j(pi/L), k_j(0)] and gap j opens at theta = 0.
    """
    mid = bs.zone_center_index
    at0 = bs.k[:, mid]
    atpi = bs.k[:, -1]
    bands = []
    for j in range(1, bs.jmax + 1):
        lo, hi = (at0[j - 1], atpi[j - 1]) if j % 2 == 1 else (atpi[j - 1], at0[j - 1])
        bands.append((float(lo), float(hi)))
    gaps = []
    for j in range(1, bs.jmax):
        edge = atpi if j % 2 == 1 else at0
        lower, upper = float(edge[j - 1]), float(edge[j])
        width = upper - lower
        gaps.append(GapEntry(j=j, lower=lower, upper=upper,
                             width=max(width, 0.0), is_open=width > gap_tol))
    return GapReport(bands=tuple(bands), gaps=tuple(gaps), gap_tol=gap_tol)


def _scaled_potential(W, beta):
    return SampledPotential(grid=W.grid, values=beta * W.values, kind="V",
                            c1=beta * W.c1, c2=beta * W.c2,
                            profile_description=W.profile_description, period=W.period)


def periodic_antiperiodic_spectra(W, L, beta, jmax, tol=1e-9):
    """Spectra of -d^2/ds^2 + beta W with periodic (+) / antiperiodic (-) conditions.

    The antiperiodic operator is unitarily equivalent to the theta = pi/L
    fiber through w -> exp(-i pi s / L) w, so both spectra come from the one
    fiber assembly path.
    """
    V = _scaled_potential(W, beta)
    l_plus = fiber_spectrum(V, L, 0.0, jmax, tol=tol)
    l_minus = fiber_spectrum(V, L, math.pi / L, jmax, tol=tol)
    return l_plus, l_minus


@dataclass(frozen=True)
class GapAsymptotics:
    j: int
    L: float
    betas: np.ndarray
    deltas: np.ndarray
    flagged: np.ndarray
    fitted_slope: float
    predicted_slope: float


def gap_width_at(W, L, j, beta, jmax=None, tol=1e-9):
    """delta_j(beta): width of the j-th spectral gap of -d^2/ds^2 + beta W.

    Odd j pairs antiperiodic eigenvalues (j, j+1); even j pairs periodic
    ones.  Returns (delta, flagged) where flagged marks an ambiguous pairing.
    """
    count = (jmax if jmax is not None else j) + 3
    l_plus, l_minus = periodic_antiperiodic_spectra(W, L, beta, count, tol=tol)
    spec = l_minus if j % 2 == 1 else l_plus
    delta = float(spec[j] - spec[j - 1])
    iso = 1e-6 * (1.0 + abs(spec[j]))
    flagged = False
    if j >= 2 and spec[j - 1] - spec[j - 2] < iso:
        flagged = True
    if j + 1 < len(spec) and spec[j + 1] - spec[j] < iso:
        flagged = True
    return delta, flagged


def gap_asymptotics(W, L, j, beta_list, tol=1e-9):
    """Fit delta_j(beta) ~ slope * beta and compare with (2/sqrt(L)) |w_j|."""
    betas = np.asarray(beta_list, dtype=float)
    if len(betas) < 4:
        raise ConfigError("need at least 4 beta values")
    if np.any(betas <= 0) or betas.max() > 0.5:
        raise ConfigError("beta values must lie in (0, 0.5]")

    results = ordered_map(lambda b: gap_width_at(W, L, j, b, tol=tol), betas)
    deltas = np.array([r[0] for r in results])
    flagged = np.array([r[1] for r in results])
    use = ~flagged
    if not np.any(use):
        raise ConfigError("every beta point was flagged as pairing-ambiguous")
    fitted = float(np.sum(betas[use] * deltas[use]) / np.sum(betas[use] ** 2))

    coeffs = fourier_coefficients(W, jmax=max(j, 1))
    predicted = 2.0 / math.sqrt(L) * abs(coeffs[j])
    return GapAsymptotics(j=j, L=float(L), betas=betas, deltas=deltas, flagged=flagged,
                          fitted_slope=fitted, predicted_slope=predicted)


@dataclass(frozen=True)
class BorgPair:
    kind: str             # "periodic" or "antiperiodic"
    index: int            # pair number, 1-based
    low: float
    high: float
    split: float


@dataclass(frozen=True)
class BorgDiagnostic:
    constant_signature: bool
    tol: float
    pairs: tuple


def borg_diagnostic(V, L, tol=0.05, pairs=3):
    """Constant-potential signature from periodic/antiperiodic pairings.

    A constant potential pairs periodic eigenvalues (2i, 2i+1) and
    antiperiodic ones (2i-1, 2i) exactly; any splitting above `tol` breaks
    the signature.  The verdict is tolerance-relative: discretization splits
    the free pairs at O(h^2) already, so `tol` must sit above that floor.
    """
    count = 2 * pairs + 2
    l_plus, l_minus = periodic_antiperiodic_spectra(V, L, 1.0, count)
    table = []
    for i in range(1, pairs + 1):
        lo, hi = float(l_plus[2 * i - 1]), float(l_plus[2 * i])
        table.append(BorgPair("periodic", i, lo, hi, hi - lo))
        lo, hi = float(l_minus[2 * i - 2]), float(l_minus[2 * i - 1])
        table.append(BorgPair("antiperiodic", i, lo, hi, hi - lo))
    signature = all(p.split <= tol for p in table)
    return BorgDiagnostic(constant_signature=signature, tol=tol, pairs=tuple(table))


@dataclass(frozen=True)
class ScaledGapRow:
    gamma: float
    full_pair: tuple        # (k_j, k_{j+1}) at the gap-defining endpoint
    quadratic_pair: tuple   # (nu_j, nu_{j+1}) for the gamma^2 W operator
    full_gap: float
    quadratic_gap: float
    endpoint_diff: float
    predicted_gap: float    # (2/sqrt(L)) |w_j| gamma^2


@dataclass(frozen=True)
class ScaledGapStudy:
    j: int
    rows: tuple
    diff_slope: float       # fit of endpoint_diff ~ K * gamma


def scaled_gap_study(profile, c1, c2, gamma_list, j, nodes=1024, tol=1e-9):
    """Compare gaps of the scaled twist potential against its quadratic part.

    Scaling the twist by gamma turns the potential into
    gamma^2 W - gamma c2 alpha''; the comparison operator keeps only the
    gamma^2 W part, and the endpoint eigenvalue difference between the two
    shrinks like O(gamma).
    """
    from .twist import effective_potential, periodic_grid, w_potential

    if profile.kind != "periodic":
        raise ConfigError("scaled gap study needs a periodic twist")
    gammas = np.asarray(gamma_list, dtype=float)
    if np.any(gammas <= 0) or np.any(np.diff(gammas) >= 0):
        raise ConfigError("gamma_list must be positive and strictly decreasing")

    L = profile.period
    grid = periodic_grid(L, nodes)
    W = w_potential(profile, c1, grid)
    coeffs = fourier_coefficients(W, jmax=max(j, 1))
    w_abs = abs(coeffs[j])
    theta_star = math.pi / L if j % 2 == 1 else 0.0

    rows = []
    for gamma in gammas:
        v_full = effective_potential(profile, gamma**2 * c1, gamma * c2, grid)
        v_quad = effective_potential(profile, gamma**2 * c1, 0.0, grid)
        kf = fiber_spectrum(v_full, L, theta_star, j + 1, tol=tol)
        kq = fiber_spectrum(v_quad, L, theta_star, j + 1, tol=tol)
        full_pair = (float(kf[j - 1]), float(kf[j]))
        quad_pair = (float(kq[j - 1]), float(kq[j]))
        rows.append(ScaledGapRow(
            gamma=float(gamma),
            full_pair=full_pair,
            quadratic_pair=quad_pair,
            full_gap=max(0.0, full_pair[1] - full_pair[0]),
            quadratic_gap=max(0.0, quad_pair[1] - quad_pair[0]),
            endpoint_diff=max(abs(full_pair[0] - quad_pair[0]), abs(full_pair[1] - quad_pair[1])),
            predicted_gap=2.0 / math.sqrt(L) * w_abs * gamma**2,
        ))
    diffs = np.array([r.endpoint_diff for r in rows])
    slope = float(np.sum(gammas * diffs) / np.sum(gammas**2))
    return ScaledGapStudy(j=j, rows=tuple(rows), diff_slope=slope)
