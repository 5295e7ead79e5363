"""Twist angle profiles with exact derivatives, effective potentials, Fourier data.

Profiles are either polynomials in (s - a) on a bounded interval, with the
left-endpoint value pinned to zero, or finite trigonometric series on a
period L.  Derivatives are always analytic -- the finite-difference probe at
construction is a consistency check, never the source of derivative values,
because the quality of alpha' and alpha'' controls every downstream spectrum.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class TwistProfile:
    """Twist angle alpha with exact first and second derivatives."""

    kind: str                 # "interval" or "periodic"
    a: float                  # interval start (0.0 for periodic)
    b: float                  # interval end (L for periodic)
    alpha: object             # vectorized callables
    dalpha: object
    ddalpha: object
    description: str

    @property
    def length(self):
        return self.b - self.a

    @property
    def period(self):
        if self.kind != "periodic":
            raise ValueError("profile is not periodic")
        return self.b - self.a


def _fd_consistency(f, df, points, step):
    """Centered differences of f must reproduce df at second order."""
    err1 = np.max(np.abs((f(points + step) - f(points - step)) / (2 * step) - df(points)))
    half = step / 2.0
    err2 = np.max(np.abs((f(points + half) - f(points - half)) / (2 * half) - df(points)))
    floor = 1e-9 * max(1.0, np.max(np.abs(df(points))))
    if err1 > floor and err2 > 0.35 * err1 + floor:
        raise ConfigError(
            f"derivative sampler inconsistent with finite differences ({err1:.2e} -> {err2:.2e})"
        )


def _validate(profile):
    pts = np.linspace(profile.a, profile.b, 66)[1:-1]
    step = 1e-3 * profile.length
    _fd_consistency(profile.alpha, profile.dalpha, pts, step)
    _fd_consistency(profile.dalpha, profile.ddalpha, pts, step)
    if profile.kind == "interval":
        a0 = float(profile.alpha(np.array([profile.a]))[0])
        if abs(a0) > 1e-12:
            raise ConfigError(f"interval twist must have alpha(a) = 0, got {a0}")
    else:
        L = profile.period
        probe = np.linspace(0.0, L, 64, endpoint=False)
        gap = np.max(np.abs(profile.alpha(probe + L) - profile.alpha(probe)))
        if gap > 1e-10:
            raise ConfigError(f"twist is not L-periodic: defect {gap:.2e}")
    return profile


def polynomial_twist(coeffs, a, b):
    """alpha(s) = sum_k coeffs[k] (s - a)^k on [a, b]; coeffs[0] must be 0."""
    if b <= a:
        raise ConfigError(f"empty interval ({a}, {b})")
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0 or not np.all(np.isfinite(c)):
        raise ConfigError("polynomial coefficients must be finite and nonempty")
    if abs(c[0]) > 1e-12:
        raise ConfigError(f"alpha(a) must vanish; constant coefficient is {c[0]}")
    d1 = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(1)
    d2 = np.polynomial.polynomial.polyder(c, 2) if c.size > 2 else np.zeros(1)

    def make(coefs):
        coefs = np.asarray(coefs, dtype=float)
        return lambda s: np.polynomial.polynomial.polyval(np.asarray(s, dtype=float) - a, coefs)

    profile = TwistProfile(
        kind="interval", a=float(a), b=float(b),
        alpha=make(c), dalpha=make(d1), ddalpha=make(d2),
        description=f"poly{list(map(float, c))}@({a},{b})",
    )
    return _validate(profile)


def trig_twist(terms, L, const=0.0):
    """alpha(s) = const + sum of sin/cos terms with frequencies 2*pi*f/L."""
    if not L > 0:
        raise ConfigError(f"period must be positive, got {L}")
    parsed = []
    for t in terms:
        f = int(t["freq"])
        if f <= 0:
            raise ConfigError(f"trig frequency must be a positive integer, got {f}")
        parsed.append((f, float(t.get("sin", 0.0)), float(t.get("cos", 0.0))))
    if not all(np.isfinite([x for p in parsed for x in p[1:]]) ) or not np.isfinite(const):
        raise ConfigError("trig coefficients must be finite")

    def alpha(s):
        s = np.asarray(s, dtype=float)
        out = np.full_like(s, float(const))
        for f, cs, cc in parsed:
            w = 2.0 * math.pi * f / L
            out = out + cs * np.sin(w * s) + cc * np.cos(w * s)
        return out

    def dalpha(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for f, cs, cc in parsed:
            w = 2.0 * math.pi * f / L
            out = out + cs * w * np.cos(w * s) - cc * w * np.sin(w * s)
        return out

    def ddalpha(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for f, cs, cc in parsed:
            w = 2.0 * math.pi * f / L
            out = out - cs * w * w * np.sin(w * s) - cc * w * w * np.cos(w * s)
        return out

    profile = TwistProfile(
        kind="periodic", a=0.0, b=float(L),
        alpha=alpha, dalpha=dalpha, ddalpha=ddalpha,
        description=f"trig{[(f, cs, cc) for f, cs, cc in parsed]}@L={L}",
    )
    return _validate(profile)


def make_twist(spec):
    """Parse the structured twist document used by the CLI."""
    kind = spec.get("kind")
    if kind == "interval":
        return polynomial_twist(spec["poly"], spec["a"], spec["b"])
    if kind == "periodic":
        return trig_twist(spec.get("trig", ()), spec["L"], const=spec.get("const", 0.0))
    raise ConfigError(f"unknown twist kind {kind!r}")


def interval_grid(a, b, n):
    """n uniformly spaced nodes on [a, b], endpoints included."""
    if n < 2:
        raise ValueError("need at least 2 nodes")
    return np.linspace(a, b, n)


def periodic_grid(L, n):
    """n uniformly spaced nodes on [0, L), the wrap node excluded."""
    if n < 4:
        raise ValueError("need at least 4 nodes")
    return np.arange(n) * (L / n)


@dataclass(frozen=True)
class SampledPotential:
    """Pointwise samples of an effective potential on a uniform grid."""

    grid: np.ndarray
    values: np.ndarray
    kind: str               # "V" or "W"
    c1: float
    c2: float
    profile_description: str
    period: float | None    # L for periodic sampling, None for interval

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be matching 1D arrays")
        steps = np.diff(grid)
        if len(steps) and (steps.min() <= 0 or np.ptp(steps) > 1e-9 * steps.max()):
            raise ValueError("grid must be uniform and increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("potential values must be finite")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def spacing(self):
        return float(self.grid[1] - self.grid[0])


def _check_grid_in_domain(profile, grid):
    if profile.kind == "interval":
        tol = 1e-12 * max(1.0, abs(profile.b - profile.a))
        if grid[0] < profile.a - tol or grid[-1] > profile.b + tol:
            raise ValueError("grid extends outside the profile interval")


def effective_potential(profile, c1, c2, grid):
    """V(s) = c1 * alpha'(s)^2 - c2 * alpha''(s), evaluated pointwise."""
    grid = np.asarray(grid, dtype=float)
    _check_grid_in_domain(profile, grid)
    values = c1 * profile.dalpha(grid) ** 2 - c2 * profile.ddalpha(grid)
    period = profile.period if profile.kind == "periodic" else None
    return SampledPotential(grid=grid, values=values, kind="V", c1=float(c1), c2=float(c2),
                            profile_description=profile.description, period=period)


def w_potential(profile, c1, grid):
    """W(s) = c1 * alpha'(s)^2, the gap-location potential (c1 >= 0)."""
    if c1 < 0:
        raise ValueError(f"c1 must be nonnegative, got {c1}")
    grid = np.asarray(grid, dtype=float)
    _check_grid_in_domain(profile, grid)
    values = c1 * profile.dalpha(grid) ** 2
    period = profile.period if profile.kind == "periodic" else None
    return SampledPotential(grid=grid, values=values, kind="W", c1=float(c1), c2=0.0,
                            profile_description=profile.description, period=period)


def fourier_coefficients(potential, jmax):
    """Fourier data {j: w_j} under W(s) = sum_j L^{-1/2} w_j exp(2 pi i j s / L).

    Hence w_j = L^{-1/2} * integral over one period of W exp(-2 pi i j s / L).
    Conjugate symmetry w_{-j} = conj(w_j) is exact by construction (rfft of
    real samples, mirrored).
    """
    if potential.period is None:
        raise ValueError("Fourier coefficients need a periodic potential")
    n = len(potential.grid)
    if n < 4 * jmax:
        raise ValueError(f"grid of {n} points is too coarse for jmax={jmax} (need >= {4 * jmax})")
    if n & (n - 1):
        raise ValueError(f"grid point count {n} must be a power of two")
    L = potential.period
    spect = np.fft.rfft(potential.values)
    s0 = potential.grid[0]
    out = {}
    for j in range(jmax + 1):
        phase = np.exp(-2j * np.pi * j * s0 / L)
        wj = (math.sqrt(L) / n) * spect[j] * phase
        out[j] = wj
        out[-j] = np.conj(wj)
    out[0] = complex(out[0].real, 0.0)
    return out
