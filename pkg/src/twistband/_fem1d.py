"""Shared P1 element matrices on interval and periodic 1D grids.

Coefficient functions enter through their nodal samples and are integrated
as piecewise-linear interpolants with exact element integrals.  Both the
effective 1D operators and the reduced waveguide blocks are assembled from
these routines, which is what makes the single-mode reduction reproduce the
effective operator entry for entry.
"""

import numpy as np
import scipy.sparse as sp


def _elements(grid, periodic):
    n = len(grid)
    if periodic:
        left = np.arange(n)
        right = (left + 1) % n
        h = np.full(n, grid[1] - grid[0])
    else:
        left = np.arange(n - 1)
        right = left + 1
        h = np.diff(grid)
    return left, right, h


def _assemble(n, left, right, e00, e01, e10, e11, dtype=float):
    rows = np.concatenate([left, left, right, right])
    cols = np.concatenate([left, right, left, right])
    data = np.concatenate([e00, e01, e10, e11]).astype(dtype)
    return sp.coo_array((data, (rows, cols)), shape=(n, n)).tocsr()


def stiffness(grid, periodic=False):
    """int phi_i' phi_j'."""
    left, right, h = _elements(grid, periodic)
    inv = 1.0 / h
    return _assemble(len(grid), left, right, inv, -inv, -inv, inv)


def mass(grid, periodic=False, weight=None):
    """int w phi_i phi_j with P1 nodal weight w (default 1)."""
    left, right, h = _elements(grid, periodic)
    if weight is None:
        e00 = e11 = h / 3.0
        e01 = e10 = h / 6.0
    else:
        w0 = np.asarray(weight)[left]
        w1 = np.asarray(weight)[right]
        e00 = (h / 12.0) * (3.0 * w0 + w1)
        e11 = (h / 12.0) * (w0 + 3.0 * w1)
        e01 = e10 = (h / 12.0) * (w0 + w1)
    return _assemble(len(grid), left, right, e00, e01, e10, e11)


def first_derivative_skew(grid, periodic=False):
    """int (phi_j phi_i' - phi_j' phi_i): local [[0, -1], [1, 0]]."""
    left, right, h = _elements(grid, periodic)
    zero = np.zeros_like(h)
    one = np.ones_like(h)
    return _assemble(len(grid), left, right, zero, -one, one, zero)


def weighted_skew(grid, weight, periodic=False):
    """(1/2) int w (phi_j' phi_i - phi_j phi_i'): local (w0+w1)/4 * [[0, 1], [-1, 0]]."""
    left, right, h = _elements(grid, periodic)
    w0 = np.asarray(weight)[left]
    w1 = np.asarray(weight)[right]
    q = (w0 + w1) / 4.0
    zero = np.zeros_like(h)
    return _assemble(len(grid), left, right, zero, q, -q, zero)


def corner_matrix(n, value_left, value_right):
    """value_right at (n-1, n-1) minus value_left at (0, 0)."""
    rows = np.array([0, n - 1])
    cols = np.array([0, n - 1])
    data = np.array([-value_left, value_right], dtype=float)
    return sp.coo_array((data, (rows, cols)), shape=(n, n)).tocsr()
