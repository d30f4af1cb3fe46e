"""Three-point derivatives on nonuniform, moving node sets."""

from __future__ import annotations

import numpy as np
from scipy import sparse

from wavebreak.core.errors import ImminentCrossingError


def spacings(x: np.ndarray, period: float | None) -> np.ndarray:
    """Gaps x[i+1] - x[i]; in periodic mode the last entry is the wrap gap x[0] + L - x[-1]."""
    gaps = np.diff(x)
    if period is not None:
        gaps = np.append(gaps, x[0] + period - x[-1])
    return gaps


def check_spacing(x: np.ndarray, period: float | None, floor: float) -> None:
    gaps = spacings(x, period)
    k = int(np.argmin(gaps))
    if not gaps[k] >= floor:
        raise ImminentCrossingError(
            f"characteristics {k} and {(k + 1) % x.size} are {gaps[k]:.3e} apart "
            f"(floor {floor:.1e})",
            index=k,
            spacing=float(gaps[k]),
        )


def nonuniform_derivative(
    x: np.ndarray, v: np.ndarray, period: float | None = None
) -> np.ndarray:
    """dv/dx at every node, second order on smooth data and exact on quadratics.

    Interior nodes use the central weights

        w- = -h2 / (h1 (h1 + h2)),  w0 = (h2 - h1) / (h1 h2),  w+ = h1 / (h2 (h1 + h2))

    with h1, h2 the gaps to the left and right neighbour. Periodic mode wraps
    with x[-1] - L and x[0] + L; otherwise the end nodes use one-sided
    three-point formulas.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if period is not None:
        xm = np.roll(x, 1)
        xm[0] -= period
        xp = np.roll(x, -1)
        xp[-1] += period
        h1 = x - xm
        h2 = xp - x
        return (
            -h2 / (h1 * (h1 + h2)) * np.roll(v, 1)
            + (h2 - h1) / (h1 * h2) * v
            + h1 / (h2 * (h1 + h2)) * np.roll(v, -1)
        )

    out = np.empty_like(v)
    h1 = x[1:-1] - x[:-2]
    h2 = x[2:] - x[1:-1]
    out[1:-1] = (
        -h2 / (h1 * (h1 + h2)) * v[:-2]
        + (h2 - h1) / (h1 * h2) * v[1:-1]
        + h1 / (h2 * (h1 + h2)) * v[2:]
    )
    a, b = x[1] - x[0], x[2] - x[1]
    out[0] = (
        -(2 * a + b) / (a * (a + b)) * v[0] + (a + b) / (a * b) * v[1] - a / (b * (a + b)) * v[2]
    )
    a, b = x[-2] - x[-3], x[-1] - x[-2]
    out[-1] = (
        b / (a * (a + b)) * v[-3] - (a + b) / (a * b) * v[-2] + (a + 2 * b) / (b * (a + b)) * v[-1]
    )
    return out


def neighbour_pattern(
    n_nodes: int, n_fields: int, periodic: bool, reach: int = 2
) -> sparse.csr_matrix:
    """Jacobian sparsity of a field-major state whose node i couples to nodes i-reach .. i+reach.

    The state is laid out as `n_fields` blocks of `n_nodes` values. The default
    width covers the one-sided end stencils as well as the central one;
    `reach=0` leaves every node coupled only to itself.
    """
    if reach < 0:
        raise ValueError(f"reach must be non-negative, got {reach}")
    offsets = np.arange(-reach, reach + 1)
    rows = np.repeat(np.arange(n_nodes), offsets.size)
    cols = rows + np.tile(offsets, n_nodes)
    if periodic:
        cols %= n_nodes
        keep = np.ones_like(cols, dtype=bool)
    else:
        keep = (cols >= 0) & (cols < n_nodes)
    node = sparse.coo_matrix(
        (np.ones(int(keep.sum())), (rows[keep], cols[keep])), shape=(n_nodes, n_nodes)
    )
    node = (node > 0).astype(float)
    blocks = sparse.csr_matrix(np.ones((n_fields, n_fields)))
    return sparse.kron(blocks, node, format="csr")
