"""Horizontal and vertical line preconditioners.

Each interior grid line contributes a tridiagonal system built from the
source matrix (GLL stiffness or its FEM overlay) restricted to that line;
couplings to Dirichlet nodes are dropped.  The ``p-1`` line systems of one
orientation are independent and are factored and solved together as one
batched block-tridiagonal hierarchy.

Two ways of forming the tridiagonal from a line block are offered:

``"probe"``
    Apply the line block to the three strided combs ``sum_{i = r mod 3} e_i``
    and read the diagonal and the two neighbour couplings off the result.
    This only needs operator applications (``O(p^3)`` for all lines) and
    folds the far in-line couplings of the dense GLL rows into the band,
    which keeps the smoother stable at high degree.
``"band"``
    The exact half-bandwidth-1 restriction (entries ``|i - j| <= 1``).

Both coincide when the line block is itself tridiagonal (the FEM overlay).
"""

from dataclasses import dataclass, field

import numpy as np

from . import flops, tridiag
from .operator import FemOverlay, SpectralOperator

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


def gll_row_line_coefficients(op):
    """Tridiagonal entries of ``A_p`` along every row of the node grid.

    Returns ``(diag, upper)`` of shapes ``(p+1, p+1)`` and ``(p+1, p)``:
    ``diag[l, k] = A[(k,l),(k,l)]`` and ``upper[l, k] = A[(k,l),(k+1,l)]``.
    Entries come straight from the quadrature sum, ``O(p^3)`` in total.
    """
    d = op.basis.diff_matrix
    g = op.metric
    dd = np.diag(d)
    d2 = d * d
    diag = g.g11 @ d2 + d2.T @ g.g22 + 2.0 * dd[:, None] * dd[None, :] * g.g12
    pair = d[:, :-1] * d[:, 1:]
    sub = np.diag(d, -1)  # D[k+1, k]
    sup = np.diag(d, 1)  # D[k, k+1]
    upper = g.g11 @ pair + dd[:, None] * (sub[None, :] * g.g12[:, 1:] + sup[None, :] * g.g12[:, :-1])
    return diag, upper


def gll_row_line_operator(op):
    """Action of ``A_p`` with all couplings between different rows dropped.

    Works on full ``(p+1, p+1)`` grids; row ``l`` of the result only depends
    on row ``l`` of the input.
    """
    d = op.basis.diff_matrix
    g = op.metric
    dd = np.diag(d)[:, None]
    self_eta = (d * d).T @ g.g22

    def apply(u):
        u_xi = u @ d.T
        return (g.g11 * u_xi) @ d + self_eta * u + dd * ((g.g12 * u) @ d + g.g12 * u_xi)

    return apply


def probe_row_line_coefficients(apply_rows, n):
    """Tridiagonal coefficients of every row block from three comb probes.

    ``apply_rows`` acts on ``(n, n)`` interior grids without coupling rows.
    Returns ``(lower, diag, upper)`` with shapes ``(n, n-1), (n, n), (n, n-1)``;
    ``lower[j, i]`` couples entry ``i+1`` to ``i`` and ``upper[j, i]`` couples
    ``i`` to ``i+1``.
    """
    diag = np.empty((n, n))
    lower = np.empty((n, n - 1))
    upper = np.empty((n, n - 1))
    cols = np.arange(n)
    for r in range(3):
        comb = np.zeros((n, n))
        comb[:, r::3] = 1.0
        out = apply_rows(comb)
        hit = cols % 3 == r
        diag[:, hit] = out[:, hit]
        # column i of the output sees the probed unknown i+1 (upper) or i-1 (lower)
        up = hit[1:]
        upper[:, up] = out[:, :-1][:, up]
        lo = hit[:-1]
        lower[:, lo] = out[:, 1:][:, lo]
    return lower, diag, upper


def fem_row_line_coefficients(overlay):
    s = overlay.stencil
    return s[:, :, 1, 1], s[:, :-1, 1, 2]


@dataclass(frozen=True, eq=False)
class LineSmoother:
    orientation: str
    source: str
    degree: int
    line_solvers: tridiag.TridiagMGHierarchy = field(repr=False)
    systems: tridiag.BlockTridiagonalSystem = field(repr=False)

    @property
    def num_lines(self):
        return self.degree - 1

    def line_system(self, i):
        """Scalar tridiagonal system of interior line ``i`` (0-based among interior lines)."""
        s = self.systems
        return tridiag.BlockTridiagonalSystem(s.lower[i], s.diag[i], s.upper[i])

    def apply(self, r):
        return apply_smoother(self, r)


def _interior_rows(apply_full, p):
    def apply(w):
        full = np.zeros((p + 1, p + 1))
        full[1:-1, 1:-1] = w
        return apply_full(full)[1:-1, 1:-1]

    return apply


def build_line_smoother(source, orientation, line_entries="probe"):
    """Factor the line systems of ``source`` (a :class:`SpectralOperator` or :class:`FemOverlay`).

    ``line_entries`` selects ``"probe"`` or ``"band"`` extraction (see module docs).
    """
    if orientation not in (HORIZONTAL, VERTICAL):
        raise ValueError(f"unknown orientation {orientation!r}")
    if line_entries not in ("probe", "band"):
        raise ValueError(f"unknown line_entries mode {line_entries!r}")
    if not isinstance(source, (SpectralOperator, FemOverlay)):
        raise TypeError(f"unsupported smoother source {type(source).__name__}")
    p = source.degree
    if p < 2:
        raise ValueError("line smoothers need degree p >= 2")
    if orientation == VERTICAL:
        source = source.transposed()
    if isinstance(source, SpectralOperator):
        kind = "GLL"
        if line_entries == "probe":
            apply_rows = _interior_rows(gll_row_line_operator(source), p)
            lower, diag, upper = probe_row_line_coefficients(apply_rows, p - 1)
            flops.add(3 * 4 * (p + 1) ** 3)
        else:
            diag, upper = gll_row_line_coefficients(source)
            diag, upper = diag[1:-1, 1:-1], upper[1:-1, 1:-1]
            lower = upper
    else:
        kind = "FEM"
        # FEM line blocks are tridiagonal already, so both modes agree
        diag, upper = fem_row_line_coefficients(source)
        diag, upper = diag[1:-1, 1:-1], upper[1:-1, 1:-1]
        lower = upper
    system = tridiag.BlockTridiagonalSystem.from_scalars(lower, diag, upper)
    return LineSmoother(orientation, kind, p, tridiag.build_hierarchy(system), system)


def apply_smoother(s, r):
    """Block-Jacobi over lines: solve every line system exactly and scatter back."""
    n = s.degree - 1
    r = np.asarray(r, dtype=float)
    flat = r.ndim == 1
    grid = r.reshape(n, n)
    if s.orientation == HORIZONTAL:
        out = tridiag.solve(s.line_solvers, grid)
    else:
        out = tridiag.solve(s.line_solvers, grid.T).T
    return out.ravel() if flat else out
