"""Matrix-free GLL stiffness/mass operators, boundary lifting, and the bilinear FEM overlay.

Node vectors are ``(p+1, p+1)`` arrays indexed ``[l, k]`` (row = eta index,
column = xi index); flat vectors of length ``(p+1)^2`` are accepted and
returned flat.  Interior vectors are ``(p-1, p-1)`` arrays on the same
layout with the boundary ring removed.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import flops
from .errors import DegenerateCell


def _as_grid(u, n):
    u = np.asarray(u, dtype=float)
    if u.shape == (n, n):
        return u, False
    if u.shape == (n * n,):
        return u.reshape(n, n), True
    raise ValueError(f"expected a node vector of shape ({n}, {n}) or ({n * n},), got {u.shape}")


@dataclass(frozen=True, eq=False)
class SpectralOperator:
    basis: object
    metric: object
    interior_mask: np.ndarray = field(repr=False)

    @property
    def degree(self):
        return self.basis.degree

    @property
    def n_nodes(self):
        return self.basis.size

    @property
    def n_interior(self):
        return (self.degree - 1) ** 2

    def transposed(self):
        """Same operator on the swapped layout, where vertical lines become rows."""
        return SpectralOperator(self.basis, self.metric.transposed(), self.interior_mask.T)

    def apply_A(self, u):
        return apply_A(self, u)

    def apply_M(self, u):
        return apply_M(self, u)

    def apply_interior(self, w):
        """``A_p`` restricted to interior nodes (homogeneous Dirichlet)."""
        p = self.degree
        w = np.asarray(w, dtype=float)
        flat = w.ndim == 1
        full = np.zeros((p + 1, p + 1))
        full[1:-1, 1:-1] = w.reshape(p - 1, p - 1)
        out = apply_A(self, full)[1:-1, 1:-1]
        return out.ravel() if flat else out


def make_operator(basis, metric):
    n = basis.size
    mask = np.zeros((n, n), dtype=bool)
    mask[1:-1, 1:-1] = True
    return SpectralOperator(basis, metric, mask)


def apply_A(op, u):
    """Stiffness action by sum factorization, ``O(p^3)`` work."""
    n = op.n_nodes
    u, flat = _as_grid(u, n)
    d = op.basis.diff_matrix
    m = op.metric
    u_xi = u @ d.T
    u_eta = d @ u
    f_xi = m.g11 * u_xi + m.g12 * u_eta
    f_eta = m.g12 * u_xi + m.g22 * u_eta
    out = f_xi @ d + d.T @ f_eta
    flops.add(4 * n**3 + 4 * n * n)
    return out.ravel() if flat else out


def apply_M(op, u):
    """Mass action; the GLL mass matrix is diagonal."""
    n = op.n_nodes
    u, flat = _as_grid(u, n)
    out = op.metric.quad_weights_2d * u
    flops.add(n * n)
    return out.ravel() if flat else out


@dataclass(frozen=True, eq=False)
class LiftedSystem:
    rhs0: np.ndarray
    lift: np.ndarray

    def recover(self, w):
        """Full nodal solution ``u = w + v`` from the interior solution ``w``."""
        u = self.lift.copy()
        n = u.shape[0]
        u[1:-1, 1:-1] += np.asarray(w).reshape(n - 2, n - 2)
        return u


def boundary_mask(n):
    mask = np.ones((n, n), dtype=bool)
    mask[1:-1, 1:-1] = False
    return mask


def lift_boundary(op, f, u0=None):
    """Homogenize Dirichlet data: returns ``rhs0 = (M f - A v)`` on interior nodes.

    ``f`` is a node vector of source values.  ``u0`` is either ``None``
    (homogeneous data), a callable ``u0(x, y)`` or a node vector whose
    boundary entries are used.
    """
    n = op.n_nodes
    f, _ = _as_grid(f, n)
    lift = np.zeros((n, n))
    if u0 is not None:
        if callable(u0):
            vals = np.asarray(u0(op.metric.x, op.metric.y), dtype=float)
            vals = np.broadcast_to(vals, (n, n))
        else:
            vals, _ = _as_grid(u0, n)
        bmask = boundary_mask(n)
        lift[bmask] = vals[bmask]
    rhs = apply_M(op, f) - apply_A(op, lift)
    return LiftedSystem(rhs0=rhs[1:-1, 1:-1].copy(), lift=lift)


# --- bilinear FEM overlay -------------------------------------------------

_GAUSS2 = np.array([-1.0, 1.0]) / np.sqrt(3.0)


def _q1_shape_grads(s, t):
    # local node order: (0,0), (1,0), (1,1), (0,1) on [-1,1]^2
    ds = 0.25 * np.array([-(1 - t), (1 - t), (1 + t), -(1 + t)])
    dt = 0.25 * np.array([-(1 - s), -(1 + s), (1 + s), (1 - s)])
    return ds, dt


def q1_element_stiffness(xc, yc):
    """4x4 bilinear stiffness of the quad with corners ``(xc[a], yc[a])``, 2x2 Gauss.

    Returns ``None`` if the isoparametric Jacobian is not positive at every
    Gauss point and corner (degenerate or non-convex cell).
    """
    k = np.zeros((4, 4))
    for s, t in [(a, b) for a in (-1.0, 1.0) for b in (-1.0, 1.0)]:
        ds, dt = _q1_shape_grads(s, t)
        if ds @ xc * (dt @ yc) - dt @ xc * (ds @ yc) <= 0.0:
            return None
    for s in _GAUSS2:
        for t in _GAUSS2:
            ds, dt = _q1_shape_grads(s, t)
            jac = np.array([[ds @ xc, dt @ xc], [ds @ yc, dt @ yc]])
            det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
            if det <= 0.0:
                return None
            grads = np.linalg.solve(jac.T, np.vstack([ds, dt]))
            k += det * grads.T @ grads
    return k


@dataclass(frozen=True, eq=False)
class FemOverlay:
    """9-point stencil storage of the bilinear stiffness on the GLL node mesh.

    ``stencil[l, k, a, b]`` is the coupling of node ``(k, l)`` to node
    ``(k + b - 1, l + a - 1)``.
    """

    degree: int
    stencil: np.ndarray = field(repr=False)

    @property
    def row_data(self):
        return self.stencil

    def transposed(self):
        return FemOverlay(self.degree, self.stencil.transpose(1, 0, 3, 2))

    def to_sparse(self):
        n = self.degree + 1
        rows, cols, vals = [], [], []
        for a in range(3):
            for b in range(3):
                ls, ks = np.nonzero(self.stencil[:, :, a, b])
                rows.append(ls * n + ks)
                cols.append((ls + a - 1) * n + ks + b - 1)
                vals.append(self.stencil[ls, ks, a, b])
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n * n, n * n)
        )

    def apply(self, u):
        n = self.degree + 1
        u, flat = _as_grid(u, n)
        pad = np.zeros((n + 2, n + 2))
        pad[1:-1, 1:-1] = u
        out = np.zeros((n, n))
        for a in range(3):
            for b in range(3):
                out += self.stencil[:, :, a, b] * pad[a : a + n, b : b + n]
        return out.ravel() if flat else out


def assemble_fem_overlay(metric):
    """Bilinear FEM stiffness on the mapped GLL node mesh (physical node positions)."""
    p = metric.degree
    n = p + 1
    stencil = np.zeros((n, n, 3, 3))
    # local corner a -> (dl, dk) offset inside the cell
    corners = [(0, 0), (0, 1), (1, 1), (1, 0)]
    for l in range(p):
        for k in range(p):
            xc = np.array([metric.x[l + dl, k + dk] for dl, dk in corners])
            yc = np.array([metric.y[l + dl, k + dk] for dl, dk in corners])
            ke = q1_element_stiffness(xc, yc)
            if ke is None:
                raise DegenerateCell(k, l)
            for a, (la, ka) in enumerate(corners):
                for b, (lb, kb) in enumerate(corners):
                    stencil[l + la, k + ka, lb - la + 1, kb - ka + 1] += ke[a, b]
    flops.add(p * p * 4 * 64)
    return FemOverlay(p, stencil)
