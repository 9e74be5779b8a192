"""Gauss-Legendre-Lobatto nodes, weights, and Lagrange-basis matrices in 1D."""

from dataclasses import dataclass, field

import numpy as np

NEWTON_MAX_ITERS = 100
NEWTON_TOL = 1e-15


def legendre_eval(p, x):
    """Return ``(L_p(x), L_p'(x))`` by the three-term recurrence.

    ``x`` may be a scalar or an array.  The derivative uses the recurrence
    ``L'_{k+1} = L'_{k-1} + (2k+1) L_k`` so it stays exact at the endpoints.
    """
    x = np.asarray(x, dtype=float)
    if p == 0:
        return np.ones_like(x), np.zeros_like(x)
    l_prev, l_cur = np.ones_like(x), x.copy()
    d_prev, d_cur = np.zeros_like(x), np.ones_like(x)
    for k in range(1, p):
        l_next = ((2 * k + 1) * x * l_cur - k * l_prev) / (k + 1)
        d_next = d_prev + (2 * k + 1) * l_cur
        l_prev, l_cur = l_cur, l_next
        d_prev, d_cur = d_cur, d_next
    if l_cur.ndim == 0:
        return float(l_cur), float(d_cur)
    return l_cur, d_cur


def _gll_interior_nodes(p):
    # roots of L_p' by Newton, seeded at Chebyshev-Gauss-Lobatto points
    x = -np.cos(np.pi * np.arange(1, p) / p)
    pp1 = p * (p + 1)
    for _ in range(NEWTON_MAX_ITERS):
        lp, dlp = legendre_eval(p, x)
        # L'' from the Legendre ODE (interior points only, so 1 - x^2 > 0)
        d2lp = (2.0 * x * dlp - pp1 * lp) / (1.0 - x * x)
        dx = dlp / d2lp
        x = x - dx
        if np.max(np.abs(dx), initial=0.0) <= NEWTON_TOL:
            return x
    lp, dlp = legendre_eval(p, x)
    if np.max(np.abs(dlp), initial=0.0) <= 1e-12 * pp1:
        # stalled at roundoff level rather than failed
        return x
    raise RuntimeError(f"GLL Newton iteration did not converge for p={p}")


def barycentric_weights(nodes):
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def diff_matrix(nodes):
    """Differentiation matrix ``D[i, j] = pi_j'(x_i)`` for Lagrange cardinals on ``nodes``.

    Accepts a node array or a :class:`Basis1D`.

    Off-diagonals come from the barycentric closed form; the diagonal is the
    negative off-diagonal row sum so that constants are annihilated.
    """
    nodes = np.asarray(getattr(nodes, "nodes", nodes), dtype=float)
    w = barycentric_weights(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return d


@dataclass(frozen=True, eq=False)
class Basis1D:
    """GLL rule of degree ``p`` together with its differentiation matrix."""

    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    diff_matrix: np.ndarray = field(repr=False)
    bary_weights: np.ndarray = field(repr=False)

    @property
    def size(self):
        return self.degree + 1


def gll_rule(p):
    """Nodes and weights of the ``p+1`` point GLL rule on [-1, 1]."""
    if p < 1:
        raise ValueError("GLL rule needs degree p >= 1")
    nodes = np.empty(p + 1)
    nodes[0], nodes[-1] = -1.0, 1.0
    nodes[1:-1] = _gll_interior_nodes(p)
    # enforce exact symmetry; Newton leaves ~1 ulp asymmetry
    nodes = 0.5 * (nodes - nodes[::-1])
    if p % 2 == 0:
        nodes[p // 2] = 0.0
    lp, _ = legendre_eval(p, nodes)
    weights = 2.0 / (p * (p + 1) * lp**2)
    return nodes, weights


def make_basis(p):
    nodes, weights = gll_rule(p)
    return Basis1D(
        degree=p,
        nodes=nodes,
        weights=weights,
        diff_matrix=diff_matrix(nodes),
        bary_weights=barycentric_weights(nodes),
    )


@dataclass(frozen=True, eq=False)
class Interp1D:
    from_degree: int
    to_degree: int
    matrix: np.ndarray


def lagrange_matrix(nodes, bary_weights, targets):
    """Evaluate the cardinal polynomials on ``nodes`` at ``targets`` (barycentric form).

    Row ``i`` holds ``pi_j(targets[i])`` for all ``j``.
    """
    targets = np.asarray(targets, dtype=float)
    diff = targets[:, None] - nodes[None, :]
    hit = diff == 0.0
    diff[hit] = 1.0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        terms = bary_weights[None, :] / diff
        mat = terms / terms.sum(axis=1, keepdims=True)
    # targets within underflow distance of a node count as hitting it
    near = ~np.all(np.isfinite(mat), axis=1) & ~hit.any(axis=1)
    hit[near, np.argmin(np.abs(diff[near]), axis=1)] = True
    rows = hit.any(axis=1)
    mat[rows] = hit[rows].astype(float)
    return mat


def interp_matrix(src, dst):
    """Interpolation from ``src`` nodal values to ``dst`` nodes."""
    if src.degree == dst.degree:
        return Interp1D(src.degree, dst.degree, np.eye(src.size))
    mat = lagrange_matrix(src.nodes, src.bary_weights, dst.nodes)
    return Interp1D(src.degree, dst.degree, mat)
