"""Block-tridiagonal solver: cyclic reduction written as a direct multigrid V-cycle.

A system with ``n`` block rows of size ``m`` is reordered odd/even (1-based,
so the odd rows are the 1st, 3rd, ...).  Eliminating the odd rows gives

* a block-diagonal smoother ``S^{-1} = blockdiag(A_1^{-1}, 0, A_3^{-1}, 0, ...)``,
* a prolongation ``P`` with identity blocks on even rows and
  ``-A_i^{-1} L_i``, ``-A_i^{-1} U_i`` on odd rows, ``R = P^T``,
* a block-tridiagonal coarse system ``M_0 = D - C A^{-1} B``,

and one two-level step ``y = S^{-1} g + P M_0^{-1} R (g - M S^{-1} g)`` is
exact.  Recursing on ``M_0`` until at most ``base_cutoff`` rows remain yields
a direct solver of cost ``O(n m^3)``.

All arrays may carry leading batch axes; every operation broadcasts over
them, so independent systems of equal shape are solved together.
"""

from dataclasses import dataclass, field

import numpy as np

from . import flops
from .errors import NonCommuting, SingularDiagonalBlock

BASE_CUTOFF = 4
_EPS = np.finfo(float).eps


def _mv(blocks, vecs):
    return np.einsum("...ij,...j->...i", blocks, vecs)


def _mvT(blocks, vecs):
    return np.einsum("...ji,...j->...i", blocks, vecs)


def _batch_size(arr, trailing):
    return int(np.prod(arr.shape[: arr.ndim - trailing], dtype=int))


@dataclass(frozen=True, eq=False)
class BlockTridiagonalSystem:
    """Blocks ``lower = (L_2..L_n)``, ``diag = (A_1..A_n)``, ``upper = (U_1..U_{n-1})``.

    Shapes: ``diag (..., n, m, m)``, ``lower`` and ``upper (..., n-1, m, m)``.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        d, lo, up = self.diag, self.lower, self.upper
        if d.ndim < 3 or d.shape[-1] != d.shape[-2]:
            raise ValueError("diag must have shape (..., n, m, m)")
        n, m = d.shape[-3], d.shape[-1]
        want = d.shape[:-3] + (max(n - 1, 0), m, m)
        if lo.shape != want or up.shape != want:
            raise ValueError(f"lower/upper must have shape {want}")

    @property
    def n(self):
        return self.diag.shape[-3]

    @property
    def m(self):
        return self.diag.shape[-1]

    @property
    def batch_shape(self):
        return self.diag.shape[:-3]

    @classmethod
    def from_scalars(cls, lower, diag, upper):
        """Scalar (``m = 1``) tridiagonal from 1D (or batched) coefficient arrays."""
        lower, diag, upper = (np.asarray(a, dtype=float)[..., None, None] for a in (lower, diag, upper))
        return cls(lower, diag, upper)

    @classmethod
    def toeplitz(cls, n, lower, diag, upper):
        lower, diag, upper = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (lower, diag, upper))
        m = diag.shape[-1]
        return cls(
            np.broadcast_to(lower, (n - 1, m, m)).copy(),
            np.broadcast_to(diag, (n, m, m)).copy(),
            np.broadcast_to(upper, (n - 1, m, m)).copy(),
        )

    def to_dense(self):
        """Dense matrix (batched if the system is); intended for tests and base solves."""
        n, m = self.n, self.m
        out = np.zeros(self.batch_shape + (n * m, n * m))
        for i in range(n):
            out[..., i * m : (i + 1) * m, i * m : (i + 1) * m] = self.diag[..., i, :, :]
            if i + 1 < n:
                out[..., i * m : (i + 1) * m, (i + 1) * m : (i + 2) * m] = self.upper[..., i, :, :]
                out[..., (i + 1) * m : (i + 2) * m, i * m : (i + 1) * m] = self.lower[..., i, :, :]
        return out

    def matvec(self, x):
        """``M x`` for block vectors ``x`` of shape ``(..., n, m)``."""
        y = _mv(self.diag, x)
        if self.n > 1:
            y[..., :-1, :] += _mv(self.upper, x[..., 1:, :])
            y[..., 1:, :] += _mv(self.lower, x[..., :-1, :])
        return y


@dataclass(frozen=True)
class OddEvenViews:
    """Index maps describing ``Q^T M Q = [[A, B], [C, D]]`` (0-based row indices).

    ``odd``/``even`` hold the 0-based positions of the 1-based odd/even rows.
    ``B`` couples odd row ``odd[r]`` to the even columns listed in
    ``b_cols[r]``; ``C`` couples even row ``even[c]`` to the odd columns in
    ``c_cols[c]``.
    """

    n: int
    odd: np.ndarray
    even: np.ndarray
    b_cols: tuple
    c_cols: tuple

    @property
    def perm(self):
        return np.concatenate([self.odd, self.even])


def reorder_odd_even(sys_or_n):
    n = sys_or_n if isinstance(sys_or_n, int) else sys_or_n.n
    if n < 2:
        raise ValueError("odd-even reordering needs n >= 2")
    odd = np.arange(0, n, 2)
    even = np.arange(1, n, 2)
    b_cols = tuple(tuple(c for c in (o - 1, o + 1) if 0 <= c < n) for o in odd)
    c_cols = tuple(tuple(c for c in (e - 1, e + 1) if 0 <= c < n) for e in even)
    return OddEvenViews(n, odd, even, b_cols, c_cols)


def odd_even_blocks(system):
    """Dense ``(A, B, C, D)`` of ``Q^T M Q`` for a single (unbatched) system; for tests."""
    views = reorder_odd_even(system)
    dense = system.to_dense()
    m = system.m
    idx = np.concatenate([np.arange(i * m, (i + 1) * m) for i in views.perm])
    q = dense[np.ix_(idx, idx)]
    k = len(views.odd) * m
    return q[:k, :k], q[:k, k:], q[k:, :k], q[k:, k:]


def _checked_inverse(blocks, level):
    m = blocks.shape[-1]
    cond = np.linalg.cond(blocks) if m > 1 else None
    if m == 1:
        bad = np.abs(blocks[..., 0, 0]) <= _EPS * np.max(np.abs(blocks), initial=0.0)
        bad |= ~np.isfinite(blocks[..., 0, 0])
    else:
        bad = ~np.isfinite(cond) | (cond > 1.0 / _EPS)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        # report the 1-based block-row index of the offending odd block
        raise SingularDiagonalBlock(int(2 * idx[-1] + 1), level)
    if m == 1:
        inv = 1.0 / blocks
    else:
        inv = np.linalg.inv(blocks)
    flops.add(_batch_size(blocks, 2) * m**3)
    return inv


@dataclass(frozen=True, eq=False)
class TwoLevelFactors:
    """Stored factors of one cyclic-reduction step.

    ``smoother_inverses[r]`` is ``A^{-1}`` of the r-th odd row; ``prolong_lower[r]``
    is ``-A^{-1} L`` (zero for the first row) and ``prolong_upper[r]`` is
    ``-A^{-1} U`` (zero if the odd row is the last row).
    """

    system: BlockTridiagonalSystem = field(repr=False)
    smoother_inverses: np.ndarray = field(repr=False)
    prolong_lower: np.ndarray = field(repr=False)
    prolong_upper: np.ndarray = field(repr=False)
    coarse: BlockTridiagonalSystem = field(repr=False)

    @property
    def n(self):
        return self.system.n


def build_two_level(system, level=None):
    n, m = system.n, system.m
    if n < 2:
        raise ValueError("two-level factors need n >= 2")
    d, lo, up = system.diag, system.lower, system.upper
    batch = system.batch_shape
    n_odd, n_even = (n + 1) // 2, n // 2
    bs = _batch_size(d, 3)

    a_inv = _checked_inverse(d[..., 0::2, :, :], level)

    # L_i and U_i of each odd row (0-based position o = 2r): L couples o to o-1
    # (lower[o-1]), U couples o to o+1 (upper[o])
    l_odd = np.zeros(batch + (n_odd, m, m))
    l_odd[..., 1:, :, :] = lo[..., 1::2, :, :][..., : n_odd - 1, :, :]
    u_odd = np.zeros(batch + (n_odd, m, m))
    n_up = len(range(0, n - 1, 2))
    u_odd[..., :n_up, :, :] = up[..., 0::2, :, :]
    p_lower = -(a_inv @ l_odd)
    p_upper = -(a_inv @ u_odd)
    flops.add(bs * 2 * n_odd * m**3)

    # even row e = 2c+1: L_e = lower[e-1] = lower[2c], U_e = upper[e] = upper[2c+1]
    l_even = lo[..., 0::2, :, :][..., :n_even, :, :]
    u_even = np.zeros(batch + (n_even, m, m))
    n_ue = len(range(1, n - 1, 2))
    u_even[..., :n_ue, :, :] = up[..., 1::2, :, :]
    # neighbours: odd r=c (row e-1) and odd r=c+1 (row e+1, may not exist)
    left_pu = p_upper[..., :n_even, :, :]  # -A_{e-1}^{-1} U_{e-1}
    left_pl = p_lower[..., :n_even, :, :]  # -A_{e-1}^{-1} L_{e-1}
    right_pl = np.zeros(batch + (n_even, m, m))
    right_pu = np.zeros(batch + (n_even, m, m))
    n_right = n_odd - 1
    right_pl[..., :n_right, :, :] = p_lower[..., 1:, :, :][..., :n_even, :, :]
    right_pu[..., :n_right, :, :] = p_upper[..., 1:, :, :][..., :n_even, :, :]

    c_diag = d[..., 1::2, :, :] + l_even @ left_pu + u_even @ right_pl
    c_lower = (l_even @ left_pl)[..., 1:, :, :]
    c_upper = (u_even @ right_pu)[..., :-1, :, :]
    flops.add(bs * 4 * n_even * m**3)

    coarse = BlockTridiagonalSystem(c_lower, c_diag, c_upper)
    return TwoLevelFactors(system, a_inv, p_lower, p_upper, coarse)


def _restrict(f, r):
    """``R r`` with ``R = P^T``: the even part plus transposed odd-row prolong blocks."""
    n = f.n
    r_odd, r_even = r[..., 0::2, :], r[..., 1::2, :]
    n_even = r_even.shape[-2]
    out = r_even.copy()
    out += _mvT(f.prolong_upper[..., :n_even, :, :], r_odd[..., :n_even, :])
    n_right = (n + 1) // 2 - 1
    out[..., :n_right, :] += _mvT(f.prolong_lower[..., 1:, :, :], r_odd[..., 1:, :])
    return out


def _prolong(f, z):
    """``P z``: identity on even rows, ``-A^{-1}L z_left - A^{-1}U z_right`` on odd rows."""
    n = f.n
    n_odd = (n + 1) // 2
    batch = z.shape[:-2]
    m = z.shape[-1]
    out = np.zeros(batch + (n, m))
    out[..., 1::2, :] = z
    odd = np.zeros(batch + (n_odd, m))
    n_even = z.shape[-2]
    odd[..., 1:, :] += _mv(f.prolong_lower[..., 1:, :, :], z[..., : n_odd - 1, :])
    odd[..., :n_even, :] += _mv(f.prolong_upper[..., :n_even, :, :], z)
    out[..., 0::2, :] = odd
    return out


def _as_blockvec(g, system):
    g = np.asarray(g, dtype=float)
    if g.ndim == system.diag.ndim - 2 and system.m == 1:
        return g[..., None], True
    if g.ndim != system.diag.ndim - 1 or g.shape[-1] != system.m:
        raise ValueError(f"right-hand side shape {g.shape} does not match the block system")
    return g, False


def _count_solve_level(f):
    n, m = f.n, f.system.m
    bs = _batch_size(f.system.diag, 3)
    # S^{-1} g, residual, restriction, prolongation
    flops.add(bs * m * m * (n // 2 + 1 + 3 * n + 2 * n + 2 * n))


def solve_two_level(factors, g, coarse_solve=None):
    """One step of the two-level cycle; exact when ``coarse_solve`` is exact.

    ``g`` has shape ``(..., n, m)`` (or ``(..., n)`` for ``m = 1``).
    """
    g, squeeze = _as_blockvec(g, factors.system)
    x = np.zeros_like(g)
    x[..., 0::2, :] = _mv(factors.smoother_inverses, g[..., 0::2, :])
    r = g - factors.system.matvec(x)
    rc = _restrict(factors, r)
    if coarse_solve is None:
        z = _dense_solve(factors.coarse, rc)
    else:
        z = coarse_solve(rc)
    y = x + _prolong(factors, z)
    _count_solve_level(factors)
    return y[..., 0] if squeeze else y


def _dense_solve(system, g):
    dense = system.to_dense()
    shape = g.shape
    flat = g.reshape(g.shape[:-2] + (-1,))
    return np.linalg.solve(dense, flat[..., None])[..., 0].reshape(shape)


@dataclass(frozen=True, eq=False)
class TridiagMGHierarchy:
    """Cyclic-reduction levels (finest first) and the inverse of the base system."""

    levels: tuple
    base: BlockTridiagonalSystem = field(repr=False)
    base_inverse: np.ndarray = field(repr=False)

    @property
    def num_levels(self):
        return len(self.levels) + 1

    @property
    def n(self):
        return self.levels[0].n if self.levels else self.base.n

    @property
    def m(self):
        return self.base.m

    @property
    def row_counts(self):
        return [f.n for f in self.levels] + [self.base.n]


def build_hierarchy(system, base_cutoff=BASE_CUTOFF):
    if base_cutoff < 1:
        raise ValueError("base_cutoff must be >= 1")
    levels = []
    cur = system
    while cur.n > base_cutoff:
        f = build_two_level(cur, level=len(levels))
        levels.append(f)
        cur = f.coarse
    dense = cur.to_dense()
    try:
        base_inv = np.linalg.inv(dense)
    except np.linalg.LinAlgError:
        raise SingularDiagonalBlock(0, len(levels)) from None
    if not np.all(np.isfinite(base_inv)):
        raise SingularDiagonalBlock(0, len(levels))
    k = dense.shape[-1]
    flops.add(_batch_size(dense, 2) * k**3)
    return TridiagMGHierarchy(tuple(levels), cur, base_inv)


def solve(hierarchy, g):
    """Direct solve ``M x = g``: one descent and ascent, no post-smoothing.

    ``g`` has shape ``(..., n, m)``; for scalar blocks ``(..., n)`` is also accepted.
    """
    g, squeeze = _as_blockvec(g, hierarchy.base)
    out = _solve_from(hierarchy, 0, g)
    return out[..., 0] if squeeze else out


def _solve_from(h, k, g):
    if k == len(h.levels):
        shape = g.shape
        flat = g.reshape(shape[:-2] + (-1,))
        flops.add(_batch_size(flat, 1) * flat.shape[-1] ** 2)
        return _mv(h.base_inverse, flat).reshape(shape)
    f = h.levels[k]
    return solve_two_level(f, g, coarse_solve=lambda rc: _solve_from(h, k + 1, rc))


# --- relation to classic cyclic reduction ------------------------------------


@dataclass(frozen=True, eq=False)
class CyclicReductionComparison:
    """The reduced system two ways for constant commuting blocks ``A``, ``T``.

    ``classic_*`` follow the textbook reduction (diagonal ``2T^2 - A^2``,
    off-diagonal ``T^2``, right-hand side ``T y_{i-1} + T y_{i+1} - A y_i``);
    ``coarse`` is the Schur complement built by :func:`build_two_level`.
    ``scaling`` is ``-A^{-1}``: ``scaling @ classic`` equals ``coarse`` row by row.
    """

    coarse: BlockTridiagonalSystem
    classic_diag: np.ndarray
    classic_off: np.ndarray
    scaling: np.ndarray
    classic_rhs: callable = field(repr=False)
    coarse_rhs: callable = field(repr=False)


def cyclic_reduction_reduced_system(a, t, n):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    t = np.atleast_2d(np.asarray(t, dtype=float))
    comm = np.linalg.norm(a @ t - t @ a)
    if comm > 1e-12 * np.linalg.norm(a) * np.linalg.norm(t):
        raise NonCommuting(f"||AT - TA|| = {comm:.3e}")
    system = BlockTridiagonalSystem.toeplitz(n, t, a, t)
    factors = build_two_level(system)
    classic_diag = 2.0 * t @ t - a @ a
    classic_off = t @ t
    n_even = n // 2

    def classic_rhs(y):
        y = np.asarray(y, dtype=float).reshape(n, -1)
        out = np.empty((n_even, y.shape[1]))
        for c in range(n_even):
            e = 2 * c + 1
            out[c] = t @ y[e - 1] - a @ y[e]
            if e + 1 < n:
                out[c] += t @ y[e + 1]
        return out

    def coarse_rhs(y):
        y = np.asarray(y, dtype=float).reshape(n, -1)
        x = np.zeros_like(y)
        x[0::2] = _mv(factors.smoother_inverses, y[0::2])
        return _restrict(factors, y - system.matvec(x))

    return CyclicReductionComparison(
        coarse=factors.coarse,
        classic_diag=classic_diag,
        classic_off=classic_off,
        scaling=-np.linalg.inv(a),
        classic_rhs=classic_rhs,
        coarse_rhs=coarse_rhs,
    )
