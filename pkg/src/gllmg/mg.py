"""p-multigrid gamma-cycle preconditioner with line smoothers.

Levels are GLL discretizations of degrees ``p0, 2 p0, ..., p_L`` on the same
domain map.  Prolongation interpolates coarse nodal values onto the fine GLL
nodes.  Residuals are restricted either by interpolating them onto the
coarse nodes (the default) or by ``R = P^T``.  Smoothing alternates
horizontal and vertical line preconditioners and the coarsest level is
solved directly.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg as sla

from . import flops
from .errors import InvalidDegreeChain
from .geometry import build_metric
from .gll import interp_matrix, make_basis
from .operator import assemble_fem_overlay, make_operator
from .smoother import HORIZONTAL, VERTICAL, apply_smoother, build_line_smoother

GLL = "GLL"
FEM = "FEM"
DEFAULT_ALPHA = {GLL: 2.0 / 3.0, FEM: 0.16}


@dataclass(frozen=True)
class GammaCycleConfig:
    gamma: int = 7
    alpha: float = None
    m: int = 1
    p0: int = 4
    smoother_source: str = GLL
    restriction: str = "interpolation"
    line_entries: str = "probe"

    def __post_init__(self):
        if self.smoother_source not in (GLL, FEM):
            raise ValueError(f"smoother_source must be GLL or FEM, got {self.smoother_source!r}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", DEFAULT_ALPHA[self.smoother_source])
        if not 1 <= int(self.gamma) <= 8:
            raise ValueError(f"gamma must be in [1, 8], got {self.gamma}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.m < 0:
            raise ValueError("m must be >= 0")
        if self.p0 < 2:
            raise ValueError("coarsest degree p0 must be >= 2")
        if self.restriction not in ("interpolation", "transpose"):
            raise ValueError(f"restriction must be 'interpolation' or 'transpose', got {self.restriction!r}")
        if self.line_entries not in ("probe", "band"):
            raise ValueError(f"line_entries must be 'probe' or 'band', got {self.line_entries!r}")


@dataclass(frozen=True, eq=False)
class MGLevel:
    """One degree of the hierarchy.

    ``prolong`` maps coarse interior values to this level's interior nodes
    and ``restrict`` maps this level's interior residuals to the next
    coarser level; both act along each axis (tensor form).
    """

    degree: int
    operator: object = field(repr=False)
    smoothers: dict = field(default=None, repr=False)
    prolong: np.ndarray = field(default=None, repr=False)
    restrict: np.ndarray = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class MGHierarchy:
    """Levels coarsest first; ``coarse_solve`` is the LU factorization of interior ``A_0``."""

    levels: tuple
    config: GammaCycleConfig
    coarse_matrix: np.ndarray = field(repr=False)
    coarse_solve: tuple = field(repr=False)

    @property
    def finest(self):
        return self.levels[-1]

    @property
    def degrees(self):
        return [lv.degree for lv in self.levels]

    def precondition(self, r):
        return gamma_cycle(self, len(self.levels) - 1, r)


def degree_chain(p_L, p0):
    if p_L <= p0 or p_L % p0:
        raise InvalidDegreeChain(f"p_L={p_L} is not p0*2^L with L >= 1 for p0={p0}")
    ratio = p_L // p0
    if ratio & (ratio - 1):
        raise InvalidDegreeChain(f"p_L={p_L} is not p0*2^L with L >= 1 for p0={p0}")
    return [p0 * 2**k for k in range(int(math.log2(ratio)) + 1)]


def interior_matrix(op):
    """Dense interior stiffness; only used for the small coarsest level."""
    n = op.n_interior
    return np.column_stack([op.apply_interior(e) for e in np.eye(n)])


def build_hierarchy(domain, p_L, config=None):
    config = config or GammaCycleConfig()
    degrees = degree_chain(p_L, config.p0)
    levels = []
    prev_basis = None
    for k, p in enumerate(degrees):
        basis = make_basis(p)
        metric = build_metric(domain, basis)
        op = make_operator(basis, metric)
        smoothers = prolong = None
        if k > 0:
            src = op if config.smoother_source == GLL else assemble_fem_overlay(metric)
            smoothers = {o: build_line_smoother(src, o, config.line_entries) for o in (HORIZONTAL, VERTICAL)}
            # interior rows/cols only: corrections and residuals vanish on the boundary
            prolong = interp_matrix(prev_basis, basis).matrix[1:-1, 1:-1].copy()
            if config.restriction == "transpose":
                restrict_mat = prolong.T.copy()
            else:
                restrict_mat = interp_matrix(basis, prev_basis).matrix[1:-1, 1:-1].copy()
        levels.append(MGLevel(p, op, smoothers, prolong, restrict_mat if k > 0 else None))
        prev_basis = basis
    a0 = interior_matrix(levels[0].operator)
    return MGHierarchy(tuple(levels), config, a0, sla.lu_factor(a0))


def prolongate(level, u_coarse):
    """Tensor-product interpolation of a coarse interior grid onto ``level``."""
    pm = level.prolong
    flops.matmul(pm.shape[0], pm.shape[1], pm.shape[1])
    flops.matmul(pm.shape[0], pm.shape[1], pm.shape[0])
    return pm @ u_coarse @ pm.T


def restrict(level, r_fine):
    rm = level.restrict
    flops.matmul(rm.shape[0], rm.shape[1], rm.shape[1])
    flops.matmul(rm.shape[0], rm.shape[1], rm.shape[0])
    return rm @ r_fine @ rm.T


def _smooth(level, x, r, orientation, alpha):
    res = r - level.operator.apply_interior(x)
    flops.add(2 * x.size)
    return x + alpha * apply_smoother(level.smoothers[orientation], res)


def _coarse_direct(h, r):
    n = h.levels[0].degree - 1
    flops.add(r.size**2)
    return sla.lu_solve(h.coarse_solve, r.ravel(), check_finite=False).reshape(n, n)


def gamma_cycle(h, level, r):
    """Apply ``M_level^{-1}`` to the interior residual ``r``.

    ``m`` horizontal then ``m`` vertical pre-smoothing steps, then ``gamma``
    passes of coarse correction followed by ``m`` vertical and ``m``
    horizontal post-smoothing steps; each pass starts from the previous
    pass's result.
    """
    r = np.asarray(r, dtype=float)
    flat = r.ndim == 1
    n = h.levels[level].degree - 1
    r = r.reshape(n, n)
    out = _cycle(h, level, r)
    return out.ravel() if flat else out


def _cycle(h, level, r):
    if level == 0:
        return _coarse_direct(h, r)
    cfg = h.config
    lv = h.levels[level]
    a = cfg.alpha
    x = np.zeros_like(r)
    for _ in range(cfg.m):
        x = _smooth(lv, x, r, HORIZONTAL, a)
    for _ in range(cfg.m):
        x = _smooth(lv, x, r, VERTICAL, a)
    for _ in range(cfg.gamma):
        res = r - lv.operator.apply_interior(x)
        y = x + prolongate(lv, _cycle(h, level - 1, restrict(lv, res)))
        for _ in range(cfg.m):
            y = _smooth(lv, y, r, VERTICAL, a)
        for _ in range(cfg.m):
            y = _smooth(lv, y, r, HORIZONTAL, a)
        x = y
    return x


@dataclass(frozen=True)
class CycleCostModel:
    regime: str
    complexity: str
    work: float
    coarse_weight: float


def cycle_cost_model(p_L, p0, gamma, q=3, f=2):
    """Regime and geometric-sum work estimate of one gamma-cycle.

    ``work = sum_l (gamma+1) gamma^l (p_L / f^l)^q`` over the non-coarsest
    levels; ``coarse_weight = (gamma+1) gamma / f^q``.
    """
    if f < 2 or q < 1:
        raise ValueError("need f >= 2 and q >= 1")
    fq = f**q
    n_levels = round(math.log(p_L / p0, f))
    work = sum((gamma + 1) * gamma**l * (p_L / f**l) ** q for l in range(n_levels))
    if gamma < fq:
        regime, cplx = "gamma < f^q", f"O(p^{q})"
    elif gamma == fq:
        regime, cplx = "gamma = f^q", f"O(p^{q} log p)"
    else:
        regime, cplx = "gamma > f^q", f"O(p^({q}+log_f(gamma/f^q)))"
    return CycleCostModel(regime, cplx, float(work), (gamma + 1) * gamma / fq)
