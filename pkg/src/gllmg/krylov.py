"""Right-preconditioned full GMRES (modified Gram-Schmidt Arnoldi, Givens rotations)."""

from dataclasses import dataclass, field

import numpy as np

from .errors import Breakdown, Divergence, NoConvergence


@dataclass(frozen=True)
class GmresConfig:
    tol: float = 1e-8
    max_iters: int = 200

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class SolveReport:
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    converged: bool = False
    true_residual: float = float("nan")


def _identity(v):
    return v


def gmres(apply_op, apply_precond, rhs, config=None):
    """Solve ``A x = rhs`` from a zero initial guess.

    Iterates on ``A M^{-1} z = rhs`` and returns ``x = M^{-1} z``, so the
    monitored residual is the residual of the original system.  The
    iteration count equals the number of preconditioner applications in
    the Arnoldi loop.  Raises :class:`NoConvergence` (report attached) if
    ``tol * ||rhs||`` is not reached within ``max_iters`` steps, and its
    subclass :class:`Divergence` if the preconditioner overflows.
    """
    config = config or GmresConfig()
    apply_precond = apply_precond or _identity
    b = np.asarray(rhs, dtype=float).ravel()
    beta = np.linalg.norm(b)
    report = SolveReport(residual_history=[beta])
    if beta == 0.0:
        report.converged, report.true_residual = True, 0.0
        return np.zeros_like(b), report

    k_max = config.max_iters
    target = config.tol * beta
    v = np.zeros((k_max + 1, b.size))
    z = np.zeros((k_max, b.size))
    h = np.zeros((k_max + 1, k_max))
    cs = np.zeros(k_max)
    sn = np.zeros(k_max)
    g = np.zeros(k_max + 1)
    g[0] = beta
    v[0] = b / beta

    k = 0
    broke_down = False
    for j in range(k_max):
        with np.errstate(over="ignore", invalid="ignore"):
            z[j] = np.asarray(apply_precond(v[j]), dtype=float).ravel()
            w = np.asarray(apply_op(z[j]), dtype=float).ravel()
        if not (np.all(np.isfinite(z[j])) and np.all(np.isfinite(w))):
            report.iterations = j
            raise Divergence(j + 1, k_max, report)
        w_norm = np.linalg.norm(w)
        for i in range(j + 1):
            h[i, j] = v[i] @ w
            w = w - h[i, j] * v[i]
        h[j + 1, j] = np.linalg.norm(w)
        for i in range(j):
            tmp = cs[i] * h[i, j] + sn[i] * h[i + 1, j]
            h[i + 1, j] = -sn[i] * h[i, j] + cs[i] * h[i + 1, j]
            h[i, j] = tmp
        denom = np.hypot(h[j, j], h[j + 1, j])
        if denom <= np.finfo(float).tiny:
            # A M^-1 is singular on the Krylov space: keep the previous iterate
            broke_down = True
            break
        breakdown = h[j + 1, j] <= 1e-14 * max(w_norm, np.finfo(float).tiny)
        if not breakdown:
            v[j + 1] = w / h[j + 1, j]
        cs[j], sn[j] = h[j, j] / denom, h[j + 1, j] / denom
        h[j, j] = denom
        h[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        k = j + 1
        report.residual_history.append(abs(g[j + 1]))
        if abs(g[j + 1]) <= target:
            report.converged = True
            break
        if breakdown:
            broke_down = True
            break

    y = np.linalg.solve(np.triu(h[:k, :k]), g[:k]) if k else np.zeros(0)
    x = z[:k].T @ y
    report.iterations = k
    report.true_residual = float(np.linalg.norm(b - np.asarray(apply_op(x)).ravel()) / beta)
    if broke_down:
        if report.true_residual <= config.tol:
            report.converged = True
        else:
            raise Breakdown(k, report)
    if not report.converged:
        raise NoConvergence(k_max, report)
    return x, report
