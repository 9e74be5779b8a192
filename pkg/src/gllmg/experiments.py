"""Model problems and the iteration-count experiments built on them."""

from dataclasses import dataclass, asdict
import time

import numpy as np

from .errors import GLLMGError, NoConvergence
from .geometry import unit_square
from .krylov import GmresConfig, gmres
from .mg import DEFAULT_ALPHA, FEM, GLL, GammaCycleConfig, build_hierarchy
from .operator import lift_boundary

PROBLEMS = ("constant", "sine", "boundary_layer")


@dataclass(frozen=True)
class ProblemSpec:
    """Poisson data for ``-Laplace(u) = f`` with Dirichlet values.

    ``constant`` is ``Laplace(u) = -1`` with ``u = 0`` on the boundary; the
    other kinds are manufactured from an exact solution ``u*`` whose
    Laplacian is known in closed form.
    """

    kind: str = "constant"
    k: int = 1

    def __post_init__(self):
        if self.kind not in PROBLEMS:
            raise ValueError(f"unknown problem {self.kind!r}; choose from {PROBLEMS}")

    @property
    def has_exact(self):
        return self.kind != "constant"

    def exact(self, x, y):
        if self.kind == "sine":
            w = 8.0 * self.k * np.pi
            return np.sin(w * x) * np.sin(w * y)
        if self.kind == "boundary_layer":
            return np.sin(8.0 * np.pi / (x + y + np.pi / 10.0))
        return None

    def laplacian(self, x, y):
        """Closed-form ``Laplace(u*)`` (``-1`` for the constant problem)."""
        if self.kind == "constant":
            return -np.ones(np.broadcast(x, y).shape)
        if self.kind == "sine":
            w = 8.0 * self.k * np.pi
            return -2.0 * w * w * np.sin(w * x) * np.sin(w * y)
        s = x + y + np.pi / 10.0
        a = 8.0 * np.pi / s
        # d/dx sin(a) = -cos(a) a/s ; d2/dx2 = -sin(a) a^2/s^2 + 2 cos(a) a/s^2
        return 2.0 * (-np.sin(a) * a * a + 2.0 * np.cos(a) * a) / (s * s)

    def source(self, x, y):
        """``f = -Laplace(u*)``, the right-hand side of the weak form."""
        return -self.laplacian(x, y)

    def boundary(self, x, y):
        if self.kind == "constant":
            return np.zeros(np.broadcast(x, y).shape)
        return self.exact(x, y)

    @property
    def label(self):
        return f"sine{self.k}" if self.kind == "sine" and self.k != 1 else self.kind


@dataclass
class ExperimentRow:
    problem: str
    map: str
    p_L: int
    gamma: int
    smoother: str
    alpha: float
    m: int
    iterations: object
    rel_error: float
    seconds: float
    converged: bool = True
    error: str = ""

    def as_csv(self):
        d = asdict(self)
        d.pop("converged")
        d.pop("error")
        if isinstance(d["rel_error"], float) and np.isnan(d["rel_error"]):
            d["rel_error"] = ""
        elif d["rel_error"] != "":
            d["rel_error"] = f"{d['rel_error']:.3e}"
        d["seconds"] = f"{d['seconds']:.3f}"
        d["alpha"] = f"{d['alpha']:.6g}"
        return d


CSV_COLUMNS = ["problem", "map", "p_L", "gamma", "smoother", "alpha", "m", "iterations", "rel_error", "seconds"]


@dataclass
class SolveResult:
    solution: np.ndarray
    report: object
    hierarchy: object
    lifted: object


def solve_poisson(problem, domain, p_L, config, gmres_config=None):
    """Build the hierarchy, lift the boundary data and run preconditioned GMRES."""
    h = build_hierarchy(domain, p_L, config)
    op = h.finest.operator
    m = op.metric
    lifted = lift_boundary(op, problem.source(m.x, m.y), problem.boundary)
    w, report = gmres(op.apply_interior, h.precondition, lifted.rhs0.ravel(), gmres_config)
    return SolveResult(lifted.recover(w), report, h, lifted)


def relative_error(problem, metric, u):
    exact = problem.exact(metric.x, metric.y)
    return float(np.max(np.abs(u - exact)) / np.max(np.abs(exact)))


def run_experiment(
    problem,
    domain=None,
    p_L=8,
    gamma=1,
    smoother_source=GLL,
    alpha=None,
    m=1,
    tol=1e-8,
    max_iters=200,
    p0=4,
    restriction="interpolation",
    line_entries="probe",
):
    domain = domain or unit_square()
    alpha = DEFAULT_ALPHA[smoother_source] if alpha is None else alpha
    row = ExperimentRow(problem.label, domain.label, p_L, gamma, smoother_source, alpha, m, None, float("nan"), 0.0)
    t0 = time.perf_counter()
    config = GammaCycleConfig(
        gamma=gamma,
        alpha=alpha,
        m=m,
        p0=p0,
        smoother_source=smoother_source,
        restriction=restriction,
        line_entries=line_entries,
    )
    try:
        res = solve_poisson(problem, domain, p_L, config, GmresConfig(tol=tol, max_iters=max_iters))
        row.iterations = res.report.iterations
        if problem.has_exact:
            row.rel_error = relative_error(problem, res.hierarchy.finest.operator.metric, res.solution)
    except NoConvergence as exc:
        row.iterations = f">{exc.max_iters}"
        row.converged = False
    except GLLMGError as exc:
        row.iterations = "error"
        row.converged = False
        row.error = str(exc)
    row.seconds = time.perf_counter() - t0
    return row
