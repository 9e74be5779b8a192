"""Exception types raised by the solver components."""


class GLLMGError(Exception):
    """Base class for all package errors."""


class NonPositiveJacobian(GLLMGError):
    def __init__(self, k, l, det):
        self.k, self.l, self.det = k, l, det
        super().__init__(f"non-positive Jacobian determinant {det:.3e} at node ({k}, {l})")


class DegenerateCell(GLLMGError):
    def __init__(self, k, l):
        self.k, self.l = k, l
        super().__init__(f"degenerate (non-convex or zero-area) FEM cell ({k}, {l})")


class SingularDiagonalBlock(GLLMGError):
    def __init__(self, index, level=None):
        self.index, self.level = index, level
        where = f"block {index}" if level is None else f"block {index} on level {level}"
        super().__init__(f"numerically singular diagonal {where}")


class NonCommuting(GLLMGError):
    pass


class InvalidDegreeChain(GLLMGError):
    pass


class NoConvergence(GLLMGError):
    def __init__(self, max_iters, report):
        self.max_iters, self.report = max_iters, report
        super().__init__(f"GMRES did not converge in {max_iters} iterations")


class Breakdown(GLLMGError):
    def __init__(self, iteration, report):
        self.iteration, self.report = iteration, report
        super().__init__(f"Arnoldi breakdown at iteration {iteration} without convergence")


class Divergence(NoConvergence):
    """The preconditioner returned non-finite values; counted as non-convergence."""

    def __init__(self, iteration, max_iters, report):
        super().__init__(max_iters, report)
        self.iteration = iteration
        self.args = (f"preconditioner overflowed at GMRES iteration {iteration}",)
