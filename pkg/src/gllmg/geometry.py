"""Reference-to-physical domain maps and the per-node metric data they induce."""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import NonPositiveJacobian


@dataclass(frozen=True, eq=False)
class DomainMap:
    """A smooth map ``Phi: [-1, 1]^2 -> T`` with analytic first partials.

    ``coords(xi, eta)`` returns physical ``(x, y)``; ``partials(xi, eta)``
    returns ``(x_xi, x_eta, y_xi, y_eta)``.  Both accept broadcastable arrays.
    """

    kind: str
    coords: callable = field(repr=False)
    partials: callable = field(repr=False)
    params: dict = field(default_factory=dict)

    def __call__(self, xi, eta):
        return self.coords(xi, eta)

    @property
    def label(self):
        if self.kind == "shear":
            return f"shear:{self.params['angle']:g}"
        if self.kind == "bump":
            return f"bump:{self.params['height']:g}"
        return self.kind


def affine(matrix, offset=(0.0, 0.0)):
    """``(x, y) = offset + matrix @ (xi, eta)``."""
    (a, b), (c, d) = np.asarray(matrix, dtype=float)
    ox, oy = offset

    def coords(xi, eta):
        return ox + a * xi + b * eta, oy + c * xi + d * eta

    def partials(xi, eta):
        one = np.ones_like(np.asarray(xi + eta, dtype=float))
        return a * one, b * one, c * one, d * one

    return DomainMap("affine", coords, partials, {"matrix": ((a, b), (c, d)), "offset": (ox, oy)})


def unit_square():
    """``[-1, 1]^2 -> [0, 1]^2`` by ``x = (xi + 1)/2, y = (eta + 1)/2``."""
    m = affine([[0.5, 0.0], [0.0, 0.5]], (0.5, 0.5))
    return DomainMap("unit_square", m.coords, m.partials, {})


def shear(angle):
    """Unit square sheared by ``angle`` degrees: ``(x, y) -> (x + y tan(angle), y)``."""
    t = math.tan(math.radians(angle))

    def coords(xi, eta):
        x, y = 0.5 * (xi + 1.0), 0.5 * (eta + 1.0)
        return x + t * y, y

    def partials(xi, eta):
        one = np.ones_like(np.asarray(xi + eta, dtype=float))
        return 0.5 * one, 0.5 * t * one, 0.0 * one, 0.5 * one

    return DomainMap("shear", coords, partials, {"angle": float(angle)})


def bump(height):
    """Unit square with a bottom bump: ``(x, y) -> (x, y + h sin(pi x)(1 - y))``."""
    h = float(height)

    def coords(xi, eta):
        x, y = 0.5 * (xi + 1.0), 0.5 * (eta + 1.0)
        return x, y + h * np.sin(np.pi * x) * (1.0 - y)

    def partials(xi, eta):
        x, y = 0.5 * (xi + 1.0), 0.5 * (eta + 1.0)
        one = np.ones_like(x + y)
        y_xi = 0.5 * h * np.pi * np.cos(np.pi * x) * (1.0 - y)
        y_eta = 0.5 * (1.0 - h * np.sin(np.pi * x))
        return 0.5 * one, 0.0 * one, y_xi, y_eta

    return DomainMap("bump", coords, partials, {"height": h})


def closed_form(fx, fy, fx_xi, fx_eta, fy_xi, fy_eta, name="closed_form"):
    """General map from two coordinate functions and their four partials."""

    def coords(xi, eta):
        return fx(xi, eta), fy(xi, eta)

    def partials(xi, eta):
        shape = np.broadcast(xi, eta).shape
        return tuple(
            np.broadcast_to(np.asarray(g(xi, eta), dtype=float), shape)
            for g in (fx_xi, fx_eta, fy_xi, fy_eta)
        )

    return DomainMap(name, coords, partials, {})


def parse_map(text):
    """Build a map from ``unit_square``, ``shear:<deg>`` or ``bump:<h>``."""
    name, _, arg = text.partition(":")
    if name == "unit_square":
        return unit_square()
    if name == "shear":
        return shear(float(arg or 0.0))
    if name == "bump":
        return bump(float(arg or 0.0))
    raise ValueError(f"unknown domain map {text!r}")


@dataclass(frozen=True, eq=False)
class MetricData:
    """Geometric factors on the tensor GLL grid.

    Arrays are shaped ``(p+1, p+1)`` and indexed ``[l, k]`` for the node
    ``(xi_k, eta_l)``, so that a C-order flatten runs left-right then
    bottom-top.  ``g11, g12, g22`` are the entries of
    ``rho_k rho_l |J| J^{-1} J^{-T}``.
    """

    degree: int
    quad_weights_2d: np.ndarray
    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray
    x: np.ndarray
    y: np.ndarray
    jac_det: np.ndarray

    @property
    def node_coords(self):
        return np.stack([self.x, self.y], axis=-1)

    def transposed(self):
        """Metric of the same data on the swapped (eta, xi) layout."""
        return MetricData(
            self.degree,
            self.quad_weights_2d.T,
            self.g22.T,
            self.g12.T,
            self.g11.T,
            self.y.T,
            self.x.T,
            self.jac_det.T,
        )


def build_metric(domain, basis):
    xi = basis.nodes[None, :]
    eta = basis.nodes[:, None]
    xi, eta = np.broadcast_arrays(xi, eta)
    x, y = domain.coords(xi, eta)
    x_xi, x_eta, y_xi, y_eta = domain.partials(xi, eta)
    det = x_xi * y_eta - x_eta * y_xi
    bad = np.argwhere(det <= 0.0)
    if bad.size:
        l, k = bad[0]
        raise NonPositiveJacobian(int(k), int(l), float(det[l, k]))
    w2 = basis.weights[None, :] * basis.weights[:, None]
    # |J| J^{-1} J^{-T} = adj(J) adj(J)^T / |J|
    g11 = (y_eta**2 + x_eta**2) / det
    g12 = -(y_eta * y_xi + x_eta * x_xi) / det
    g22 = (y_xi**2 + x_xi**2) / det
    return MetricData(
        degree=basis.degree,
        quad_weights_2d=w2 * det,
        g11=w2 * g11,
        g12=w2 * g12,
        g22=w2 * g22,
        x=np.asarray(x, dtype=float) + 0.0 * det,
        y=np.asarray(y, dtype=float) + 0.0 * det,
        jac_det=det,
    )
