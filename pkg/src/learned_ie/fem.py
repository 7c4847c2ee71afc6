"""High-order 1D finite elements on radial/planar intervals.

Nodal Lagrange bases on Gauss-Lobatto-Legendre points, continuous across
elements, assembled into a :class:`~learned_ie.numerics.BandedComplexMatrix`
whose half-bandwidth equals the polynomial order.  The bilinear forms are

    a(u, v) = int p u' v' + c u v      (coefficients already carry r**(d-1))
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import BandedComplexMatrix, banded_solve, gauss_legendre

MAX_ORDER = 10


@lru_cache(maxsize=None)
def gll_nodes(order):
    """Gauss-Lobatto-Legendre nodes on [-1, 1] (``order + 1`` points)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    n = order
    x = -np.cos(np.pi * np.arange(n + 1) / n)
    for _ in range(100):
        p_prev, p = np.ones_like(x), x.copy()
        for k in range(2, n + 1):
            p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
        # Newton on (1 - x^2) P_n'(x) via the standard Lobatto iteration
        dx = (x * p - p_prev) / ((n + 1) * p)
        dx[0] = dx[-1] = 0.0
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    x[0], x[-1] = -1.0, 1.0
    x = 0.5 * (x - x[::-1])
    return x


@lru_cache(maxsize=None)
def _barycentric_weights(order):
    xs = gll_nodes(order)
    diff = xs[:, None] - xs[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


@lru_cache(maxsize=None)
def _diff_matrix(order):
    xs = gll_nodes(order)
    w = _barycentric_weights(order)
    diff = xs[:, None] - xs[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return d  # d[k, j] = phi_j'(x_k)


def lagrange_basis(order, xi):
    """Values and reference derivatives of the GLL Lagrange basis at points ``xi``."""
    xs = gll_nodes(order)
    w = _barycentric_weights(order)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    diff = xi[:, None] - xs[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-15)
    diff = np.where(exact, 1.0, diff)
    terms = w[None, :] / diff
    phi = terms / terms.sum(axis=1, keepdims=True)
    rows = np.nonzero(exact.any(axis=1))[0]
    for r in rows:
        phi[r] = exact[r].astype(float)
    dphi = phi @ _diff_matrix(order)
    return phi, dphi


@dataclass(frozen=True)
class RadialMesh:
    """Strictly increasing element breakpoints and a uniform polynomial order."""

    nodes: np.ndarray
    order: int

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a mesh needs at least two nodes")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("mesh nodes must be strictly increasing")
        if not 1 <= int(self.order) <= MAX_ORDER:
            raise ValueError(f"order must be in [1, {MAX_ORDER}], got {self.order}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "order", int(self.order))

    @classmethod
    def uniform(cls, r0, r1, n_elements, order):
        return cls(np.linspace(r0, r1, int(n_elements) + 1), order)

    @property
    def n_elements(self):
        return self.nodes.size - 1

    @property
    def n_dofs(self):
        return self.n_elements * self.order + 1

    @property
    def left(self):
        return float(self.nodes[0])

    @property
    def right(self):
        return float(self.nodes[-1])

    def refined(self):
        mids = 0.5 * (self.nodes[1:] + self.nodes[:-1])
        nodes = np.empty(2 * self.nodes.size - 1)
        nodes[0::2] = self.nodes
        nodes[1::2] = mids
        return RadialMesh(nodes, self.order)

    def element_dofs(self):
        e = np.arange(self.n_elements)[:, None]
        return e * self.order + np.arange(self.order + 1)[None, :]

    def dof_coordinates(self):
        xs = gll_nodes(self.order)
        lo, hi = self.nodes[:-1, None], self.nodes[1:, None]
        pts = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xs[None, :]
        out = np.empty(self.n_dofs)
        out[self.element_dofs()] = pts
        return out

    def quadrature(self, npoints=None):
        """Physical quadrature points/weights per element and basis tables there."""
        nq = npoints or min(64, self.order + 4)
        rule = gauss_legendre(nq)
        lo, hi = self.nodes[:-1, None], self.nodes[1:, None]
        half = 0.5 * (hi - lo)
        r = 0.5 * (lo + hi) + half * rule.nodes[None, :]
        w = half * rule.weights[None, :]
        phi, dphi = lagrange_basis(self.order, rule.nodes)
        dphi_dr = dphi[None, :, :] / half[:, :, None]
        return r, w, phi, dphi_dr


def _evaluate(coef, r):
    if callable(coef):
        return np.asarray(coef(r), dtype=complex) * np.ones_like(r)
    return np.full(r.shape, coef, dtype=complex)


def assemble(mesh, stiffness, mass, npoints=None):
    """Assemble ``int stiffness u' v' + mass u v`` into banded storage.

    ``stiffness`` and ``mass`` are constants or callables of ``r``.
    """
    r, w, phi, dphi_dr = mesh.quadrature(npoints)
    p = _evaluate(stiffness, r)
    c = _evaluate(mass, r)
    local = np.einsum("eq,eqi,eqj->eij", w * p, dphi_dr, dphi_dr) + np.einsum(
        "eq,qi,qj->eij", w * c, phi, phi
    )
    dofs = mesh.element_dofs()
    rows = np.repeat(dofs[:, :, None], dofs.shape[1], axis=2)
    cols = np.repeat(dofs[:, None, :], dofs.shape[1], axis=1)
    mat = BandedComplexMatrix(mesh.n_dofs, mesh.order, mesh.order)
    mat.add_entries(rows, cols, local)
    return mat


def assemble_load(mesh, source, npoints=None):
    r, w, phi, _ = mesh.quadrature(npoints)
    f = _evaluate(source, r)
    local = np.einsum("eq,qi->ei", w * f, phi)
    out = np.zeros(mesh.n_dofs, dtype=complex)
    np.add.at(out, mesh.element_dofs(), local)
    return out


def solve_dirichlet_left(matrix, rhs, left_value):
    """Solve with an essential condition on the first DOF; returns the full vector."""
    n = matrix.size
    kl, ku = matrix.lower, matrix.upper
    sub = BandedComplexMatrix(n - 1, kl, ku, matrix.data[:, 1:])
    b = np.asarray(rhs, dtype=complex)[1:].copy()
    col0 = np.array([matrix.entry(i, 0) for i in range(1, min(n, kl + 1))])
    b[: col0.size] -= col0 * left_value
    x = np.empty(n, dtype=complex)
    x[0] = left_value
    x[1:] = banded_solve(sub, b)
    return x


def solve_dirichlet_both(matrix, rhs, left_value, right_value):
    n = matrix.size
    kl, ku = matrix.lower, matrix.upper
    sub = BandedComplexMatrix(n - 2, kl, ku, matrix.data[:, 1:-1])
    b = np.asarray(rhs, dtype=complex)[1:-1].copy()
    for i in range(1, min(n - 1, kl + 1)):
        b[i - 1] -= matrix.entry(i, 0) * left_value
    for i in range(max(1, n - 1 - ku), n - 1):
        b[i - 1] -= matrix.entry(i, n - 1) * right_value
    x = np.empty(n, dtype=complex)
    x[0], x[-1] = left_value, right_value
    x[1:-1] = banded_solve(sub, b)
    return x


def evaluate_solution(mesh, coeffs, npoints=None):
    """FE function values at the quadrature points of :meth:`RadialMesh.quadrature`."""
    _, _, phi, _ = mesh.quadrature(npoints)
    return np.einsum("qi,ei->eq", phi, np.asarray(coeffs)[mesh.element_dofs()])


def row_residual(matrix, x, row):
    """``(matrix @ x)[row]`` touching only the band."""
    lo = max(0, row - matrix.lower)
    hi = min(matrix.size, row + matrix.upper + 1)
    return sum(matrix.entry(row, j) * x[j] for j in range(lo, hi))
