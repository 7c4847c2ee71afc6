"""Mode-space experiments, reference solutions and consistency checks.

Every experiment separates into independent 1D problems, one per mode of the
coupling boundary.  A learned infinite element enters a mode solve only
through the scalar ``dtn_learned(lambda_l)``, added as a boundary mass term.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dtn import JumpDisk, Waveguide, dtn_guide, dtn_hom, dtn_jump, jump_radial_factor
from .errors import DomainError, PoleCollisionError
from .fem import RadialMesh, assemble, assemble_load, evaluate_solution, solve_dirichlet_left
from .fit import residuals_and_jacobian, weighted_sup_error
from .learned import assemble_block_system
from .numerics import bessel_table

TRUNCATION_TOL = 1e-14
MAX_MODES = 1500


@dataclass(frozen=True)
class ExactDtn:
    """Stand-in for a learned IE that returns the reference dtn (transparent limit)."""

    model: object
    N: int = -1

    def dtn(self, lam):
        kind = self.model.kind
        if kind == "hom":
            return dtn_hom(lam, self.model)
        if kind == "jump":
            return dtn_jump(lam, self.model)
        if kind == "guide":
            return dtn_guide(lam, self.model)
        raise DomainError(f"no closed-form dtn for model kind {kind!r}")


@dataclass
class ModeExperimentReport:
    """Errors of one experiment across a ladder of learned IEs.

    ``mode_errors[i, j]`` is the contribution of mode ``ells[j]`` for ladder
    entry ``i``, scaled so that ``rel_errors[i]**2 == sum(mode_errors[i]**2)``.
    """

    N: np.ndarray
    rel_errors: np.ndarray
    sup_errors: np.ndarray
    ells: np.ndarray
    lambdas: np.ndarray
    mode_errors: np.ndarray
    model: dict = field(default_factory=dict)
    weight_scheme: str = ""

    def __post_init__(self):
        self.N = np.asarray(self.N, dtype=int)
        self.rel_errors = np.asarray(self.rel_errors, dtype=float)
        self.sup_errors = np.asarray(self.sup_errors, dtype=float)
        self.ells = np.asarray(self.ells, dtype=int)
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        self.mode_errors = np.asarray(self.mode_errors, dtype=float).reshape(self.N.size, self.ells.size)
        if not (self.N.size == self.rel_errors.size == self.sup_errors.size):
            raise ValueError("per-N arrays must have equal length")
        if self.ells.size != self.lambdas.size:
            raise ValueError("ells and lambdas must have equal length")
        if np.any(self.rel_errors < 0) or np.any(self.mode_errors < 0):
            raise ValueError("errors must be nonnegative")


REPORT_HEADER = ["N", "rel_l2_error", "sup_weighted_dtn_error"]
MODE_HEADER = ["ell", "lambda", "mode_error"]


def write_report_csv(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(REPORT_HEADER) + "\n")
        for n, e, s in zip(report.N, report.rel_errors, report.sup_errors):
            fh.write(f"{int(n)},{e:.17g},{s:.17g}\n")


def write_mode_csv(report, index, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(MODE_HEADER) + "\n")
        for ell, lam, e in zip(report.ells, report.lambdas, report.mode_errors[index]):
            fh.write(f"{int(ell)},{lam:.17g},{e:.17g}\n")


# ---------------------------------------------------------------------------
# interior mode solve


def interior_mode_solve(mesh, stiffness, mass, left_value, dtn_value, boundary_weight=1.0, source=None):
    """FE solution of ``int p u'v' + c uv + w dtn u(b) v(b) = int f v`` with ``u(r0)`` fixed.

    ``boundary_weight`` carries the measure at the coupling point (``a`` for
    the r-weighted radial form, 1 for a planar one).  Returns nodal
    coefficients.
    """
    matrix = assemble(mesh, stiffness, mass)
    matrix.diagonal_add(mesh.n_dofs - 1, boundary_weight * complex(dtn_value))
    rhs = np.zeros(mesh.n_dofs, dtype=complex) if source is None else assemble_load(mesh, source)
    return solve_dirichlet_left(matrix, rhs, left_value)


def _radial_mode(mesh, k, lam, a, dtn_value):
    # -(1/r)(r u')' + (lam a^2 / r^2 - k^2) u = 0, tested with r v
    return interior_mode_solve(
        mesh, lambda r: r, lambda r: lam * a * a / r - k * k * r, 1.0, dtn_value, boundary_weight=a
    )


def _l2_weighted(mesh, values, measure):
    _, w, _, _ = mesh.quadrature()
    return float(np.sum(w * measure * np.abs(values) ** 2))


# ---------------------------------------------------------------------------
# plane-wave scattering


def planewave_coefficients(k, R_scatter, ells):
    """Angular coefficients ``J_0(k R_s)`` and ``2 i^l J_l(k R_s)``."""
    ells = np.atleast_1d(np.asarray(ells, dtype=int))
    tab = bessel_table(int(ells.max()), [k * R_scatter])
    c = tab.j()[ells, 0] * (2.0 * (1j ** (ells % 4)))
    return np.where(ells == 0, c / 2.0, c)


def _interior_k(model):
    return model.k if model.kind == "hom" else model.k_inner


def planewave_truncation(model, R_scatter, tol=TRUNCATION_TOL, cap=MAX_MODES):
    """Smallest ``l_max`` whose tail coefficients are below ``tol`` times the largest."""
    c = np.abs(planewave_coefficients(_interior_k(model), R_scatter, np.arange(cap + 1)))
    big = np.nonzero(c >= tol * c.max())[0]
    return int(big[-1]) + 1


def planewave_reference(model, R_scatter, ells, r):
    """Radial factors ``u_l(r)`` with ``u_l(R_s) = 1``; shape ``(len(ells), len(r))``."""
    ells = np.atleast_1d(np.asarray(ells, dtype=int))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < R_scatter):
        raise DomainError("reference radial factor needs r >= R_scatter")
    if model.kind == "hom":
        tab = bessel_table(int(ells.max()), np.concatenate([[model.k * R_scatter], model.k * r]))
        big, u = tab.log_hankel()
        with np.errstate(under="ignore", over="ignore"):
            return np.exp(big[ells, 1:] - big[ells, :1]) * u[ells, 1:] / u[ells, :1]
    if model.kind == "jump":
        inner = JumpDisk(R_scatter, model.R_jump, model.k_inner, model.k_outer)
        return jump_radial_factor(inner, ells, r)
    raise DomainError(f"plane-wave reference needs a 'hom' or 'jump' model, got {model.kind!r}")


def planewave_field(model, R_scatter, r, phi, l_max=None):
    """Full series ``sum_l c_l u_l(r) cos(l phi)`` at points ``(r, phi)``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if l_max is None:
        l_max = planewave_truncation(model, R_scatter)
    ells = np.arange(l_max + 1)
    c = planewave_coefficients(_interior_k(model), R_scatter, ells)
    u = planewave_reference(model, R_scatter, ells, r)
    return np.sum(c[:, None] * u * np.cos(ells[:, None] * phi[None, :]), axis=0)


def default_planewave_mesh(R_scatter, a, n_elements=16, order=6):
    return RadialMesh.uniform(R_scatter, a, n_elements, order)


def planewave_experiment(model, R_scatter, ladder, mesh=None, l_max=None, samples=None, weight_scheme=""):
    """Relative ``L^2(R_s < r < a)`` error of the mode-wise interior solve for each ladder entry.

    ``model`` describes the exterior from the coupling radius ``a = model.a``;
    the annulus between ``R_scatter`` and ``a`` has the interior wavenumber.
    Modes are weighted by ``|c_l|^2`` times the angular norm (``2 pi`` for
    ``l = 0``, ``pi`` otherwise).
    """
    a = model.a
    if not R_scatter < a:
        raise DomainError("plane-wave experiment needs R_scatter < a")
    if model.kind == "jump" and a > model.R_jump:
        raise DomainError("coupling radius must not exceed the jump radius")
    mesh = mesh or default_planewave_mesh(R_scatter, a)
    if l_max is None:
        l_max = planewave_truncation(model, R_scatter)
    ells = np.arange(l_max + 1)
    lam = ells.astype(float) ** 2 / a**2
    k = _interior_k(model)
    c = planewave_coefficients(k, R_scatter, ells)
    ang = np.where(ells == 0, 2.0 * math.pi, math.pi)
    rq, _, _, _ = mesh.quadrature()
    exact = planewave_reference(model, R_scatter, ells, rq.ravel()).reshape(ells.size, *rq.shape)
    mode_norm2 = np.array([_l2_weighted(mesh, exact[i], rq) for i in range(ells.size)])
    total = float(np.sum(np.abs(c) ** 2 * ang * mode_norm2))
    return _run_ladder(
        ladder,
        ells,
        lam,
        lambda i, d: _l2_weighted(mesh, evaluate_solution(mesh, _radial_mode(mesh, k, lam[i], a, d)) - exact[i], rq),
        np.abs(c) ** 2 * ang,
        total,
        samples,
        model.to_dict(),
        weight_scheme,
    )


def _ladder_N(ie):
    return int(getattr(ie, "N", -1))


def _run_ladder(ladder, ells, lam, mode_err2, mode_scale, total, samples, model_dict, weight_scheme):
    Ns, rel, sup, modes = [], [], [], []
    for ie in ladder:
        d = np.atleast_1d(ie.dtn(lam))
        e2 = np.array([mode_err2(i, d[i]) for i in range(ells.size)]) * mode_scale
        Ns.append(_ladder_N(ie))
        rel.append(math.sqrt(float(np.sum(e2)) / total))
        modes.append(np.sqrt(e2 / total))
        sup.append(weighted_sup_error(ie, samples) if samples is not None else math.nan)
    return ModeExperimentReport(Ns, rel, sup, ells, lam, np.array(modes), model_dict, weight_scheme)


# ---------------------------------------------------------------------------
# point source, trace only


def _source_radius(y):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return float(np.hypot(*y)) if y.size == 2 else float(abs(y[0]))


def pointsource_modes(y, model, l_max):
    """Trace modes ``(i/4) H_l(ka) J_l(k|y|)`` and Neumann modes ``-(i/4) k H_l'(ka) J_l(k|y|)``."""
    rho = _source_radius(y)
    if not 0.0 < rho < model.a:
        raise DomainError(f"source radius {rho} must lie in (0, a)")
    ells = np.arange(l_max + 1)
    k, a = model.k, model.a
    tab = bessel_table(l_max + 1, [k * a, k * rho])
    big, uh = tab.log_hankel()
    logmag = big[ells, 0] + tab.log_j[ells, 1]
    with np.errstate(under="ignore"):
        u = 0.25j * np.exp(logmag) * uh[ells, 0] * tab.sign_j[ells, 1]
    g = -k * tab.dlog_h(ells)[:, 0] * u
    return ells, u, g


def pointsource_truncation(y, model, tol=TRUNCATION_TOL, cap=MAX_MODES):
    _, u, _ = pointsource_modes(y, model, cap)
    big = np.nonzero(np.abs(u) >= tol * np.abs(u).max())[0]
    return int(big[-1]) + 1


def angular_trace(ells, modes, phi):
    """``sum_{l in Z} m_|l| e^{i l phi}`` for modes symmetric in ``l``."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    mult = np.where(ells == 0, 1.0, 2.0)
    return np.sum((mult * modes)[:, None] * np.cos(ells[:, None] * phi[None, :]), axis=0)


def pointsource_trace_experiment(y, model, ladder, l_max=None, samples=None, weight_scheme=""):
    """Relative ``L^2(Gamma)`` error of ``u_l^h = g_l / dtn_learned(lambda_l)``."""
    if model.kind != "hom":
        raise DomainError("point-source experiment needs a homogeneous model")
    if l_max is None:
        l_max = pointsource_truncation(y, model)
    ells, u, g = pointsource_modes(y, model, l_max)
    lam = ells.astype(float) ** 2 / model.a**2
    mult = np.where(ells == 0, 1.0, 2.0)
    total = float(np.sum(mult * np.abs(u) ** 2))
    return _run_ladder(
        ladder,
        ells,
        lam,
        lambda i, d: abs(u[i] - g[i] / d) ** 2,
        mult,
        total,
        samples,
        model.to_dict(),
        weight_scheme,
    )


# ---------------------------------------------------------------------------
# waveguide


def default_waveguide_mesh(a, n_elements=64, order=6):
    return RadialMesh.uniform(0.0, a, n_elements, order)


def waveguide_experiment(model, a, L, ladder, mesh=None, samples=None, weight_scheme=""):
    """Relative ``L^2`` error on ``[0, a] x [0, pi]`` for the modes ``l = 1..L``.

    Each mode solves ``int u'v' + (lam - k^2) uv + dtn u(a) v(a) = 0`` with
    ``u(0) = 1``; the exact factor is ``exp(i x sqrt(k^2 - lam))``.
    """
    if not isinstance(model, Waveguide):
        raise DomainError("waveguide experiment needs a Waveguide model")
    ells = np.arange(1, int(L) + 1)
    lam = ells.astype(float) ** 2
    k = model.k
    if np.any(lam == k * k):
        dtn_guide(lam, model)  # raises the cutoff error
    mesh = mesh or default_waveguide_mesh(a)
    xq, _, _, _ = mesh.quadrature()
    kx = np.sqrt((k * k - lam).astype(complex))
    exact = np.exp(1j * kx[:, None, None] * xq[None])
    ones = np.ones_like(xq)
    mode_norm2 = np.array([_l2_weighted(mesh, exact[i], ones) for i in range(ells.size)])
    total = float(np.sum(mode_norm2))

    def err2(i, d):
        x = interior_mode_solve(mesh, 1.0, lam[i] - k * k, 1.0, d)
        return _l2_weighted(mesh, evaluate_solution(mesh, x) - exact[i], ones)

    return _run_ladder(ladder, ells, lam, err2, np.ones(ells.size), total, samples, model.to_dict(), weight_scheme)


# ---------------------------------------------------------------------------
# Schur complement on a circulant boundary discretization


def circulant_boundary(n, h):
    """P1 mass and stiffness on a uniform periodic grid of ``n`` nodes."""
    if n < 3:
        raise ValueError("n_boundary must be >= 3")
    M = np.zeros((n, n))
    K = np.zeros((n, n))
    idx = np.arange(n)
    M[idx, idx] = 4.0 * h / 6.0
    K[idx, idx] = 2.0 / h
    for off in (1, -1):
        M[idx, (idx + off) % n] = h / 6.0
        K[idx, (idx + off) % n] = -1.0 / h
    return M, K


def circulant_spectrum(n, h):
    """Fourier frequencies, symbols ``M_hat, K_hat`` and ``lambda_m = K_hat / M_hat``."""
    m = np.arange(n)
    theta = 2.0 * math.pi * m / n
    mhat = (h / 6.0) * (4.0 + 2.0 * np.cos(theta))
    khat = (2.0 - 2.0 * np.cos(theta)) / h
    return m, mhat, khat, khat / mhat


def schur_equivalence_check(ie, n_boundary, h=1.0):
    """Max over Fourier modes of ``||DtN v - dtn(lambda_m) v||_M / |dtn(lambda_m)|``.

    ``DtN = M^{-1} S`` with ``S`` the Schur complement of the assembled block
    system after direct elimination of the exterior blocks.
    """
    M, K = circulant_boundary(n_boundary, h)
    n = n_boundary
    L = assemble_block_system(ie, M, K)
    if ie.N:
        LEE = L[n:, n:]
        try:
            X = np.linalg.solve(LEE, L[n:, :n])
        except np.linalg.LinAlgError:
            raise PoleCollisionError() from None
        S = L[:n, :n] - L[:n, n:] @ X
    else:
        S = L
    m, _, _, lam = circulant_spectrum(n, h)
    V = np.exp(2j * math.pi * np.outer(np.arange(n), m) / n)
    V /= np.sqrt(np.real(np.einsum("im,ij,jm->m", V.conj(), M, V)))[None, :]
    d = np.atleast_1d(ie.dtn(lam))
    R = np.linalg.solve(M, S @ V) - V * d[None, :]
    res = np.sqrt(np.abs(np.einsum("im,ij,jm->m", R.conj(), M, R)))
    return float(np.max(res / np.abs(d)))


# ---------------------------------------------------------------------------
# Jacobian check


def _extended_residuals(x, samples):
    # reduced residuals in numpy long double, so central differences are
    # limited by truncation rather than by cancellation against |r|
    ext = np.longdouble
    x = np.asarray(x, dtype=ext)
    lam = samples.lambdas.astype(ext)
    w = samples.weights.astype(ext)
    c = x[4:].reshape(-1, 4, 2)
    c = c[..., 0] + 1j * c[..., 1]
    d = (x[0] + 1j * x[1]) + lam * (x[2] + 1j * x[3])
    if c.size:
        num = (c[None, :, 0] + lam[:, None] * c[None, :, 1]) * (c[None, :, 2] + lam[:, None])
        d = d - np.sum(num / (c[None, :, 3] + lam[:, None]), axis=1)
    r = w * (samples.values.astype(np.clongdouble) - d)
    out = np.empty(2 * r.size, dtype=ext)
    out[0::2], out[1::2] = r.real, r.imag
    return out


def jacobian_fd_check(params, samples, rel_step=1e-6):
    """Worst relative deviation of the analytic reduced Jacobian from central differences.

    The differences use steps ``rel_step * max(1, |x_i|)`` on residuals
    evaluated in extended precision.  Deviations are measured per complex
    entry ``d r_l / d x_i`` (the real and imaginary rows of one sample
    together), over entries that are not identically zero, so an
    accidentally tiny real or imaginary part does not dominate.
    """
    _, jac = residuals_and_jacobian(params, samples)
    x = params.to_vector()
    fd = np.empty_like(jac)
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.astype(np.longdouble)
        xm = xp.copy()
        xp[i] += h
        xm[i] -= h
        fd[:, i] = ((_extended_residuals(xp, samples) - _extended_residuals(xm, samples)) / (2 * np.longdouble(h))).astype(float)
    mag = np.hypot(jac[0::2], jac[1::2])
    dev = np.hypot(jac[0::2] - fd[0::2], jac[1::2] - fd[1::2])
    nz = mag > 0
    return float(np.max(dev[nz] / mag[nz])) if nz.any() else float(np.max(dev))
