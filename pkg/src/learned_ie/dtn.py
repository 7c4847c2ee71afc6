"""Reference dtn values, eigenvalues, weights and sample selection.

Values are only ever evaluated on the spectrum of the boundary operator, so all
special functions have integer order.  For the disk models ``nu = a sqrt(lam)``
is the Bessel order.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    CutoffResonanceError,
    DegenerateMatchingError,
    DomainError,
    ResonanceError,
    SchemaError,
    SingularMatrixError,
    UnsupportedOrderError,
)
from .fem import RadialMesh, assemble, row_residual, solve_dirichlet_both, solve_dirichlet_left
from .numerics import bessel_table

DEGENERATE_DET = 1e-300
ORDER_ATOL = 1e-8
WEIGHT_FLOOR = np.finfo(float).tiny

# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class HomogeneousDisk:
    a: float
    k: float
    kind: str = field(default="hom", init=False)

    def __post_init__(self):
        if not (self.a > 0 and self.k > 0):
            raise DomainError("HomogeneousDisk needs a > 0 and k > 0")

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "k": self.k}


@dataclass(frozen=True)
class JumpDisk:
    a: float
    R_jump: float
    k_inner: float
    k_outer: float
    kind: str = field(default="jump", init=False)

    def __post_init__(self):
        if not (self.a > 0 and self.k_inner > 0 and self.k_outer > 0):
            raise DomainError("JumpDisk needs positive radius and wavenumbers")
        if self.R_jump < self.a:
            raise DomainError("JumpDisk needs R_jump >= a")

    def to_dict(self):
        return {
            "kind": self.kind,
            "a": self.a,
            "R_jump": self.R_jump,
            "k_inner": self.k_inner,
            "k_outer": self.k_outer,
        }


@dataclass(frozen=True)
class Waveguide:
    k: float
    kind: str = field(default="guide", init=False)

    def __post_init__(self):
        if not self.k > 0:
            raise DomainError("Waveguide needs k > 0")

    def to_dict(self):
        return {"kind": self.kind, "k": self.k}


@dataclass(frozen=True)
class Stratified:
    """Radially stratified exterior on ``[a, R_outer]``.

    ``p``, ``q``, ``s`` are the unfolded coefficients of
    ``-r^(1-d) (r^(d-1) p u')' + (q + lam s) u = 0``; they are callables of ``r``.
    ``s`` defaults to ``a^2 / r^2`` for ``d > 1`` and to ``1`` for ``d = 1``.
    """

    dimension: int
    a: float
    R_outer: float
    p: object
    q: object
    s: object = None
    outer_bc: str = "neumann"
    descriptor: dict = field(default_factory=dict)
    kind: str = field(default="stratified", init=False)

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise DomainError("dimension must be 1, 2 or 3")
        if not (0 < self.a < self.R_outer):
            raise DomainError("Stratified needs 0 < a < R_outer")
        if self.outer_bc not in ("neumann", "dirichlet"):
            raise DomainError(f"unknown outer boundary condition {self.outer_bc!r}")
        if self.s is None:
            a = self.a
            s = (lambda r: np.ones_like(r)) if self.dimension == 1 else (lambda r: (a / r) ** 2)
            object.__setattr__(self, "s", s)

    def folded(self):
        d = self.dimension

        def fold(f):
            return lambda r: np.asarray(f(r)) * r ** (d - 1)

        return fold(self.p), fold(self.q), fold(self.s)

    def to_dict(self):
        out = {
            "kind": self.kind,
            "dimension": self.dimension,
            "a": self.a,
            "R_outer": self.R_outer,
            "outer_bc": self.outer_bc,
        }
        out.update(self.descriptor)
        return out


def homogeneous_annulus(k, a, R_outer, outer_bc="neumann"):
    """Constant-coefficient Helmholtz in 2D written as a stratified model."""
    return Stratified(
        dimension=2,
        a=a,
        R_outer=R_outer,
        p=lambda r: np.ones_like(r),
        q=lambda r: -(k**2) * np.ones_like(r),
        outer_bc=outer_bc,
        descriptor={"builtin": "annulus", "k": k},
    )


def potential_well(omega=16.0, gamma=0.05, c_well=1.0, c_barrier=2.0, r_barrier=1.3, a=1.0, R_outer=1.6):
    """Damped 3D Schroedinger-type model with a sound-speed step.

    ``c = c_well`` on ``[a, r_barrier)`` and ``c_barrier`` beyond, constant
    density, so ``q = -sigma^2 / c^2`` with ``sigma = omega + i gamma``.
    """
    sigma = complex(omega, gamma)

    def q(r):
        c = np.where(r < r_barrier, c_well, c_barrier)
        return -(sigma**2) / c**2

    return Stratified(
        dimension=3,
        a=a,
        R_outer=R_outer,
        p=lambda r: np.ones_like(r),
        q=q,
        outer_bc="neumann",
        descriptor={
            "builtin": "well",
            "omega": omega,
            "gamma": gamma,
            "c_well": c_well,
            "c_barrier": c_barrier,
            "r_barrier": r_barrier,
        },
    )


def model_from_dict(d):
    kind = d.get("kind")
    if kind == "hom":
        return HomogeneousDisk(float(d["a"]), float(d["k"]))
    if kind == "jump":
        return JumpDisk(float(d["a"]), float(d["R_jump"]), float(d["k_inner"]), float(d["k_outer"]))
    if kind == "guide":
        return Waveguide(float(d["k"]))
    raise SchemaError(f"cannot rebuild model of kind {kind!r} from a descriptor")


# ---------------------------------------------------------------------------
# spectrum


def eigenvalues(geometry, l_max, a=1.0):
    """Boundary eigenvalues ``lam_0..lam_lmax`` for ``circle``, ``sphere`` or ``strip``."""
    ell = np.arange(int(l_max) + 1, dtype=float)
    if geometry == "circle":
        return (ell / a) ** 2
    if geometry == "sphere":
        return ell * (ell + 1.0) / a**2
    if geometry == "strip":
        return ell**2
    raise DomainError(f"unknown geometry {geometry!r}")


def spectrum_orders(lambdas, a):
    """Integer orders ``a sqrt(lam)``; raises when a value is off the spectrum."""
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if np.any(lam < 0):
        raise UnsupportedOrderError("negative eigenvalue has no real order")
    nu = a * np.sqrt(lam)
    n = np.rint(nu)
    if np.any(np.abs(nu - n) > ORDER_ATOL * np.maximum(1.0, nu)):
        raise UnsupportedOrderError("a*sqrt(lambda) must be a nonnegative integer")
    return n.astype(int)


# ---------------------------------------------------------------------------
# closed-form dtn functions


def dtn_hom(lam, model):
    """``-k H'_nu(ka) / H_nu(ka)``; scalar in, scalar out, arrays vectorized."""
    n = spectrum_orders(lam, model.a)
    tab = bessel_table(int(n.max()) + 1, [model.k * model.a])
    out = -model.k * tab.dlog_h(n)[:, 0]
    return complex(out[0]) if np.ndim(lam) == 0 else out


def _signed_log_ratio(tab, kind, orders, col_num, col_den):
    logf = tab.log_j if kind == "j" else tab.log_y
    sgn = tab.sign_j if kind == "j" else tab.sign_y
    return logf[orders, col_num] - logf[orders, col_den], sgn[orders, col_num] * sgn[orders, col_den]


def jump_coefficients(model, orders):
    """Scaled coefficients ``(ca, cb)`` of the inner solution.

    Inside the jump radius ``u(r) = ca J(k_I r)/J(k_I a) + cb Y(k_I r)/Y(k_I a)``
    with ``u(a) = ca + cb = 1``; the outer factor follows from continuity of
    ``u`` and ``u'`` at ``R_jump``.  Working with ratios keeps every quantity
    finite for orders far beyond the turning point.
    Returns ``(ca, cb, table)`` where the table columns are ``k_I a, k_I R, k_inf R``.
    """
    orders = np.atleast_1d(np.asarray(orders, dtype=int))
    kI, kO, a, R = model.k_inner, model.k_outer, model.a, model.R_jump
    tab = bessel_table(int(orders.max()) + 1, [kI * a, kI * R, kO * R])
    dj = tab.dlog_j(orders)
    dy = tab.dlog_y(orders)
    dh = tab.dlog_h(orders)
    alpha = kI * dj[:, 1] - kO * dh[:, 2]
    beta = kI * dy[:, 1] - kO * dh[:, 2]
    lj, sj = _signed_log_ratio(tab, "j", orders, 1, 0)
    ly, sy = _signed_log_ratio(tab, "y", orders, 1, 0)
    log_q = ly - lj
    sign_q = sy * sj
    # ca * rhoJ * alpha + cb * rhoY * beta = 0 with q = rhoY / rhoJ
    small = log_q <= 0.0
    with np.errstate(under="ignore", over="ignore"):
        q_or_inv = sign_q * np.exp(-np.abs(log_q))
    num = np.where(small, q_or_inv * beta, beta)
    den = np.where(small, alpha, q_or_inv * alpha)
    diff = num - den
    scale = np.maximum(np.abs(num), np.abs(den))
    if np.any(np.abs(diff) <= DEGENERATE_DET * scale) or np.any(scale == 0):
        bad = orders[np.abs(diff) <= DEGENERATE_DET * scale]
        raise DegenerateMatchingError(f"matching system is degenerate at orders {bad.tolist()}")
    ca = num / diff
    cb = -den / diff
    return ca, cb, tab


def dtn_jump(lam, model):
    """Dtn of the two-layer exterior, ``-k_I (ca J'/J + cb Y'/Y)(k_I a)``."""
    n = spectrum_orders(lam, model.a)
    ca, cb, tab = jump_coefficients(model, n)
    out = -model.k_inner * (ca * tab.dlog_j(n)[:, 0] + cb * tab.dlog_y(n)[:, 0])
    return complex(out[0]) if np.ndim(lam) == 0 else out


def _log_add(la, sa, lb, sb):
    """``log|x|`` of ``x = sa e^la + sb e^lb`` for complex signs ``sa``, ``sb``."""
    big = np.maximum(la, lb)
    with np.errstate(under="ignore", invalid="ignore"):
        v = sa * np.exp(la - big) + sb * np.exp(lb - big)
    with np.errstate(divide="ignore"):
        return big + np.log(np.abs(v)), v / np.abs(v)


def jump_radial_factor(model, orders, r):
    """Radial factor ``u_n(r)`` normalized by ``u_n(a) = 1`` for ``r`` inside or outside the jump.

    ``r`` may be an array; returns shape ``(len(orders), len(r))``.
    """
    orders = np.atleast_1d(np.asarray(orders, dtype=int))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    ca, cb, base = jump_coefficients(model, orders)
    nmax = int(orders.max())
    kI, kO, a, R = model.k_inner, model.k_outer, model.a, model.R_jump
    out = np.empty((orders.size, r.size), dtype=complex)
    inner = r <= R
    if inner.any():
        tab = bessel_table(nmax, np.concatenate([[kI * a], kI * r[inner]]))
        lj = tab.log_j[orders, 1:] - tab.log_j[orders, :1]
        sj = tab.sign_j[orders, 1:] * tab.sign_j[orders, :1]
        ly = tab.log_y[orders, 1:] - tab.log_y[orders, :1]
        sy = tab.sign_y[orders, 1:] * tab.sign_y[orders, :1]
        with np.errstate(divide="ignore"):
            la, pa = np.log(np.abs(ca))[:, None], (ca / np.abs(ca))[:, None]
            lb, pb = np.log(np.abs(cb))[:, None], (cb / np.abs(cb))[:, None]
        pa = np.nan_to_num(pa)
        pb = np.nan_to_num(pb)
        logu, ph = _log_add(la + lj, pa * sj, lb + ly, pb * sy)
        with np.errstate(under="ignore", over="ignore"):
            out[:, inner] = np.exp(logu) * ph
    outer = ~inner
    if outer.any():
        uR = jump_radial_factor(model, orders, [R])[:, 0]
        tab = bessel_table(nmax, np.concatenate([[kO * R], kO * r[outer]]))
        big, u = tab.log_hankel()
        with np.errstate(under="ignore", over="ignore"):
            ratio = np.exp(big[orders, 1:] - big[orders, :1]) * u[orders, 1:] / u[orders, :1]
        out[:, outer] = uR[:, None] * ratio
    return out


def jump_log_abs_inner(model, orders, r):
    """``log|u_n(r)|`` of the inner representation (valid also for ``r < a``)."""
    orders = np.atleast_1d(np.asarray(orders, dtype=int))
    ca, cb, _ = jump_coefficients(model, orders)
    kI, a = model.k_inner, model.a
    tab = bessel_table(int(orders.max()), [kI * a, kI * r])
    lj = tab.log_j[orders, 1] - tab.log_j[orders, 0]
    sj = tab.sign_j[orders, 1] * tab.sign_j[orders, 0]
    ly = tab.log_y[orders, 1] - tab.log_y[orders, 0]
    sy = tab.sign_y[orders, 1] * tab.sign_y[orders, 0]
    with np.errstate(divide="ignore"):
        la, lb = np.log(np.abs(ca)), np.log(np.abs(cb))
    pa = np.nan_to_num(ca / np.abs(ca))
    pb = np.nan_to_num(cb / np.abs(cb))
    logu, _ = _log_add(la + lj, pa * sj, lb + ly, pb * sy)
    return logu


def dtn_guide(lam, model):
    """``-i sqrt(k^2 - lam)`` with the branch cut on the negative imaginary axis."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    gap = model.k**2 - lam_arr
    if np.any(gap == 0.0):
        raise CutoffResonanceError(f"lambda = k^2 = {model.k**2} is a cutoff resonance")
    out = np.where(gap > 0, -1j * np.sqrt(np.abs(gap)), np.sqrt(np.abs(gap)) + 0j)
    return complex(out[0]) if np.ndim(lam) == 0 else out


# ---------------------------------------------------------------------------
# ODE-based dtn


def default_mesh(model, n_elements=100, order=8):
    return RadialMesh.uniform(model.a, model.R_outer, n_elements, order)


class _OdeOperator:
    """Assembled stiffness/mass pieces of the exterior ODE; ``lam`` enters linearly."""

    def __init__(self, model, mesh):
        if abs(mesh.left - model.a) > 1e-12 * model.a or abs(mesh.right - model.R_outer) > 1e-12 * model.R_outer:
            raise DomainError("mesh must cover [a, R_outer]")
        pf, qf, sf = model.folded()
        self.model = model
        self.base = assemble(mesh, pf, qf)
        self.angular = assemble(mesh, 0.0, sf)
        self.p_at_a = complex(np.asarray(pf(np.array([model.a])))[0])

    def solve(self, lam):
        mat = self.base.copy()
        mat.data += lam * self.angular.data
        rhs = np.zeros(mat.size, dtype=complex)
        try:
            if self.model.outer_bc == "neumann":
                x = solve_dirichlet_left(mat, rhs, 1.0)
            else:
                x = solve_dirichlet_both(mat, rhs, 1.0, 0.0)
        except SingularMatrixError as exc:
            raise ResonanceError(lam) from exc
        # flux recovery: the residual of the first row is -p(a) Lambda'(a)
        return x, row_residual(mat, x, 0) / self.p_at_a


def dtn_ode(lam, model, mesh=None):
    """Dtn from a finite-element solve of the exterior ODE with ``Lambda(a) = 1``.

    Accepts a scalar or an array of eigenvalues.
    """
    mesh = mesh or default_mesh(model)
    op = _OdeOperator(model, mesh)
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    out = np.array([op.solve(v)[1] for v in lam_arr])
    return complex(out[0]) if np.ndim(lam) == 0 else out


def dtn_ode_sweep(lambdas, model, mesh=None):
    """Like :func:`dtn_ode` but collects resonances instead of raising on the first one.

    Returns ``(values, failures)`` where failed entries are NaN and
    ``failures`` lists the offending eigenvalues.
    """
    mesh = mesh or default_mesh(model)
    op = _OdeOperator(model, mesh)
    values = np.full(len(lambdas), np.nan + 0j)
    failures = []
    for i, lam in enumerate(lambdas):
        try:
            values[i] = op.solve(float(lam))[1]
        except ResonanceError as exc:
            failures.append(exc.lam)
    return values, failures


def annulus_dtn_exact(model, orders, k):
    """Closed-form dtn of the homogeneous 2D annulus with Neumann/Dirichlet at ``R_outer``.

    ``u = c1 J_n(kr) + c2 Y_n(kr)`` with ``u(a) = 1``; the outer condition
    fixes the ratio of the two scaled coefficients.
    """
    orders = np.atleast_1d(np.asarray(orders, dtype=int))
    a, R = model.a, model.R_outer
    tab = bessel_table(int(orders.max()) + 1, [k * a, k * R])
    lj, sj = _signed_log_ratio(tab, "j", orders, 1, 0)
    ly, sy = _signed_log_ratio(tab, "y", orders, 1, 0)
    if model.outer_bc == "neumann":
        fj, fy = tab.dlog_j(orders)[:, 1], tab.dlog_y(orders)[:, 1]
    else:
        fj, fy = np.ones(orders.size), np.ones(orders.size)
    # ca rhoJ fj + cb rhoY fy = 0, ca + cb = 1
    log_q = ly - lj
    small = log_q <= 0
    with np.errstate(under="ignore"):
        qv = sy * sj * np.exp(-np.abs(log_q))
    num = np.where(small, qv * fy, fy)
    den = np.where(small, fj, qv * fj)
    ca = num / (num - den)
    cb = -den / (num - den)
    return -k * (ca * tab.dlog_j(orders)[:, 0] + cb * tab.dlog_y(orders)[:, 0])


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class RadialProfileTable:
    r: np.ndarray
    c: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        r, c, rho = (np.asarray(v, dtype=float) for v in (self.r, self.c, self.rho))
        if not (r.shape == c.shape == rho.shape) or r.ndim != 1 or r.size < 2:
            raise SchemaError("profile columns must be 1-d of equal length >= 2")
        if np.any(np.diff(r) <= 0):
            raise SchemaError("profile radii must be strictly increasing")
        if np.any(c <= 0) or np.any(rho <= 0):
            raise SchemaError("sound speed and density must be positive")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "rho", rho)

    def covers(self, lo, hi):
        return self.r[0] <= lo and self.r[-1] >= hi


def load_profile_csv(path):
    """Read a ``r,c,rho`` table; errors carry the offending line number."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["r", "c", "rho"]:
            raise SchemaError(f"{path}: line 1: expected header 'r,c,rho', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise SchemaError(f"{path}: line {lineno}: expected 3 fields, got {len(row)}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise SchemaError(f"{path}: line {lineno}: {exc}") from None
    if len(rows) < 2:
        raise SchemaError(f"{path}: need at least two data rows")
    data = np.array(rows)
    bad = np.nonzero(np.diff(data[:, 0]) <= 0)[0]
    if bad.size:
        raise SchemaError(f"{path}: line {bad[0] + 3}: radii must be strictly increasing")
    return RadialProfileTable(data[:, 0], data[:, 1], data[:, 2])


def schroedinger_potential(profile, sigma, dimension=3):
    """Tabulated ``v = rho^(1/2) Lap(rho^(-1/2)) - sigma^2 / c^2`` on the profile grid.

    The radial Laplacian ``f'' + (d-1)/r f'`` uses three-point differences on
    the (possibly nonuniform) grid, one-sided at the ends.
    """
    r = profile.r
    if r.size < 3:
        raise SchemaError("need at least three profile points for second differences")
    f = profile.rho ** -0.5
    fp = np.gradient(f, r, edge_order=2)
    fpp = np.empty_like(f)
    h0 = r[1:-1] - r[:-2]
    h1 = r[2:] - r[1:-1]
    fpp[1:-1] = 2.0 * (h0 * f[2:] - (h0 + h1) * f[1:-1] + h1 * f[:-2]) / (h0 * h1 * (h0 + h1))
    fpp[0], fpp[-1] = fpp[1], fpp[-2]
    lap = fpp if dimension == 1 else fpp + (dimension - 1) / r * fp
    return profile.rho**0.5 * lap - sigma**2 / profile.c**2


def interpolate_complex(r, values):
    """Monotone piecewise cubic interpolant of complex tabulated data."""
    re = PchipInterpolator(r, np.real(values))
    im = PchipInterpolator(r, np.imag(values))
    return lambda x: re(x) + 1j * im(x)


def stratified_from_profile(profile, sigma, a, R_outer, dimension=3, outer_bc="neumann", path=None):
    if not profile.covers(a, R_outer):
        raise DomainError("profile does not cover [a, R_outer]")
    v = interpolate_complex(profile.r, schroedinger_potential(profile, sigma, dimension))
    desc = {"profile": str(path) if path else "table", "sigma": [sigma.real, sigma.imag]}
    return Stratified(dimension, a, R_outer, p=lambda r: np.ones_like(r), q=v, outer_bc=outer_bc, descriptor=desc)


# ---------------------------------------------------------------------------
# weights and samples


WEIGHT_SCHEMES = ("exp_decay", "hankel_ratio", "jump_ratio", "waveguide", "uniform")


def smallest_ball_radius(R_scatter, k):
    return min(R_scatter, R_scatter * k / 16.0)


def _normalize(w):
    w = np.asarray(w, dtype=float)
    if not np.all(np.isfinite(w)) or np.max(w) <= 0:
        raise DomainError("weights must be finite with a positive maximum")
    return np.maximum(w / np.max(w), WEIGHT_FLOOR)


def make_weights(scheme, params, lambdas, model=None, ells=None):
    """Positive weights normalized to ``max w = 1``.

    ``exp_decay``: ``exp(-rate * ell)``;
    ``hankel_ratio``: ``|H_ell(k a) / H_ell(k r_tilde)|`` (``params['r_tilde']``);
    ``jump_ratio``: ``|u_ell(a) / u_ell(r_tilde)|`` for the inner jump solution;
    ``waveguide``: 1 for ``lam <= k^2`` else ``exp(-length sqrt(lam - k^2))``;
    ``uniform``: all ones.
    """
    params = dict(params or {})
    lam = np.asarray(lambdas, dtype=float)
    if ells is None:
        ells = np.arange(lam.size)
    ells = np.asarray(ells)
    if scheme == "exp_decay":
        w = np.exp(-float(params.get("rate", 2.0 / 3.0)) * (ells - ells.min()))
    elif scheme == "uniform":
        w = np.ones(lam.size)
    elif scheme == "hankel_ratio":
        n = spectrum_orders(lam, model.a)
        r_tilde = float(params["r_tilde"])
        tab = bessel_table(int(n.max()), [model.k * model.a, model.k * r_tilde])
        logh = tab.log_abs_hankel()[n]
        w = logh[:, 0] - logh[:, 1]
        return _normalize(np.exp(w - w.max()))
    elif scheme == "jump_ratio":
        n = spectrum_orders(lam, model.a)
        logu = jump_log_abs_inner(model, n, float(params["r_tilde"]))
        return _normalize(np.exp(-(logu - logu.min())))
    elif scheme == "waveguide":
        k = model.k
        length = float(params.get("length", 2.0 * math.pi))
        w = np.where(lam <= k**2, 1.0, np.exp(-length * np.sqrt(np.maximum(lam - k**2, 0.0))))
    else:
        raise DomainError(f"unknown weight scheme {scheme!r}; expected one of {WEIGHT_SCHEMES}")
    return _normalize(w)


@dataclass(frozen=True)
class DtnSamples:
    """One fitting problem: modes ``ells``, eigenvalues, reference dtn values and weights."""

    lambdas: np.ndarray
    values: np.ndarray
    weights: np.ndarray
    ells: np.ndarray = None
    model: dict = field(default_factory=dict)

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        val = np.asarray(self.values, dtype=complex)
        w = np.asarray(self.weights, dtype=float)
        ells = np.arange(lam.size) if self.ells is None else np.asarray(self.ells, dtype=int)
        if lam.ndim != 1 or lam.size < 1 or not (lam.shape == val.shape == w.shape == ells.shape):
            raise SchemaError("samples need aligned 1-d arrays of length >= 1")
        if np.any(np.diff(lam) <= 0):
            raise SchemaError("eigenvalues must be strictly increasing")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise SchemaError("weights must be positive and finite")
        if not np.all(np.isfinite(val)):
            raise SchemaError("dtn values must be finite")
        for name, arr in (("lambdas", lam), ("values", val), ("weights", w), ("ells", ells)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.lambdas.size

    def subset(self, idx):
        idx = np.asarray(idx)
        return DtnSamples(self.lambdas[idx], self.values[idx], self.weights[idx], self.ells[idx], dict(self.model))

    def conjugate(self):
        return DtnSamples(self.lambdas, np.conj(self.values), self.weights, self.ells, dict(self.model))

    def renormalized(self):
        return DtnSamples(self.lambdas, self.values, self.weights / self.weights.max(), self.ells, dict(self.model))


SAMPLES_HEADER = ["ell", "lambda", "dtn_re", "dtn_im", "weight"]


def write_samples_csv(samples, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(SAMPLES_HEADER) + "\n")
        for ell, lam, v, w in zip(samples.ells, samples.lambdas, samples.values, samples.weights):
            fh.write(f"{int(ell)},{lam:.17g},{v.real:.17g},{v.imag:.17g},{w:.17g}\n")


def read_samples_csv(path, model=None):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != SAMPLES_HEADER:
            raise SchemaError(f"{path}: line 1: expected header {','.join(SAMPLES_HEADER)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise SchemaError(f"{path}: line {lineno}: expected 5 fields")
            try:
                rows.append((int(row[0]), float(row[1]), float(row[2]), float(row[3]), float(row[4])))
            except ValueError as exc:
                raise SchemaError(f"{path}: line {lineno}: {exc}") from None
    if not rows:
        raise SchemaError(f"{path}: no samples")
    ell, lam, re, im, w = (np.array(c) for c in zip(*rows))
    return DtnSamples(lam, re + 1j * im, w, ell, dict(model or {}))


def select_samples(samples, coarse_stride, refine_quantile):
    """Indices of an equidistant subset plus the neighbourhoods of steep regions.

    Steepness is ``|gradient|`` of the dtn values along the index; entries
    above the ``refine_quantile`` quantile are kept together with their two
    neighbours.  Both endpoints are always included.
    """
    n = len(samples)
    if n == 0:
        raise DomainError("no samples to select from")
    stride = max(1, int(coarse_stride))
    keep = np.zeros(n, dtype=bool)
    keep[::stride] = True
    keep[0] = keep[-1] = True
    if n >= 2:
        grad = np.abs(np.gradient(samples.values))
        thresh = np.quantile(grad, refine_quantile)
        steep = grad > thresh
        if steep.any():
            idx = np.nonzero(steep)[0]
            for off in (-1, 0, 1):
                keep[np.clip(idx + off, 0, n - 1)] = True
    return np.nonzero(keep)[0]


def generate_samples(model, l_max, scheme="uniform", weight_params=None, mesh=None, geometry=None):
    """Reference samples for ``ell = 0..l_max`` of a model."""
    if isinstance(model, Waveguide):
        lam = eigenvalues("strip", l_max)
        vals = dtn_guide(lam, model)
    elif isinstance(model, HomogeneousDisk):
        lam = eigenvalues("circle", l_max, model.a)
        vals = dtn_hom(lam, model)
    elif isinstance(model, JumpDisk):
        lam = eigenvalues("circle", l_max, model.a)
        vals = dtn_jump(lam, model)
    elif isinstance(model, Stratified):
        geom = geometry or ("sphere" if model.dimension == 3 else "circle" if model.dimension == 2 else "strip")
        lam = eigenvalues(geom, l_max, model.a)
        vals, failures = dtn_ode_sweep(lam, model, mesh)
        if failures:
            raise ResonanceError(failures[0])
    else:
        raise DomainError(f"unsupported model {model!r}")
    vals = np.atleast_1d(vals)
    lam = np.atleast_1d(lam)
    w = make_weights(scheme, weight_params, lam, model)
    return DtnSamples(lam, vals, w, np.arange(lam.size), model.to_dict())
