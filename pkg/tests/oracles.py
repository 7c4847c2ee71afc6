"""Independent reference implementations used only by the tests.

Everything here relies on scipy or mpmath special functions and on direct
formulas, never on the package's own Bessel machinery.
"""

import mpmath as mp
import numpy as np
from scipy import special as sp
from scipy.integrate import solve_ivp
from scipy.signal import find_peaks


def mp_besselj(n, x, dps=40):
    with mp.workdps(dps):
        return float(mp.besselj(n, x))


def mp_bessely(n, x, dps=40):
    with mp.workdps(dps):
        return float(mp.bessely(n, x))


def dtn_hom_scipy(ells, k, a=1.0):
    """``-k H_l'(ka) / H_l(ka)`` from scipy's integer-order Hankel functions."""
    n = np.asarray(ells, dtype=float)
    return -k * sp.h1vp(n, k * a) / sp.hankel1(n, k * a)


def dtn_jump_scipy(lam, a=1.0, R=2.0, k_inner=16.0, k_outer=8.0):
    """Two-layer dtn at real ``lam`` (any real order ``a sqrt(lam)``) by a 3x3 matching solve."""
    out = []
    for v in np.atleast_1d(lam):
        nu = a * np.sqrt(v)
        M = np.array(
            [
                [sp.jv(nu, k_inner * a), sp.yv(nu, k_inner * a), 0.0],
                [sp.jv(nu, k_inner * R), sp.yv(nu, k_inner * R), -sp.hankel1(nu, k_outer * R)],
                [k_inner * sp.jvp(nu, k_inner * R), k_inner * sp.yvp(nu, k_inner * R), -k_outer * sp.h1vp(nu, k_outer * R)],
            ],
            dtype=complex,
        )
        c = np.linalg.solve(M, [1.0, 0.0, 0.0])
        out.append(-k_inner * (c[0] * sp.jvp(nu, k_inner * a) + c[1] * sp.yvp(nu, k_inner * a)))
    return np.array(out)


def _jump_boundary_value(lam, a, R, k_inner, k_outer):
    # inner J/Y combination matched to the outgoing Hankel solution at R, evaluated at a
    nu = mp.sqrt(lam) * a
    J = lambda z: mp.besselj(nu, z)  # noqa: E731
    Y = lambda z: mp.bessely(nu, z)  # noqa: E731
    dH = mp.besselj(nu, k_outer * R, 1) + 1j * mp.bessely(nu, k_outer * R, 1)
    M = mp.matrix([[J(k_inner * R), Y(k_inner * R)], [k_inner * mp.besselj(nu, k_inner * R, 1), k_inner * mp.bessely(nu, k_inner * R, 1)]])
    c = mp.lu_solve(M, mp.matrix([mp.hankel1(nu, k_outer * R), k_outer * dH]))
    return c[0] * J(k_inner * a) + c[1] * Y(k_inner * a)


def jump_poles(lam_max=600.0, a=1.0, R=2.0, k_inner=16.0, k_outer=8.0, n_scan=60001, dps=25):
    """Poles of the two-layer dtn near the real axis.

    Peaks of ``|dtn|`` on a dense real scan give the real parts; the
    half-width at ``1/sqrt(2)`` of the peak seeds the imaginary part, and a
    complex Newton/secant refinement on the boundary value of the outgoing
    solution gives the pole.
    """
    lam = np.linspace(0.0, lam_max, n_scan)
    d = np.abs(dtn_jump_scipy(lam[1:], a, R, k_inner, k_outer))
    lam = lam[1:]
    peaks, _ = find_peaks(d)
    found = []
    with mp.workdps(dps):
        for p in peaks:
            half = d[p] / np.sqrt(2.0)
            i, j = p, p
            while i > 0 and d[i] > half:
                i -= 1
            while j < d.size - 1 and d[j] > half:
                j += 1
            width = max((lam[j] - lam[i]) / 2.0, 1e-6)
            guess = mp.mpc(lam[p], width)
            try:
                z = mp.findroot(lambda t: _jump_boundary_value(t, a, R, k_inner, k_outer), guess)
            except (ValueError, ZeroDivisionError):
                continue
            found.append(complex(z))
    return np.array(found)


def hom_pole_smallest_imag(k=16.0, a=1.0, dps=30):
    """Zero of ``H_nu(ka)`` (as a function of ``lam = nu^2 / a^2``) with smallest ``Im lam > 0``.

    A coarse 2D scan of ``|H_nu(ka)|`` over the first quadrant of ``nu``
    locates local minima, each refined by ``findroot``.
    """
    with mp.workdps(dps):
        re = np.arange(k, 2.0 * k, 0.5)
        im = np.arange(0.5, 12.0, 0.5)
        mag = np.array([[float(abs(mp.hankel1(mp.mpc(x, y), k * a))) for y in im] for x in re])
        roots = []
        for i in range(1, re.size - 1):
            for j in range(1, im.size - 1):
                if mag[i, j] <= mag[i - 1 : i + 2, j - 1 : j + 2].min():
                    try:
                        z = mp.findroot(lambda nu: mp.hankel1(nu, k * a), mp.mpc(re[i], im[j]))
                    except (ValueError, ZeroDivisionError):
                        continue
                    roots.append(complex(z / a) ** 2)
    roots = [r for r in roots if r.imag > 0]
    return min(roots, key=lambda r: r.imag)


def annulus_dtn_scipy(ells, k, a, R_outer, outer_bc="neumann"):
    """Homogeneous 2D annulus: ``u = c1 J + c2 Y``, ``u(a) = 1``, outer Neumann or Dirichlet."""
    out = []
    for n in np.atleast_1d(ells):
        if outer_bc == "neumann":
            row = [sp.jvp(n, k * R_outer), sp.yvp(n, k * R_outer)]
        else:
            row = [sp.jv(n, k * R_outer), sp.yv(n, k * R_outer)]
        M = np.array([[sp.jv(n, k * a), sp.yv(n, k * a)], row])
        c = np.linalg.solve(M, [1.0, 0.0])
        out.append(-k * (c[0] * sp.jvp(n, k * a) + c[1] * sp.yvp(n, k * a)))
    return np.array(out)


def shooting_dtn_radial(q, a, R_outer, dimension=3, breaks=(), rtol=1e-12, atol=1e-14):
    """``lam = 0`` dtn of ``-r^(1-d)(r^(d-1) u')' + q u = 0`` with ``u'(R_outer) = 0``.

    Integrates inward from ``R_outer`` with an adaptive Runge-Kutta scheme,
    restarting at each discontinuity of ``q`` in ``breaks``.
    """
    d = dimension

    def rhs(r, y):
        u, du = y
        return [du, q(r) * u - (d - 1) / r * du]

    pts = [R_outer] + sorted((b for b in breaks if a < b < R_outer), reverse=True) + [a]
    y = np.array([1.0 + 0j, 0.0 + 0j])
    for r0, r1 in zip(pts[:-1], pts[1:]):
        sol = solve_ivp(rhs, (r0, r1), y, method="DOP853", rtol=rtol, atol=atol)
        y = sol.y[:, -1]
    return -y[1] / y[0]
