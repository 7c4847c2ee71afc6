r"""Special functions, quadrature and small complex linear algebra.

Bessel functions of integer order are computed without external libraries:

* :math:`J_n` by Miller's downward recurrence, normalized with
  :math:`J_0 + 2\sum_k J_{2k} = 1`;
* :math:`Y_0, Y_1` from the Neumann series in the normalized :math:`J_{2k}`,
  followed by upward recurrence (the stable direction for :math:`Y`).

Both recurrences rescale on the fly and keep a running logarithmic scale, so
the routines return log-magnitudes that stay finite long after the plain
values have over- or underflowed.  Ratios such as
:math:`|H^{(1)}_n(x_1)/H^{(1)}_n(x_2)|` for orders in the thousands are then
evaluated in the log domain.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularMatrixError, UnsupportedOrderError

MAX_ORDER = 2000
EULER_GAMMA = 0.57721566490153286061
_RESCALE = 1e100
_LOG_RESCALE = math.log(_RESCALE)
SINGULAR_PIVOT = 1e-300
MAX_DENSE_SIZE = 512


def _validate_order(n):
    if int(n) != n or n < 0:
        raise UnsupportedOrderError(f"order must be a nonnegative integer, got {n!r}")
    if n > MAX_ORDER:
        raise UnsupportedOrderError(f"order {n} exceeds supported maximum {MAX_ORDER}")


def _validate_argument(x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise DomainError("argument must be a scalar or 1-d array")
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise DomainError(f"Bessel argument must be positive and finite, got {x}")
    return x


def miller_start(nmax, x):
    """Starting index of the downward recurrence for orders ``<= nmax``.

    ``nmax + max(20, ceil(1.5 x))`` alone is too close to the turning point
    for moderate ``x``; the second term keeps the start far enough beyond it.
    """
    xm = float(np.max(x))
    return int(max(nmax + max(20, math.ceil(1.5 * xm)), math.ceil(xm + 40.0 + 10.0 * xm ** (1.0 / 3.0))))


@dataclass(frozen=True)
class BesselTable:
    """Log-magnitude and sign of ``J_k(x)`` and ``Y_k(x)`` for ``k = 0..nmax``.

    Rows index the order, columns the argument.  ``J_k = sign_j * exp(log_j)``.
    """

    x: np.ndarray
    log_j: np.ndarray
    sign_j: np.ndarray
    log_y: np.ndarray
    sign_y: np.ndarray

    @property
    def nmax(self):
        return self.log_j.shape[0] - 1

    def j(self):
        with np.errstate(over="ignore", under="ignore"):
            return self.sign_j * np.exp(self.log_j)

    def y(self):
        with np.errstate(over="ignore", under="ignore"):
            return self.sign_y * np.exp(self.log_y)

    def log_hankel(self):
        """Return ``(L, u)`` with ``H_k(x) = exp(L) * u`` and ``max(|Re u|, |Im u|) = 1``."""
        big = np.maximum(self.log_j, self.log_y)
        with np.errstate(under="ignore", invalid="ignore"):
            u = self.sign_j * np.exp(self.log_j - big) + 1j * self.sign_y * np.exp(self.log_y - big)
        return big, u

    def log_abs_hankel(self):
        big = np.maximum(self.log_j, self.log_y)
        small = np.minimum(self.log_j, self.log_y)
        with np.errstate(under="ignore"):
            return big + 0.5 * np.log1p(np.exp(2.0 * (small - big)))

    # log-derivatives f'_n / f_n evaluated via f'_n = (f_{n-1} - f_{n+1}) / 2.
    # Orders passed here must satisfy n + 1 <= nmax.

    def _real_dlog(self, logf, signf, orders):
        orders = np.asarray(orders, dtype=int)
        if np.any(orders + 1 > self.nmax):
            raise UnsupportedOrderError("table too short for requested derivative order")
        below = np.abs(orders - 1)
        flip = np.where(orders == 0, -1.0, 1.0)[:, None]
        with np.errstate(over="ignore", under="ignore"):
            down = flip * signf[below] * signf[orders] * np.exp(logf[below] - logf[orders])
            up = signf[orders + 1] * signf[orders] * np.exp(logf[orders + 1] - logf[orders])
        return 0.5 * (down - up)

    def dlog_j(self, orders):
        return self._real_dlog(self.log_j, self.sign_j, orders)

    def dlog_y(self, orders):
        return self._real_dlog(self.log_y, self.sign_y, orders)

    def dlog_h(self, orders):
        orders = np.asarray(orders, dtype=int)
        if np.any(orders + 1 > self.nmax):
            raise UnsupportedOrderError("table too short for requested derivative order")
        big, u = self.log_hankel()
        below = np.abs(orders - 1)
        flip = np.where(orders == 0, -1.0, 1.0)[:, None]
        with np.errstate(over="ignore", under="ignore"):
            down = flip * np.exp(big[below] - big[orders]) * u[below] / u[orders]
            up = np.exp(big[orders + 1] - big[orders]) * u[orders + 1] / u[orders]
        return 0.5 * (down - up)


def bessel_table(nmax, x):
    """Compute a :class:`BesselTable` for orders ``0..nmax`` at the positive arguments ``x``."""
    _validate_order(nmax)
    x = _validate_argument(x)
    m = x.size
    top = miller_start(nmax, x)
    top += top % 2  # even start keeps the normalization sum aligned

    frac = np.zeros((top + 1, m))
    scale = np.zeros((top + 1, m))
    f_up = np.zeros(m)
    f = np.ones(m)
    t = np.zeros(m)
    frac[top] = f
    for k in range(top, 0, -1):
        f_down = (2.0 * k / x) * f - f_up
        big = np.abs(f_down) > _RESCALE
        if big.any():
            f_down = np.where(big, f_down / _RESCALE, f_down)
            f = np.where(big, f / _RESCALE, f)
            t = np.where(big, t + _LOG_RESCALE, t)
        f_up, f = f, f_down
        frac[k - 1] = f
        scale[k - 1] = t

    t_final = scale[0]
    with np.errstate(under="ignore"):
        rel = frac * np.exp(scale - t_final)
    norm = rel[0] + 2.0 * rel[2::2].sum(axis=0)
    with np.errstate(divide="ignore"):
        log_j_all = np.log(np.abs(frac)) + scale - t_final - np.log(np.abs(norm))
    sign_j_all = np.sign(frac) * np.sign(norm)
    with np.errstate(under="ignore"):
        jv = sign_j_all * np.exp(log_j_all)

    # Neumann series for Y_0 and Y_1
    kk = np.arange(1, (top - 1) // 2 + 1)
    alt = np.where(kk % 2 == 0, 1.0, -1.0)[:, None]
    lead = np.log(x / 2.0) + EULER_GAMMA
    y0 = (2.0 / math.pi) * lead * jv[0] - (4.0 / math.pi) * np.sum(alt * jv[2 * kk] / kk[:, None], axis=0)
    y1 = (
        -(2.0 / (math.pi * x)) * jv[0]
        + (2.0 / math.pi) * lead * jv[1]
        + (2.0 / math.pi) * np.sum(alt * (jv[2 * kk - 1] - jv[2 * kk + 1]) / kk[:, None], axis=0)
    )

    log_y = np.empty((nmax + 1, m))
    sign_y = np.empty((nmax + 1, m))
    with np.errstate(divide="ignore"):
        log_y[0], sign_y[0] = np.log(np.abs(y0)), np.sign(y0)
        if nmax >= 1:
            log_y[1], sign_y[1] = np.log(np.abs(y1)), np.sign(y1)
    y_prev, y_cur, ty = y0, y1, np.zeros(m)
    for k in range(1, nmax):
        y_next = (2.0 * k / x) * y_cur - y_prev
        big = np.abs(y_next) > _RESCALE
        if big.any():
            y_next = np.where(big, y_next / _RESCALE, y_next)
            y_cur = np.where(big, y_cur / _RESCALE, y_cur)
            ty = np.where(big, ty + _LOG_RESCALE, ty)
        y_prev, y_cur = y_cur, y_next
        with np.errstate(divide="ignore"):
            log_y[k + 1] = np.log(np.abs(y_cur)) + ty
        sign_y[k + 1] = np.sign(y_cur)

    return BesselTable(
        x=x,
        log_j=log_j_all[: nmax + 1].copy(),
        sign_j=sign_j_all[: nmax + 1].copy(),
        log_y=log_y,
        sign_y=sign_y,
    )


def bessel_j(n, x):
    """Bessel function of the first kind ``J_n(x)`` for integer ``n >= 0`` and ``x > 0``."""
    _validate_order(n)
    return float(bessel_table(n, x).j()[n, 0])


def bessel_y(n, x):
    """Bessel function of the second kind ``Y_n(x)`` for integer ``n >= 0`` and ``x > 0``."""
    _validate_order(n)
    return float(bessel_table(n, x).y()[n, 0])


def hankel1(n, x):
    """Hankel function of the first kind, ``J_n(x) + i Y_n(x)``."""
    _validate_order(n)
    tab = bessel_table(n, x)
    return complex(tab.j()[n, 0], tab.y()[n, 0])


def hankel1_prime(n, x):
    """Derivative ``(H_{n-1}(x) - H_{n+1}(x)) / 2`` with ``H_{-1} = -H_1``."""
    _validate_order(n)
    if n + 1 > MAX_ORDER:
        raise UnsupportedOrderError(f"derivative needs order {n + 1} > {MAX_ORDER}")
    tab = bessel_table(n + 1, x)
    h = tab.j()[:, 0] + 1j * tab.y()[:, 0]
    below = h[n - 1] if n >= 1 else -h[1]
    return complex(0.5 * (below - h[n + 1]))


def hankel_ratio_abs(n, x_num, x_den):
    """``|H_n(x_num) / H_n(x_den)|`` evaluated in the log-magnitude domain."""
    _validate_order(n)
    tab = bessel_table(n, [x_num, x_den])
    logh = tab.log_abs_hankel()[n]
    return float(np.exp(logh[0] - logh[1]))


def hankel_ratio_abs_all(nmax, x_num, x_den):
    """Vectorized :func:`hankel_ratio_abs` for all orders ``0..nmax``."""
    tab = bessel_table(nmax, [x_num, x_den])
    logh = tab.log_abs_hankel()
    with np.errstate(under="ignore", over="ignore"):
        return np.exp(logh[:, 0] - logh[:, 1])


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f, lo=-1.0, hi=1.0):
        half = 0.5 * (hi - lo)
        wf = self.weights * f(0.5 * (lo + hi) + half * self.nodes)
        # mirrored nodes summed first: odd integrands cancel exactly
        m = wf.size // 2
        paired = wf[:m] + wf[::-1][:m]
        return half * (np.sum(paired) + (wf[m] if wf.size % 2 else 0.0))


def gauss_legendre(npoints):
    """Gauss-Legendre rule on [-1, 1] via Newton iteration on the Legendre recurrence."""
    if int(npoints) != npoints or not 1 <= npoints <= 64:
        raise ValueError(f"npoints must be an integer in [1, 64], got {npoints!r}")
    n = int(npoints)
    i = np.arange(1, n + 1)
    x = np.cos(math.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p0, p1 = np.ones_like(x), x.copy()
        for k in range(2, n + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    p0, p1 = np.ones_like(x), x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(nodes=x, weights=w)


def lu_factor_dense(matrix):
    """Partial-pivoted LU factorization ``P A = L U`` stored compactly."""
    a = np.array(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    n = a.shape[0]
    if n > MAX_DENSE_SIZE:
        raise ValueError(f"dense solver limited to n <= {MAX_DENSE_SIZE}, got {n}")
    piv = np.arange(n)
    for j in range(n):
        p = j + int(np.argmax(np.abs(a[j:, j])))
        if abs(a[p, j]) < SINGULAR_PIVOT:
            raise SingularMatrixError(f"singular matrix: pivot {abs(a[p, j]):.3e} in column {j}")
        if p != j:
            a[[j, p]] = a[[p, j]]
            piv[[j, p]] = piv[[p, j]]
        a[j + 1 :, j] /= a[j, j]
        a[j + 1 :, j + 1 :] -= np.outer(a[j + 1 :, j], a[j, j + 1 :])
    return a, piv


def lu_solve_factored(lu, piv, rhs):
    b = np.array(rhs, dtype=complex)[piv]
    n = lu.shape[0]
    for i in range(1, n):
        b[i] -= lu[i, :i] @ b[:i]
    for i in range(n - 1, -1, -1):
        b[i] = (b[i] - lu[i, i + 1 :] @ b[i + 1 :]) / lu[i, i]
    return b


def lu_solve_dense(matrix, rhs):
    """Solve ``matrix @ x = rhs`` by partial-pivoted LU; ``rhs`` may be a vector or a matrix."""
    rhs = np.asarray(rhs)
    matrix = np.asarray(matrix)
    if rhs.shape[0] != matrix.shape[0]:
        raise ValueError("dimension mismatch between matrix and right-hand side")
    lu, piv = lu_factor_dense(matrix)
    return lu_solve_factored(lu, piv, rhs)


class BandedComplexMatrix:
    """Square complex matrix stored in LAPACK-style band layout.

    ``data[upper + i - j, j]`` holds entry ``(i, j)`` for ``-upper <= i - j <= lower``.
    """

    def __init__(self, size, lower, upper, data=None):
        if size < 1 or lower < 0 or upper < 0:
            raise ValueError("size must be >= 1 and bandwidths nonnegative")
        self.size = int(size)
        self.lower = int(lower)
        self.upper = int(upper)
        shape = (self.lower + self.upper + 1, self.size)
        if data is None:
            self.data = np.zeros(shape, dtype=complex)
        else:
            data = np.asarray(data, dtype=complex)
            if data.shape != shape:
                raise ValueError(f"band data must have shape {shape}, got {data.shape}")
            self.data = data.copy()
            # entries that fall outside the matrix are structurally zero
            for d in range(shape[0]):
                off = self.upper - d  # column offset j - i
                if off > 0:
                    self.data[d, : min(off, self.size)] = 0.0
                elif off < 0:
                    self.data[d, max(self.size + off, 0) :] = 0.0

    @classmethod
    def from_dense(cls, matrix, lower, upper):
        a = np.asarray(matrix, dtype=complex)
        n = a.shape[0]
        out = cls(n, lower, upper)
        i, j = np.nonzero(a)
        if np.any(i - j > lower) or np.any(j - i > upper):
            raise ValueError("matrix has entries outside the declared band")
        out.data[upper + i - j, j] = a[i, j]
        return out

    def to_dense(self):
        a = np.zeros((self.size, self.size), dtype=complex)
        for i in range(self.size):
            lo, hi = max(0, i - self.lower), min(self.size, i + self.upper + 1)
            j = np.arange(lo, hi)
            a[i, j] = self.data[self.upper + i - j, j]
        return a

    def add_entries(self, rows, cols, values):
        rows = np.asarray(rows).ravel()
        cols = np.asarray(cols).ravel()
        off = rows - cols
        if np.any(off > self.lower) or np.any(-off > self.upper):
            raise ValueError("entries outside the band")
        np.add.at(self.data, (self.upper + off, cols), np.asarray(values, dtype=complex).ravel())

    def diagonal_add(self, index, value):
        self.data[self.upper, index] += value

    def entry(self, i, j):
        if i - j > self.lower or j - i > self.upper:
            return 0j
        return self.data[self.upper + i - j, j]

    def matvec(self, v):
        v = np.asarray(v, dtype=complex)
        out = np.zeros(self.size, dtype=complex)
        for d in range(self.lower + self.upper + 1):
            off = d - self.upper  # i - j
            if off >= 0:
                j = np.arange(0, self.size - off)
            else:
                j = np.arange(-off, self.size)
            out[j + off] += self.data[d, j] * v[j]
        return out

    def copy(self):
        return BandedComplexMatrix(self.size, self.lower, self.upper, self.data)


def banded_solve(matrix, rhs):
    """Solve a banded system by Gaussian elimination with partial pivoting inside the band.

    Row interchanges create fill in up to ``lower`` extra superdiagonals; the
    working array reserves that space up front, as LAPACK's ``gbsv`` does.
    """
    n, kl, ku = matrix.size, matrix.lower, matrix.upper
    rhs = np.array(rhs, dtype=complex)
    if rhs.shape[0] != n:
        raise ValueError("dimension mismatch between matrix and right-hand side")
    d = kl + ku
    ab = np.zeros((2 * kl + ku + 1, n), dtype=complex)
    ab[kl:, :] = matrix.data
    b = rhs.copy()

    for j in range(n):
        km = min(kl, n - 1 - j)
        col = ab[d : d + km + 1, j]
        p = int(np.argmax(np.abs(col)))
        if abs(col[p]) < SINGULAR_PIVOT:
            raise SingularMatrixError(f"singular banded matrix: pivot {abs(col[p]):.3e} in column {j}")
        jmax = min(n - 1, j + d)
        cols = np.arange(j, jmax + 1)
        if p != 0:
            rj = d + j - cols
            rp = rj + p
            tmp = ab[rj, cols].copy()
            ab[rj, cols] = ab[rp, cols]
            ab[rp, cols] = tmp
            b[[j, j + p]] = b[[j + p, j]]
        if km == 0:
            continue
        pivot = ab[d, j]
        mult = ab[d + 1 : d + km + 1, j] / pivot
        ab[d + 1 : d + km + 1, j] = mult
        b[j + 1 : j + km + 1] -= np.multiply.outer(mult, b[j]) if b.ndim > 1 else mult * b[j]
        if jmax > j:
            c = cols[1:]
            urow = ab[d + j - c, c]
            rows = d + np.arange(j + 1, j + km + 1)[:, None] - c[None, :]
            ab[rows, c[None, :]] -= mult[:, None] * urow[None, :]

    x = b
    for j in range(n - 1, -1, -1):
        hi = min(n - 1, j + d)
        if hi > j:
            c = np.arange(j + 1, hi + 1)
            x[j] = x[j] - ab[d + j - c, c] @ x[j + 1 : hi + 1]
        x[j] = x[j] / ab[d, j]
    return x
