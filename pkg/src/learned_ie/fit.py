"""Weighted least-squares fitting of learned infinite elements.

The misfit ``J = 1/2 sum |w_l (dtn(lam_l) - dtn_learned(lam_l))|^2`` is
minimized with a hand-written Levenberg-Marquardt iteration.  Complex
parameters and residuals are split into real and imaginary parts; weights are
folded into the residual rows so the problem is in standard least-squares form.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import LearnedIEError, PoleCollisionError, StalledOptimizationError
from .learned import LearnedIE, ReducedParams, eval_dtn_dense_batch, eval_dtn_reduced

RNG_ALGORITHM = "Philox"
POLE_GUARD = 1e-8


@dataclass(frozen=True)
class FitConfig:
    max_iterations: int = 5000
    cost_tol: float = 1e-15
    gradient_tol: float = 1e-10
    step_tol: float = 1e-12
    initial_damping: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 1.0 / 3.0
    max_damping: float = 1e12
    rng_seed: int = 0
    init_magnitude: float = 1e-2
    pole_guesses: tuple = None
    acceleration: bool = False
    acceleration_ratio: float = 0.75
    record_trace: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        for name in ("cost_tol", "gradient_tol", "step_tol", "initial_damping", "init_magnitude"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.damping_up > 1.0:
            raise ValueError("damping_up must be > 1")
        if not 0.0 < self.damping_down < 1.0:
            raise ValueError("damping_down must be in (0, 1)")
        if self.pole_guesses is not None:
            object.__setattr__(self, "pole_guesses", tuple(complex(p) for p in self.pole_guesses))

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        if self.pole_guesses is not None:
            d["pole_guesses"] = [[p.real, p.imag] for p in self.pole_guesses]
        return d


@dataclass
class LMDiagnostics:
    cost: float
    gradient_norm: float
    iterations: int
    accepted: int
    damping: float
    status: str
    trace: list = field(default_factory=list)


@dataclass
class FitResult:
    ie: LearnedIE
    final_cost: float
    gradient_norm: float
    iterations: int
    wall_time: float
    per_mode_residuals: np.ndarray
    status: str = "converged"
    trace: list = field(default_factory=list)

    @property
    def N(self):
        return self.ie.N


# ---------------------------------------------------------------------------
# misfit and Jacobian


def misfit(ie, samples):
    """``1/2 sum |w (dtn - dtn_learned)|^2`` over the samples."""
    r = samples.weights * (samples.values - np.atleast_1d(ie.dtn(samples.lambdas)))
    return 0.5 * float(np.sum(np.abs(r) ** 2))


def _interleave(z):
    out = np.empty(2 * z.size)
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


def _complex_columns(dz):
    """Real Jacobian columns for (Re p, Im p) from the complex derivative ``dz``."""
    re = _interleave(dz)
    im = _interleave(1j * dz)
    return re, im


def reduced_residuals(params, samples):
    return _interleave(samples.weights * (samples.values - eval_dtn_reduced(params, samples.lambdas)))


def residuals_and_jacobian(params, samples):
    """Weighted real residuals (length 2L) and their analytic Jacobian (2L x (8N+4)).

    Rows alternate real and imaginary parts per sample.  Columns follow
    :meth:`ReducedParams.to_vector`.
    """
    lam = samples.lambdas
    w = samples.weights
    N = params.N
    if N:
        den = params.Ajj[None, :] + lam[:, None]
        hit = np.abs(den) <= 1e-300
        if hit.any():
            i, j = np.argwhere(hit)[0]
            raise PoleCollisionError(j=int(j) + 1, ell=int(samples.ells[i]), lam=float(lam[i]))
    f = samples.values - eval_dtn_reduced(params, lam)
    r = _interleave(w * f)
    jac = np.empty((2 * lam.size, 8 * N + 4))
    jac[:, 0], jac[:, 1] = _complex_columns(-w + 0j)
    jac[:, 2], jac[:, 3] = _complex_columns(-w * lam + 0j)
    if N:
        numA = params.Aj0[None, :] + lam[:, None]  # A_n0 + lam
        numB = params.A0[None, :] + lam[:, None] * params.B0[None, :]  # A_0n + lam B_0n
        d_a0 = numA / den
        d_b0 = lam[:, None] * numA / den
        d_aj0 = numB / den
        d_ajj = -numB * numA / den**2
        for n in range(N):
            c = 4 + 8 * n
            for off, dz in enumerate((d_a0[:, n], d_b0[:, n], d_aj0[:, n], d_ajj[:, n])):
                jac[:, c + 2 * off], jac[:, c + 2 * off + 1] = _complex_columns(w * dz)
    return r, jac


def central_difference_jacobian(fun, x, rel_step=1e-6):
    x = np.asarray(x, dtype=float)
    f0 = fun(x)
    jac = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        jac[:, i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return jac


# ---------------------------------------------------------------------------
# Levenberg-Marquardt


class _DampedSystem:
    """QR factorization of ``[J; sqrt(mu) D]`` with ``D^2 = diag(J^T J)``.

    Solving through the augmented matrix is algebraically the damped normal
    equations ``(J^T J + mu diag(J^T J)) d = -J^T rhs`` without squaring the
    condition number.
    """

    def __init__(self, jac, mu):
        diag = np.sum(jac * jac, axis=0)
        floor = np.finfo(float).eps * max(float(diag.max()), 1e-300)
        self.scale = np.sqrt(np.maximum(diag, floor))
        aug = np.vstack([jac, np.diag(np.sqrt(mu) * self.scale)])
        self.q, self.r = np.linalg.qr(aug)
        self.m = jac.shape[0]

    def solve(self, rhs):
        return np.linalg.solve(self.r, -(self.q[: self.m].T @ rhs))


def lm_minimize(residual, jacobian, x0, config=FitConfig(), feasible=None):
    """Levenberg-Marquardt with Marquardt's diagonal scaling.

    ``residual(x)`` returns the real residual vector, ``jacobian(x)`` its
    Jacobian.  A trial step is accepted iff the cost decreases (damping times
    ``damping_down``), otherwise rejected (damping times ``damping_up``);
    trial points rejected by ``feasible`` count as failed steps.  With
    ``config.acceleration`` the step gets the second-order geodesic correction
    ``a / 2`` where ``J a = -r''(v, v)``; the directional second derivative is
    a finite difference along the first-order step ``v``.

    Returns ``(x_best, diagnostics)``; raises :class:`StalledOptimizationError`
    (carrying the best iterate) when the damping exceeds ``config.max_damping``
    before any tolerance is met.
    """
    x = np.array(x0, dtype=float)
    r = residual(x)
    cost = 0.5 * float(r @ r)
    mu = config.initial_damping
    trace = []
    if cost == 0.0:
        return x, LMDiagnostics(0.0, 0.0, 0, 0, mu, "zero_residual", trace)
    jac = jacobian(x)
    grad = jac.T @ r
    gnorm = float(np.max(np.abs(grad)))
    accepted = 0
    status = "max_iterations"
    it = 0
    while it < config.max_iterations:
        if cost <= config.cost_tol:
            status = "cost_tol"
            break
        if gnorm <= config.gradient_tol:
            status = "gradient_tol"
            break
        if mu > config.max_damping:
            diag = LMDiagnostics(cost, gnorm, it, accepted, mu, "stalled", trace)
            raise StalledOptimizationError(x, diag)
        it += 1
        system = _DampedSystem(jac, mu)
        step = system.solve(r)
        ok = bool(np.all(np.isfinite(step)))
        if ok and config.acceleration:
            ok, step = _accelerate(residual, x, r, jac, system, step, config.acceleration_ratio)
        x_new = x + step
        ok = ok and bool(np.all(np.isfinite(x_new))) and (feasible is None or feasible(x_new))
        cost_new = np.inf
        if ok:
            try:
                r_new = residual(x_new)
                cost_new = 0.5 * float(r_new @ r_new)
            except LearnedIEError:
                ok = False
        if ok and cost_new < cost:
            x, r, cost = x_new, r_new, cost_new
            jac = jacobian(x)
            grad = jac.T @ r
            gnorm = float(np.max(np.abs(grad)))
            mu *= config.damping_down
            accepted += 1
            if config.record_trace:
                trace.append((it, cost, gnorm, mu, True))
            # a short step forced by heavy damping is not convergence
            if mu < 1.0 and np.linalg.norm(step) <= config.step_tol * (np.linalg.norm(x) + config.step_tol):
                status = "step_tol"
                break
        else:
            mu *= config.damping_up
            if config.record_trace:
                trace.append((it, cost, gnorm, mu, False))
    return x, LMDiagnostics(cost, gnorm, it, accepted, mu, status, trace)


def _accelerate(residual, x, r, jac, system, v, ratio, h=0.1):
    """Add the geodesic correction.

    A correction larger than ``ratio`` times the velocity (in the scaled norm)
    is dropped and the plain step is tried instead; near convergence the
    finite-difference curvature is mostly rounding noise.
    """
    try:
        r_h = residual(x + h * v)
    except LearnedIEError:
        return False, v
    rpp = (2.0 / h) * ((r_h - r) / h - jac @ v)
    a = system.solve(rpp)
    if not np.all(np.isfinite(a)):
        return False, v
    if np.linalg.norm(system.scale * a) > ratio * np.linalg.norm(system.scale * v):
        return True, v
    return True, v + 0.5 * a


# ---------------------------------------------------------------------------
# reduced and dense fits


def pole_guard_distance(samples):
    return POLE_GUARD * (1.0 + float(np.max(np.abs(samples.lambdas))))


def _run_lm(residual, jacobian, x0, config, feasible):
    try:
        x, diag = lm_minimize(residual, jacobian, x0, config, feasible)
    except StalledOptimizationError as exc:
        x, diag = exc.x_best, exc.diagnostics
    return x, diag


def fit_reduced(samples, N, config=FitConfig(), init=None):
    """Fit the reduced ansatz of size ``N`` starting from ``init``."""
    if init is None:
        init = initial_reduced(N, config)
    if init.N != N:
        raise ValueError(f"init has N={init.N}, expected {N}")
    guard = pole_guard_distance(samples)
    lam = samples.lambdas

    def residual(x):
        return reduced_residuals(ReducedParams.from_vector(x), samples)

    def jacobian(x):
        return residuals_and_jacobian(ReducedParams.from_vector(x), samples)[1]

    def feasible(x):
        if N == 0:
            return True
        ajj = x[4:].reshape(-1, 4, 2)[:, 3, :]
        d = np.abs((ajj[:, 0] + 1j * ajj[:, 1])[None, :] + lam[:, None])
        return bool(np.all(d >= guard))

    t0 = time.perf_counter()
    x, diag = _run_lm(residual, jacobian, init.to_vector(), config, feasible)
    wall = time.perf_counter() - t0
    params = ReducedParams.from_vector(x)
    ie = LearnedIE.from_reduced(params, model=samples.model)
    return _finish(ie, samples, diag, wall)


def _finish(ie, samples, diag, wall):
    res = samples.weights * (samples.values - np.atleast_1d(ie.dtn(samples.lambdas)))
    cost = 0.5 * float(np.sum(np.abs(res) ** 2))
    ie = ie.with_fit(cost=cost, gradient_norm=float(diag.gradient_norm), iterations=int(diag.iterations), status=diag.status)
    return FitResult(ie, cost, diag.gradient_norm, diag.iterations, wall, res, diag.status, diag.trace)


def _dense_vector(A, B):
    z = np.concatenate([A.ravel(), B.ravel()])
    return _interleave(z)


def _dense_matrices(x, n):
    z = x[0::2] + 1j * x[1::2]
    return z[: n * n].reshape(n, n), z[n * n :].reshape(n, n)


def dense_jacobian(A, B, samples):
    """Analytic Jacobian of the weighted dense residuals.

    With ``x = S^{-1} c`` and ``y^T = r^T S^{-1}`` (``S`` the exterior block,
    ``c``/``r`` the coupling column/row) the Schur dtn has holomorphic
    partials ``1, -x_j, -y_i, y_i x_j`` in ``A`` and ``lam`` times those in ``B``.
    Columns follow the interleaved ``(A.ravel(), B.ravel())`` layout.
    """
    lam = samples.lambdas
    w = samples.weights
    n = A.shape[0]
    L = lam.size
    dA = np.zeros((L, n, n), dtype=complex)
    dA[:, 0, 0] = 1.0
    if n > 1:
        S = A[None, 1:, 1:] + lam[:, None, None] * B[None, 1:, 1:]
        col = A[None, 1:, 0] + lam[:, None] * B[None, 1:, 0]
        row = A[None, 0, 1:] + lam[:, None] * B[None, 0, 1:]
        x = np.linalg.solve(S, col[..., None])[..., 0]
        y = np.linalg.solve(np.swapaxes(S, 1, 2), row[..., None])[..., 0]
        dA[:, 0, 1:] = -x
        dA[:, 1:, 0] = -y
        dA[:, 1:, 1:] = y[:, :, None] * x[:, None, :]
    dz = np.concatenate([dA.reshape(L, -1), lam[:, None] * dA.reshape(L, -1)], axis=1)
    dz = -w[:, None] * dz  # residual is w (values - dtn)
    jac = np.empty((2 * L, 2 * dz.shape[1]))
    jac[0::2, 0::2] = dz.real
    jac[1::2, 0::2] = dz.imag
    jac[0::2, 1::2] = -dz.imag
    jac[1::2, 1::2] = dz.real
    return jac


def fit_dense(samples, N, config=FitConfig(), init=None, jacobian="analytic"):
    """Fit unconstrained ``(N+1) x (N+1)`` matrices.

    ``init`` is a :class:`~learned_ie.learned.LearnedIE` of size ``N``
    (defaults to the reduced-pattern random start).  ``jacobian`` selects the
    Schur-complement derivative (``"analytic"``) or central differences
    (``"fd"``).
    """
    if jacobian not in ("analytic", "fd"):
        raise ValueError(f"jacobian must be 'analytic' or 'fd', got {jacobian!r}")
    n = N + 1
    if init is None:
        init = LearnedIE.from_reduced(initial_reduced(N, config))
    if init.N != N:
        raise ValueError(f"init has N={init.N}, expected {N}")
    lam = samples.lambdas
    w = samples.weights

    def residual(x):
        A, B = _dense_matrices(x, n)
        with np.errstate(all="raise"):
            try:
                f = samples.values - eval_dtn_dense_batch(A, B, lam)
            except (np.linalg.LinAlgError, FloatingPointError):
                raise PoleCollisionError() from None
        return _interleave(w * f)

    def jac_analytic(x):
        A, B = _dense_matrices(x, n)
        return dense_jacobian(A, B, samples)

    def jac_fd(x):
        return central_difference_jacobian(residual, x)

    def feasible(x):
        if N == 0:
            return True
        A, B = _dense_matrices(x, n)
        inner = A[None, 1:, 1:] + lam[:, None, None] * B[None, 1:, 1:]
        s = np.linalg.svd(inner, compute_uv=False)
        scale = np.max(s[:, 0])
        return bool(np.all(s[:, -1] > POLE_GUARD * scale))

    t0 = time.perf_counter()
    jac = jac_analytic if jacobian == "analytic" else jac_fd
    x, diag = _run_lm(residual, jac, _dense_vector(init.A, init.B), config, feasible)
    wall = time.perf_counter() - t0
    A, B = _dense_matrices(x, n)
    ie = LearnedIE(A, B, "dense", dict(samples.model))
    return _finish(ie, samples, diag, wall)


# ---------------------------------------------------------------------------
# successive learning


def step_rng(seed, N):
    """Independent counter-based stream for ladder step ``N``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(N),))
    return np.random.Generator(np.random.Philox(ss))


def _small_random(rng, magnitude, size=None):
    u = rng.uniform(0.1, 1.0, size=(2,) if size is None else (2, size))
    return (u[0] + 1j * u[1]) * magnitude


def initial_reduced(N, config=FitConfig()):
    """Random scalar start embedded to size ``N`` exactly as the ladder would do."""
    params = ReducedParams(*_initial_scalar(config), [], [], [], [])
    for n in range(1, N + 1):
        params = extend_reduced(params, n, config)
    return params


def _initial_scalar(config):
    rng = step_rng(config.rng_seed, 0)
    return _small_random(rng, config.init_magnitude), _small_random(rng, config.init_magnitude)


def _diag_guess(n, config):
    if config.pole_guesses is not None and n - 1 < len(config.pole_guesses):
        return -complex(config.pole_guesses[n - 1])
    return 1.0 + 0j


def extend_reduced(params, n, config):
    """Embed ``params`` (size ``n - 1``) into size ``n``."""
    rng = step_rng(config.rng_seed, n)
    m = config.init_magnitude
    a0, aj0, b0 = (_small_random(rng, m) for _ in range(3))
    return params.extended(a0, b0, aj0, _diag_guess(n, config))


def extend_dense(ie, n, config):
    """Embed dense matrices of size ``n`` into size ``n + 1`` with the same rules."""
    rng = step_rng(config.rng_seed, n)
    m = config.init_magnitude
    a0, aj0, b0 = (_small_random(rng, m) for _ in range(3))
    A = np.zeros((n + 1, n + 1), dtype=complex)
    B = np.zeros((n + 1, n + 1), dtype=complex)
    A[:n, :n], B[:n, :n] = ie.A, ie.B
    A[0, n], A[n, 0], A[n, n] = a0, aj0, _diag_guess(n, config)
    B[0, n], B[n, 0], B[n, n] = b0, 1.0, 1.0
    return LearnedIE(A, B, "dense", dict(ie.model))


def successive_learn(samples, N_max, config=FitConfig(), structure="reduced", N_min=0, start=None):
    """Warm-started ladder ``N = N_min..N_max``; returns a list of :class:`FitResult`.

    ``start`` optionally provides the fitted size-``N_min - 1`` result to embed
    (used for resuming).  A failed step keeps the previous iterate and the
    ladder continues from it.
    """
    results = []
    prev = start
    for N in range(N_min, N_max + 1):
        if structure == "reduced":
            if prev is None:
                init = ReducedParams(*_initial_scalar(config), [], [], [], []) if N == 0 else initial_reduced(N, config)
            else:
                init = extend_reduced(prev.ie.reduced_params(), N, config)
            try:
                res = fit_reduced(samples, N, config, init)
            except LearnedIEError:
                res = _fallback(samples, LearnedIE.from_reduced(init, samples.model))
        elif structure == "dense":
            if prev is None:
                start_ie = LearnedIE.from_reduced(initial_reduced(N, config))
                init = LearnedIE(start_ie.A, start_ie.B, "dense", dict(samples.model))
            else:
                init = extend_dense(prev.ie, N, config)
            try:
                res = fit_dense(samples, N, config, init)
            except LearnedIEError:
                res = _fallback(samples, init)
        else:
            raise ValueError(f"unknown structure {structure!r}")
        res.ie = res.ie.with_fit(rng=RNG_ALGORITHM, seed=int(config.rng_seed))
        results.append(res)
        prev = res
    return results


def _fallback(samples, ie):
    res = samples.weights * (samples.values - np.atleast_1d(ie.dtn(samples.lambdas)))
    cost = 0.5 * float(np.sum(np.abs(res) ** 2))
    ie = ie.with_fit(cost=cost, gradient_norm=None, iterations=0, status="failed")
    return FitResult(ie, cost, float("nan"), 0, 0.0, res, "failed")


def weighted_sup_error(ie, samples):
    return float(np.max(samples.weights * np.abs(samples.values - np.atleast_1d(ie.dtn(samples.lambdas)))))


def with_seed(config, seed):
    return replace(config, rng_seed=int(seed))
