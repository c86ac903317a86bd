"""Stiff integration: variable-order BDF with Newton iteration on a sparse LU.

The BDF core keeps the solution history as a modified divided-difference
array (orders 1-5), adapts step size and order from local error estimates
and reuses the iteration matrix I - h/alpha J until Newton struggles, the
step size changes, or the Jacobian is older than ``jacobian_max_age``
steps.  Tolerances are applied as a weighted RMS norm.

``ebi_reference_solve`` is a fixed-step Euler-backward-iterative scheme
used to cross-check the BDF results; ``finite_difference_jacobian`` is the
central-difference oracle for analytic Jacobians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from mpkin.linalg import SparseLU, SparsePattern, SingularMatrixError, pattern_from_coo

EPS = np.finfo(float).eps
MAX_ORDER = 5
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0

NONNEG_POLICIES = ("clamp", "reject", "none")


class SolverError(RuntimeError):
    """Integration failure; carries the last accepted state and the statistics."""

    def __init__(self, message: str, t: float, y: np.ndarray, stats: "SolveStats"):
        super().__init__(f"{message} (at t={t:.6g})")
        self.t = t
        self.y = y
        self.stats = stats


@dataclass
class SolverOptions:
    rel_tol: float = 1.0e-4
    abs_tol: float | np.ndarray = 1.0e-14
    max_steps: int = 100_000
    max_order: int = 5
    newton_max_iters: int = 4
    nonneg_policy: str = "clamp"
    first_step: float | None = None
    max_step: float = math.inf
    jacobian_max_age: int = 50

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if np.any(~(np.asarray(self.abs_tol, dtype=float) > 0)):
            raise ValueError("abs_tol must be > 0")
        if not 1 <= self.max_order <= MAX_ORDER:
            raise ValueError(f"max_order must be in [1, {MAX_ORDER}]")
        if self.newton_max_iters < 1 or self.max_steps < 1:
            raise ValueError("newton_max_iters and max_steps must be >= 1")
        if self.nonneg_policy not in NONNEG_POLICIES:
            raise ValueError(f"nonneg_policy must be one of {NONNEG_POLICIES}")


@dataclass
class SolveStats:
    steps: int = 0
    order_history: list[int] = field(default_factory=list)
    newton_iterations: int = 0
    jacobian_evaluations: int = 0
    lu_factorizations: int = 0
    error_test_failures: int = 0
    newton_failures: int = 0
    negativity_rejections: int = 0
    f_evaluations: int = 0

    def merge(self, other: "SolveStats") -> None:
        self.steps += other.steps
        self.order_history.extend(other.order_history)
        self.newton_iterations += other.newton_iterations
        self.jacobian_evaluations += other.jacobian_evaluations
        self.lu_factorizations += other.lu_factorizations
        self.error_test_failures += other.error_test_failures
        self.newton_failures += other.newton_failures
        self.negativity_rejections += other.negativity_rejections
        self.f_evaluations += other.f_evaluations


@dataclass
class BDFHistory:
    """Difference array, order and step size left behind by ``integrate``.

    Passing it back as ``history`` continues the integration from the
    returned state without restarting at order 1 with a tiny step.
    """

    d: np.ndarray
    order: int
    h_abs: float


# -- divided-difference bookkeeping -----------------------------------------

_GAMMA = np.hstack((0.0, np.cumsum(1.0 / np.arange(1, MAX_ORDER + 1))))
_ALPHA = _GAMMA  # pure BDF (no NDF correction)
_ERROR_CONST = 1.0 / np.arange(1, MAX_ORDER + 2)


def _compute_r(order: int, factor: float) -> np.ndarray:
    i = np.arange(1, order + 1)[:, None]
    j = np.arange(1, order + 1)
    m = np.zeros((order + 1, order + 1))
    m[1:, 1:] = (i - 1 - factor * j) / i
    m[0] = 1.0
    return np.cumprod(m, axis=0)


def _change_d(d: np.ndarray, order: int, factor: float) -> None:
    """Rescale the difference array for a step-size change by ``factor``."""
    r = _compute_r(order, factor)
    u = _compute_r(order, 1.0)
    ru = r @ u
    d[: order + 1] = ru.T @ d[: order + 1]


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x))) if x.size else 0.0


# -- Jacobian plumbing ------------------------------------------------------


class _JacobianAdapter:
    """Accepts Jacobians as pattern data, scipy sparse or dense arrays."""

    def __init__(self, jac, n: int, pattern: SparsePattern | None):
        self.jac = jac
        self.n = n
        self.pattern = pattern
        self.lu: SparseLU | None = None

    def _init_pattern(self, value) -> None:
        if sp.issparse(value):
            c = sp.coo_matrix(value)
            rows, cols = c.row, c.col
        else:
            rows, cols = np.nonzero(np.ones((self.n, self.n)))
        d = np.arange(self.n)
        self.pattern = pattern_from_coo(self.n, self.n, np.concatenate([rows, d]),
                                        np.concatenate([cols, d]))

    def __call__(self, t, y) -> np.ndarray:
        value = self.jac(t, y)
        if isinstance(value, np.ndarray) and value.ndim == 1:
            if self.pattern is None:
                raise ValueError("a data-array Jacobian needs jac_pattern")
            data = value
        else:
            if self.pattern is None:
                self._init_pattern(value)
            c = sp.coo_matrix(value)
            data = np.zeros(self.pattern.nnz)
            np.add.at(data, self.pattern.positions(c.row, c.col), c.data)
        if self.lu is None:
            self.lu = SparseLU(self.pattern)
        return data


# -- BDF --------------------------------------------------------------------


def _initial_step(fun, t0, y0, f0, direction, rtol, atol, t_bound):
    """Standard first-step heuristic (Hairer, Norsett and Wanner)."""
    interval = abs(t_bound - t0)
    if interval == 0:
        return 0.0
    scale = atol + np.abs(y0) * rtol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, interval)
    y1 = y0 + h0 * direction * f0
    f1 = fun(t0 + h0 * direction, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 == 0.0 and d2 == 0.0:
        return interval  # nothing moves: the error estimate vanishes on any step
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.5
    return min(100 * h0, h1, interval)


def integrate(fun: Callable, jac: Callable, y0, t_span, options: SolverOptions | None = None,
              jac_pattern: SparsePattern | None = None, history: BDFHistory | None = None,
              keep_history: bool = False):
    """Integrate y' = fun(t, y) from t_span[0] to t_span[1].

    ``jac(t, y)`` returns d fun / d y as a dense array, a scipy sparse
    matrix, or (with ``jac_pattern``) the CSC data array of that pattern.
    ``history`` resumes from a previous call that ended at ``y0`` (the
    caller guarantees the problem is unchanged).  Returns ``(y, stats)``, or
    ``(y, stats, history)`` with ``keep_history``; the history is None when
    the returned state was clamped.  Raises :class:`SolverError` on failure.
    """
    opts = options or SolverOptions()
    t0, t_end = float(t_span[0]), float(t_span[1])
    y = np.array(y0, dtype=np.float64)
    n = y.size
    stats = SolveStats()
    if not np.all(np.isfinite(y)):
        raise SolverError("initial state is not finite", t0, y, stats)
    if t_end == t0 or n == 0:
        return (y, stats, history) if keep_history else (y, stats)

    def f(t, yy):
        stats.f_evaluations += 1
        return np.asarray(fun(t, yy), dtype=np.float64)

    jad = _JacobianAdapter(jac, n, jac_pattern)

    def new_jacobian(t, yy):
        stats.jacobian_evaluations += 1
        return jad(t, yy)

    rtol = opts.rel_tol
    atol = np.broadcast_to(np.asarray(opts.abs_tol, dtype=np.float64), (n,)).copy()
    direction = 1.0 if t_end > t0 else -1.0
    newton_tol = max(10 * EPS / rtol, min(0.03, rtol ** 0.5))
    max_order = opts.max_order
    nmax = opts.newton_max_iters

    d = np.zeros((MAX_ORDER + 3, n))
    if history is not None and history.d.shape == d.shape and direction > 0:
        d[:] = history.d
        d[0] = y
        order = min(history.order, max_order)
        h_abs = history.h_abs
    else:
        f0 = f(t0, y)
        if not np.all(np.isfinite(f0)):
            raise SolverError("forcing is not finite at the initial state", t0, y, stats)
        if opts.first_step is not None:
            h_abs = min(float(opts.first_step), abs(t_end - t0))
        else:
            h_abs = _initial_step(f, t0, y, f0, direction, rtol, atol, t_end)
        h_abs = min(h_abs, opts.max_step)
        d[0] = y
        d[1] = f0 * h_abs * direction
        order = 1

    jdata = new_jacobian(t0, y)
    lu_obj = jad.lu
    jac_age = 0
    h_wanted = h_abs
    clipped = False
    n_equal_steps = 0
    lu_ready = False
    lu_c = None
    t = t0

    def factor(c):
        nonlocal lu_ready, lu_c
        try:
            lu_obj.factor_shifted(jdata, c)
        except SingularMatrixError:
            lu_ready = False
            return False
        stats.lu_factorizations += 1
        lu_ready = True
        lu_c = c
        return True

    while direction * (t - t_end) < 0:
        if stats.steps >= opts.max_steps:
            raise SolverError(f"max_steps={opts.max_steps} exceeded", t, d[0].copy(), stats)
        if jac_age >= opts.jacobian_max_age:
            jdata = new_jacobian(t, d[0])
            jac_age = 0
            lu_ready = False
        current_jac = jac_age == 0
        min_step = 10 * abs(np.nextafter(t, direction * np.inf) - t)
        if h_abs > opts.max_step:
            _change_d(d, order, opts.max_step / h_abs)
            h_abs = opts.max_step
            n_equal_steps = 0
            lu_ready = False

        accepted = False
        while not accepted:
            if h_abs < min_step:
                raise SolverError("step size fell below the minimum", t, d[0].copy(), stats)
            h = h_abs * direction
            t_new = t + h
            clipped = False
            if direction * (t_new - t_end) > 0:
                clipped = True
                h_wanted = h_abs
                t_new = t_end
                _change_d(d, order, abs(t_new - t) / h_abs)
                n_equal_steps = 0
                lu_ready = False
            h = t_new - t
            h_abs = abs(h)

            y_predict = np.sum(d[: order + 1], axis=0)
            scale = atol + rtol * np.abs(y_predict)
            psi = d[1: order + 1].T @ _GAMMA[1: order + 1] / _ALPHA[order]
            c = h / _ALPHA[order]
            if lu_ready and lu_c != c:
                lu_ready = False

            converged = False
            while not converged:
                if not lu_ready and not factor(c):
                    break
                converged, n_iter, y_new, dd = _newton(f, t_new, y_predict, c, psi, lu_obj,
                                                       scale, newton_tol, nmax)
                stats.newton_iterations += n_iter
                if not converged:
                    if current_jac:
                        break
                    jdata = new_jacobian(t_new, y_predict)
                    jac_age = 0
                    current_jac = True
                    lu_ready = False

            if not converged:
                stats.newton_failures += 1
                factor_h = 0.5
                h_abs *= factor_h
                _change_d(d, order, factor_h)
                n_equal_steps = 0
                lu_ready = False
                continue

            safety = 0.9 * (2 * nmax + 1) / (2 * nmax + n_iter)
            scale = atol + rtol * np.abs(y_new)
            error = _ERROR_CONST[order] * dd
            error_norm = _rms(error / scale)
            if error_norm > 1:
                stats.error_test_failures += 1
                factor_h = max(MIN_FACTOR, safety * error_norm ** (-1.0 / (order + 1)))
                h_abs *= factor_h
                _change_d(d, order, factor_h)
                n_equal_steps = 0
                lu_ready = False
                continue
            if opts.nonneg_policy != "none" and np.any(y_new < -atol):
                stats.negativity_rejections += 1
                h_abs *= 0.5
                _change_d(d, order, 0.5)
                n_equal_steps = 0
                lu_ready = False
                continue
            accepted = True

        stats.steps += 1
        stats.order_history.append(order)
        jac_age += 1
        n_equal_steps += 1
        t = t_new
        d[order + 2] = dd - d[order + 1]
        d[order + 1] = dd
        for i in reversed(range(order + 1)):
            d[i] += d[i + 1]
        # the history's leading row is the corrected solution
        d[0] = y_new

        if n_equal_steps < order + 1:
            continue
        if order > 1:
            error_m_norm = _rms(_ERROR_CONST[order - 1] * d[order] / scale)
        else:
            error_m_norm = np.inf
        if order < max_order:
            error_p_norm = _rms(_ERROR_CONST[order + 1] * d[order + 2] / scale)
        else:
            error_p_norm = np.inf
        norms = np.array([error_m_norm, error_norm, error_p_norm])
        with np.errstate(divide="ignore"):
            factors = norms ** (-1.0 / np.arange(order, order + 3))
        delta = int(np.argmax(factors)) - 1
        order += delta
        factor_h = min(MAX_FACTOR, safety * float(np.max(factors)))
        h_abs *= factor_h
        _change_d(d, order, factor_h)
        n_equal_steps = 0
        lu_ready = False

    y_out = d[0].copy()
    if opts.nonneg_policy == "clamp":
        np.maximum(y_out, 0.0, out=y_out)
    if not keep_history:
        return y_out, stats
    hist = None
    if np.array_equal(y_out, d[0]):
        # undo the clipping of the last step so a resumed run starts at full size
        if clipped and h_wanted > h_abs:
            _change_d(d, order, h_wanted / h_abs)
            h_abs = h_wanted
        hist = BDFHistory(d.copy(), order, h_abs)
    return y_out, stats, hist


def _newton(f, t_new, y_predict, c, psi, lu, scale, tol, max_iter):
    dd = np.zeros_like(y_predict)
    y = y_predict.copy()
    dy_norm_old = None
    converged = False
    k = 0
    for k in range(max_iter):
        fv = f(t_new, y)
        if not np.all(np.isfinite(fv)):
            break
        dy = lu.solve(c * fv - psi - dd)
        dy_norm = _rms(dy / scale)
        rate = None if dy_norm_old is None else dy_norm / dy_norm_old
        if rate is not None and (rate >= 1 or rate ** (max_iter - k) / (1 - rate) * dy_norm > tol):
            break
        y += dy
        dd += dy
        if dy_norm == 0 or (rate is not None and rate / (1 - rate) * dy_norm < tol):
            converged = True
            break
        dy_norm_old = dy_norm
    return converged, k + 1, y, dd


# -- Euler backward iterative reference -------------------------------------


def ebi_reference_solve(production_loss: Callable, y0, dt: float, t_end: float,
                        tol: float = 1e-10, abs_floor: float = 1e-30,
                        max_iter: int = 10_000) -> np.ndarray:
    """Fixed-step backward Euler with the production/loss fixed point.

    ``production_loss(y) -> (P, L)`` with f(y) = P(y) - L(y) y, P, L >= 0.
    Each step iterates y+ = (y + dt P(y+)) / (1 + dt L(y+)) until the
    relative change is below ``tol``.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    y = np.array(y0, dtype=np.float64)
    n_steps = int(math.ceil(t_end / dt - 1e-12)) if t_end > 0 else 0
    t = 0.0
    for _ in range(n_steps):
        h = min(dt, t_end - t)
        guess = y.copy()
        for _ in range(max_iter):
            p, l = production_loss(guess)
            new = (y + h * p) / (1.0 + h * l)
            change = np.abs(new - guess) <= tol * np.abs(new) + abs_floor
            guess = new
            if np.all(change):
                break
        else:
            raise RuntimeError(f"EBI fixed point did not converge at t={t}")
        y = guess
        t += h
    return y


# -- finite-difference oracle -----------------------------------------------


def finite_difference_jacobian(f: Callable, y, floor: float = 1e-20,
                               rel_step: float | None = None) -> np.ndarray:
    """Dense central-difference Jacobian, step max(rel_step |y_i|, floor).

    ``rel_step`` defaults to sqrt(eps); eps**(1/3) balances truncation and
    round-off better for smooth nonlinear f.
    """
    rel = math.sqrt(EPS) if rel_step is None else rel_step
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    f0 = np.asarray(f(y))
    out = np.zeros((f0.size, n))
    for i in range(n):
        h = max(rel * abs(y[i]), floor)
        yp = y.copy()
        ym = y.copy()
        yp[i] += h
        ym[i] -= h
        out[:, i] = (np.asarray(f(yp)) - np.asarray(f(ym))) / (2.0 * h)
    return out
