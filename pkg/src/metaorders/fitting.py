"""Damped (Levenberg-Marquardt) nonlinear least squares.

Small self-contained implementation: numeric Jacobian, multiplicative
damping, and the guarantee that an accepted step never increases the
residual sum of squares.  Confidence half-widths are Wald intervals from
the Gauss-Newton covariance s^2 (J^T J)^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FitConvergenceError, InsufficientDataError

__all__ = ["FitResult", "nls_fit", "power_model", "decay_kernel_model"]


@dataclass
class FitResult:
    param_names: list[str]
    estimates: np.ndarray
    wald_half_width: np.ndarray  # 95% half-widths, may be inf when degenerate
    rss: float
    n_points: int
    degenerate: bool = False
    n_iterations: int = 0
    settings: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "params": {n: float(v) for n, v in zip(self.param_names, self.estimates)},
            "half_widths": {
                n: float(w) for n, w in zip(self.param_names, self.wald_half_width)
            },
            "rss": float(self.rss),
            "n_points": int(self.n_points),
            "degenerate": bool(self.degenerate),
            "settings": self.settings,
        }

    def covers(self, true_values) -> bool:
        """True when every true value lies inside its Wald interval."""
        true_values = np.asarray(true_values, dtype=float)
        return bool(np.all(np.abs(true_values - self.estimates) <= self.wald_half_width))


def power_model(x, params):
    """y = a * x^b."""
    a, b = params
    return a * np.power(x, b)


def decay_kernel_model(z, params):
    """y = g0 * (z^(1-b) - (z-1)^(1-b)) for rescaled time z >= 1.

    The kernel equals g0 exactly at z = 1 for any b < 1, so g0 reads off
    the normalised peak impact.
    """
    g0, b = params
    zm = np.maximum(np.asarray(z, dtype=float) - 1.0, 0.0)
    head = np.power(z, 1.0 - b)
    tail = np.where(zm > 0, np.power(np.where(zm > 0, zm, 1.0), 1.0 - b), 0.0)
    return g0 * (head - tail)


def _jacobian(model, x, params, step: float = 1e-7) -> np.ndarray:
    p = np.asarray(params, dtype=float)
    cols = []
    for j in range(p.size):
        h = step * max(1.0, abs(p[j]))
        up, dn = p.copy(), p.copy()
        up[j] += h
        dn[j] -= h
        cols.append((model(x, up) - model(x, dn)) / (2.0 * h))
    return np.column_stack(cols)


def nls_fit(
    model,
    x,
    y,
    init,
    param_names: list[str] | None = None,
    max_iter: int = 200,
    tol: float = 1e-12,
) -> FitResult:
    """Fit ``model(x, params)`` to (x, y) by damped least squares.

    ``model`` maps (x array, parameter vector) to predictions.  Steps are
    accepted only when they lower the RSS; the damping factor grows on
    rejection and shrinks on acceptance.  Raises FitConvergenceError with
    the last iterate if max_iter is exhausted, and flags the result as
    degenerate (infinite half-widths) when J^T J is singular at the
    optimum.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    params = np.array(init, dtype=float)
    n, p = y.size, params.size
    if param_names is None:
        param_names = [f"p{i}" for i in range(p)]
    if n < 2 * p:
        raise InsufficientDataError(f"need at least {2 * p} points, got {n}")

    def rss_of(q):
        r = y - model(x, q)
        r = np.where(np.isfinite(r), r, 1e150)
        return float(r @ r)

    rss = rss_of(params)
    lam = 1e-3
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        J = _jacobian(model, x, params)
        J = np.where(np.isfinite(J), J, 0.0)
        r = y - model(x, params)
        r = np.where(np.isfinite(r), r, 0.0)
        jtj = J.T @ J
        g = J.T @ r
        if np.max(np.abs(g)) < tol * max(1.0, rss):
            converged = True
            break
        stepped = False
        for _ in range(50):
            damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-30))
            try:
                delta = np.linalg.solve(damped, g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            candidate = params + delta
            new_rss = rss_of(candidate)
            if new_rss <= rss:  # accepted steps never increase the residual
                improvement = rss - new_rss
                params, rss = candidate, new_rss
                lam = max(lam * 0.3, 1e-12)
                stepped = True
                if improvement <= tol * max(rss, 1e-300) and np.linalg.norm(delta) <= 1e-10 * (
                    1.0 + np.linalg.norm(params)
                ):
                    converged = True
                break
            lam *= 10.0
        if converged:
            break
        if not stepped:
            # no downhill step found at any damping: treat as stationary
            converged = True
            break

    if not converged:
        raise FitConvergenceError(
            f"no convergence after {max_iter} iterations", params, rss
        )

    J = _jacobian(model, x, params)
    J = np.where(np.isfinite(J), J, 0.0)
    jtj = J.T @ J
    dof = max(n - p, 1)
    s2 = rss / dof
    degenerate = False
    try:
        cov = s2 * np.linalg.inv(jtj)
        variances = np.diag(cov).copy()
        if np.any(variances < 0) or not np.all(np.isfinite(variances)):
            raise np.linalg.LinAlgError
        # guard against numerically singular J^T J that inv() silently accepts
        if np.linalg.cond(jtj) > 1e14:
            raise np.linalg.LinAlgError
        half = 1.96 * np.sqrt(variances)
    except np.linalg.LinAlgError:
        degenerate = True
        half = np.full(p, np.inf)

    return FitResult(
        param_names=list(param_names),
        estimates=params,
        wald_half_width=half,
        rss=rss,
        n_points=n,
        degenerate=degenerate,
        n_iterations=iterations,
    )
