"""Finite-M Parisi functional by a scalar radial recursion.

Each z_p has i.i.d. N(0, Delta_p) coordinates with Delta_p = xi'(q_{p+1}) - xi'(q_p).
Because the law of z_p is rotation invariant and the terminal quantity

    X_{k+1} = log int_{S_M} exp(eps . (z_0 + ... + z_k)) dlambda_M(eps) = Lambda_M(|z_0 + ... + z_k|)

depends on the partial sums only through their norm, every intermediate X_p
is a function G_p of r = |z_0 + ... + z_{p-1}| alone. One level of the
recursion is then a one-dimensional integral against the transition density of
R = |s + z_p| given |s| = r, i.e. R^2 / Delta_p is noncentral chi-square with M
degrees of freedom and noncentrality r^2 / Delta_p:

    G_p(r) = (1/m_p) log E[exp(m_p G_{p+1}(R)) | r],   G_{k+1} = Lambda_M.

The G_p are tabulated on a radial grid and interpolated with monotone cubics.
All integrals are done in log space with a two-pass trapezoid rule whose fine
pass is placed on the numerical support of the (tilted) integrand.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import gammaln, ive, logsumexp

from .errors import AccuracyWarning, CostGuardError, DomainError
from .mixture import Mixture
from .rsb import FunctionalOrderParameter, l1_distance

M_LIMIT = 1e-10
LOG_DROP = 46.0
MAX_LEVELS = 3


@dataclass(frozen=True)
class FiniteMConfig:
    """Discretization of the radial recursion.

    ``kernel_nodes`` is the fine-pass node count of each transition integral,
    ``chi_nodes`` the node count of the coordinate quadrature behind Lambda_M.
    """

    M: int
    r_grid_size: int = 384
    r_max_sigmas: float = 6.0
    kernel_nodes: int = 128
    chi_nodes: int = 256
    max_levels: int = MAX_LEVELS
    estimate_error: bool = True
    warn_threshold: float = 1e-3

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise DomainError("M must be an integer >= 1")
        if min(self.r_grid_size, self.kernel_nodes, self.chi_nodes) < 8:
            raise DomainError("node counts must be >= 8")
        if self.r_max_sigmas < 3:
            raise DomainError("r_max_sigmas must be >= 3")

    def doubled(self) -> "FiniteMConfig":
        return replace(
            self,
            r_grid_size=2 * self.r_grid_size,
            kernel_nodes=2 * self.kernel_nodes,
            chi_nodes=2 * self.chi_nodes,
            estimate_error=False,
        )


@dataclass
class FiniteMResult:
    """``x0`` is X_0^M / M, so that ``pm = x0 - theta_term`` exactly."""

    x0: float
    pm: float
    theta_term: float
    per_level_grids: list[dict] = field(default_factory=list)
    error_estimate: float = 0.0


def _log_cosh(w):
    a = np.abs(w)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def _log_trapezoid(phi, lo, hi, n_coarse, n_fine, drop=LOG_DROP):
    """log of int_lo^hi exp(phi(x)) dx for a batch of integrands.

    ``phi`` maps an array of shape (B, n) to log-integrand values of the same
    shape; ``lo`` and ``hi`` have shape (B,). A coarse pass locates the region
    where phi is within ``drop`` of its maximum, the fine pass integrates there.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    t = np.linspace(0.0, 1.0, n_coarse)
    pts = lo[:, None] + (hi - lo)[:, None] * t
    v = phi(pts)
    vmax = np.max(v, axis=1)
    keep = v >= (vmax - drop)[:, None]
    first = np.argmax(keep, axis=1)
    last = n_coarse - 1 - np.argmax(keep[:, ::-1], axis=1)
    rows = np.arange(len(lo))
    a = pts[rows, np.maximum(first - 1, 0)]
    b = pts[rows, np.minimum(last + 1, n_coarse - 1)]
    s = np.linspace(0.0, 1.0, n_fine)
    fine = a[:, None] + (b - a)[:, None] * s
    h = (b - a) / (n_fine - 1)
    logw = np.zeros(n_fine)
    logw[0] = logw[-1] = math.log(0.5)
    with np.errstate(divide="ignore"):
        out = logsumexp(phi(fine) + logw, axis=1) + np.log(h)
    return out


def spherical_logmgf(M: int, r, nodes: int = 256):
    """Lambda_M(r) = log int_{S_M} exp(eps . s) dlambda_M(eps) for |s| = r.

    A single coordinate of the uniform point on the radius-sqrt(M) sphere has
    density proportional to (1 - t^2/M)^((M-3)/2) on [-sqrt(M), sqrt(M)]. With
    t = sqrt(M) tanh(w) the integrand becomes exp(c tanh w - (M-1) log cosh w),
    c = sqrt(M) r, which is smooth on the real line and is integrated by the
    two-pass trapezoid rule.
    """
    if int(M) != M or M < 1:
        raise DomainError("M must be an integer >= 1")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or not np.all(np.isfinite(r_arr)):
        raise DomainError("r must be finite and nonnegative")
    flat = r_arr.reshape(-1)
    if M == 1:
        # S_1 = {-1, +1} with equal weights
        out = flat + np.log1p(np.exp(-2.0 * flat)) - math.log(2.0)
    else:
        out = np.zeros_like(flat)
        pos = flat > 0
        if np.any(pos):
            c = math.sqrt(M) * flat[pos]
            kappa = M - 1.0
            # mode of the w-integrand solves c x^2 + kappa x - c = 0 with x = tanh w
            x_star = 2.0 * c / (kappa + np.sqrt(kappa * kappa + 4.0 * c * c))
            w_star = np.arctanh(np.minimum(x_star, 1.0 - 1e-16))
            curv = (2.0 * c * x_star + kappa) * (1.0 - x_star * x_star)
            sigma = 1.0 / np.sqrt(curv)
            half = np.maximum(14.0 * sigma, (LOG_DROP + 8.0) / kappa + 2.0)
            lo, hi = w_star - half, w_star + half

            def phi(w, c=c):
                return c[:, None] * np.tanh(w) - kappa * _log_cosh(w)

            log_int = _log_trapezoid(phi, lo, hi, max(nodes, 64), nodes)
            # int_{-1}^{1} (1 - x^2)^((M-3)/2) dx = B(1/2, (M-1)/2)
            log_norm = 0.5 * math.log(math.pi) + gammaln(0.5 * (M - 1)) - gammaln(0.5 * M)
            out[pos] = log_int - log_norm
    out = out.reshape(r_arr.shape)
    return float(out) if out.ndim == 0 else out


def log_transition_density(R, r, delta: float, M: int):
    """log density of |s + z| at R given |s| = r, z ~ N(0, delta I_M).

    Broadcasts over ``R`` and ``r``.
    """
    R = np.maximum(np.asarray(R, dtype=float), 1e-300)
    r = np.asarray(r, dtype=float)
    nu = 0.5 * M - 1.0
    central = (
        (M - 1) * np.log(R)
        - R * R / (2.0 * delta)
        - (nu * math.log(2.0) + gammaln(0.5 * M) + 0.5 * M * math.log(delta))
    )
    r_safe = np.maximum(r, 1e-300)
    z = r_safe * R / delta
    with np.errstate(divide="ignore"):
        noncentral = (
            np.log(R / delta) - (R - r_safe) ** 2 / (2.0 * delta) + nu * np.log(R / r_safe) + np.log(ive(nu, z))
        )
    return np.where(r < 1e-8 * math.sqrt(delta), central, noncentral)


class _Radial:
    """Monotone cubic interpolant on the radial grid, linear beyond its end."""

    def __init__(self, grid: np.ndarray, values: np.ndarray):
        self.grid = grid
        self.values = values
        self._p = PchipInterpolator(grid, values, extrapolate=False)
        self._end = grid[-1]
        self._end_val = values[-1]
        self._end_slope = float(self._p.derivative()(grid[-1]))

    def __call__(self, R):
        R = np.asarray(R, dtype=float)
        inside = R <= self._end
        out = np.where(inside, 0.0, self._end_val + self._end_slope * (R - self._end))
        vals = self._p(np.where(inside, R, self._end))
        return np.where(inside, vals, out)


def _radial_grid(r_max: float, n: int, kappa: float = 1.5) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)
    return r_max * np.sinh(kappa * t) / math.sinh(kappa)


def _level_step(G_next: _Radial, grid: np.ndarray, m: float, delta: float, M: int, n_fine: int) -> np.ndarray:
    """Tabulate G_p on ``grid`` from G_{p+1} for one level (m_p, Delta_p)."""
    sd = math.sqrt(delta)
    R0 = np.sqrt(grid * grid + M * delta)
    lo = np.maximum(R0 - 12.0 * sd, 0.0)
    shift = m * delta * math.sqrt(M)
    hi = R0 + shift + 12.0 * sd
    n_coarse = int(max(96, 4 * (24 + shift / sd)))

    def log_f(R):
        return log_transition_density(R, grid[:, None], delta, M)

    log_mass = _log_trapezoid(log_f, lo, hi, n_coarse, n_fine)
    if m < M_LIMIT:
        # plain expectation E[G_{p+1}(R) | r]; G may change sign so integrate G f directly
        def weighted(sign):
            def phi(R):
                g = G_next(R)
                with np.errstate(divide="ignore"):
                    return log_f(R) + np.log(np.maximum(sign * g, 0.0))

            return phi

        pos = _log_trapezoid(weighted(1.0), lo, hi, n_coarse, n_fine)
        neg = _log_trapezoid(weighted(-1.0), lo, hi, n_coarse, n_fine)
        return np.exp(pos - log_mass) - np.exp(neg - log_mass)

    def phi(R):
        return m * G_next(R) + log_f(R)

    return (_log_trapezoid(phi, lo, hi, n_coarse, n_fine) - log_mass) / m


def _x0(mix: Mixture, f: FunctionalOrderParameter, cfg: FiniteMConfig):
    """X_0^M and per-level diagnostics."""
    M = cfg.M
    xp = [mix.xi(q, 1) for q in f.q]
    deltas = [max(xp[p + 1] - xp[p], 0.0) for p in range(f.k + 1)]
    total = xp[-1]
    if total <= 0.0:
        return 0.0, [{"level": p, "m": f.m[p], "delta": 0.0} for p in range(f.k, -1, -1)]
    r_max = cfg.r_max_sigmas * math.sqrt(total) * (math.sqrt(M) + cfg.r_max_sigmas)
    grid = _radial_grid(r_max, cfg.r_grid_size)
    values = spherical_logmgf(M, grid, cfg.chi_nodes)
    diagnostics = []
    for p in range(f.k, -1, -1):
        delta = deltas[p]
        if delta > 0.0:
            values = _level_step(_Radial(grid, values), grid, f.m[p], delta, M, cfg.kernel_nodes)
        diagnostics.append(
            {
                "level": p,
                "m": f.m[p],
                "delta": delta,
                "r_max": r_max,
                "G_at_0": float(values[0]),
                "G_at_r_max": float(values[-1]),
            }
        )
    return float(values[0]), diagnostics


def _theta_term(mix: Mixture, f: FunctionalOrderParameter) -> float:
    th = [mix.theta(q) for q in f.q]
    return 0.5 * math.fsum(f.m[p] * (th[p + 1] - th[p]) for p in range(1, f.k + 1))


def pm_value(mix: Mixture, f: FunctionalOrderParameter, cfg: FiniteMConfig) -> FiniteMResult:
    """Finite-M functional P_M = X_0^M / M - 1/2 sum_p m_p (theta(q_{p+1}) - theta(q_p))."""
    f.checked()
    if f.k > cfg.max_levels:
        raise CostGuardError(f"k = {f.k} exceeds the finite-M cost guard k <= {cfg.max_levels}")
    raw, diagnostics = _x0(mix, f, cfg)
    x0 = raw / cfg.M
    theta_term = _theta_term(mix, f)
    error = 0.0
    if cfg.estimate_error:
        fine_raw, _ = _x0(mix, f, cfg.doubled())
        # the doubled run is only used to size the error bar
        error = 2.0 * abs(fine_raw - raw) / cfg.M + 1e-12 * (1.0 + abs(x0))
        if error > cfg.warn_threshold:
            warnings.warn(
                f"grid refinement moved P_M by {error / 2:.3g} (M={cfg.M}); consider a finer FiniteMConfig",
                AccuracyWarning,
                stacklevel=2,
            )
    return FiniteMResult(x0=x0, pm=x0 - theta_term, theta_term=theta_term, per_level_grids=diagnostics, error_estimate=error)


def lipschitz_gap(mix: Mixture, f1: FunctionalOrderParameter, f2: FunctionalOrderParameter, cfg: FiniteMConfig):
    """(|P_M(f1) - P_M(f2)|, xi'(1)/2 * d(f1, f2), combined error estimate)."""
    a = pm_value(mix, f1, cfg)
    b = pm_value(mix, f2, cfg)
    lhs = abs(a.pm - b.pm)
    rhs = 0.5 * mix.xi(1.0, 1) * l1_distance(f1, f2)
    return lhs, rhs, a.error_estimate + b.error_estimate
