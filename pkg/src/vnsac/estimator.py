"""Von Neumann entropy estimation by stabilized analytic continuation.

The Renyi function divided by (z - 1) acquires a pole at z = 1 whose
residue vanishes exactly when the variational parameter alpha equals the
von Neumann entropy. On the unit disk, the minimal boundary norm of an
analytic continuation through the data is a quadratic form in the kernel
inverse; minimizing it over alpha yields the estimate.

Two paths are implemented:

* ``estimate_noiseless``: exact data, subtraction pinned to the first data
  point, alpha from a closed-form ratio of quadratic forms.
* ``estimate_noisy``: data with covariance; the continuation is fit to the
  best point inside the chi^2 ellipsoid around the measured discrepancy
  values, with the subtraction value treated as a free parameter. The
  inner constrained problem reduces to a one-dimensional root solve for a
  Lagrange multiplier; the outer minimization over alpha is a bracketed
  scan plus local refinement.

Both paths shift the data so the first value is zero before solving and
shift the estimate back afterwards; estimates are therefore exactly
covariant under adding a constant to every input entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq, minimize_scalar

from .config import default_conformal_params
from .conformal import ConformalParams, DiskPoints, W0Rule, map_data_points
from .dataset import RenyiDataset
from .errors import (
    DegenerateGeometryError,
    NumericalError,
    SingularMatrixError,
)
from .kernel import KernelMethod, kernel_matrix_dilog, kernel_matrix_quadrature

# Covariance eigenvalues below this fraction of the largest are raised to
# it; jackknife covariances from few batches are often rank deficient.
COV_FLOOR_FRACTION = 1e-12

_SCAN_POINTS = 61
_REFINE_XATOL = 1e-10
_MAX_WIDENINGS = 4


@dataclass(frozen=True)
class SolverDiagnostics:
    """Inner-solver state at the reported minimum."""

    lam: float | None = None
    y0: float | None = None
    chi2_achieved: float | None = None
    iterations: int = 0
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class SacEstimate:
    """Continuation estimate with the alpha scan and solver diagnostics."""

    alpha_min: float
    delta2_min: float
    alpha_scan: np.ndarray  # shape (n, 2): columns alpha, delta2_min(alpha)
    solver: SolverDiagnostics

    def __post_init__(self):
        if self.delta2_min < 0:
            raise ValueError("minimal norm must be non-negative")

    @property
    def flags(self) -> tuple[str, ...]:
        return self.solver.flags


@dataclass(frozen=True)
class ConstrainedSolution:
    """Solution of one fixed-alpha constrained minimization."""

    lam: float
    y0: float
    p: np.ndarray
    chi2_achieved: float
    delta2: float
    inactive: bool
    iterations: int
    monotone: bool


def discrepancy_values(values: np.ndarray, orders, alpha: float) -> np.ndarray:
    """d_i = S_i/(z_i - 1) - alpha/(z_i - 1) at the integer orders."""
    z = np.asarray(orders, dtype=float)
    if np.any(z < 2):
        raise ValueError("orders must be >= 2")
    S = np.asarray(values, dtype=float)
    return (S - alpha) / (z - 1.0)


def chi2(y: np.ndarray, d_alpha: np.ndarray, cov_prime: np.ndarray) -> float:
    """Quadratic misfit (y - d)^T C'^{-1} (y - d) for a positive-definite C'."""
    y = np.asarray(y, dtype=float)
    d = np.asarray(d_alpha, dtype=float)
    C = np.asarray(cov_prime, dtype=float)
    if y.shape != d.shape or C.shape != (y.size, y.size):
        raise ValueError("shape mismatch between residual and covariance")
    try:
        factor = sla.cho_factor(C, lower=True)
    except np.linalg.LinAlgError as exc:
        evals = np.linalg.eigvalsh(C)
        cond = float(evals.max() / max(evals.min(), np.finfo(float).tiny))
        raise SingularMatrixError(
            "discrepancy covariance singular after regularization", condition_number=cond
        ) from exc
    r = y - d
    return float(r @ sla.cho_solve(factor, r))


def _chi2_of_lambda(
    lam: float, m: np.ndarray, nvec: np.ndarray, sigma: np.ndarray
) -> tuple[float, float, np.ndarray]:
    """chi^2, subtraction value and residual coordinates at multiplier ``lam``."""
    damp = 1.0 + lam * sigma
    nn = np.sum(nvec * nvec / damp)
    if nn <= 0.0:
        y0 = 0.0  # the constant direction has no component here
    else:
        y0 = float(np.sum(nvec * m / damp) / nn)
    p = (m - y0 * nvec) / damp
    return float(np.sum(p * p)), y0, p


def solve_constrained(
    m: np.ndarray, nvec: np.ndarray, sigma: np.ndarray, chi2_0: float
) -> ConstrainedSolution:
    """Minimize the continuation norm over the chi^2 <= chi2_0 ellipsoid.

    Inputs are the data and ones vectors projected onto the eigenbasis of
    the scaled kernel (eigenvalues ``sigma`` > 0). The multiplier solves
    sum_r p_r(lambda)^2 = chi2_0 with p_r = (m_r - y0 n_r)/(1 + lambda
    sigma_r) and y0 fixed by orthogonality of the residual to the constant
    direction. chi^2(lambda) is checked for monotone decrease; if the check
    fails, a dense lambda grid locates the bracket instead.
    """
    m = np.asarray(m, dtype=float)
    nvec = np.asarray(nvec, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("kernel eigenvalues must be positive")
    if chi2_0 <= 0:
        raise ValueError("chi2 budget must be positive")

    chi0, y0, p = _chi2_of_lambda(0.0, m, nvec, sigma)
    if chi0 <= chi2_0:
        return ConstrainedSolution(
            lam=0.0, y0=y0, p=p, chi2_achieved=chi0, delta2=0.0,
            inactive=True, iterations=0, monotone=True,
        )

    hi = 1.0
    iterations = 0
    while _chi2_of_lambda(hi, m, nvec, sigma)[0] > chi2_0:
        hi *= 2.0
        iterations += 1
        if hi > 1e30:
            raise NumericalError("lambda root not bracketable below 1e30")

    samples = np.linspace(0.0, hi, 20)
    chis = np.array([_chi2_of_lambda(s, m, nvec, sigma)[0] for s in samples])
    monotone = bool(np.all(np.diff(chis) <= 1e-9 * np.maximum(chis[:-1], 1.0)))

    lo = 0.0
    if not monotone:
        # Locate the first downward crossing on a dense grid.
        grid = np.concatenate([[0.0], np.geomspace(hi * 1e-12, hi, 400)])
        vals = np.array([_chi2_of_lambda(g, m, nvec, sigma)[0] for g in grid])
        above = vals > chi2_0
        crossing = np.nonzero(above[:-1] & ~above[1:])[0]
        if crossing.size == 0:
            raise NumericalError("no chi^2 crossing found on dense lambda grid")
        lo, hi = float(grid[crossing[0]]), float(grid[crossing[0] + 1])

    lam = brentq(
        lambda l: _chi2_of_lambda(l, m, nvec, sigma)[0] - chi2_0,
        lo, hi, xtol=1e-30, rtol=1e-10, maxiter=200,
    )
    chi_ach, y0, p = _chi2_of_lambda(lam, m, nvec, sigma)
    delta2 = float(lam * lam * np.sum(sigma * p * p))
    return ConstrainedSolution(
        lam=float(lam), y0=y0, p=p, chi2_achieved=chi_ach, delta2=delta2,
        inactive=False, iterations=iterations, monotone=monotone,
    )


def _build_kernel(points: DiskPoints, exclude: set[int], method: KernelMethod) -> np.ndarray:
    if method is KernelMethod.QUADRATURE:
        return kernel_matrix_quadrature(points, exclude).matrix
    return kernel_matrix_dilog(points, exclude).matrix


def _scaled_kernel_basis(A: np.ndarray, cov_prime: np.ndarray):
    """Eigenbasis machinery for the constrained solve.

    Floors the covariance spectrum, rotates the kernel into it, rescales by
    the noise widths, and diagonalizes. Returns a projector onto that final
    basis together with the scaled-kernel eigenvalues.
    """
    eps2, V = np.linalg.eigh(0.5 * (cov_prime + cov_prime.T))
    top = float(eps2.max())
    if top <= 0:
        raise ValueError("covariance has no positive eigenvalue")
    eps2 = np.maximum(eps2, COV_FLOOR_FRACTION * top)
    eps = np.sqrt(eps2)
    B = V.T @ A @ V
    M = B / np.outer(eps, eps)
    sigma, F = np.linalg.eigh(0.5 * (M + M.T))
    if sigma.min() <= 0:
        raise SingularMatrixError(
            "scaled kernel not positive definite",
            condition_number=float(sigma.max() / abs(sigma.min() or np.finfo(float).tiny)),
        )

    def project(x: np.ndarray) -> np.ndarray:
        return F.T @ ((V.T @ x) / eps)

    return project, sigma


def constrained_min_norm(
    A: np.ndarray, cov_prime: np.ndarray, d: np.ndarray, chi2_0: float
) -> ConstrainedSolution:
    """Minimal continuation norm over the chi^2 ellipsoid around ``d``.

    Original-coordinate entry point: minimizes (y - y0*1)^T A^{-1} (y - y0*1)
    over y within (y - d)^T C'^{-1} (y - d) <= chi2_0 and free y0.
    """
    project, sigma = _scaled_kernel_basis(A, cov_prime)
    d = np.asarray(d, dtype=float)
    return solve_constrained(project(d), project(np.ones_like(d)), sigma, chi2_0)


def estimate_noiseless(
    data: RenyiDataset,
    params: ConformalParams | None = None,
    kernel_method: KernelMethod = KernelMethod.DILOGARITHM,
    scan_points: int = 41,
) -> SacEstimate:
    """Closed-form continuation estimate for exact Renyi inputs.

    The subtraction point is the first data point's disk image, so the
    first order drops out and the minimal norm is a quadratic form over
    the remaining orders; its exact minimizer in alpha is a ratio of two
    quadratic forms in the kernel inverse. Any covariance on the dataset
    is ignored.
    """
    if len(data.orders) < 2:
        raise ValueError("noiseless estimation needs at least two Renyi orders")
    params = params or default_conformal_params()
    flags: list[str] = []
    if data.covariance is not None:
        flags.append("covariance_ignored")

    z = np.asarray(data.orders, dtype=float)
    shift = float(data.values[0])
    T = data.values - shift  # canonical frame: first value is 0

    points = map_data_points(
        k_max=data.orders[-1], params=params, w0_rule=W0Rule.FIRST_POINT,
        orders=list(data.orders),
    )
    first = data.orders[0]
    A = _build_kernel(points, exclude={first}, method=kernel_method)
    cond = np.linalg.cond(A)
    if cond > 1e14:
        raise SingularMatrixError("kernel matrix numerically singular", condition_number=cond)
    factor = sla.cho_factor(A, lower=True)

    zm1 = z - 1.0
    u = T[1:] / zm1[1:] - T[0] / zm1[0]
    v = 1.0 / zm1[1:] - 1.0 / zm1[0]
    Av = sla.cho_solve(factor, v)
    denom = float(v @ Av)
    if denom < 1e-14:
        raise DegenerateGeometryError(
            f"denominator quadratic form {denom:.3e} below 1e-14"
        )
    alpha_c = float(u @ Av) / denom

    def delta2_at(ac: float) -> float:
        r = u - ac * v
        return float(r @ sla.cho_solve(factor, r))

    half_width = max(1.0, 0.5 * abs(alpha_c))
    scan_alphas = np.linspace(alpha_c - half_width, alpha_c + half_width, scan_points)
    scan = np.column_stack([scan_alphas + shift, [delta2_at(a) for a in scan_alphas]])

    return SacEstimate(
        alpha_min=alpha_c + shift,
        delta2_min=delta2_at(alpha_c),
        alpha_scan=scan,
        solver=SolverDiagnostics(flags=tuple(flags)),
    )


@dataclass
class _NoisyProblem:
    """Fixed pieces of the noisy solve; only the alpha projection varies."""

    m_data: np.ndarray   # projection of S_i/(z_i - 1), canonical frame
    m_alpha: np.ndarray  # projection of 1/(z_i - 1)
    nvec: np.ndarray     # projection of the ones vector
    sigma: np.ndarray    # eigenvalues of the scaled kernel
    chi2_0: float

    def solve(self, alpha_c: float) -> ConstrainedSolution:
        return solve_constrained(
            self.m_data - alpha_c * self.m_alpha, self.nvec, self.sigma, self.chi2_0
        )

    def delta2(self, alpha_c: float) -> float:
        return self.solve(alpha_c).delta2

    def gls_alpha(self) -> float:
        """Generalized-least-squares alpha when the constraint is inactive.

        With the ellipsoid containing a constant-discrepancy point, the
        norm minimum is 0 on a whole alpha interval; the reported center
        is the weighted fit of the discrepancy data to alpha-dependence
        plus a constant.
        """
        X = np.column_stack([self.m_alpha, self.nvec])
        beta, *_ = np.linalg.lstsq(X, self.m_data, rcond=None)
        return float(beta[0])


def _prepare_noisy(
    data: RenyiDataset,
    params: ConformalParams,
    chi2_0: float,
    w0_rule: W0Rule,
    w0_value: float | None,
    kernel_method: KernelMethod,
) -> tuple[_NoisyProblem, float]:
    z = np.asarray(data.orders, dtype=float)
    zm1 = z - 1.0
    shift = float(data.values[0])
    T = data.values - shift

    Cp = data.covariance / np.outer(zm1, zm1)

    points = map_data_points(
        k_max=data.orders[-1], params=params, w0_rule=w0_rule, w0_value=w0_value,
        orders=list(data.orders),
    )
    if np.min(np.abs(points.w - points.w0)) < 1e-12:
        raise ValueError(
            "subtraction point coincides with a data point; choose another w0"
        )
    A = _build_kernel(points, exclude=set(), method=kernel_method)
    project, sigma = _scaled_kernel_basis(A, Cp)

    problem = _NoisyProblem(
        m_data=project(T / zm1),
        m_alpha=project(1.0 / zm1),
        nvec=project(np.ones_like(z)),
        sigma=sigma,
        chi2_0=chi2_0,
    )
    return problem, shift


def estimate_noisy(
    data: RenyiDataset,
    params: ConformalParams | None = None,
    chi2_0: float | None = None,
    w0_rule: W0Rule = W0Rule.MIDPOINT,
    w0_value: float | None = None,
    kernel_method: KernelMethod = KernelMethod.DILOGARITHM,
) -> SacEstimate:
    """Constrained continuation estimate for Renyi data with covariance.

    The chi^2 budget defaults to the largest order in the dataset. A
    dataset with an exactly zero covariance is routed to the noiseless
    closed form.
    """
    if data.covariance is None:
        raise ValueError("noisy estimation requires a covariance matrix")
    if not data.has_noise_model():
        est = estimate_noiseless(data, params=params, kernel_method=kernel_method)
        diag = SolverDiagnostics(
            lam=est.solver.lam, y0=est.solver.y0, chi2_achieved=est.solver.chi2_achieved,
            iterations=est.solver.iterations,
            flags=est.solver.flags + ("zero_covariance_noiseless_route",),
        )
        return SacEstimate(est.alpha_min, est.delta2_min, est.alpha_scan, diag)
    if len(data.orders) < 2:
        raise ValueError("noisy estimation needs at least two Renyi orders")
    params = params or default_conformal_params()
    if chi2_0 is None:
        chi2_0 = float(data.k_max)

    problem, shift = _prepare_noisy(data, params, chi2_0, w0_rule, w0_value, kernel_method)
    flags: list[str] = []

    # Scan bracket in the shifted frame: generously covers [0, S_2 + 2]
    # and anything below zero the data might support.
    lo = min(-shift, float(data.values[-1] - shift) - 1.0)
    hi = 2.0
    evaluations = 0

    for widening in range(_MAX_WIDENINGS + 1):
        alphas = np.linspace(lo, hi, _SCAN_POINTS)
        solutions = [problem.solve(a) for a in alphas]
        evaluations += len(alphas)
        deltas = np.array([s.delta2 for s in solutions])
        idx = int(np.argmin(deltas))
        if any(s.inactive for s in solutions):
            return _degenerate_estimate(problem, shift, alphas, deltas, flags, evaluations)
        if 0 < idx < len(alphas) - 1:
            break
        span = hi - lo
        lo, hi = lo - span, hi + span
        flags.append("widened_bracket")
    else:
        flags.append("scan_minimum_at_boundary")

    interior = (deltas[1:-1] < deltas[:-2]) & (deltas[1:-1] < deltas[2:])
    if int(np.count_nonzero(interior)) > 1:
        flags.append("multimodal_scan")

    bracket_lo = alphas[max(idx - 1, 0)]
    bracket_hi = alphas[min(idx + 1, len(alphas) - 1)]
    result = minimize_scalar(
        problem.delta2, bounds=(bracket_lo, bracket_hi), method="bounded",
        options={"xatol": _REFINE_XATOL},
    )
    alpha_c = float(result.x)
    evaluations += int(result.nfev)
    # Parabolic-vertex polish: function comparisons cannot localize a smooth
    # minimum below ~sqrt(eps), but the vertex of a 3-point parabola can.
    h = 1e-5 * max(1.0, abs(alpha_c))
    f0 = problem.delta2(alpha_c)
    f_plus = problem.delta2(alpha_c + h)
    f_minus = problem.delta2(alpha_c - h)
    evaluations += 3
    curvature = f_plus - 2.0 * f0 + f_minus
    if curvature > 0:
        step = -0.5 * h * (f_plus - f_minus) / curvature
        if abs(step) < 2.0 * h:
            alpha_c += step
    best = problem.solve(alpha_c)
    if best.inactive:
        return _degenerate_estimate(problem, shift, alphas, deltas, flags, evaluations)
    if not best.monotone:
        flags.append("chi2_lambda_not_monotone")

    scan = np.column_stack([alphas + shift, deltas])
    return SacEstimate(
        alpha_min=alpha_c + shift,
        delta2_min=best.delta2,
        alpha_scan=scan,
        solver=SolverDiagnostics(
            lam=best.lam, y0=best.y0, chi2_achieved=best.chi2_achieved,
            iterations=evaluations, flags=tuple(flags),
        ),
    )


def _degenerate_estimate(
    problem: _NoisyProblem,
    shift: float,
    alphas: np.ndarray,
    deltas: np.ndarray,
    flags: list[str],
    evaluations: int,
) -> SacEstimate:
    """Constraint inactive somewhere: the norm minimum is a flat zero
    valley, so report the weighted-fit center instead of an arbitrary
    point of it."""
    alpha_c = problem.gls_alpha()
    sol = problem.solve(alpha_c)
    scan = np.column_stack([alphas + shift, deltas])
    return SacEstimate(
        alpha_min=alpha_c + shift,
        delta2_min=sol.delta2,
        alpha_scan=scan,
        solver=SolverDiagnostics(
            lam=sol.lam, y0=sol.y0, chi2_achieved=sol.chi2_achieved,
            iterations=evaluations,
            flags=tuple(flags) + ("chi2_fit_degenerate",),
        ),
    )


def estimate(data: RenyiDataset, **kwargs) -> SacEstimate:
    """Route to the noisy or noiseless path by covariance presence."""
    if data.has_noise_model():
        return estimate_noisy(data, **kwargs)
    kwargs.pop("chi2_0", None)
    kwargs.pop("w0_rule", None)
    kwargs.pop("w0_value", None)
    return estimate_noiseless(data, **kwargs)
