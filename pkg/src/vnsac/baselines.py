"""Traditional extrapolation baselines.

Both estimate the von Neumann point by extrapolating the Renyi values to
k = 1: Chebyshev-basis interpolation through every point, and unweighted
least-squares polynomial fitting in k. They are the comparison methods the
continuation approach is benchmarked against.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import RenyiDataset


class BaselineMethod(Enum):
    CHEBYSHEV = "chebyshev"
    LEAST_SQUARES = "least_squares"


@dataclass(frozen=True)
class BaselineEstimate:
    method: BaselineMethod
    value: float
    degree: int


def chebyshev_extrapolate(data: RenyiDataset) -> BaselineEstimate:
    """Chebyshev interpolation through all points, evaluated at k = 1.

    Orders are mapped affinely onto [-1, 1]; with degree = n_points - 1 the
    fit reproduces the data exactly, and k = 1 lies outside the mapped
    interval, so this is a true extrapolation.
    """
    if data.k_max < 3:
        raise ValueError("chebyshev extrapolation needs k_max >= 3")
    x = np.asarray(data.orders, dtype=float)
    degree = len(data.orders) - 1
    cheb = np.polynomial.Chebyshev.fit(x, data.values, deg=degree, domain=[x[0], x[-1]])
    return BaselineEstimate(
        method=BaselineMethod.CHEBYSHEV, value=float(cheb(1.0)), degree=degree
    )


def least_squares_poly(data: RenyiDataset, degree: int = 2) -> BaselineEstimate:
    """Unweighted least squares on monomials of k, evaluated at k = 1."""
    n_points = len(data.orders)
    if not 1 <= degree <= data.k_max - 2:
        raise ValueError("degree must satisfy 1 <= degree <= k_max - 2")
    if degree >= n_points:
        raise ValueError("degree must be below the number of data points")
    x = np.asarray(data.orders, dtype=float)
    design = np.vander(x, degree + 1, increasing=True)
    coeffs, _, rank, _ = np.linalg.lstsq(design, data.values, rcond=None)
    if rank < degree + 1:
        raise ValueError("rank-deficient design matrix")
    value = float(np.polynomial.polynomial.polyval(1.0, coeffs))
    return BaselineEstimate(method=BaselineMethod.LEAST_SQUARES, value=value, degree=degree)
