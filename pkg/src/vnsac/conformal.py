"""Conformal transport of the Renyi-order half-line onto the unit disk.

A semi-infinite analyticity strip of half-width ``epsilon`` centered on the
real axis (to the right of z = 1) is mapped to the unit disk in two steps:
a cosh map to the upper half plane followed by a Moebius map with free
parameter ``eta``. The point z = 1, where the von Neumann entropy lives,
lands on the boundary point w = -1; real z > 1 land on the real interval
(-1, 1), ordered.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

# Above this, sinh((z-1)/eps) overflows; switch to the exp(-u) form.
_SINH_SAFE = 30.0


@dataclass(frozen=True)
class ConformalParams:
    """Strip half-width ``epsilon`` and Moebius parameter ``eta``, both > 0."""

    epsilon: float
    eta: float

    def __post_init__(self):
        if not (self.epsilon > 0 and self.eta > 0):
            raise ValueError("epsilon and eta must both be positive")


class W0Rule(Enum):
    """How the subtraction point w0 is placed among the mapped data points."""

    FIRST_POINT = "first_point"
    MIDPOINT = "midpoint"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class DiskPoints:
    """Disk images of the integer Renyi orders plus the subtraction point.

    The von Neumann target sits at w = -1. All images must be strictly
    inside (-1, 1) and strictly increasing with the order; configurations
    that saturate to 1.0 in double precision are rejected.
    """

    orders: tuple[int, ...]
    w: np.ndarray
    w0: float
    w_target: float = -1.0

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "orders", tuple(int(k) for k in self.orders))
        if len(self.orders) != w.size:
            raise ValueError("orders and w must have equal length")
        if np.any(np.abs(w) >= 1.0):
            raise ValueError(
                "mapped points saturate the unit interval; increase epsilon "
                "or reduce the largest order"
            )
        if np.any(np.diff(w) <= 0):
            raise ValueError("mapped points must be strictly increasing with the order")
        if not -1.0 < self.w0 < 1.0:
            raise ValueError("subtraction point w0 must lie in (-1, 1)")

    def index_of(self, order: int) -> int:
        return self.orders.index(order)


def map_to_disk(z: complex, params: ConformalParams) -> complex:
    """Image of z under the two-step strip-to-disk map.

    cosh((z-1)/eps + i pi/2) reduces to i sinh((z-1)/eps), so the Moebius
    step collapses to w = (sinh(u) - eta) / (sinh(u) + eta) with
    u = (z-1)/eps. For large Re u the sinh form overflows and an
    exp(-u)-based rewrite of the same expression is used.
    """
    u = (complex(z) - 1.0) / params.epsilon
    eta = params.eta
    if u.real < _SINH_SAFE:
        s = np.sinh(u)
        denom = s + eta
        if denom == 0:
            raise ZeroDivisionError("Moebius pole hit: sinh((z-1)/eps) = -eta")
        w = (s - eta) / denom
    else:
        # w = 1 - 2 eta / (sinh u + eta), with sinh u + eta written in
        # units of exp(u)/2 to avoid overflow.
        e = np.exp(-u)
        w = 1.0 - 4.0 * eta * e / (1.0 - e * e + 2.0 * eta * e)
    return complex(w)


def disk_gap(z: float, params: ConformalParams) -> float:
    """Accurate 1 - w(z) for real z >= 1; positive whenever representable.

    The plain map rounds to w = 1.0 once sinh((z-1)/eps) exceeds ~1e16/eta,
    so strict bounds and monotonicity are asserted through the gap.
    """
    if z < 1.0:
        raise ValueError("gap is defined for real z >= 1")
    u = (z - 1.0) / params.epsilon
    eta = params.eta
    if u < _SINH_SAFE:
        return 2.0 * eta / (np.sinh(u) + eta)
    e = np.exp(-u)
    return 4.0 * eta * e / (1.0 - e * e + 2.0 * eta * e)


def map_data_points(
    k_max: int,
    params: ConformalParams,
    w0_rule: W0Rule = W0Rule.FIRST_POINT,
    w0_value: float | None = None,
    orders: list[int] | None = None,
) -> DiskPoints:
    """Disk images of the integer orders 2..k_max plus the subtraction point.

    ``orders`` overrides the default contiguous range (estimators pass the
    surviving orders of a dataset). The subtraction point follows the rule:
    the first data point's image, the midpoint of the first and last, or an
    explicit value in (-1, 1).
    """
    if orders is None:
        if k_max < 3:
            raise ValueError("k_max must be >= 3 (at least two data points)")
        orders = list(range(2, k_max + 1))
    if len(orders) < 2:
        raise ValueError("need at least two Renyi orders")
    w = np.array([map_to_disk(float(k), params).real for k in orders])
    if w0_rule is W0Rule.FIRST_POINT:
        w0 = float(w[0])
    elif w0_rule is W0Rule.MIDPOINT:
        w0 = float(0.5 * (w[0] + w[-1]))
    elif w0_rule is W0Rule.EXPLICIT:
        if w0_value is None:
            raise ValueError("explicit w0 rule requires a value")
        if not -1.0 < w0_value < 1.0:
            raise ValueError("explicit w0 must lie in (-1, 1)")
        w0 = float(w0_value)
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unknown w0 rule {w0_rule}")
    return DiskPoints(orders=tuple(orders), w=w, w0=w0)
