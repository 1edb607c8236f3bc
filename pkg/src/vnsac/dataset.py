"""Renyi dataset container and its JSON document format.

The on-disk document is deliberately plain: integer orders, entropy values
in bits, an optional row-major covariance matrix (bits^2), and a free-form
metadata object carrying at least the seed, scenario, and config hash that
produced it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


@dataclass
class RenyiDataset:
    """Ordered Renyi orders with entropy values and optional covariance."""

    orders: tuple[int, ...]
    values: np.ndarray
    covariance: np.ndarray | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.orders = tuple(int(k) for k in self.orders)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.orders) != self.values.size:
            raise ValueError("orders and values must have equal length")
        if len(self.orders) == 0:
            raise ValueError("dataset must contain at least one order")
        if self.orders[0] != 2:
            raise ValueError("orders must start at 2")
        if any(b <= a for a, b in zip(self.orders, self.orders[1:])):
            raise ValueError("orders must be strictly increasing")
        if self.covariance is not None:
            C = np.asarray(self.covariance, dtype=float)
            n = len(self.orders)
            if C.shape != (n, n):
                raise ValueError("covariance shape does not match number of orders")
            if np.max(np.abs(C - C.T)) > 1e-10:
                raise ValueError("covariance must be symmetric within 1e-10")
            if np.any(C != 0.0) and np.linalg.eigvalsh(C).max() <= 0:
                raise ValueError("covariance has no positive eigenvalue")
            self.covariance = C

    @property
    def k_max(self) -> int:
        return self.orders[-1]

    def has_noise_model(self) -> bool:
        return self.covariance is not None and bool(np.any(self.covariance != 0.0))

    def to_document(self) -> dict[str, Any]:
        return {
            "orders": list(self.orders),
            "values_bits": self.values.tolist(),
            "covariance": None if self.covariance is None else self.covariance.tolist(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_document(cls, doc: dict[str, Any]) -> "RenyiDataset":
        cov = doc.get("covariance")
        return cls(
            orders=tuple(doc["orders"]),
            values=np.asarray(doc["values_bits"], dtype=float),
            covariance=None if cov is None else np.asarray(cov, dtype=float),
            metadata=dict(doc.get("metadata", {})),
        )


def save_dataset(dataset: RenyiDataset, path: str | Path) -> None:
    Path(path).write_text(json.dumps(dataset.to_document(), indent=2, sort_keys=True))


def load_dataset(path: str | Path) -> RenyiDataset:
    return RenyiDataset.from_document(json.loads(Path(path).read_text()))
