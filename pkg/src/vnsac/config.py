"""Versioned defaults and environment knobs.

The default conformal parameters were selected by a benchmark sweep over a
small (epsilon, eta) grid on a fixed random-state corpus; the winning pair
and the sweep summary live in ``data/default_params.json`` so the choice is
reproducible and auditable. ``scripts/tune_conformal_defaults.py``
regenerates the file.
"""

from __future__ import annotations

import json
import os
from functools import lru_cache
from importlib import resources

WORKERS_ENV = "VNSAC_WORKERS"
BACKEND_ENV = "VNSAC_BACKEND"


@lru_cache(maxsize=1)
def _default_params_doc() -> dict:
    with resources.files("vnsac.data").joinpath("default_params.json").open() as fh:
        return json.load(fh)


def default_conformal_params():
    from .conformal import ConformalParams

    doc = _default_params_doc()
    return ConformalParams(epsilon=doc["epsilon"], eta=doc["eta"])


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError as exc:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, workers)
