"""Exhaustive hyperparameter grid search scored by validation MAE."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, fields
from typing import Mapping, Sequence

import pandas as pd

from ..features import FeatureMatrix
from ..metrics import mae
from .base import ModelError
from .specs import SPEC_TYPES, ModelSpec, SpecError

logger = logging.getLogger(__name__)


class BudgetExceededError(ModelError):
    pass


@dataclass(frozen=True)
class SearchResult:
    best: ModelSpec
    best_mae: float
    table: pd.DataFrame


def grid_search(
    base: ModelSpec | str,
    grids: Mapping[str, Sequence],
    train: FeatureMatrix,
    validation: FeatureMatrix,
    budget: int = 100,
) -> SearchResult:
    """Fit every point of the Cartesian product of ``grids`` and keep the lowest validation MAE.

    ``base`` supplies the model family and the values of parameters not being
    searched.  Ties go to the earliest point in product order.  Points whose
    fit fails are scored NaN and never selected.
    """
    from . import fit  # local import: models/__init__ imports this module

    if isinstance(base, str):
        if base not in SPEC_TYPES:
            raise SpecError(f"unknown model kind {base!r}")
        base = SPEC_TYPES[base]()
    if not grids or any(len(v) == 0 for v in grids.values()):
        raise SpecError("every searched parameter needs a non-empty value list")
    allowed = {f.name for f in fields(base)}
    unknown = set(grids) - allowed
    if unknown:
        raise SpecError(f"{type(base).__name__} has no parameters {sorted(unknown)}")
    size = math.prod(len(v) for v in grids.values())
    if size > budget:
        raise BudgetExceededError(f"grid has {size} points, budget is {budget}")
    names = list(grids)
    rows = []
    best, best_score = None, math.inf
    for values in itertools.product(*(grids[n] for n in names)):
        params = dict(zip(names, values))
        if "hidden" in params:
            params["hidden"] = tuple(params["hidden"])
        spec = base.with_params(**params)
        try:
            score = mae(validation.y, fit(spec, train).predict(validation))
        except ModelError as exc:
            logger.warning("grid point %s failed: %s", params, exc)
            score = math.nan
        rows.append({**params, "mae": score})
        if score < best_score:
            best, best_score = spec, score
    if best is None:
        raise ModelError("every grid point failed")
    return SearchResult(best, best_score, pd.DataFrame(rows))
