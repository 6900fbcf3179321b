"""Shared test helpers: hypothesis profile and design builders."""

from __future__ import annotations

import numpy as np
from hypothesis import HealthCheck, settings

from landsel.preprocess import ProcessedDesign
from landsel.space import SearchSpace, VariableSpec

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=50,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


def unit_space(width: int) -> SearchSpace:
    """A continuous search space with ``width`` variables on [0, 1]."""
    return SearchSpace(
        variables=tuple(
            VariableSpec(name=f"x{j}", kind="continuous", lower=0.0, upper=1.0)
            for j in range(width)
        )
    )


def make_processed(X, y, encoding: str = "none") -> ProcessedDesign:
    """Wrap a unit-cube matrix and normalized objective as a ProcessedDesign."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    names = tuple(f"x{j}" for j in range(X.shape[1]))
    return ProcessedDesign(
        matrix=X,
        objective=np.asarray(y, dtype=float),
        column_names=names,
        column_map={name: (j,) for j, name in enumerate(names)},
        encoding=encoding,
        space=unit_space(X.shape[1]),
        provenance={"stages": ["handmade"]},
        decision_normalized=True,
    )
