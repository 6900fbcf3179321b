"""Search-space definitions, benchmark problems, and objective transforms.

A search space is an ordered list of typed variables (continuous, integer,
categorical), optionally hierarchical: a variable may carry an activation
condition on an integer or categorical parent, and is considered inactive in
rows where the parent does not take one of the activating values.

Built-in benchmark problems are purely continuous, live on [-5, 5]^D, and come
in seeded instances: instance ``iid`` deterministically draws an input shift
and a strictly monotone objective transform a*y + b, so that every instance of
a function shares its structure but not its raw objective values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

VARIABLE_KINDS = ("continuous", "integer", "categorical")

BUILTIN_FUNCTIONS = ("sphere", "ellipsoid", "rastrigin", "rosenbrock", "linear_slope")
BUILTIN_LOWER = -5.0
BUILTIN_UPPER = 5.0

_SHIFT_RANGE = (-4.0, 4.0)
_SCALE_RANGE = (0.1, 10.0)       # log-uniform
_OFFSET_RANGE = (-1000.0, 1000.0)


@dataclass(frozen=True)
class Condition:
    """Activation rule: the owning variable is active only in rows where the
    parent variable takes one of ``values``."""

    parent: str
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if not self.parent:
            raise ValueError("condition parent name must be non-empty")
        if len(self.values) == 0:
            raise ValueError("condition needs at least one activating value")
        if len(set(self.values)) != len(self.values):
            raise ValueError("condition values must be distinct")


@dataclass(frozen=True)
class VariableSpec:
    """One typed decision variable.

    Continuous and integer variables carry box bounds; categorical variables
    carry a non-empty tuple of distinct category labels.  ``condition`` makes
    the variable hierarchical.
    """

    name: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    categories: tuple | None = None
    condition: Condition | None = None

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise ValueError("variable name must be a non-empty string")
        if self.kind not in VARIABLE_KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == "categorical":
            if self.lower is not None or self.upper is not None:
                raise ValueError(f"{self.name}: categorical variables take no bounds")
            if not self.categories:
                raise ValueError(f"{self.name}: categories must be non-empty")
            cats = tuple(self.categories)
            if len(set(cats)) != len(cats):
                raise ValueError(f"{self.name}: categories must be pairwise distinct")
            object.__setattr__(self, "categories", cats)
        else:
            if self.categories is not None:
                raise ValueError(f"{self.name}: only categorical variables take categories")
            if self.lower is None or self.upper is None:
                raise ValueError(f"{self.name}: bounds are required")
            if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
                raise ValueError(f"{self.name}: bounds must be finite")
            if self.kind == "continuous":
                if not self.lower < self.upper:
                    raise ValueError(f"{self.name}: continuous bounds need lower < upper")
                object.__setattr__(self, "lower", float(self.lower))
                object.__setattr__(self, "upper", float(self.upper))
            else:
                if self.lower != int(self.lower) or self.upper != int(self.upper):
                    raise ValueError(f"{self.name}: integer bounds must be integral")
                if not self.lower <= self.upper:
                    raise ValueError(f"{self.name}: integer bounds need lower <= upper")
                object.__setattr__(self, "lower", int(self.lower))
                object.__setattr__(self, "upper", int(self.upper))


@dataclass(frozen=True)
class SearchSpace:
    """An ordered, validated collection of variables.

    Validation covers name uniqueness, condition parents (must exist, must be
    integer or categorical, activating values must be admissible for the
    parent), and acyclicity of the condition graph.
    """

    variables: tuple[VariableSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if len(self.variables) == 0:
            raise ValueError("a search space needs at least one variable")
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        by_name = {v.name: v for v in self.variables}
        for v in self.variables:
            cond = v.condition
            if cond is None:
                continue
            if cond.parent not in by_name:
                raise ValueError(f"{v.name}: condition parent {cond.parent!r} does not exist")
            if cond.parent == v.name:
                raise ValueError(f"{v.name}: variable cannot condition on itself")
            parent = by_name[cond.parent]
            if parent.kind == "continuous":
                raise ValueError(
                    f"{v.name}: conditions are only supported on integer or categorical parents"
                )
            if parent.kind == "categorical":
                bad = [x for x in cond.values if x not in parent.categories]
                if bad:
                    raise ValueError(f"{v.name}: activating values {bad!r} not in parent categories")
            else:
                for x in cond.values:
                    if not isinstance(x, (int, np.integer)) or isinstance(x, bool):
                        raise ValueError(f"{v.name}: integer parent needs integer activating values")
                    if not parent.lower <= x <= parent.upper:
                        raise ValueError(f"{v.name}: activating value {x} outside parent bounds")
        # acyclicity of the parent graph
        state: dict[str, int] = {}

        def visit(name: str) -> None:
            if state.get(name) == 1:
                raise ValueError(f"condition cycle involving {name!r}")
            if state.get(name) == 2:
                return
            state[name] = 1
            cond = by_name[name].condition
            if cond is not None:
                visit(cond.parent)
            state[name] = 2

        for name in names:
            visit(name)

    @property
    def dimension(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def __getitem__(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def is_numeric(self) -> bool:
        """True when the space has no categorical variables."""
        return all(v.kind != "categorical" for v in self.variables)


@dataclass(frozen=True)
class ObjectiveTransform:
    """Strictly monotone affine map y -> scale * y + shift, scale > 0."""

    scale: float
    shift: float

    def __post_init__(self):
        if not (math.isfinite(self.scale) and math.isfinite(self.shift)):
            raise ValueError("transform parameters must be finite")
        if self.scale <= 0:
            raise ValueError("transform scale must be strictly positive")


def apply_transform(transform: ObjectiveTransform, values: Sequence) -> np.ndarray:
    """Apply ``scale * y + shift`` elementwise, exactly.

    Returns an object array of exact rationals rather than rounded floats:
    every float is an exact rational, so the transform loses no information,
    and the min-max normalization downstream (which also computes its ratio
    exactly) cancels the transform bit-for-bit.  Convert with
    ``np.asarray(out, dtype=float)`` when approximate values suffice.
    """
    a = Fraction(transform.scale)
    b = Fraction(transform.shift)
    out = np.empty(len(values), dtype=object)
    for i, v in enumerate(values):
        out[i] = a * _as_fraction(v) + b
    return out


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, float, np.integer)):
        return Fraction(v)
    if hasattr(v, "as_integer_ratio"):
        return Fraction(*v.as_integer_ratio())
    return Fraction(v)


@dataclass(frozen=True, eq=False)
class Problem:
    """An objective over a search space.

    ``objective`` maps a row of cell values (a tuple in variable order) to a
    real number.  ``fid``/``iid`` identify built-in benchmark instances;
    ``shift`` and ``transform`` expose the seeded instance parameters for
    built-ins and are None for user problems.
    """

    space: SearchSpace
    objective: Callable[[tuple], float]
    fid: str | None = None
    iid: int | None = None
    known_optimum: float | None = None
    shift: np.ndarray | None = None
    transform: ObjectiveTransform | None = None

    def __post_init__(self):
        if self.shift is not None:
            arr = np.asarray(self.shift, dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, "shift", arr)


def _sphere(z: np.ndarray) -> float:
    return float(np.dot(z, z))


def _ellipsoid(z: np.ndarray) -> float:
    d = z.size
    if d == 1:
        return float(z[0] * z[0])
    weights = 10.0 ** (6.0 * np.arange(d) / (d - 1))
    return float(np.sum(weights * z * z))


def _rastrigin(z: np.ndarray) -> float:
    return float(10.0 * (z.size - np.sum(np.cos(2.0 * np.pi * z))) + np.dot(z, z))


def _rosenbrock(z: np.ndarray) -> float:
    # classic sum over adjacent pairs; constant zero in one dimension
    return float(np.sum(100.0 * (z[:-1] ** 2 - z[1:]) ** 2 + (z[:-1] - 1.0) ** 2))


def _linear_slope(z: np.ndarray) -> float:
    return float(np.sum(z))


_BASE_FUNCTIONS = {
    "sphere": _sphere,
    "ellipsoid": _ellipsoid,
    "rastrigin": _rastrigin,
    "rosenbrock": _rosenbrock,
    "linear_slope": _linear_slope,
}


def builtin_space(dimension: int) -> SearchSpace:
    """The [-5, 5]^D continuous box shared by all built-in problems."""
    if dimension < 1:
        raise ValueError("dimension must be positive")
    return SearchSpace(
        tuple(
            VariableSpec(f"x{i}", "continuous", lower=BUILTIN_LOWER, upper=BUILTIN_UPPER)
            for i in range(dimension)
        )
    )


def builtin_problem(fid: str, iid: int, dimension: int) -> Problem:
    """Construct a seeded instance of a built-in benchmark function.

    Instance 0 is the canonical function (zero shift, identity transform).
    For iid >= 1, a PCG64 generator seeded from SeedSequence([fid_index, iid])
    draws, in this order: an input shift uniform on [-4, 4]^D, the transform
    scale log-uniform on [0.1, 10], and the transform offset uniform on
    [-1000, 1000].  The objective is scale * f(x - shift) + offset.  The same
    (fid, iid, dimension) triple reproduces the same instance on every run
    and platform.
    """
    if fid not in _BASE_FUNCTIONS:
        raise ValueError(f"unknown builtin function {fid!r}; choose from {BUILTIN_FUNCTIONS}")
    if dimension < 1:
        raise ValueError("dimension must be positive")
    if iid < 0:
        raise ValueError("instance id must be non-negative")
    space = builtin_space(dimension)
    if iid == 0:
        shift = np.zeros(dimension)
        transform = ObjectiveTransform(1.0, 0.0)
    else:
        seq = np.random.SeedSequence([BUILTIN_FUNCTIONS.index(fid), iid])
        rng = np.random.Generator(np.random.PCG64(seq))
        shift = rng.uniform(_SHIFT_RANGE[0], _SHIFT_RANGE[1], size=dimension)
        log_a = rng.uniform(math.log10(_SCALE_RANGE[0]), math.log10(_SCALE_RANGE[1]))
        transform = ObjectiveTransform(
            float(10.0 ** log_a), float(rng.uniform(_OFFSET_RANGE[0], _OFFSET_RANGE[1]))
        )
    base = _BASE_FUNCTIONS[fid]
    shift_arr = shift.copy()
    shift_arr.setflags(write=False)
    a, b = transform.scale, transform.shift

    def objective(row: tuple) -> float:
        x = np.asarray(row, dtype=float)
        if x.shape != (dimension,):
            raise ValueError(f"expected a row of {dimension} values, got shape {x.shape}")
        return a * base(x - shift_arr) + b

    if fid == "rosenbrock":
        argmin = shift_arr + 1.0
    elif fid == "linear_slope":
        argmin = np.full(dimension, BUILTIN_LOWER)
    else:
        argmin = shift_arr
    known_optimum = objective(tuple(argmin))
    return Problem(
        space=space,
        objective=objective,
        fid=fid,
        iid=iid,
        known_optimum=known_optimum,
        shift=shift_arr,
        transform=transform,
    )


# ── JSON serialization ────────────────────────────────────────────────────────

def space_to_obj(space: SearchSpace) -> list[dict]:
    out = []
    for v in space.variables:
        obj: dict = {"name": v.name, "kind": v.kind}
        if v.kind == "categorical":
            obj["categories"] = list(v.categories)
        else:
            obj["lower"] = v.lower
            obj["upper"] = v.upper
        if v.condition is not None:
            obj["condition"] = {"parent": v.condition.parent, "values": list(v.condition.values)}
        out.append(obj)
    return out


def space_from_obj(obj: Sequence[dict]) -> SearchSpace:
    if not isinstance(obj, (list, tuple)):
        raise ValueError("space document must be an array of variable objects")
    variables = []
    for entry in obj:
        if not isinstance(entry, dict):
            raise ValueError("each variable must be an object")
        known = {"name", "kind", "lower", "upper", "categories", "condition"}
        unknown = set(entry) - known
        if unknown:
            raise ValueError(f"unknown variable keys {sorted(unknown)}")
        cond = None
        if entry.get("condition") is not None:
            c = entry["condition"]
            if not isinstance(c, dict) or set(c) - {"parent", "values"}:
                raise ValueError("condition must be an object with keys parent, values")
            cond = Condition(parent=c.get("parent", ""), values=tuple(c.get("values", ())))
        cats = entry.get("categories")
        variables.append(
            VariableSpec(
                name=entry.get("name", ""),
                kind=entry.get("kind", ""),
                lower=entry.get("lower"),
                upper=entry.get("upper"),
                categories=tuple(cats) if cats is not None else None,
                condition=cond,
            )
        )
    return SearchSpace(tuple(variables))


def space_to_json(space: SearchSpace) -> str:
    return json.dumps(space_to_obj(space), indent=2)


def space_from_json(text: str) -> SearchSpace:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"invalid space JSON: {e}") from e
    return space_from_obj(obj)
