"""Model specifications and the named presets of the zoo."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import ClassVar


class SpecError(ValueError):
    pass


def _positive(spec, *names):
    for name in names:
        value = getattr(spec, name)
        if value is None or value <= 0:
            raise SpecError(f"{type(spec).__name__}.{name} must be positive, got {value}")


def _rate(spec, name="learning_rate", allow_zero=False):
    value = getattr(spec, name)
    low_ok = value >= 0 if allow_zero else value > 0
    if not (low_ok and value <= 1):
        raise SpecError(f"{type(spec).__name__}.{name} must be in (0, 1], got {value}")


@dataclass(frozen=True)
class ModelSpec:
    kind: ClassVar[str] = ""
    seed: int = 0

    def to_dict(self) -> dict:
        return {"kind": self.kind, **asdict(self)}

    def with_params(self, **params) -> "ModelSpec":
        return replace(self, **params)


@dataclass(frozen=True)
class OlsSpec(ModelSpec):
    kind: ClassVar[str] = "ols"


@dataclass(frozen=True)
class SgdLinearSpec(ModelSpec):
    """Single linear neuron trained by mini-batch gradient descent."""

    kind: ClassVar[str] = "sgd_linear"
    learning_rate: float = 1e-3
    epochs: int = 200
    batch_size: int = 32

    def __post_init__(self):
        _rate(self, allow_zero=True)
        _positive(self, "epochs", "batch_size")


@dataclass(frozen=True)
class MlpSpec(ModelSpec):
    kind: ClassVar[str] = "mlp"
    hidden: tuple[int, ...] = (4,)
    activation: str = "relu"
    learning_rate: float = 1e-3
    epochs: int = 200
    batch_size: int = 32

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(w) for w in self.hidden))
        if any(w <= 0 for w in self.hidden):
            raise SpecError(f"hidden widths must be positive, got {self.hidden}")
        if self.activation not in ("relu", "linear"):
            raise SpecError(f"unsupported activation {self.activation!r}")
        _rate(self, allow_zero=True)
        _positive(self, "epochs", "batch_size")


@dataclass(frozen=True)
class KnnSpec(ModelSpec):
    kind: ClassVar[str] = "knn"
    k: int = 11
    weighting: str = "distance"
    leaf_size: int = 5

    def __post_init__(self):
        _positive(self, "k", "leaf_size")
        if self.weighting not in ("distance", "uniform"):
            raise SpecError(f"weighting must be 'distance' or 'uniform', got {self.weighting!r}")


@dataclass(frozen=True)
class TreeSpec(ModelSpec):
    kind: ClassVar[str] = "tree"
    max_depth: int | None = None
    min_samples_split: int = 2

    def __post_init__(self):
        if self.max_depth is not None:
            _positive(self, "max_depth")
        if self.min_samples_split < 2:
            raise SpecError("min_samples_split must be at least 2")


@dataclass(frozen=True)
class RandomForestSpec(ModelSpec):
    kind: ClassVar[str] = "random_forest"
    n_trees: int = 70
    max_depth: int = 8
    min_samples_split: int = 2
    bootstrap: bool = True
    max_features: str | int | None = "sqrt"

    def __post_init__(self):
        _positive(self, "n_trees", "max_depth")
        # 1 is accepted and behaves like 2: a single row never splits
        if self.min_samples_split < 1:
            raise SpecError(f"min_samples_split must be at least 1, got {self.min_samples_split}")
        if not (self.max_features in ("sqrt", None) or (isinstance(self.max_features, int) and self.max_features > 0)):
            raise SpecError(f"max_features must be 'sqrt', None or a positive int, got {self.max_features!r}")


@dataclass(frozen=True)
class GradientBoostSpec(ModelSpec):
    kind: ClassVar[str] = "gradient_boost"
    learning_rate: float = 0.05
    max_depth: int = 5
    n_trees: int = 100
    min_samples_split: int = 2

    def __post_init__(self):
        _rate(self)
        _positive(self, "max_depth", "n_trees")
        if self.min_samples_split < 2:
            raise SpecError("min_samples_split must be at least 2")


@dataclass(frozen=True)
class LinearSvrSpec(ModelSpec):
    """Primal linear SVR with squared epsilon-insensitive loss."""

    kind: ClassVar[str] = "linear_svr"
    epsilon: float = 0.07
    C: float = 1.5
    max_iter: int = 7500
    tol: float = 1e-10

    def __post_init__(self):
        if self.epsilon < 0:
            raise SpecError("epsilon must be non-negative")
        _positive(self, "C", "max_iter")


SPEC_TYPES: dict[str, type[ModelSpec]] = {
    cls.kind: cls
    for cls in (OlsSpec, SgdLinearSpec, MlpSpec, KnnSpec, TreeSpec, RandomForestSpec, GradientBoostSpec, LinearSvrSpec)
}


def zoo(seed: int = 0) -> dict[str, ModelSpec]:
    """The named model configurations used in the backtests."""
    return {
        "linear_regression": OlsSpec(seed=seed),
        "dense0": SgdLinearSpec(seed=seed),
        "mlp_4n": MlpSpec(hidden=(4,), seed=seed),
        "mlp_multiple": MlpSpec(hidden=(32, 64, 32), seed=seed),
        "knn": KnnSpec(k=11, weighting="distance", leaf_size=5, seed=seed),
        "random_forest": RandomForestSpec(n_trees=70, max_depth=8, min_samples_split=1, seed=seed),
        "gradient_boost": GradientBoostSpec(learning_rate=0.05, max_depth=5, n_trees=100, seed=seed),
        "linear_svr": LinearSvrSpec(epsilon=0.07, C=1.5, max_iter=7500, seed=seed),
    }


def spec_from_dict(data: dict, seed: int | None = None) -> ModelSpec:
    """Build a spec from ``{"kind": ..., **params}`` or ``{"preset": name, **overrides}``."""
    data = dict(data)
    if "preset" in data:
        name = data.pop("preset")
        presets = zoo()
        if name not in presets:
            raise SpecError(f"unknown model preset {name!r}; choose from {sorted(presets)}")
        base = presets[name]
    else:
        kind = data.pop("kind", None)
        if kind not in SPEC_TYPES:
            raise SpecError(f"unknown model kind {kind!r}; choose from {sorted(SPEC_TYPES)}")
        base = SPEC_TYPES[kind]()
    allowed = {f.name for f in fields(base)}
    unknown = set(data) - allowed
    if unknown:
        raise SpecError(f"{type(base).__name__} has no parameters {sorted(unknown)}")
    if seed is not None and "seed" not in data:
        data["seed"] = seed
    if "hidden" in data:
        data["hidden"] = tuple(data["hidden"])
    return replace(base, **data)
