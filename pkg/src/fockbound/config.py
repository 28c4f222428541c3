"""Run configuration for the command-line driver."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError, ValidationError
from .words import Weights

_FIELDS = ("n", "depth", "weights", "lambda_order", "probe_lambda_order", "word_bound",
           "eigen_tol", "conv_tol", "svd_tol", "gap_tol", "identity_tol", "product_tol", "max_iter",
           "seed", "basis", "outputs")


@dataclass
class RunConfig:
    """Resolved configuration.  Every report echoes ``to_dict()``.

    ``lambda_order`` is the root-of-unity grid for the product and vacuum
    identity suites, ``probe_lambda_order`` the (smaller) grid for the
    commutant probe and the conditional expectation.  ``basis`` optionally
    replaces the probe's grid basis by a list of x-spec strings.
    """

    n: int = 2
    depth: int = 8
    weights: object = "uniform"
    lambda_order: int = 8
    probe_lambda_order: int = 4
    word_bound: int = 2
    eigen_tol: float = 1e-10
    conv_tol: float = 1e-10
    svd_tol: float = 1e-8
    gap_tol: float = 1e-6
    identity_tol: float = 1e-12
    product_tol: float = 1e-9
    max_iter: int = 32
    seed: int = 0
    basis: list | None = None
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("n", "depth", "lambda_order", "probe_lambda_order", "word_bound",
                     "max_iter", "seed"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.word_bound < 0:
            raise ConfigError(f"word_bound must be >= 0, got {self.word_bound}")
        if self.depth < self.word_bound + 2:
            raise ConfigError(f"depth {self.depth} < word_bound + 2 = {self.word_bound + 2}")
        if self.lambda_order < 1 or self.probe_lambda_order < 1:
            raise ConfigError("lambda orders must be >= 1")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {self.seed}")
        for name in ("eigen_tol", "conv_tol", "svd_tol", "gap_tol", "identity_tol", "product_tol"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        try:
            self.weights_obj()
        except ValidationError as exc:
            raise ConfigError(f"invalid weights: {exc}") from exc
        if self.basis is not None and (not isinstance(self.basis, list) or not self.basis
                                       or not all(isinstance(b, str) for b in self.basis)):
            raise ConfigError("basis must be a nonempty list of x-spec strings")
        if not isinstance(self.outputs, dict):
            raise ConfigError("outputs must be an object")

    def weights_obj(self) -> Weights:
        if self.weights == "uniform":
            return Weights.uniform(self.n)
        if not isinstance(self.weights, (list, tuple)):
            raise ValidationError(f"weights must be 'uniform' or a list, got {self.weights!r}")
        if len(self.weights) != self.n:
            raise ValidationError(f"{len(self.weights)} weights for n = {self.n}")
        vals = []
        for v in self.weights:
            if isinstance(v, str):
                try:
                    v = Fraction(v)
                except (ValueError, ZeroDivisionError) as exc:
                    raise ValidationError(f"bad weight {v!r}") from exc
            elif isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValidationError(f"bad weight {v!r}")
            vals.append(v)
        return Weights.of(vals)

    def to_dict(self) -> dict:
        d = asdict(self)
        if isinstance(d["weights"], tuple):
            d["weights"] = list(d["weights"])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(data) - set(_FIELDS))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)
