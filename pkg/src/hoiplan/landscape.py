"""2-D loss landscape slices around a parameter vector along block-normalized random directions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateDirection, InvalidInput


@dataclass(frozen=True)
class ParamVector:
    """Flat parameters plus the shapes of the tensors they were concatenated from."""

    values: np.ndarray
    manifest: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        man = tuple(tuple(int(d) for d in s) for s in self.manifest)
        if not man:
            raise InvalidInput("manifest is empty")
        if sum(int(np.prod(s)) for s in man) != v.size:
            raise InvalidInput("manifest sizes do not sum to the vector length")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "manifest", man)

    @classmethod
    def from_tensors(cls, tensors: Sequence) -> "ParamVector":
        arrs = [np.asarray(t, dtype=float) for t in tensors]
        return cls(np.concatenate([a.reshape(-1) for a in arrs]), tuple(a.shape for a in arrs))

    def blocks(self) -> list[slice]:
        out, start = [], 0
        for s in self.manifest:
            n = int(np.prod(s))
            out.append(slice(start, start + n))
            start += n
        return out

    def tensors(self) -> list[np.ndarray]:
        return [self.values[b].reshape(s) for b, s in zip(self.blocks(), self.manifest)]

    def like(self, values) -> "ParamVector":
        return ParamVector(values, self.manifest)

    def __add__(self, other):
        return self.like(self.values + _vals(other))

    def __sub__(self, other):
        return self.like(self.values - _vals(other))

    def __rmul__(self, c):
        return self.like(c * self.values)

    def dot(self, other) -> float:
        return float(self.values @ _vals(other))

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def _vals(x):
    return x.values if isinstance(x, ParamVector) else np.asarray(x, dtype=float)


def sample_direction(w0: ParamVector, rng: np.random.Generator) -> ParamVector:
    """Gaussian direction with each block rescaled to the norm of the matching block of ``w0``."""
    d = rng.standard_normal(w0.values.size)
    for b in w0.blocks():
        target = np.linalg.norm(w0.values[b])
        n = np.linalg.norm(d[b])
        d[b] = 0.0 if target == 0 or n == 0 else d[b] * (target / n)
    return w0.like(d)


def orthogonalize(d_y_raw: ParamVector, d_x: ParamVector, tol: float = 1e-10) -> ParamVector:
    """Remove the ``d_x`` component from ``d_y_raw`` (no renormalization)."""
    xx = d_x.dot(d_x)
    if xx == 0:
        raise DegenerateDirection("d_x is zero")
    d_y = d_y_raw - (d_y_raw.dot(d_x) / xx) * d_x
    if d_y.norm() <= tol * max(d_y_raw.norm(), 1e-300):
        raise DegenerateDirection("d_y is parallel to d_x")
    return d_y


@dataclass
class LandscapeGrid:
    r: float
    steps: int
    alphas: np.ndarray
    values: np.ndarray  # values[i, j] at (alphas[i], alphas[j])

    def rows(self):
        for i, a in enumerate(self.alphas):
            for j, b in enumerate(self.alphas):
                yield float(a), float(b), float(self.values[i, j])

    def to_csv(self) -> str:
        lines = ["alpha,beta,loss"]
        lines += [f"{a!r},{b!r},{'nan' if np.isnan(v) else repr(v)}" for a, b, v in self.rows()]
        return "\n".join(lines) + "\n"


def grid_coefficients(r: float, steps: int) -> np.ndarray:
    """Uniform points on [-r, r] that are exactly antisymmetric about the center."""
    k = np.arange(steps)
    return r * (2 * k - (steps - 1)) / (steps - 1)


def evaluate_grid(
    w0: ParamVector, d_x: ParamVector, d_y: ParamVector, r: float, steps: int, loss: Callable[[ParamVector], float]
) -> LandscapeGrid:
    if steps < 2:
        raise InvalidInput("steps must be at least 2")
    if not r > 0:
        raise InvalidInput("range must be positive")
    alphas = grid_coefficients(r, steps)
    vals = np.empty((steps, steps))
    for i, a in enumerate(alphas):
        for j, b in enumerate(alphas):
            try:
                v = float(loss(w0.like(w0.values + a * d_x.values + b * d_y.values)))
            except (ArithmeticError, ValueError):
                v = float("nan")
            vals[i, j] = v if np.isfinite(v) else np.nan
    return LandscapeGrid(r, steps, alphas, vals)


# --- built-in functionals -------------------------------------------------


def quadratic_loss(center: ParamVector):
    c = center.values.copy()
    return lambda w: float(np.sum((w.values - c) ** 2))


def rosenbrock_loss(w: ParamVector) -> float:
    x = w.values
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1 - x[:-1]) ** 2))


def builtin_loss(name: str, w0: ParamVector):
    """``quadratic`` (centered on w0), ``rosenbrock`` or ``constant:<c>``."""
    if name == "quadratic":
        return quadratic_loss(w0)
    if name == "rosenbrock":
        return rosenbrock_loss
    if name.startswith("constant:"):
        try:
            c = float(name.split(":", 1)[1])
        except ValueError as exc:
            raise InvalidInput(f"bad constant in {name!r}") from exc
        return lambda w: c
    raise InvalidInput(f"unknown loss functional {name!r}")


def landscape(w0: ParamVector, loss, r: float = 1.0, steps: int = 51, seed: int = 0) -> LandscapeGrid:
    """Sample two block-normalized directions, orthogonalize, and evaluate the grid."""
    rng = np.random.default_rng(seed)
    d_x = sample_direction(w0, rng)
    d_y = orthogonalize(sample_direction(w0, rng), d_x)
    return evaluate_grid(w0, d_x, d_y, r, steps, loss)
