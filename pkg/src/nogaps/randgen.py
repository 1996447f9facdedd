"""Reproducible sampling: entry distributions, matrix ensembles, sphere vectors.

Every random draw in the package goes through a :class:`SeedStream`, a value
type naming one counter-based Philox stream.  Streams are derived by hashing
``(master_seed, index)`` so Monte Carlo trials can run in any order, or on
any number of workers, and still see the same numbers.

Matrix draws use a fixed order that is part of the file-level contract:
row-major over entries, and for genuinely complex ensembles the real part of
an entry is drawn immediately before its imaginary part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

__all__ = [
    "DISTRIBUTIONS",
    "EntryDistribution",
    "MatrixEnsemble",
    "SeedStream",
    "derive_stream",
    "sample_matrix",
    "sample_unit_sphere",
]

_U64 = 2**64
_SQRT3 = math.sqrt(3.0)

_ALIASES = {
    "standard-gaussian": "standard-gaussian",
    "gaussian": "standard-gaussian",
    "normal": "standard-gaussian",
    "rademacher": "rademacher",
    "symmetric-uniform": "symmetric-uniform",
    "uniform": "symmetric-uniform",
}
DISTRIBUTIONS = ("standard-gaussian", "rademacher", "symmetric-uniform")
FIELDS = ("real", "complex")


def _uniform_subgaussian_bound() -> float:
    # smallest B with P(|X| > t) <= 2 exp(-t^2 / B^2) for X ~ U[-sqrt3, sqrt3]
    t = np.linspace(1e-6, _SQRT3 * (1 - 1e-12), 200_001)
    tail = 1.0 - t / _SQRT3
    return float(np.sqrt(np.max(t**2 / np.log(2.0 / tail))))


_SUBGAUSSIAN_BOUND = {
    # Chernoff: P(|Z| > t) <= 2 exp(-t^2 / 2)
    "standard-gaussian": math.sqrt(2.0),
    # |X| = 1 forces 1 <= 2 exp(-1 / B^2)
    "rademacher": 1.0 / math.sqrt(math.log(2.0)),
    "symmetric-uniform": _uniform_subgaussian_bound(),
}


@dataclass(frozen=True)
class EntryDistribution:
    """Mean-zero, unit-variance real entry law.

    ``kind`` is one of ``standard-gaussian``, ``rademacher`` or
    ``symmetric-uniform`` (uniform on ``[-sqrt(3), sqrt(3)]``); the short
    aliases ``gaussian`` and ``uniform`` are accepted.
    """

    kind: str = "standard-gaussian"

    def __post_init__(self):
        try:
            canonical = _ALIASES[self.kind]
        except KeyError:
            raise ValueError(
                f"unknown distribution {self.kind!r}; expected one of {DISTRIBUTIONS}"
            ) from None
        object.__setattr__(self, "kind", canonical)

    @property
    def subgaussian_bound(self) -> float:
        """The moment ``B`` in ``P(|X| > t) <= 2 exp(-t^2/B^2)``."""
        return _SUBGAUSSIAN_BOUND[self.kind]

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "standard-gaussian":
            return rng.standard_normal(size)
        if self.kind == "rademacher":
            return 2.0 * rng.integers(0, 2, size=size).astype(np.float64) - 1.0
        return rng.uniform(-_SQRT3, _SQRT3, size=size)


@dataclass(frozen=True)
class MatrixEnsemble:
    """An ``rows x cols`` independent-entry ensemble over ``field``.

    Genuinely complex entries are ``xi + 1j * xi'`` with both parts drawn
    independently from ``dist``, so ``E|a_ij|^2 = 2``.
    """

    field: str = "complex"
    rows: int = 1
    cols: int = 1
    dist: EntryDistribution = EntryDistribution()

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ValueError(f"field must be 'real' or 'complex', got {self.field!r}")
        if isinstance(self.dist, str):
            object.__setattr__(self, "dist", EntryDistribution(self.dist))
        for name in ("rows", "cols"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    def with_shape(self, rows: int, cols: int) -> "MatrixEnsemble":
        return replace(self, rows=rows, cols=cols)

    def echo(self) -> dict:
        return {"field": self.field, "dist": self.dist.kind, "rows": self.rows, "cols": self.cols}


@dataclass(frozen=True)
class SeedStream:
    """Identifies one deterministic random stream.

    Calling :meth:`generator` always starts the stream from its beginning, so
    a ``SeedStream`` can be handed around freely without shared state.
    """

    master_seed: int
    stream_index: int

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(seq))


RandomSource = Union[SeedStream, np.random.Generator]


def derive_stream(master_seed: int, trial_index: int) -> SeedStream:
    """Stream for trial ``trial_index`` of a run seeded with ``master_seed``."""
    return SeedStream(master_seed, trial_index)


def _rng(source: RandomSource) -> np.random.Generator:
    if isinstance(source, SeedStream):
        return source.generator()
    if isinstance(source, np.random.Generator):
        return source
    raise TypeError(f"expected SeedStream or numpy Generator, got {type(source).__name__}")


def sample_matrix(ensemble: MatrixEnsemble, stream: RandomSource) -> np.ndarray:
    """Draw one ``complex128`` matrix from ``ensemble``.

    Real ensembles come back with exactly zero imaginary parts.
    """
    rng = _rng(stream)
    N, n = ensemble.rows, ensemble.cols
    if ensemble.field == "real":
        return ensemble.dist.draw(rng, (N, n)).astype(np.complex128)
    parts = ensemble.dist.draw(rng, (N, n, 2))
    A = np.empty((N, n), dtype=np.complex128)
    A.real = parts[..., 0]
    A.imag = parts[..., 1]
    return A


def sample_unit_sphere(n: int, field: str, stream: RandomSource) -> np.ndarray:
    """Uniform unit vector in R^n or C^n via a normalized Gaussian vector."""
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    if field not in FIELDS:
        raise ValueError(f"field must be 'real' or 'complex', got {field!r}")
    rng = _rng(stream)
    if field == "real":
        g = rng.standard_normal(int(n))
    else:
        parts = rng.standard_normal((int(n), 2))
        g = parts[:, 0] + 1j * parts[:, 1]
    return g / np.linalg.norm(g)
