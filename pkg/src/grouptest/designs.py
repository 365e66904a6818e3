"""Test design constructors: near-constant tests-per-item, Bernoulli, individual.

All constructors are deterministic given their parameters and the supplied
random generator, and produce dual-consistent :class:`~grouptest.model.TestDesign`
values with set semantics (repeated placements collapse).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .model import TestDesign, load_design

LN2 = math.log(2.0)

#: Bernoulli density that makes a test positive with probability close to 1/2.
DEFAULT_BERNOULLI_DENSITY = LN2


def tests_per_item(T: int, k: float) -> int:
    """Per-item placement count L = max(1, floor(T ln 2 / k)).

    The clamp to 1 keeps degenerate budgets usable; in the intended regime
    L is large and the clamp is inactive.
    """
    if T < 1:
        raise InvalidParameterError(f"test count must be >= 1, got {T}")
    if k < 1:
        raise InvalidParameterError(f"defective scale must be >= 1, got {k}")
    return max(1, int(T * LN2 / k))


def near_constant_design(n: int, T: int, k: float,
                         rng: np.random.Generator) -> TestDesign:
    """Place each item in L = max(1, floor(T ln 2 / k)) tests drawn uniformly
    with replacement.

    Colliding draws collapse, so an item ends up in between 1 and L distinct
    tests.
    """
    if n < 1:
        raise InvalidParameterError(f"item count must be >= 1, got {n}")
    L = tests_per_item(T, k)
    draws = rng.integers(0, T, size=(n, L))
    items = np.repeat(np.arange(n, dtype=np.int64), L)
    return TestDesign._from_incidence_arrays(n, T, items, draws.ravel())


def bernoulli_design(n: int, T: int, k: float, nu: float = DEFAULT_BERNOULLI_DENSITY,
                     rng: np.random.Generator | None = None) -> TestDesign:
    """Set each of the T*n incidences independently with probability nu/k."""
    if n < 1:
        raise InvalidParameterError(f"item count must be >= 1, got {n}")
    if T < 0:
        raise InvalidParameterError(f"test count must be >= 0, got {T}")
    if k <= 0 or nu <= 0 or nu / k > 1.0:
        raise InvalidParameterError(
            f"inclusion probability nu/k must lie in (0, 1], got nu={nu}, k={k}")
    if rng is None:
        raise InvalidParameterError("bernoulli_design requires a random generator")
    mask = rng.random((T, n)) < nu / k
    tests, items = np.nonzero(mask)
    return TestDesign._from_incidence_arrays(n, T, items, tests)


def individual_design(n: int) -> TestDesign:
    """One singleton test per item (T = n identity incidence)."""
    if n < 1:
        raise InvalidParameterError(f"item count must be >= 1, got {n}")
    idx = np.arange(n, dtype=np.int64)
    return TestDesign._from_incidence_arrays(n, n, idx, idx)


@dataclass(frozen=True)
class DesignSpec:
    """Declarative design choice used by experiment configs and the CLI.

    kind is one of "ncc" (near-constant tests-per-item), "bernoulli",
    "individual", or "file".  k drives L for ncc and the inclusion
    probability nu/k for bernoulli; path is the matrix file for "file".
    """

    kind: str
    k: float | None = None
    nu: float = DEFAULT_BERNOULLI_DENSITY
    path: str | None = None

    _KINDS = ("ncc", "bernoulli", "individual", "file")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise InvalidParameterError(
                f"design kind must be one of {self._KINDS}, got {self.kind!r}")
        if self.kind in ("ncc", "bernoulli") and (self.k is None or self.k < 1):
            raise InvalidParameterError(
                f"{self.kind} design needs a defective scale k >= 1, got {self.k}")
        if self.kind == "file" and not self.path:
            raise InvalidParameterError("file design needs a path")

    @classmethod
    def from_string(cls, text: str, k: float | None = None,
                    nu: float = DEFAULT_BERNOULLI_DENSITY) -> "DesignSpec":
        """Parse "ncc", "bernoulli", "individual" or "file:PATH"."""
        if text.startswith("file:"):
            return cls("file", path=text[5:])
        return cls(text, k=k, nu=nu)

    @property
    def label(self) -> str:
        """Stable one-token description for report rows."""
        if self.kind == "ncc":
            return f"ncc:k={self.k:g}"
        if self.kind == "bernoulli":
            return f"bernoulli:k={self.k:g},nu={self.nu:g}"
        if self.kind == "file":
            return f"file:{self.path}"
        return "individual"

    def build(self, n: int, T: int, rng: np.random.Generator | None) -> TestDesign:
        if self.kind == "ncc":
            return near_constant_design(n, T, self.k, rng)
        if self.kind == "bernoulli":
            return bernoulli_design(n, T, self.k, self.nu, rng)
        if self.kind == "individual":
            return individual_design(n)
        design = load_design(self.path)
        if design.n != n:
            raise InvalidParameterError(
                f"design file {self.path} has n={design.n}, config says n={n}")
        if design.T != T:
            raise InvalidParameterError(
                f"design file {self.path} has T={design.T}, config says T={T}")
        return design
