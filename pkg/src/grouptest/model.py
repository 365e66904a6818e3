"""Core domain types: test designs, priors, outcome generation, samplers.

Item and test indices are 0-based everywhere.  A design is a bipartite
incidence structure between n items and T pooled tests; a test is positive
exactly when it contains at least one defective item.  Defective sets are
plain ``frozenset[int]`` values, outcome vectors are boolean numpy arrays.

Designs serialize to a plain-text matrix format (see :func:`loads_design`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InvalidParameterError

DefectiveSet = frozenset  # frozenset[int]


def _as_index_array(items: Iterable[int], bound: int, what: str) -> np.ndarray:
    """Validate an iterable of indices against [0, bound) and return int64 array."""
    if isinstance(items, np.ndarray):
        arr = items.astype(np.int64, copy=False)
    elif isinstance(items, (set, frozenset)):
        arr = np.fromiter(sorted(items), dtype=np.int64, count=len(items))
    else:
        arr = np.asarray(list(items), dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= bound):
        bad = arr[(arr < 0) | (arr >= bound)][0]
        raise InvalidParameterError(f"{what} index {bad} out of range [0, {bound})")
    return arr


class TestDesign:
    """A T x n 0/1 incidence structure with dual adjacency.

    Both orientations are stored in compressed sparse form: per-test item
    lists and per-item test lists are O(1) slices into shared index arrays.
    Items are unique and ascending within a test (repeated placements
    collapse to a single incidence).  Instances are immutable.
    """

    __slots__ = ("n", "T", "_tptr", "_titems", "_iptr", "_itests",
                 "_inc_test", "_inc_item", "_tests_view", "_item_tests_view")

    def __init__(self, n: int, tests: Iterable[Iterable[int]]):
        if n < 1:
            raise InvalidParameterError(f"item count must be >= 1, got {n}")
        members = []
        for t, raw in enumerate(tests):
            idx = np.unique(_as_index_array(raw, n, "item"))
            members.append(idx)
        self.n = int(n)
        self.T = len(members)
        sizes = np.array([len(m) for m in members], dtype=np.int64)
        self._tptr = np.concatenate([[0], np.cumsum(sizes)])
        self._titems = (np.concatenate(members) if members else
                        np.empty(0, dtype=np.int64))
        self._build_item_view()
        self._tests_view = None
        self._item_tests_view = None

    @classmethod
    def _from_incidence_arrays(cls, n: int, T: int, items: np.ndarray,
                               tests: np.ndarray) -> "TestDesign":
        """Fast constructor from parallel (item, test) index arrays.

        Indices must already be in range; duplicate pairs collapse.
        """
        self = object.__new__(cls)
        self.n = int(n)
        self.T = int(T)
        if T == 0 or items.size == 0:
            key = np.empty(0, dtype=np.int64)
        else:
            key = np.unique(tests.astype(np.int64) * n + items.astype(np.int64))
        inc_test, inc_item = (key // n, key % n) if key.size else (key, key)
        sizes = np.bincount(inc_test, minlength=T)
        self._tptr = np.concatenate([[0], np.cumsum(sizes)])
        self._titems = inc_item
        self._build_item_view()
        self._tests_view = None
        self._item_tests_view = None
        return self

    def _build_item_view(self) -> None:
        sizes = np.diff(self._tptr)
        self._inc_test = np.repeat(np.arange(self.T, dtype=np.int64), sizes)
        order = np.argsort(self._titems, kind="stable")
        self._itests = self._inc_test[order]
        counts = np.bincount(self._titems, minlength=self.n)
        self._iptr = np.concatenate([[0], np.cumsum(counts)])
        self._inc_item = np.repeat(np.arange(self.n, dtype=np.int64), counts)

    # -- accessors ---------------------------------------------------------

    def test_members(self, t: int) -> np.ndarray:
        """Sorted item indices of test t."""
        return self._titems[self._tptr[t]:self._tptr[t + 1]]

    def tests_of(self, i: int) -> np.ndarray:
        """Sorted test indices containing item i."""
        return self._itests[self._iptr[i]:self._iptr[i + 1]]

    @property
    def tests(self) -> tuple:
        """Tuple of per-test item sets (dual view built lazily)."""
        if self._tests_view is None:
            self._tests_view = tuple(frozenset(map(int, self.test_members(t)))
                                     for t in range(self.T))
        return self._tests_view

    @property
    def item_tests(self) -> tuple:
        """Tuple of per-item test sets."""
        if self._item_tests_view is None:
            self._item_tests_view = tuple(frozenset(map(int, self.tests_of(i)))
                                          for i in range(self.n))
        return self._item_tests_view

    @property
    def test_sizes(self) -> np.ndarray:
        return np.diff(self._tptr)

    @property
    def item_degrees(self) -> np.ndarray:
        return np.diff(self._iptr)

    @property
    def incidence_count(self) -> int:
        return int(self._titems.size)

    def incidence(self) -> np.ndarray:
        """Dense boolean (T, n) incidence matrix (small designs only)."""
        m = np.zeros((self.T, self.n), dtype=bool)
        m[self._inc_test, self._titems] = True
        return m

    def __eq__(self, other) -> bool:
        if not isinstance(other, TestDesign):
            return NotImplemented
        return (self.n == other.n and self.T == other.T
                and np.array_equal(self._tptr, other._tptr)
                and np.array_equal(self._titems, other._titems))

    __hash__ = None

    def __repr__(self) -> str:
        return f"TestDesign(n={self.n}, T={self.T}, incidences={self.incidence_count})"


def subdesign(design: TestDesign, keep_items: np.ndarray,
              keep_tests: np.ndarray) -> tuple[TestDesign, np.ndarray, np.ndarray]:
    """Restrict a design to the given items and tests, re-indexing both.

    ``keep_items`` / ``keep_tests`` are boolean masks over the original
    indices.  Returns the re-indexed design together with the arrays of
    original item ids and test ids (position = new index).
    """
    keep_items = np.asarray(keep_items, dtype=bool)
    keep_tests = np.asarray(keep_tests, dtype=bool)
    item_ids = np.flatnonzero(keep_items)
    test_ids = np.flatnonzero(keep_tests)
    item_rank = np.cumsum(keep_items) - 1
    test_rank = np.cumsum(keep_tests) - 1
    sel = keep_items[design._titems] & keep_tests[design._inc_test]
    new_items = item_rank[design._titems[sel]]
    new_tests = test_rank[design._inc_test[sel]]
    # the fast constructor tolerates n == 0 (empty sub-designs)
    sub = TestDesign._from_incidence_arrays(len(item_ids), len(test_ids),
                                            new_items, new_tests)
    return sub, item_ids, test_ids


# -- outcome generation ----------------------------------------------------

def run_tests(design: TestDesign, s: Iterable[int]) -> np.ndarray:
    """Evaluate all tests on defective set s.

    A test is positive exactly when it contains at least one member of s;
    an empty test is negative.  Returns a boolean vector of length T.
    """
    idx = _as_index_array(s, design.n, "item")
    outcomes = np.zeros(design.T, dtype=bool)
    if idx.size:
        mask = np.zeros(design.n, dtype=bool)
        mask[idx] = True
        outcomes[design._itests[np.repeat(mask, design.item_degrees)]] = True
    return outcomes


def defective_mask(n: int, s: Iterable[int]) -> np.ndarray:
    """Boolean membership vector for a defective set."""
    mask = np.zeros(n, dtype=bool)
    idx = _as_index_array(s, n, "item")
    mask[idx] = True
    return mask


# -- priors and samplers ----------------------------------------------------

@dataclass(frozen=True)
class Prior:
    """Distribution of the defective set.

    kind "iid": every item defective independently with prevalence p,
    0 < p <= 1/2.  kind "combinatorial": uniform over the C(n, k) subsets
    of size k, 1 <= k <= floor(n/2).  kind "coupled": the two-stage sampler
    of :func:`sample_coupled` (an i.i.d. draw topped up to size k), used by
    converse experiments; p holds its optional first-stage prevalence.
    """

    kind: str
    p: float | None = None
    k: int | None = None

    def __post_init__(self):
        if self.kind == "iid":
            if self.p is None or not 0.0 < self.p <= 0.5:
                raise InvalidParameterError(
                    f"iid prior needs prevalence in (0, 1/2], got {self.p}")
        elif self.kind == "combinatorial":
            if self.k is None or self.k < 1:
                raise InvalidParameterError(
                    f"combinatorial prior needs defective count k >= 1, got {self.k}")
        elif self.kind == "coupled":
            if self.k is None or self.k < 1:
                raise InvalidParameterError(
                    f"coupled prior needs defective count k >= 1, got {self.k}")
            if self.p is not None and not 0.0 < self.p < 1.0:
                raise InvalidParameterError(
                    f"coupled prior first-stage prevalence must lie in (0, 1), got {self.p}")
        else:
            raise InvalidParameterError(f"unknown prior kind {self.kind!r}")

    @classmethod
    def iid(cls, p: float) -> "Prior":
        return cls("iid", p=p)

    @classmethod
    def combinatorial(cls, k: int) -> "Prior":
        return cls("combinatorial", k=int(k))

    @classmethod
    def from_string(cls, text: str) -> "Prior":
        """Parse "iid:P", "comb:K" or "coupled:K" (CLI shorthand)."""
        try:
            kind, _, value = text.partition(":")
            if kind == "iid":
                return cls.iid(float(value))
            if kind in ("comb", "combinatorial"):
                return cls.combinatorial(int(value))
            if kind == "coupled":
                return cls("coupled", k=int(value))
        except ValueError as exc:
            if isinstance(exc, InvalidParameterError):
                raise
            raise InvalidParameterError(f"cannot parse prior {text!r}") from exc
        raise InvalidParameterError(f"unknown prior kind in {text!r}")

    @property
    def param(self) -> float:
        """The scalar parameter (p or k), for report rows."""
        return self.p if self.kind == "iid" else float(self.k)

    def mean_defectives(self, n: int) -> float:
        """Expected |S|; real-valued n*p under the iid prior."""
        return n * self.p if self.kind == "iid" else float(self.k)

    def prevalence(self, n: int) -> float:
        """p under iid, k/n otherwise."""
        return self.p if self.kind == "iid" else self.k / n

    def sample(self, n: int, rng: np.random.Generator) -> frozenset:
        if self.kind == "iid":
            return sample_iid(n, self.p, rng)
        if self.kind == "combinatorial":
            return sample_combinatorial(n, self.k, rng)
        return sample_coupled(n, self.k, rng, p0=self.p).s


def sample_iid(n: int, p: float, rng: np.random.Generator) -> frozenset:
    """Draw a defective set with each item included independently w.p. p."""
    if not 0.0 < p <= 0.5:
        raise InvalidParameterError(f"prevalence must lie in (0, 1/2], got {p}")
    return frozenset(map(int, np.flatnonzero(rng.random(n) < p)))


def sample_combinatorial(n: int, k: int, rng: np.random.Generator) -> frozenset:
    """Draw a uniformly random k-subset of [0, n)."""
    if not 1 <= k <= n // 2:
        raise InvalidParameterError(
            f"defective count must satisfy 1 <= k <= floor(n/2) = {n // 2}, got {k}")
    return frozenset(map(int, rng.choice(n, size=k, replace=False)))


def coupling_prevalence(n: int, k: int) -> float:
    """Default first-stage prevalence (k - sqrt(k) ln n) / n of the coupled sampler."""
    return (k - math.sqrt(k) * math.log(n)) / n


@dataclass(frozen=True)
class CoupledSample:
    """Result of the two-stage combinatorial coupling.

    s0 is the first-stage i.i.d. draw; s is the final set after topping up
    to size k with uniform extra items.  When the first stage overshoots
    (|s0| > k) the overflow flag is set and s equals s0 unmodified; callers
    decide how to score such trials.
    """

    s0: frozenset
    s: frozenset
    p0: float
    overflow: bool


def sample_coupled(n: int, k: int, rng: np.random.Generator,
                   p0: float | None = None) -> CoupledSample:
    """Two-stage sampler coupling the i.i.d. and combinatorial priors.

    Stage one draws s0 i.i.d. with prevalence p0; stage two adds
    max(k - |s0|, 0) uniformly random items outside s0.  Conditioned on no
    overflow, the final set is exactly uniform over k-subsets, for any p0.

    By default p0 = (k - sqrt(k) ln n) / n, which is positive only when
    sqrt(k) > ln n (the dense regime the coupling was designed for); pass
    an explicit p0 in (0, 1) to use the construction outside that regime.
    """
    if not 1 <= k <= n // 2:
        raise InvalidParameterError(
            f"defective count must satisfy 1 <= k <= floor(n/2) = {n // 2}, got {k}")
    if p0 is None:
        p0 = coupling_prevalence(n, k)
        if p0 <= 0.0:
            raise InvalidParameterError(
                f"default first-stage prevalence {p0:.4g} is not positive at "
                f"n={n}, k={k}; this requires sqrt(k) > ln n (dense regime), "
                f"otherwise pass p0 explicitly")
    elif not 0.0 < p0 < 1.0:
        raise InvalidParameterError(f"p0 must lie in (0, 1), got {p0}")
    s0_arr = np.flatnonzero(rng.random(n) < p0)
    s0 = frozenset(map(int, s0_arr))
    if len(s0) > k:
        return CoupledSample(s0, s0, p0, True)
    deficit = k - len(s0)
    if deficit:
        pool = np.setdiff1d(np.arange(n), s0_arr, assume_unique=True)
        extra = rng.choice(pool, size=deficit, replace=False)
        s = s0 | frozenset(map(int, extra))
    else:
        s = s0
    return CoupledSample(s0, s, p0, False)


# -- matrix file format ------------------------------------------------------

def dumps_design(design: TestDesign) -> str:
    """Serialize a design to the matrix text format.

    Line 1 is "T n"; each of the next T lines holds the space-separated
    ascending item indices of one test (an empty line is an empty test).
    """
    lines = [f"{design.T} {design.n}"]
    for t in range(design.T):
        lines.append(" ".join(str(int(i)) for i in design.test_members(t)))
    return "\n".join(lines) + "\n"


def loads_design(text: str) -> TestDesign:
    """Parse the matrix text format; lines starting with '#' are comments."""
    lines = [ln for ln in text.split("\n") if not ln.startswith("#")]
    if lines and lines[-1] == "":
        lines.pop()  # trailing newline artifact, not an empty test
    if not lines:
        raise InvalidParameterError("matrix file is empty")
    header = lines[0].split()
    if len(header) != 2:
        raise InvalidParameterError(f"matrix header must be 'T n', got {lines[0]!r}")
    T, n = int(header[0]), int(header[1])
    if len(lines) - 1 != T:
        raise InvalidParameterError(
            f"matrix file declares {T} tests but contains {len(lines) - 1} test lines")
    tests = []
    for t, ln in enumerate(lines[1:]):
        idx = [int(tok) for tok in ln.split()]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise InvalidParameterError(
                f"test {t} indices must be strictly ascending: {ln!r}")
        tests.append(idx)
    return TestDesign(n, tests)


def save_design(design: TestDesign, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_design(design))


def load_design(path: str) -> TestDesign:
    with open(path, "r", encoding="ascii") as fh:
        return loads_design(fh.read())
