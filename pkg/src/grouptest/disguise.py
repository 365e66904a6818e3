"""Totally-disguised items and the converse construction.

An item is disguised in a test when some other item in that test is
defective, and totally disguised when this holds for every test it is in
(vacuously, when it is in no test).  A totally disguised item's status is
invisible to the outcomes, which is the engine of the lower-bound
machinery in this module:

* exact and product-bound disguise probabilities per item, and the
  averaged log-probability check against the per-test exponent;
* the Clean / Extract / ConstructSet pruning loop, which returns a set W
  of items whose disguise events (with respect to the pruned design each
  one saw at extraction time) are mutually independent because their
  dependency neighborhoods are pairwise disjoint;
* swap arguments and the (1 - p)^N success upper bound that turn realized
  disguised counts into failure probabilities.

Enumeration-based operations accept a ``cap`` on the item count and raise
:class:`~grouptest.errors.CapacityError` above it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoders import ENUMERATION_CAP
from .errors import (CapacityError, CleanRequiredError, InvalidParameterError,
                     UndefinedConditionalError)
from .model import Prior, TestDesign, defective_mask, subdesign
from .thresholds import disguise_exponent

_COVERAGE_BITS = 25  # hard memory guard for the shared enumeration kernel


def _validate_prevalence(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise InvalidParameterError(f"prevalence must lie in (0, 1), got {p}")
    return float(p)


def _validate_item(design: TestDesign, i: int) -> int:
    if not 0 <= i < design.n:
        raise InvalidParameterError(f"item index {i} out of range [0, {design.n})")
    return int(i)


# -- realized disguise -------------------------------------------------------

def disguise_mask(design: TestDesign, s) -> np.ndarray:
    """Boolean vector: item i is totally disguised under realized truth s.

    Items in no test are vacuously disguised.
    """
    s_mask = defective_mask(design.n, s)
    defectives_per_test = np.bincount(
        design._inc_test[s_mask[design._titems]], minlength=design.T)
    # an incidence is "bad" when its test contains no defective besides the item
    bad = (defectives_per_test[design._inc_test] - s_mask[design._titems]) == 0
    any_bad = np.bincount(design._titems[bad], minlength=design.n) > 0
    return ~any_bad


def is_totally_disguised(design: TestDesign, s, i: int) -> bool:
    """True when every test containing i holds a defective other than i."""
    _validate_item(design, i)
    return bool(disguise_mask(design, s)[i])


# -- exact probabilities via enumeration -------------------------------------

def _coverage_prob(sets, p: float) -> float:
    """P[every given item-set intersects an iid(p) defective set].

    The enumeration runs over the union of the sets only, since items
    outside it cannot influence the events.
    """
    groups = [frozenset(map(int, g)) for g in sets]
    if any(not g for g in groups):
        return 0.0  # an empty requirement set can never be intersected
    if not groups:
        return 1.0
    union = sorted(set().union(*groups))
    r = len(union)
    if r > _COVERAGE_BITS:
        raise CapacityError(
            f"enumeration over {r} items exceeds the {_COVERAGE_BITS}-bit kernel")
    bit = {item: b for b, item in enumerate(union)}
    subsets = np.arange(1 << r, dtype=np.uint64)
    ok = np.ones(subsets.size, dtype=bool)
    for g in set(groups):
        gmask = np.uint64(sum(1 << bit[i] for i in g))
        ok &= (subsets & gmask) != 0
    counts = np.bitwise_count(subsets[ok]).astype(np.int64)
    hist = np.bincount(counts, minlength=r + 1)
    c = np.arange(r + 1, dtype=np.float64)
    weights = np.power(p, c) * np.power(1.0 - p, r - c)
    return float(np.dot(hist, weights))


def _neighborhoods(design: TestDesign, i: int) -> list[frozenset]:
    """Other-item sets of the tests containing i."""
    return [frozenset(map(int, design.test_members(t))) - {i}
            for t in design.tests_of(i)]


def exact_disguise_prob(design: TestDesign, p: float, i: int,
                        cap: int = ENUMERATION_CAP) -> float:
    """Exact P[item i totally disguised] under the iid(p) prior.

    The item's own status is irrelevant and is marginalized out.
    """
    _validate_prevalence(p)
    _validate_item(design, i)
    if design.n - 1 > cap:
        raise CapacityError(
            f"exact disguise probability needs n - 1 <= {cap}, design has n={design.n}")
    return _coverage_prob(_neighborhoods(design, i), p)


def neighborhood_disguise_prob(neighborhood, p: float) -> float:
    """Exact disguise probability from an explicit neighborhood snapshot
    (one other-item set per test)."""
    _validate_prevalence(p)
    return _coverage_prob(neighborhood, p)


def joint_disguise_prob(neighborhoods, p: float) -> float:
    """Exact probability that every listed neighborhood is fully covered,
    i.e. that all the corresponding items are disguised simultaneously."""
    _validate_prevalence(p)
    return _coverage_prob([g for group in neighborhoods for g in group], p)


def aldridge_item_bound(design: TestDesign, p: float, i: int) -> float:
    """Product lower bound on P[item i totally disguised]:
    prod over tests t containing i of (1 - q^(|t| - 1)).

    Exact when the other-item sets are disjoint; zero when any test
    containing i is a singleton.  Computed in the log domain.
    """
    _validate_prevalence(p)
    _validate_item(design, i)
    sizes = design.test_sizes[design.tests_of(i)]
    if (sizes <= 1).any():
        return 0.0
    log_q = np.log1p(-p)
    return float(np.exp(np.log1p(-np.exp((sizes - 1) * log_q)).sum()))


def _product_bound_log_sums(design: TestDesign, p: float) -> np.ndarray:
    """log of the product bound for every item at once (vectorized)."""
    sizes = design.test_sizes
    log_q = np.log1p(-p)
    with np.errstate(divide="ignore"):
        per_test = np.log1p(-np.exp(np.maximum(sizes - 1, 0) * log_q))
    return np.bincount(design._titems, weights=per_test[design._inc_test],
                       minlength=design.n)


@dataclass(frozen=True)
class AldridgeCheck:
    """Result of the averaged log-disguise-probability inequality."""

    lhs: float
    rhs: float
    holds: bool
    exact: bool


def aldridge_avg_check(design: TestDesign, p: float,
                       cap: int = ENUMERATION_CAP) -> AldridgeCheck:
    """Check (1/n) sum_i ln P[D_i] >= (T/n) * disguise_exponent(p, n).

    Requires every test size >= 2 (run :func:`clean` first otherwise).
    Uses exact enumeration when n - 1 <= cap, else the certified product
    lower bound per item, which satisfies the same inequality.
    """
    _validate_prevalence(p)
    if design.T and (design.test_sizes <= 1).any():
        raise CleanRequiredError(
            "design has tests with 0 or 1 items; run clean() before the average check")
    exact = design.n - 1 <= cap
    if exact:
        logs = [float(np.log(exact_disguise_prob(design, p, i, cap)))
                for i in range(design.n)]
        lhs = float(np.mean(logs))
    else:
        lhs = float(_product_bound_log_sums(design, p).mean())
    if design.T == 0:
        rhs = 0.0
    else:
        rhs = design.T / design.n * disguise_exponent(p, design.n).value
    return AldridgeCheck(lhs=lhs, rhs=rhs, holds=lhs >= rhs - 1e-12, exact=exact)


def conditional_defectivity(design: TestDesign, p: float, i: int,
                            cap: int = ENUMERATION_CAP) -> float:
    """Exact P[i defective | i totally disguised] by enumeration.

    Equals the prior prevalence p whenever P[D_i] > 0, because the
    disguise event never looks at i's own status.  The enumeration below
    does not assume that; it computes both sides honestly.
    """
    _validate_prevalence(p)
    _validate_item(design, i)
    if design.n - 1 > cap:
        raise CapacityError(
            f"conditional defectivity needs n - 1 <= {cap}, design has n={design.n}")
    groups = _neighborhoods(design, i)
    if any(not g for g in groups):
        raise UndefinedConditionalError(
            f"item {i} sits in a singleton test, so P[disguised] = 0")
    union = sorted(set().union(*groups)) if groups else []
    r = len(union)
    if r + 1 > _COVERAGE_BITS:
        raise CapacityError(f"enumeration over {r + 1} items exceeds the kernel")
    bit = {item: b for b, item in enumerate(union)}
    own = np.uint64(1 << r)  # extra bit carries i's own status
    subsets = np.arange(1 << (r + 1), dtype=np.uint64)
    ok = np.ones(subsets.size, dtype=bool)
    for g in set(map(frozenset, groups)):
        gmask = np.uint64(sum(1 << bit[j] for j in g))
        ok &= (subsets & gmask) != 0
    counts = np.bitwise_count(subsets).astype(np.int64)
    mass = np.power(p, counts) * np.power(1.0 - p, (r + 1) - counts)
    p_disguised = float(mass[ok].sum())
    joint = float(mass[ok & ((subsets & own) != 0)].sum())
    if p_disguised == 0.0:
        raise UndefinedConditionalError(f"P[item {i} disguised] = 0")
    return joint / p_disguised


def success_upper_bound(n_disguised: int, p: float) -> float:
    """(1 - p)^N: best possible success probability given N independent
    disguised items (guess every one non-defective)."""
    if n_disguised < 0:
        raise InvalidParameterError(f"count must be >= 0, got {n_disguised}")
    if not 0.0 < p <= 0.5:
        raise InvalidParameterError(f"prevalence must lie in (0, 1/2], got {p}")
    return (1.0 - p) ** n_disguised


def swap_preserves_outcomes(design: TestDesign, s, i: int, j: int) -> bool:
    """Swap a disguised defective i with a disguised non-defective j and
    compare outcomes.

    Both items must be totally disguised under s (checked); the swap then
    provably cannot change any test outcome, so this always returns True.
    """
    from .model import run_tests

    s = frozenset(map(int, s))
    _validate_item(design, i)
    _validate_item(design, j)
    if i not in s:
        raise InvalidParameterError(f"item {i} must be a defective member of s")
    if j in s:
        raise InvalidParameterError(f"item {j} must be a non-defective")
    mask = disguise_mask(design, s)
    if not mask[i]:
        raise InvalidParameterError(f"item {i} is not totally disguised")
    if not mask[j]:
        raise InvalidParameterError(f"item {j} is not totally disguised")
    swapped = (s - {i}) | {j}
    return bool(np.array_equal(run_tests(design, s), run_tests(design, swapped)))


def very_present_items(design: TestDesign, xi: float) -> frozenset:
    """Items appearing in more than n^xi tests."""
    if xi <= 0.0:
        raise InvalidParameterError(f"xi must be positive, got {xi}")
    threshold = design.n ** xi
    return frozenset(map(int, np.flatnonzero(design.item_degrees > threshold)))


# -- reports -----------------------------------------------------------------

@dataclass(frozen=True)
class DisguiseReport:
    """Per-item disguise indicators or probabilities plus summary counts.

    Exactly one of per_item_disguised (realized mode) and per_item_prob
    (exact or montecarlo mode) is set.  untested_items lists the items in
    no test at all, which are vacuously disguised with probability one.
    """

    mode: str
    per_item_disguised: np.ndarray | None
    per_item_prob: np.ndarray | None
    n_disguised_defective: int | None
    n_disguised_nondefective: int | None
    n_in_w: int | None
    untested_items: frozenset
    trials: int | None = None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "per_item_disguised": (None if self.per_item_disguised is None
                                   else [bool(x) for x in self.per_item_disguised]),
            "per_item_prob": (None if self.per_item_prob is None
                              else [float(x) for x in self.per_item_prob]),
            "n_disguised_defective": self.n_disguised_defective,
            "n_disguised_nondefective": self.n_disguised_nondefective,
            "n_in_w": self.n_in_w,
            "untested_items": sorted(self.untested_items),
            "trials": self.trials,
        }


def disguise_report(design: TestDesign, mode: str, *, s=None, p: float | None = None,
                    prior: Prior | None = None, trials: int | None = None,
                    rng: np.random.Generator | None = None, w=None,
                    cap: int = ENUMERATION_CAP) -> DisguiseReport:
    """Disguise summary in one of three modes.

    "realized": indicators for a given truth s, with counts of disguised
    defectives / non-defectives and, when w is given, the count inside w.
    "exact": per-item exact probabilities under iid(p) (enumeration cap).
    "montecarlo": per-item frequency estimates over ``trials`` samples of
    the given prior (or iid(p)).
    """
    untested = frozenset(map(int, np.flatnonzero(design.item_degrees == 0)))
    if mode == "realized":
        if s is None:
            raise InvalidParameterError("realized mode needs the defective set s")
        s_mask = defective_mask(design.n, s)
        mask = disguise_mask(design, s)
        n_in_w = int(mask[list(w)].sum()) if w is not None else None
        return DisguiseReport(
            mode=mode, per_item_disguised=mask, per_item_prob=None,
            n_disguised_defective=int((mask & s_mask).sum()),
            n_disguised_nondefective=int((mask & ~s_mask).sum()),
            n_in_w=n_in_w, untested_items=untested)
    if mode == "exact":
        if p is None:
            raise InvalidParameterError("exact mode needs the prevalence p")
        probs = np.array([exact_disguise_prob(design, p, i, cap)
                          for i in range(design.n)])
        return DisguiseReport(mode=mode, per_item_disguised=None,
                              per_item_prob=probs, n_disguised_defective=None,
                              n_disguised_nondefective=None, n_in_w=None,
                              untested_items=untested)
    if mode == "montecarlo":
        if trials is None or trials < 1 or rng is None:
            raise InvalidParameterError("montecarlo mode needs trials >= 1 and rng")
        if prior is None:
            if p is None:
                raise InvalidParameterError("montecarlo mode needs a prior or p")
            prior = Prior.iid(p)
        hits = np.zeros(design.n, dtype=np.int64)
        for _ in range(trials):
            hits += disguise_mask(design, prior.sample(design.n, rng))
        return DisguiseReport(mode=mode, per_item_disguised=None,
                              per_item_prob=hits / trials,
                              n_disguised_defective=None,
                              n_disguised_nondefective=None, n_in_w=None,
                              untested_items=untested, trials=trials)
    raise InvalidParameterError(
        f"mode must be 'realized', 'exact' or 'montecarlo', got {mode!r}")


# -- clean / extract / construct-set ------------------------------------------

@dataclass(frozen=True)
class CleanResult:
    """Outcome of one cleaning pass, with index maps into the original design."""

    design: TestDesign
    item_ids: np.ndarray
    test_ids: np.ndarray
    removed_items: frozenset
    removed_tests: frozenset


def clean(design: TestDesign) -> CleanResult:
    """Remove every test with 0 or 1 items, plus every item in such a test.

    Single pass; removals can create new small tests, so callers that need
    all sizes >= 2 iterate to a fixed point (construct_set does).
    """
    sizes = design.test_sizes
    small = sizes <= 1
    victim_items = np.unique(design._titems[small[design._inc_test]])
    keep_items = np.ones(design.n, dtype=bool)
    keep_items[victim_items] = False
    sub, item_ids, test_ids = subdesign(design, keep_items, ~small)
    return CleanResult(design=sub, item_ids=item_ids, test_ids=test_ids,
                       removed_items=frozenset(map(int, victim_items)),
                       removed_tests=frozenset(map(int, np.flatnonzero(small))))


@dataclass(frozen=True)
class ExtractResult:
    """Outcome of one extraction, with index maps into the input design."""

    design: TestDesign
    w: tuple
    extracted: int
    item_ids: np.ndarray
    test_ids: np.ndarray
    removed_items: frozenset
    removed_tests: frozenset
    neighborhood: tuple


def _closure_within_4(design: TestDesign, i0: int):
    """Tests at edge-distance 1 and 3, and items at 0, 2, 4, from item i0."""
    tests1 = design.tests_of(i0)
    items2 = (np.unique(np.concatenate([design.test_members(t) for t in tests1]))
              if tests1.size else np.empty(0, dtype=np.int64))
    tests3 = (np.unique(np.concatenate([design.tests_of(i) for i in items2]))
              if items2.size else np.empty(0, dtype=np.int64))
    items4 = (np.unique(np.concatenate([design.test_members(t) for t in tests3]))
              if tests3.size else np.empty(0, dtype=np.int64))
    rm_items = np.union1d(np.array([i0], dtype=np.int64), np.union1d(items2, items4))
    rm_tests = np.union1d(tests1, tests3)
    return rm_items, rm_tests


def extract(design: TestDesign, p: float, w=(), score_mode: str = "product",
            cap: int = ENUMERATION_CAP) -> ExtractResult:
    """Pick the item with the highest disguise score and prune its
    4-neighborhood.

    Scores are the certified product lower bound ("product", default) or
    the exact enumeration ("exact", capped).  Ties go to the lowest item
    index.  Distance counts edges in the bipartite item/test graph, so the
    pruned closure contains the whole 2-neighborhood of the chosen item.
    """
    _validate_prevalence(p)
    if design.n < 1:
        raise InvalidParameterError("cannot extract from an empty design")
    if score_mode == "product":
        scores = _product_bound_log_sums(design, p)
    elif score_mode == "exact":
        if design.n - 1 > cap:
            raise CapacityError(
                f"exact scoring needs n - 1 <= {cap}, design has n={design.n}")
        scores = np.array([exact_disguise_prob(design, p, i, cap)
                           for i in range(design.n)])
    else:
        raise InvalidParameterError(
            f"score_mode must be 'product' or 'exact', got {score_mode!r}")
    i0 = int(np.argmax(scores))
    neighborhood = tuple(_neighborhoods(design, i0))
    rm_items, rm_tests = _closure_within_4(design, i0)
    keep_items = np.ones(design.n, dtype=bool)
    keep_items[rm_items] = False
    keep_tests = np.ones(design.T, dtype=bool)
    keep_tests[rm_tests] = False
    sub, item_ids, test_ids = subdesign(design, keep_items, keep_tests)
    return ExtractResult(design=sub, w=tuple(w) + (i0,), extracted=i0,
                         item_ids=item_ids, test_ids=test_ids,
                         removed_items=frozenset(map(int, rm_items)),
                         removed_tests=frozenset(map(int, rm_tests)),
                         neighborhood=neighborhood)


@dataclass(frozen=True)
class IterationRecord:
    """Per-iteration bookkeeping of the construction loop.

    n_i and T_i are the post-clean sizes entering the stop test; ratio is
    T_i / n_i (None when the design emptied).  extracted is the original
    index of the item taken this iteration, None on the terminal one.
    """

    n_i: int
    T_i: int
    clean_passes: int
    items_removed_by_clean: int
    tests_removed_by_clean: int
    items_removed_by_extract: int
    tests_removed_by_extract: int
    extracted: int | None
    ratio: float | None


@dataclass(frozen=True)
class ExtractionResult:
    """Output of the construction loop.

    w lists the extracted items (original indices, extraction order) and
    w_neighborhoods the other-item sets of each extracted item's tests at
    its extraction time.  Those snapshot neighborhoods are pairwise
    disjoint by construction, which is what makes the corresponding
    disguise events mutually independent.
    """

    w: tuple
    trace: tuple
    stop_reason: str
    very_present_removed: frozenset
    w_neighborhoods: tuple
    ratio_limit: float
    n: int
    T: int

    def to_dict(self) -> dict:
        return {
            "w": list(self.w),
            "stop_reason": self.stop_reason,
            "very_present_removed": sorted(self.very_present_removed),
            "ratio_limit": self.ratio_limit,
            "n": self.n,
            "T": self.T,
            "trace": [{
                "n_i": r.n_i, "T_i": r.T_i, "ratio": r.ratio,
                "clean_passes": r.clean_passes,
                "items_removed_by_clean": r.items_removed_by_clean,
                "tests_removed_by_clean": r.tests_removed_by_clean,
                "items_removed_by_extract": r.items_removed_by_extract,
                "tests_removed_by_extract": r.tests_removed_by_extract,
                "extracted": r.extracted,
            } for r in self.trace],
        }


def construct_set(design: TestDesign, p: float, xi: float,
                  score_mode: str = "product",
                  cap: int = ENUMERATION_CAP) -> ExtractionResult:
    """Build a set W of items with mutually independent disguise events.

    Step 1 removes very-present items (more than n^xi tests).  The loop
    then cleans small tests to a fixed point and, while the design is
    nonempty and the post-clean ratio T_i / n_i stays within
    (1 + xi) * T / n (the ratio of the ORIGINAL input sizes), extracts the
    highest-scoring item and prunes its 4-neighborhood.

    The implementation works on liveness masks over the original design,
    so all reported indices are original ones; it is step-for-step
    equivalent to composing :func:`clean` and :func:`extract`.
    """
    _validate_prevalence(p)
    if xi <= 0.0:
        raise InvalidParameterError(f"xi must be positive, got {xi}")
    if design.n < 1:
        raise InvalidParameterError("construct_set needs at least one item")
    if score_mode not in ("product", "exact"):
        raise InvalidParameterError(
            f"score_mode must be 'product' or 'exact', got {score_mode!r}")
    if score_mode == "exact" and design.n - 1 > cap:
        raise CapacityError(
            f"exact scoring needs n - 1 <= {cap}, design has n={design.n}")

    n, T = design.n, design.T
    inc_test, inc_item = design._inc_test, design._titems
    log_q = np.log1p(-p)

    alive_item = np.ones(n, dtype=bool)
    alive_test = np.ones(T, dtype=bool)
    very_present = very_present_items(design, xi)
    alive_item[list(very_present)] = False

    ratio_limit = (1.0 + xi) * T / n
    w: list[int] = []
    neighborhoods: list[tuple] = []
    trace: list[IterationRecord] = []

    def alive_members(t: int) -> np.ndarray:
        m = design.test_members(t)
        return m[alive_item[m]]

    def alive_tests_of(i: int) -> np.ndarray:
        tt = design.tests_of(i)
        return tt[alive_test[tt]]

    while True:
        # clean to a fixed point; removals may create new small tests
        clean_passes = 0
        items_cleaned = 0
        tests_cleaned = 0
        while True:
            live = alive_item[inc_item] & alive_test[inc_test]
            sizes = np.bincount(inc_test[live], minlength=T)
            small = alive_test & (sizes <= 1)
            if not small.any():
                break
            clean_passes += 1
            victims = np.unique(inc_item[small[inc_test] & alive_item[inc_item]])
            alive_item[victims] = False
            alive_test[small] = False
            items_cleaned += victims.size
            tests_cleaned += int(small.sum())

        n_i = int(alive_item.sum())
        T_i = int(alive_test.sum())
        ratio = T_i / n_i if n_i else None
        if n_i == 0 or ratio > ratio_limit:
            trace.append(IterationRecord(
                n_i=n_i, T_i=T_i, clean_passes=clean_passes,
                items_removed_by_clean=items_cleaned,
                tests_removed_by_clean=tests_cleaned,
                items_removed_by_extract=0, tests_removed_by_extract=0,
                extracted=None, ratio=ratio))
            stop = "exhausted" if n_i == 0 else "ratio_exceeded"
            return ExtractionResult(
                w=tuple(w), trace=tuple(trace), stop_reason=stop,
                very_present_removed=very_present,
                w_neighborhoods=tuple(neighborhoods),
                ratio_limit=ratio_limit, n=n, T=T)

        # scores over the live sub-design
        if score_mode == "product":
            live = alive_item[inc_item] & alive_test[inc_test]
            sizes = np.bincount(inc_test[live], minlength=T)
            with np.errstate(divide="ignore"):
                per_test = np.log1p(-np.exp(np.maximum(sizes - 1, 0) * log_q))
            scores = np.bincount(inc_item[live], weights=per_test[inc_test[live]],
                                 minlength=n)
        else:
            scores = np.full(n, -np.inf)
            for i in np.flatnonzero(alive_item):
                nbh = [frozenset(map(int, alive_members(t))) - {int(i)}
                       for t in alive_tests_of(int(i))]
                scores[i] = _coverage_prob(nbh, p)
        scores[~alive_item] = -np.inf
        i0 = int(np.argmax(scores))

        tests1 = alive_tests_of(i0)
        neighborhoods.append(tuple(frozenset(map(int, alive_members(t))) - {i0}
                                   for t in tests1))
        items2 = (np.unique(np.concatenate([alive_members(t) for t in tests1]))
                  if tests1.size else np.empty(0, dtype=np.int64))
        tests3 = (np.unique(np.concatenate([alive_tests_of(int(i)) for i in items2]))
                  if items2.size else np.empty(0, dtype=np.int64))
        items4 = (np.unique(np.concatenate([alive_members(t) for t in tests3]))
                  if tests3.size else np.empty(0, dtype=np.int64))
        rm_items = np.union1d(np.array([i0]), np.union1d(items2, items4))
        rm_items = rm_items[alive_item[rm_items]]
        rm_tests = np.union1d(tests1, tests3)
        alive_item[rm_items] = False
        alive_test[rm_tests] = False
        w.append(i0)
        trace.append(IterationRecord(
            n_i=n_i, T_i=T_i, clean_passes=clean_passes,
            items_removed_by_clean=items_cleaned,
            tests_removed_by_clean=tests_cleaned,
            items_removed_by_extract=int(rm_items.size),
            tests_removed_by_extract=int(rm_tests.size),
            extracted=i0, ratio=ratio))
