"""Decoders: COMP, DD, and exhaustive small-instance oracles.

COMP declares non-defective exactly the items seen in some negative test;
its estimate is always a superset of the true defective set.  DD declares
defective the possibly-defective (PD) items that appear in some positive
test containing no other PD item; its estimate is always a subset of the
truth.  The exhaustive oracles enumerate candidate sets outright and exist
to cross-check the fast decoders and to compute exact error probabilities
on small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InfeasibleError, InvalidParameterError
from .model import Prior, TestDesign, defective_mask

#: Largest item count accepted by the exhaustive oracles (2^20 subsets).
ENUMERATION_CAP = 20


@dataclass(frozen=True)
class DecodeResult:
    """An estimate plus provenance.

    definite is True for decoders whose output carries a one-sided
    guarantee in the noiseless model (COMP never misses a defective,
    DD never accuses a non-defective).
    """

    estimate: frozenset
    decoder: str
    definite: bool


@dataclass(frozen=True)
class DdTrialStats:
    """Per-trial counting statistics behind the DD error decomposition.

    w_other: tests containing a defective other than the designated item.
    m_i: tests containing the designated item and no other defective.
    g: non-defectives that appear in no negative test (PD non-defectives).
    """

    w_other: int
    m_i: int
    g: int


def _validate_outcomes(design: TestDesign, outcomes) -> np.ndarray:
    out = np.asarray(outcomes, dtype=bool)
    if out.shape != (design.T,):
        raise InvalidParameterError(
            f"outcome vector has shape {out.shape}, design has T={design.T}")
    return out


def possibly_defective_mask(design: TestDesign, outcomes) -> np.ndarray:
    """Boolean mask of PD items: those appearing in no negative test."""
    out = _validate_outcomes(design, outcomes)
    pd = np.ones(design.n, dtype=bool)
    in_negative = design._titems[~out[design._inc_test]]
    pd[in_negative] = False
    return pd


def comp_decode(design: TestDesign, outcomes) -> DecodeResult:
    """COMP: estimate = all items not appearing in any negative test."""
    pd = possibly_defective_mask(design, outcomes)
    return DecodeResult(frozenset(map(int, np.flatnonzero(pd))), "comp", True)


def dd_decode(design: TestDesign, outcomes) -> DecodeResult:
    """DD: estimate = PD items alone (among PD items) in some positive test."""
    out = _validate_outcomes(design, outcomes)
    pd = possibly_defective_mask(design, out)
    pd_inc = pd[design._titems]
    pd_count = np.bincount(design._inc_test[pd_inc], minlength=design.T)
    lone = out & (pd_count == 1)
    sel = pd_inc & lone[design._inc_test]
    return DecodeResult(frozenset(map(int, np.unique(design._titems[sel]))),
                        "dd", True)


def _subset_enumeration(design: TestDesign, outcomes, cap: int):
    """All subsets consistent with the outcomes, as a sorted mask array."""
    if design.n > cap:
        raise CapacityError(
            f"exhaustive enumeration needs n <= {cap}, design has n={design.n}")
    out = _validate_outcomes(design, outcomes)
    subsets = np.arange(1 << design.n, dtype=np.uint64)
    ok = np.ones(subsets.size, dtype=bool)
    for t in range(design.T):
        tmask = np.uint64(sum(1 << int(i) for i in design.test_members(t)))
        ok &= ((subsets & tmask) != 0) == out[t]
    return subsets[ok]


def _mask_to_tuple(mask: int) -> tuple:
    return tuple(i for i in range(mask.bit_length()) if (mask >> i) & 1)


def enumerate_consistent_sets(design: TestDesign, outcomes,
                              cardinality: int | None = None,
                              cap: int = ENUMERATION_CAP) -> list[frozenset]:
    """All defective sets s with run_tests(design, s) == outcomes.

    Optionally filtered to |s| == cardinality.  Returned in lexicographic
    order of the sorted member sequences.
    """
    masks = _subset_enumeration(design, outcomes, cap)
    if cardinality is not None:
        masks = masks[np.bitwise_count(masks) == cardinality]
    tuples = sorted(_mask_to_tuple(int(m)) for m in masks)
    return [frozenset(t) for t in tuples]


def map_oracle_decode(design: TestDesign, outcomes, prior: Prior,
                      cap: int = ENUMERATION_CAP) -> DecodeResult:
    """Exhaustive posterior-maximal decoding.

    Under the iid prior with p <= 1/2 this returns a minimum-cardinality
    consistent set; under the combinatorial prior, a consistent k-set.
    Posterior ties break to the lexicographically smallest member sequence
    (determinism; any fixed rule fails equally on genuinely tied instances).
    """
    if prior.kind == "combinatorial":
        masks = _subset_enumeration(design, outcomes, cap)
        masks = masks[np.bitwise_count(masks) == prior.k]
        if masks.size == 0:
            raise InfeasibleError(
                f"no defective set of size {prior.k} is consistent with the outcomes")
        best = min(_mask_to_tuple(int(m)) for m in masks)
    elif prior.kind == "iid":
        masks = _subset_enumeration(design, outcomes, cap)
        if masks.size == 0:
            raise InfeasibleError("no defective set is consistent with the outcomes")
        log_odds = math.log(prior.p) - math.log(1.0 - prior.p)  # <= 0 for p <= 1/2
        counts = np.bitwise_count(masks)
        posterior = counts * log_odds
        tied = masks[posterior == posterior.max()]
        best = min(_mask_to_tuple(int(m)) for m in tied)
    else:
        raise InvalidParameterError(
            f"map oracle supports iid and combinatorial priors, got {prior.kind!r}")
    return DecodeResult(frozenset(best), "map", False)


def dd_trial_stats(design: TestDesign, s, i: int) -> DdTrialStats:
    """Count the three DD statistics for defective item i under truth s."""
    s_mask = defective_mask(design.n, s)
    if not 0 <= i < design.n or not s_mask[i]:
        raise InvalidParameterError(f"item {i} is not a member of the defective set")
    others = s_mask.copy()
    others[i] = False
    hit_other = np.zeros(design.T, dtype=bool)
    hit_other[design._itests[np.repeat(others, design.item_degrees)]] = True
    w_other = int(hit_other.sum())
    m_i = int((~hit_other[design.tests_of(i)]).sum())
    hit_any = hit_other.copy()
    hit_any[design.tests_of(i)] = True
    in_negative = np.zeros(design.n, dtype=bool)
    in_negative[design._titems[~hit_any[design._inc_test]]] = True
    g = int((~s_mask & ~in_negative).sum())
    return DdTrialStats(w_other=w_other, m_i=m_i, g=g)
