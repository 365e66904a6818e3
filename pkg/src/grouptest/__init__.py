"""Noiseless non-adaptive probabilistic group testing: designs, decoders,
thresholds, disguised-item converse machinery, and a Monte Carlo harness.
"""

from .decoders import (DdTrialStats, DecodeResult, ENUMERATION_CAP, comp_decode,
                       dd_decode, dd_trial_stats, enumerate_consistent_sets,
                       map_oracle_decode, possibly_defective_mask)
from .designs import (DEFAULT_BERNOULLI_DENSITY, DesignSpec, bernoulli_design,
                      individual_design, near_constant_design, tests_per_item)
from .disguise import (AldridgeCheck, CleanResult, DisguiseReport, ExtractResult,
                       ExtractionResult, IterationRecord, aldridge_avg_check,
                       aldridge_item_bound, clean, conditional_defectivity,
                       construct_set, disguise_mask, disguise_report,
                       exact_disguise_prob, extract, is_totally_disguised,
                       joint_disguise_prob, neighborhood_disguise_prob,
                       success_upper_bound, swap_preserves_outcomes,
                       very_present_items)
from .errors import (CapacityError, CleanRequiredError, GroupTestError,
                     InfeasibleError, InvalidParameterError,
                     UndefinedConditionalError)
from .harness import (ConverseReport, ExperimentConfig, SweepResult, SweepRow,
                      TrialOutcome, converse_experiment, derive_rng, emit,
                      locate_crossing, run_trial, sweep, wilson_interval)
from .model import (CoupledSample, Prior, TestDesign, coupling_prevalence,
                    defective_mask, dumps_design, load_design, loads_design,
                    run_tests, sample_combinatorial, sample_coupled, sample_iid,
                    save_design, subdesign)
from .thresholds import (LN2_SQUARED, DisguiseExponent, RateParams,
                         converse_budget, converse_constant,
                         coupon_coverage_prob, dd_params, disguise_exponent,
                         disguise_objective, disguise_objective_peak,
                         max_negative_test_size, negative_test_scale,
                         optimal_tests, t_star)

__version__ = "0.1.0"
