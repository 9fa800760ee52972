"""Expansion-based error bounds for classifiers trained on weak labels."""

from .errors import (EmpiricalEstimateError, EnumerationLimitError, GraphError,
                     IsolatedPointError, LearnerError, NoQualifyingSetError, ParameterError,
                     PopulationError, UndefinedConditionalError, WeakExpandError)
from .population import (ABSTAIN, ClassPartition, LabelAssignment, Partition, Population,
                         conditional_prob, disagreement, dump_population, load_population,
                         load_predictions, make_population, partition)
from .graph import (ExampleGraph, RobustSizeBracket, build_graph, cut_weight, dump_edges,
                    good_edge_neighborhood, load_edges, neighborhood,
                    robust_neighborhood_size)
from .robustness import (RobustnessProfile, average_robustness, markov_robust_mass_bound,
                         pointwise_robustness, robust_set, robustness_profile)
from .expansion import (MISTAKES, NON_MISTAKES, ExpansionEstimate, OracleSample, SetFamily,
                        default_epsilon, empirical_expansion, exact_expansion,
                        generalization_margin, heuristic_min_expansion, mistake_family,
                        vc_of_mistake_family)
from .bounds import (BoundReport, Precondition, coverage_bound, coverage_bound_weak,
                     fu_baseline_bound, plc_bound, plc_simplified_bound, wei_applicability,
                     wei_plc_bound)
from .testbeds import (CoTrainingSpec, HypothesisClassSpec, SuiteConfig, VerificationReport,
                       cotraining_population, enumerate_hypotheses, erm_train,
                       planted_population, random_cotraining_spec, verify_suite,
                       verify_theorem)

__version__ = "0.1.0"
