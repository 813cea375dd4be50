"""Minsky instability engine.

Loan-market tatonnement maps, the defaults/interest-rate crisis accelerator,
percolation contagion on firm networks, the combined network accelerator with
its multi-fixed-point phase structure, an agent-level simulator with
regulator interventions, and a session service for steering live crises.
"""

from .accelerator import (AcceleratorParams, accelerator_fixed_point,
                          accelerator_stability, closed_form_accelerator,
                          iterate_accelerator, step_accelerator)
from .abm import (BottleneckReport, EnsembleStats, Intervention, PolicySpec,
                  RateRule, ScenarioConfig, SimState, apply_intervention,
                  detect_bottleneck, init_scenario, run_ensemble, run_scenario,
                  tick)
from .combined import (CombinedParams, FixedPointSet, Phase, PhaseGrid, Regime,
                       Thresholds, classify_phase, core_fixed_point,
                       iterate_combined, phase_diagram, solve_fixed_points,
                       step_combined, thresholds)
from .firms import (FAILED, PONZI, VIABLE, FeedbackParams, FirmTable,
                    ResilienceMode, ResilienceSpec, classify_firms,
                    interest_from_failures, ponzi_count, sample_resiliences)
from .loanmarket import (DegenerateParametersError, LoanMarketParams,
                         ReturnsMode, StepVariant, classify_stability,
                         closed_form_loans, iterate_loan_market,
                         loan_fixed_point)
from .networks import (Network, NetworkConstructionError, build_network,
                       dumbbell_network, read_edge_list, write_edge_list)
from .percolation import (AvalancheResult, ClusterCensus, ScalingFitError,
                          ScalingFitResult, avalanche_size_samples,
                          branching_prediction, cluster_census,
                          estimate_scaling, finite_size_cap, run_avalanche)
from .scenario import (SCENARIO_SCHEMA, ScenarioValidationError,
                       combined_params_for, load_scenario, load_scenario_file,
                       validate_scenario)
from .trajectory import TerminationReason, Trajectory
from .validation import ParameterError

__version__ = "0.1.0"
