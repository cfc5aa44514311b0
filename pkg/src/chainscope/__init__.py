"""chainscope: majorizing-measure functionals and Gaussian supremum experiments
on finite metric spaces."""

from .metric_core import (FiniteMetricSpace, CoveringReport, MetricValidationError,
                          build_from_distance_matrix, build_from_covariance,
                          build_from_points, covering_number, entropy_integral,
                          modulus_entropy_diagnostic)
from .measures import (ProbabilityMeasure, YoungFunction, young_power, sigma,
                       sigma_profile, functional_M, subadditivity_check,
                       uniform_measure, point_mass, GAUSSIAN_LOG, YOUNG_INVERSE)
from .gaussian_lab import (GaussianModel, build_model, sample_paths, estimate_sup,
                           argmax_distribution, estimate_modulus, sudakov_bound,
                           concentration_check, supremum_report, nested_net_experiment)
from .partition import (PartitionTree, build_partition, common_sample_oracle,
                        chained_functional, verify_tree_translation, audit_cell,
                        lower_bound_report)
from .search import (OptimizationResult, BalancedMeasure, DualityReport,
                     maximize_M_self, minimize_sup_M, maximize_inf_M,
                     balanced_measure, duality_report)
from .ellipsoid import (EllipsoidSpec, make_spec, argmax_point, esup_check,
                        empirical_measure, smallball_check, gap_lower_bound_check,
                        ellipsoid_report)
from .io import (InstanceError, load_instance, parse_instance, space_from_instance,
                 covariance_from_instance, write_json, write_csv, dump_json)

__version__ = "0.1.0"
