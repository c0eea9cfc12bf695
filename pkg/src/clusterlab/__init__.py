"""Extremal clusters of heavy-tailed time series: simulation, limits and diagnostics."""

from .clusters import (BlockingPlan, ClusterLawSample, ClusterPP, anticluster_diagnostic, block_series,
                       cluster_functional_nu, cluster_functionals_nu, empirical_cluster_law, empirical_theta,
                       independence_test_LQ, laplace_gap_diagnostic, replicated_cluster_law,
                       replicated_theta)
from .espace import (DecoratedPath, GraphSet, PiecewiseLinear, StepPath, add_continuous, embed_cadlag,
                     graph, hausdorff_graphs, local_max, local_min, m2_convergence_check, m2_distance,
                     sup_path, uniform_metric)
from .limitpp import (EmpiricalQ, FiniteQ, FunctionQ, LimitPointProcess, LinearQ, PointQ, QSampler,
                      compare_empirical_limit, nu_limit, sample_limit_pp)
from .models import (DiagnosticError, GarchModel, LinearModel, ParameterError, RegVarLaw, SeriesSample,
                     hill_estimate, model_from_dict, q_sequence_linear, q_shape_linear, quantile_an,
                     sample_regvar, simulate, simulate_garch, simulate_linear, spectral_tail_empirical,
                     theta_linear)
from .records import (RecordMeasure, cluster_records, kappa_law, ma1_kappa_law,
                      record_convergence_experiment, record_pp_from_clusters, series_record_times,
                      simulate_limit_records)
from .seqspace import Cluster, DomainError, boundedness_metric, polar, shift_metric, truncate
from .sums import (CenteringSpec, StableParams, c0, centered_path, karamata_check, limit_decorated_path,
                   m2_condition_check, partial_sum_path, small_jump_diagnostic,
                   stable_params_from_forward_theta, stable_params_from_Q, sup_law_experiment)

__version__ = "0.1.0"
