"""Exact enumeration, recursion reports, sampled statistics and the oracle suite."""
from .checks import (FiniteDiff, MHStationarity, finite_diff_gradient, kernel_stationarity_check,
                     mh_stationarity_check)
from .enumerate import EnumeratingSource, EstimatorLaw, enumerate_law
from .recursions import RecursionReport, RecursionRow, bias_recursion, chi2, kl, variance_recursion
from .stats import (EmpiricalStats, Welford, chi_square_gof, empirical_stats, joint_se, rel_close,
                    tv_distance)
from .suite import CHECKS, CheckRow, mh_example, run_suite
from .zoo import ZooEntry, strategy_zoo
