"""Strategy trees and the recursive estimators."""
from .applications import BoundViolation, TooManyRejections, rejection_sample, symmetric_kl_bound
from .autodiff import Dual
from .estimators import (MovingAverageBaseline, elbo_grad, elbo_reparam, eubo_grad, eubo_reparam,
                         hme, importance, log_hme_density, log_imp_density, simulate_hme,
                         simulate_importance, trace_log_weight)
from .mh import MHProposal, MHState, mh_init, mh_step, run_chain
from .params import ParamStore
from .random import NotEnumerableError, RandomSource, as_source
from .strategy import (Compound, Kind, ReparamCompound, ReparamTerminal, Strategy, StrategyError,
                       SupportError, Terminal)
from .target import (GradientEstimate, JointModel, UnnormalizedTarget, WeightedSample, logmeanexp,
                     logsumexp)
