"""Strategy constructors: terminal families, combinators and particle programs."""
from .agglom import agglom
from .basic import antithetic, compound, ravi_sir, sir
from .families import (AnnealingLadder, KernelFamily, MCVIConfig, categorical, categorical_logits,
                       gaussian, gaussian_param, identity_kernel, independent_kernel,
                       matrix_kernel, metropolis_kernel, point_mass, terminal, uniform)
from .mcvi import mcvi, rmcvi
from .particles import MoveProgram, move_smc_strategy
from .sequential import ais, smc
