"""Trace-norm regularized Tucker decompositions (convex and core-based
non-convex ADMM solvers) with HOSVD/HOOI baselines."""

from .baselines import hooi, hosvd
from .config import ConfigError, SolverConfig
from .ctd import CtdResult, DivergenceError, ctd_decompose
from .datagen import SynthSpec, TrialOutcome, add_outliers, gen_tucker, rse
from .kernels import backend
from .linalg import SvdError, procrustes, svt, thin_svd, trace_norm
from .model import FactorModel, IterationRecord, SolveReport
from .nctd import NctdResult, nctd_decompose
from .tensor import frob_norm, inner, kronecker, mode_product, refold, unfold

__version__ = "0.1.0"
