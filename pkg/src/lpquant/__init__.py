"""Unbiased gradient quantizers with bit budgets and quantized first-order methods."""

from .bitcodec import BitMessage, MultisetType, multiset_rank, multiset_unrank
from .bounds import (
    alpha0_estimate,
    baseline_rate,
    benchmark_u,
    delta1,
    delta2,
    error_lower,
    precision_bounds,
)
from .exceptions import ConfigurationError, ContractError, CorruptMessageError, InputContractError
from .optimizers import Domain, MirrorMap, RunResult, psgd_run, smd_run
from .oracles import bernoulli_product_oracle, make_oracle, paninski_oracle
from .quantizers import (
    CUQ,
    RATQ,
    SimQ,
    SimQPlus,
    SplitQuantizer,
    bit_budget,
    derive_simqplus_spec,
    derive_split_spec,
    make_quantizer,
)
from .rotation import rotate, unrotate

__version__ = "0.1.0"
