"""Random coefficients A(n) of exp(sum_k X(k) z^k / sqrt k) with complex Gaussian X(k)."""

from .errors import (
    ConfigError,
    ContractError,
    DomainError,
    InvariantViolation,
    MissingInputError,
    NonFiniteError,
    RMCError,
    ScaleError,
    SizeError,
    UnsupportedConstraintError,
)
from .gaussian import (
    CircleSamples,
    CoefficientSeries,
    GaussianSequence,
    cauchy_recover,
    coeff_via_cauchy,
    eval_on_circle,
    exp_series_fast,
    exp_series_naive,
    exp_series_real,
    sample_gaussians,
)
from .partitions import (
    Partition,
    PartitionConstraint,
    A_oracle,
    a_coeff,
    a_second_moment,
    decompose,
    enumerate_partitions,
    restricted_second_moment,
    restricted_sum,
)
from .blocks import BlockSchedule, b_factor, build_schedule
from .stats import MCEstimate

__version__ = "0.1.0"
