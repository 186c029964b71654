"""Finite-block coding theory for classical-quantum channels with memory.

The package is organized bottom-up: :mod:`operators` (dense operator
algebra), :mod:`sources` (input processes), :mod:`channels` (cq-channel
families), :mod:`joint` (joint input-output states), :mod:`typicality`,
:mod:`coding` and :mod:`capacity`. :mod:`cli` runs file-driven experiments.
"""

from .capacity import (
    CapacityResult,
    holevo_cn,
    measured_mutual_info,
    multi_letter_lower_bound,
    periodic_product_rate,
    weak_converse_floor,
)
from .channels import (
    CPTPMap,
    CqBlockChannel,
    MarkovNoise,
    block_output_state,
    channel_from_dict,
    classical,
    finite_memory,
    from_quantum_channel,
    markov_noise,
    memory_decay_profile,
    memoryless,
    mixing_defect,
)
from .coding import Code, evaluate_errors, greedy_code, lift_code_to_dim
from .errors import (
    CQError,
    DimensionError,
    DomainError,
    InvariantError,
    NumericError,
    ResourceError,
    UnsupportedError,
    ValidationError,
)
from .joint import (
    EntropyTriple,
    JointBlockState,
    build_joint,
    entropies,
    holevo_information,
    induced_channel_block,
    information_rate_sequence,
)
from .operators import (
    Spectrum,
    dimension_cap,
    eigh,
    gentle_bounds,
    gentle_bounds_product,
    partial_trace,
    range_projection,
    tensor_product,
    variational_distance,
    von_neumann_entropy,
)
from .sources import (
    Alphabet,
    IIDProcess,
    MarkovProcess,
    PeriodicProductProcess,
    block_marginal,
    entropy_rate,
    shift_average,
)
from .typicality import (
    BlockSpectrumView,
    TypicalityReport,
    conditional_typicality_pipeline,
    dimension_covering_exponent,
    entropy_typical_projection,
    pinched_entropy,
    restricted_typical,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "Code",
    "BlockSpectrumView",
    "CPTPMap",
    "CQError",
    "CapacityResult",
    "CqBlockChannel",
    "DimensionError",
    "DomainError",
    "EntropyTriple",
    "IIDProcess",
    "InvariantError",
    "JointBlockState",
    "MarkovNoise",
    "MarkovProcess",
    "NumericError",
    "PeriodicProductProcess",
    "ResourceError",
    "Spectrum",
    "TypicalityReport",
    "UnsupportedError",
    "ValidationError",
    "block_marginal",
    "block_output_state",
    "build_joint",
    "channel_from_dict",
    "classical",
    "conditional_typicality_pipeline",
    "dimension_cap",
    "dimension_covering_exponent",
    "eigh",
    "entropies",
    "entropy_rate",
    "entropy_typical_projection",
    "evaluate_errors",
    "finite_memory",
    "from_quantum_channel",
    "gentle_bounds",
    "gentle_bounds_product",
    "greedy_code",
    "holevo_cn",
    "holevo_information",
    "induced_channel_block",
    "information_rate_sequence",
    "lift_code_to_dim",
    "markov_noise",
    "measured_mutual_info",
    "memory_decay_profile",
    "memoryless",
    "mixing_defect",
    "multi_letter_lower_bound",
    "partial_trace",
    "periodic_product_rate",
    "pinched_entropy",
    "range_projection",
    "restricted_typical",
    "shift_average",
    "tensor_product",
    "variational_distance",
    "von_neumann_entropy",
    "weak_converse_floor",
]
