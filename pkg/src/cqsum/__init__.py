"""Coset codes and square-root decoders for computing sums of distributed
sources over classical-quantum multiple access channels."""

__version__ = "0.1.0"

from .channels import (
    CqMac,
    CqPtp,
    InducedSumEnsemble,
    SourcePair,
    additive_mac,
    additive_reduction,
    doubly_symmetric_source,
    example1_channel,
    independent_source,
    induced_sum_ensemble,
)
from .coding import (
    KmCode,
    MacSumCode,
    NestedCosetCode,
    PtpCodebook,
    build_mac_sum_code,
    build_ptp_code,
    choose_representatives,
    km_decode_ml,
    km_encode,
    ncc_codeword,
    random_ncc,
    random_parity,
)
from .errors import Budget, DomainError, ResourceError, UsageError, ValidationError
from .example1 import example1_analysis, find_example1_witness
from .field import FieldMatrix, FieldScalar, field_arithmetic, mat_mul, uniform_random_matrix
from .quantum import (
    FAIL,
    CqEnsemble,
    Povm,
    holevo_information,
    psd_inverse_sqrt,
    spectral_decomposition,
    square_root_povm,
    tensor_product,
    typical_projector,
    von_neumann_entropy,
)
from .rates import (
    EmbeddingSpec,
    RateReport,
    binary_convolution,
    binary_entropy,
    classical_typical_set,
    function_reconstructibility_check,
    message_sum_rate,
    optimize_message_sum_rate,
    shannon_entropy,
    unstructured_condition,
)
from .simulation import (
    SimResult,
    coset_coverage_probability,
    end_to_end_function_error,
    exact_mac_sum_error,
    exact_ptp_error,
    km_error_monte_carlo,
    pinching_check,
)
