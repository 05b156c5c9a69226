"""Pyramid vector quantization codec for dense tensors.

Directions live on integer points of the L1 sphere (the pyramid), indexed by
an implicit codebook with arbitrary-precision codes; amplitudes follow a Beta
quantile model; optional randomized Hadamard rotations spread weight mass and
an optional calibration Hessian drives GPTQ-style error feedback.
"""

from .amplitude import (
    AmplitudeRecord,
    BetaParams,
    InterpolatedBeta,
    beta_cdf,
    beta_ppf,
    dequantize_amplitude,
    dequantize_row_amplitudes,
    quantize_amplitude,
    quantize_row_amplitudes,
)
from .bench import KsResult, QsnrReport, emit_csv, parse_csv, run_beta_ks, run_qsnr
from .bignum import CodeInteger, UnderflowError
from .codec import (
    PackedCodes,
    decode,
    encode,
    pack_codes,
    quantize_direction,
    to_sphere,
    unpack_codes,
)
from .coherence import HadamardSpec, derive_specs, fwht, rotate_matrix, unrotate_matrix
from .formats import (
    FileInfo,
    FormatError,
    inspect_file,
    read_dense,
    read_quantized,
    write_dense,
    write_quantized,
)
from .lattice import SizeTable, build_size_table, choose_pulses, count_codes, enumerate_pyramid
from .pipeline import (
    HessianState,
    PvqConfig,
    QuantizedTensor,
    dequantize_activations,
    dequantize_layer,
    effective_bpw,
    estimate_hessian,
    optimal_scale,
    proxy_loss,
    quantize_activations,
    quantize_layer,
    rtn_quantize,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeRecord",
    "BetaParams",
    "CodeInteger",
    "FileInfo",
    "FormatError",
    "inspect_file",
    "HadamardSpec",
    "HessianState",
    "InterpolatedBeta",
    "KsResult",
    "PackedCodes",
    "PvqConfig",
    "QsnrReport",
    "QuantizedTensor",
    "SizeTable",
    "UnderflowError",
    "beta_cdf",
    "beta_ppf",
    "build_size_table",
    "choose_pulses",
    "count_codes",
    "decode",
    "dequantize_activations",
    "dequantize_amplitude",
    "dequantize_layer",
    "dequantize_row_amplitudes",
    "derive_specs",
    "effective_bpw",
    "emit_csv",
    "encode",
    "enumerate_pyramid",
    "estimate_hessian",
    "fwht",
    "optimal_scale",
    "pack_codes",
    "parse_csv",
    "proxy_loss",
    "quantize_activations",
    "quantize_amplitude",
    "quantize_direction",
    "quantize_layer",
    "quantize_row_amplitudes",
    "read_dense",
    "read_quantized",
    "rotate_matrix",
    "rtn_quantize",
    "run_beta_ks",
    "run_qsnr",
    "to_sphere",
    "unpack_codes",
    "unrotate_matrix",
    "write_dense",
    "write_quantized",
]
