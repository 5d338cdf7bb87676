"""Fourier-Bessel expansions and zero-padded convolution on disks."""

from .basis import (
    BasisSpec,
    NormalizationTable,
    eval_basis,
    eval_radial,
    lommel_integral,
    normalization,
    radial_table,
)
from .bessel import BoundaryCondition, ZeroTable, eval_j, eval_j_prime, find_zeros
from .convolution import (
    ConvolutionResult,
    KernelCache,
    autocorrelation_table,
    basis_pair_coeffs,
    convolve_direct,
    convolve_grid,
    convolve_spectral,
    drum_hat,
    drum_table,
    lattice_tables,
    plancherel_norm,
    plancherel_polar,
    rotation_descriptors,
)
from .errors import (
    AliasingError,
    DiskHarmonicsError,
    NearSingularWeightError,
    NumericalGuardError,
    SupportError,
    ValidationError,
)
from .sampling import (
    DiskFunction,
    FourierTable,
    restrict_and_pad,
    square_fourier_coeff,
    windowed_ft,
    windowed_table,
)
from .spectra import (
    CoefficientMatrix,
    LatticeShells,
    analyze_direct,
    analyze_polar,
    analyze_spectral,
    calibrate,
    lattice_shells,
    rotate_coefficients,
    spectral_weight,
    synthesize,
)

__all__ = [
    "BasisSpec",
    "NormalizationTable",
    "eval_basis",
    "eval_radial",
    "lommel_integral",
    "normalization",
    "radial_table",
    "BoundaryCondition",
    "ZeroTable",
    "eval_j",
    "eval_j_prime",
    "find_zeros",
    "ConvolutionResult",
    "KernelCache",
    "autocorrelation_table",
    "basis_pair_coeffs",
    "convolve_direct",
    "convolve_grid",
    "convolve_spectral",
    "drum_hat",
    "drum_table",
    "lattice_tables",
    "plancherel_norm",
    "plancherel_polar",
    "rotation_descriptors",
    "AliasingError",
    "DiskHarmonicsError",
    "NearSingularWeightError",
    "NumericalGuardError",
    "SupportError",
    "ValidationError",
    "DiskFunction",
    "FourierTable",
    "restrict_and_pad",
    "square_fourier_coeff",
    "windowed_ft",
    "windowed_table",
    "CoefficientMatrix",
    "LatticeShells",
    "analyze_direct",
    "analyze_polar",
    "analyze_spectral",
    "calibrate",
    "lattice_shells",
    "rotate_coefficients",
    "spectral_weight",
    "synthesize",
]

__version__ = "0.1.0"
