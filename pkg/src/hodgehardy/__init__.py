"""Hodge-Dirac harmonic analysis toolkit for weighted simplicial complexes."""

from .calculus import (
    SymbolFunction,
    SpectralDecomposition,
    apply_function,
    calderon_normalize,
    default_symbol,
    heat_semigroup,
    lanczos_apply_function,
    parse_symbol,
    q_transform,
    riesz_transform,
    s_transform,
    spectral_decomposition,
)
from .complex import (
    Ball,
    DoublingCertificate,
    MetricMeasureComplex,
    ball,
    estimate_doubling,
    generate_complex,
    load_complex,
    save_complex,
    volume,
    whitney_decompose,
)
from .exceptions import AdmissibilityError, ComplexError, HodgeHardyError, ProbeError, SymbolError
from .fields import SpaceTimeField, TimeGrid
from .hardy import (
    AdaptedCutoffs,
    MoleculeCertificate,
    hardy_norm,
    maximal_function,
    maximal_norm,
    molecular_decompose,
    validate_cw_atom,
    validate_molecule,
)
from .harness import ExperimentConfig, RegressionStore, generate_battery, run_experiment
from .operators import (
    GradedForm,
    GradedOperator,
    assemble_codifferential,
    assemble_dirac,
    assemble_exterior_derivative,
    assemble_laplacian,
    hodge_decompose,
    load_form,
    save_form,
)
from .probes import (
    ProbeReport,
    boundedness_probe,
    composition_decay_probe,
    gaffney_probe,
    gaussian_kernel_probe,
    offdiag_probe,
)
from .tent import (
    area_functional,
    atomic_decompose,
    carleson_functional,
    cone,
    duality_pairing,
    tent_norm,
    validate_atom,
)

__version__ = "0.1.0"
