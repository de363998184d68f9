"""Numerical workbench for the Weyl calculus on phase-space metrics.

The package provides exact linear algebra on positive-definite quadratic
forms over the symplectic plane (dual forms, harmonic means, symplectic
spectra), parametric metric fields with structure-constant estimation,
symbols with derivative access and their semi-norms, metric-adapted
partitions of unity, a dense-grid Weyl quantizer, the Moyal product with
its asymptotic expansion, and a verification harness for operator-norm
and lower-bound sweeps.
"""

from .forms import (
    QuadraticForm,
    SymplecticSpectrum,
    dual_form,
    gain,
    harmonic_mean,
    symplectic_matrix,
    symplectic_spectrum,
)
from .metrics import (
    Ball,
    MetricField,
    StructureConstants,
    WeightField,
    ball_distance,
    ball_separation,
    builtin_family,
    check_uncertainty,
    estimate_slowness,
    estimate_temperance,
    gain_weight,
    integrability_constant,
    structure_constants,
    weight_constants,
)
from .moyal import compose_integral, confinement_gain, expansion_term, remainder
from .partition import build_partition, member_seminorms, split_symbol
from .quantize import Discretization, OperatorMatrix, quantize
from .sampling import SampleSpec
from .symbols import (
    GridSymbol,
    Symbol,
    builtin_symbols,
    confinement_norms,
    seminorm,
    sjostrand_norm,
)
from .verify import (
    BoundReport,
    CotlarInput,
    biconfinement_decay,
    cotlar_bound,
    fp_decompose,
    verify_fp,
    verify_l2,
    verify_lambda_weight,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
