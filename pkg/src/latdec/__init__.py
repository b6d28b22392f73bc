"""Lattice decoding via Gaussian pruning budgets.

Sphere decoders whose search region is steered by an initial pruning
budget K and a Gaussian width sigma instead of a bare radius, plus the
classical baselines (nearest-plane, fixed-radius enumeration, randomized
backward sampling), brute-force oracles, and a MIMO Monte-Carlo harness.

Hot kernels run from a compiled extension when available; set
LATDEC_PURE_PYTHON=1 to force the pure-Python twin.
"""

from ._backend import kernel_backend
from .decode import (
    DecodeOptions,
    DecodeOutcome,
    KBudget,
    SearchNode,
    babai_sic,
    esd,
    fincke_pohst,
    k_for_radius,
    klein_sampler_decode,
    regularized_radius_along_path,
    rsd,
)
from .errors import (
    DimensionTooLargeError,
    InvalidConfigError,
    LatdecError,
    RadiusUndefinedError,
    ResourceLimitError,
    SingularBasisError,
)
from .gaussian import (
    LayerContext,
    SigmaPolicy,
    f_weight,
    jacobi_theta3,
    klein_layer_pmf,
    klein_prob,
    lattice_gauss_mass,
    layer_center,
    resolve_sigma,
    rho_z,
)
from .lattice import (
    LatticeBasis,
    QrFactors,
    UnimodularTransform,
    brute_force_cvp,
    complex_to_real,
    enumerate_in_radius_naive,
    lll_reduce,
    min_diag,
    qr_decompose,
)

__version__ = "0.1.0"
