"""Rate-form Eulerian toolkit for isotropic Cauchy elasticity."""

__version__ = "0.1.0"

from .laws import IsotropicLaw, MaterialParams, inverse_law, invariants, stress  # noqa: F401
from .tangent import TangentStiffness, c_iso_mandel, h_zj_generic, h_zj_mooney  # noqa: F401
from .tensors import (  # noqa: F401
    Spectral3,
    apply4,
    from_mandel,
    mat_func,
    min_eig_66,
    spectral_decompose,
    sym_skew_split,
    to_mandel,
)
