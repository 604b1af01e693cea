"""Tensor norms on finite-dimensional operator spaces.

Computes the minimal (spatial) norm, Haagerup norms (two- and three-fold),
completely bounded norms of maps, factorization norms through row/column
spaces and through Hilbert space, and two-sided estimates of the
commuting-pair tensor norm, together with a scripted verification suite
and CLI.
"""

from . import _kernels as kernels
from .cbnorm import (
    NormEstimate,
    cb_norm,
    cb_norm_hilbertian_domain,
    level_norm,
    smith_level,
)
from .exceptions import (
    DependentBasis,
    DimensionTooLarge,
    IdentityViolated,
    OpnormError,
    ShapeMismatch,
    ZeroTensor,
)
from .matcore import commutant_basis, gl_param, operator_norm
from .opspace import (
    ConcreteOperatorSpace,
    SpaceMap,
    TensorElement,
    identity_map,
    make_space,
    min_norm,
    space_map,
    standard_space,
    tensor_element,
    transpose_tensor,
)

__version__ = "0.1.0"
