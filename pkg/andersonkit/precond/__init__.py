from .ilu import Preconditioner, apply, build_preconditioner, identity_preconditioner, ilu0, ilut
from .ordering import bandwidth, diagonal_scaling, permute_symmetric, rcm_ordering

__all__ = [
    "Preconditioner",
    "apply",
    "bandwidth",
    "build_preconditioner",
    "diagonal_scaling",
    "identity_preconditioner",
    "ilu0",
    "ilut",
    "permute_symmetric",
    "rcm_ordering",
]
