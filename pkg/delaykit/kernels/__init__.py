from .base import (ExpPolyTerm, FiniteKernel, PiecewiseKernel, StabilityClass, AtomicDistribution,
                   KernelLike, coalesce, eval_kernel, elementary_kernel, scale_add, derivative_lift,
                   shift_support, zero_extend, difference, pieces_of)
from .quadrature import adaptive_simpson, integrate_panels, abs_integral, l1_norm, integrate_kernel
from .io import (kernel_to_dict, kernel_from_dict, kernel_to_json, kernel_from_json, atomic_to_dict,
                 atomic_from_dict, load_kernel, read_json, write_json, dumps)
