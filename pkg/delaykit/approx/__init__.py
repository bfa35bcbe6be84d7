from .bernstein import (ApproxConfig, ApproxTarget, Approximant, approx_theta0, approx_theta_lambda,
                        approx_derivative, approx_kernel, measure_error, phi_lambda, theta0_nodes,
                        power_coefficients)
from .lowpass import LowpassLumped, lowpass_lumped, lowpass_residual, lowpass_from_dict
from .search import order_bound, select_order, error_sweep
