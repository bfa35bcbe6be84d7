from .realization import DelayStateSpace, realize
from .integrate import (SimConfig, SimTrace, InputHistory, Signal, step, sine, zero, from_samples, from_csv,
                        simulate_block, fir_taps, convolve_direct)
from .feedback import (small_gain_margin, small_gain_threshold, bezout_residual, closed_loop_demo,
                       simulate_ideal_loop, simulate_approx_loop, DemoSummary, REFERENCE_THRESHOLD,
                       DC_GAIN, NORM_N, NORM_D)
