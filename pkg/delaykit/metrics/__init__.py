from .distance import GraphBall, a_norm_distance, in_ball, atomic_distance, integral_atomic_approximation
from .frequency import ErrorReport, frequency_error, check_grid
