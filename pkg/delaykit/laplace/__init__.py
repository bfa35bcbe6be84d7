from .transfer import (theta_hat, theta_hat_mp, ElementaryComponent, Decomposition, decompose,
                       transfer_eval, numeric_laplace)
from .frequency import FrequencyGrid, BodePoint, frequency_response, write_bode_csv
