import logging

import jax

jax.config.update("jax_enable_x64", True)


def _install_logger():
    log = logging.getLogger(__name__)
    if not log.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("[%(levelname)s] %(name)s: %(message)s"))
        log.addHandler(handler)
        log.setLevel(logging.WARNING)
    return log


_install_logger()

from . import (errors, utilities, kernels, laplace, approx, metrics, sim)

__version__ = "0.1.0"
