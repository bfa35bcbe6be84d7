from . import defaults, precision
from .defaults import default_threads
