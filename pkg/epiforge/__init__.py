"""Calibrate uncertain social SIAR epidemic models and train neural forecasters."""
from . import calibration  # noqa: F401
from . import cli  # noqa: F401
from . import clear_cache  # noqa: F401
from . import dataset  # noqa: F401
from . import evaluation  # noqa: F401
from . import models  # noqa: F401
from . import nar  # noqa: F401
from . import pinn  # noqa: F401
from . import quadrature  # noqa: F401
