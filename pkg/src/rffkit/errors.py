"""Exception hierarchy shared by every module."""

import numpy as np


class RffError(Exception):
    """Base class for all errors raised by rffkit."""

    kind = "error"


class InputError(RffError, ValueError):
    """Malformed data: wrong shapes, non-finite values, unparsable cells."""

    kind = "input"


class ConfigError(RffError, ValueError):
    """Invalid hyperparameters or an unsupported option combination."""

    kind = "config"


class UnsupportedFamilyError(ConfigError):
    kind = "unsupported-family"


class UnsupportedDimensionError(ConfigError):
    kind = "unsupported-dimension"


class DegenerateDistributionError(InputError):
    kind = "degenerate-distribution"


class SingularMatrixError(RffError, np.linalg.LinAlgError):
    """A linear system could not be solved stably."""

    kind = "singular"


class ModelFormatError(RffError, ValueError):
    kind = "model-format"
