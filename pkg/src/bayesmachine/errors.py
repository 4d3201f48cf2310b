"""Exception hierarchy.

Every error carries a stable ``code`` that the CLI uses as its exit status.
"""

from __future__ import annotations


class BayesMachineError(Exception):
    code = 1


class ConfigurationError(BayesMachineError, ValueError):
    code = 2


class BoundsError(BayesMachineError, IndexError):
    code = 3


class InvalidStateError(BayesMachineError, ValueError):
    code = 4


class ProbabilityRangeError(BayesMachineError, ValueError):
    code = 5


class DataFormatError(BayesMachineError, ValueError):
    code = 6
