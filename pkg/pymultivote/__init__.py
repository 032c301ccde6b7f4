"""Differentially private multi-winner voting with RDP accounting."""

# Ballots are binary matrices of n voters by k candidates; every release goes
# through one of the mechanisms below and is priced by the accountant.


import logging

from .accountant import BudgetLedger, DpGuarantee, OrderGrid, RdpCurve
from .ballots import BallotMatrix, clip
from .exceptions import MultiVoteException
from .mechanisms import MechanismConfig, QueryOutcome, aggregate

# Will be parsed by setup.py to determine package metadata
__author__ = "Anders Melchiorsen <amelchio@nogoto.net>"
# Please increment the version number and add the suffix "-dev" after
# a release, to make it possible to identify in-development code
__version__ = "0.1.0"
__website__ = "https://github.com/amelchio/pymultivote"
__license__ = "MIT License"

# You really should not `import *` - it is poor practice
# but if you do, here is what you get:
__all__ = [
    "aggregate",
    "clip",
    "BallotMatrix",
    "BudgetLedger",
    "DpGuarantee",
    "MechanismConfig",
    "MultiVoteException",
    "OrderGrid",
    "QueryOutcome",
    "RdpCurve",
]

# http://docs.python.org/2/howto/logging.html#library-config
# Avoids spurious error messages if no logger is configured by the user

logging.getLogger(__name__).addHandler(logging.NullHandler())
