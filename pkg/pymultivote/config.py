"""This module contains configuration variables.

They may be set by your code as follows::

    from pymultivote import config
    ...
    config.VARIABLE = value
"""

import os

DEFAULT_ORDERS = (1.25, 1.5) + tuple(float(order) for order in range(2, 65))
"""The Rényi orders used when no explicit grid is given.

Integers 2..64 plus 1.25 and 1.5. Must be strictly increasing and every
order must exceed 1.

See also:
    :meth:`pymultivote.accountant.OrderGrid.default`.
"""


CLIP_TOLERANCE = 1e-12
"""Numerical slack allowed when checking that a clipped row respects τ."""


ORACLE_MAX_VOTERS = 4
"""Largest voter count the brute-force sensitivity oracle will enumerate.

See also:
    :func:`pymultivote.analysis.sensitivity_oracle`.
"""

ORACLE_MAX_CANDIDATES = 4
"""Largest candidate count the brute-force sensitivity oracle will enumerate.
"""


APPROX_GAP_MULTIPLE = 10.0
"""How many noise standard deviations both top gaps must span before the
closed-form approximation of the data-dependent bound is trusted.

See also:
    :func:`pymultivote.analysis.approx_bound`.
"""


MU_SCALES = (0.5, 1.0, 2.0)
"""Multipliers of σ·√(ln(1/q)) tried for the higher order μ₂ when selecting
the parameters of the data-dependent bound. μ₁ is always μ₂ + 1.
"""


OUTPUT_DIR = os.environ.get("PYMULTIVOTE_OUTPUT_DIR", ".")
"""Directory the command line tool writes its artifacts to.

Read from the ``PYMULTIVOTE_OUTPUT_DIR`` environment variable at import time,
defaulting to the current directory. The ``--output-dir`` flag overrides it.
"""


DEFAULT_LOG_LEVEL = "WARNING"
"""The log level the command line tool configures when none is given."""
