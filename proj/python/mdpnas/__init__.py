"""Best-policy identification in tabular MDPs: planning, oracle allocations,
navigation, stopping and Monte-Carlo benchmarking."""

from ._mdpnas import *  # noqa: F401,F403
from ._mdpnas import __doc__  # noqa: F401
