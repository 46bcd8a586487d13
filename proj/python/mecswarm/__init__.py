"""Task-offloading optimization toolkit for simulated MEC fleets.

Thin package wrapper around the compiled _mecswarm extension: environment
generation, the offloading cost model with a brute-force oracle, and the
fixed, adaptive, and agent-controlled swarm optimizers.
"""

from ._mecswarm import *  # noqa: F401,F403
from ._mecswarm import __version__  # noqa: F401
