"""Film and Casimir-cavity critical-field model, synthetic experiment and analysis."""

from ._core import *  # noqa: F401,F403
