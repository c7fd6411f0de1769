"""Preparation-independence, uninformativeness and N-subsystem determination checks."""

from .scenarios import *  # noqa: F401,F403
from .theorems import *  # noqa: F401,F403
from .generators import *  # noqa: F401,F403
from .narray import *  # noqa: F401,F403
