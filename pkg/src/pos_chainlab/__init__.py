"""Simulation and numerical-analysis lab for longest-chain proof-of-stake
consensus with correlated randomness and truncated fork choice."""

__version__ = "0.1.0"

from . import adversary, analyzer, blocktree, brw_numerics, lottery, simnet  # noqa: F401
