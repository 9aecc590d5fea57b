"""Network slicing over licensed and unlicensed bands.

Tooling for multi-operator spectrum sharing studies: a slotted
listen-before-talk coexistence simulator, graph-based channel-access
estimation, and convex slicing optimizers (centralized LP, distributed
ADMM, dual subgradient) plus a coalition-game layer on top.
"""

__version__ = "0.1.0"
