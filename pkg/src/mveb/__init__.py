"""Multi-view entropy bottleneck at desk scale.

Subpackages by concern: sphere (vMF geometry and oracles), kernels, stein
(score estimation), entropy (entropy-gradient surrogate), losses, encoder
(manual-backprop MLP on the sphere), data (synthetic two-view generator and
metrics), oracle (exact discrete information theory), train (loop, sweeps),
verify (cross-module property suite), cli.
"""

from . import data, encoder, entropy, kernels, losses, oracle, sphere, stein, train, verify

__all__ = [
    "data",
    "encoder",
    "entropy",
    "kernels",
    "losses",
    "oracle",
    "sphere",
    "stein",
    "train",
    "verify",
]

__version__ = "0.1.0"
