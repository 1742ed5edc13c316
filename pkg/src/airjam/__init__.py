"""airjam: friendly-jamming simulation library.

Codebook-driven jamming that the legitimate receiver can decode (compound
joint-typicality decoding) and cancel, while the eavesdropper's observation
stays close in total variation to the white-noise-jammed one.  All
information quantities are in nats.
"""

__version__ = "0.1.0"

from .gaussian import GaussianDist, factorize, log_density, sample, standard_normal
from .rng import RngStream

__all__ = [
    "GaussianDist",
    "RngStream",
    "factorize",
    "log_density",
    "sample",
    "standard_normal",
    "__version__",
]
