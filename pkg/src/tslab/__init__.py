"""Thompson Sampling laboratory for stochastic contextual bandits with linear payoffs."""
from tslab.kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
