"""Online HJB path planning for a remotely controlled UAV over a lossy link."""

from .sim import SimConfig, SimResult, run, run_batch

__version__ = "0.1.0"

__all__ = ["SimConfig", "SimResult", "run", "run_batch", "__version__"]
