"""Trace-driven simulation of learning-augmented cache eviction."""
from predcache.trace import Trace, compute_next_arrivals
from predcache.policies import RunResult, run_policy
from predcache.policies._backend import NAME as BACKEND

__version__ = "0.1.0"
__all__ = ["Trace", "compute_next_arrivals", "RunResult", "run_policy", "BACKEND"]
