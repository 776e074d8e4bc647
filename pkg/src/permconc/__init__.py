"""Concentration bounds for sampling without replacement and Hoeffding statistics.

Exact evaluation of the statistics, closed-form bounds, small-n oracles and a
seeded Monte Carlo engine to check the bounds against simulated tails.
"""

__version__ = "0.1.0"
