"""Transaction cost analysis: shortfall decomposition, impact estimation and
the statistical toolkit used to compare dual-listed markets."""

__version__ = "0.1.0"
