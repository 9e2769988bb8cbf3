"""Joint channel estimation and signal recovery for RIS-assisted multi-user
MISO downlinks: ALS over the PARAFAC model of the received tensor, BiG-AMP
factorization of the equivalent channel, baselines and a Monte Carlo harness."""

__version__ = "0.1.0"
