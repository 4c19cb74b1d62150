"""Fading-channel dynamics and cooperative-relaying reliability toolkit.

Submodules: ``fading`` (sum-of-scatterers engine), ``spectrum`` (PSD and
energy bandwidth), ``gp`` (Gaussian-process channel prediction),
``spatial`` (spatial correlation and pessimistic fade copying),
``protocol`` (analytic outage and margin search), ``mc`` (Monte Carlo
oracle), ``cli`` (command-line front end).
"""

__version__ = "0.1.0"
