"""Full-connectivity probability of soft random geometric graphs in obstructed domains."""
from .analytic import PfcBreakdown, Regime
from .channel import ChannelModel, connect_prob
from .geometry import (
    Annulus,
    Disk,
    NodeSet,
    Obstacle,
    Sphere,
    SphericalShell,
    SquareWithObstacles,
    sample_binomial,
    sample_poisson,
)
from .graph import exact_connection_prob, is_connected, sample_graph
from .montecarlo import Binomial, EnsembleEstimate, Fixed, Poisson, estimate_pfc
from .quadrature import connectivity_mass, pfc_numeric

__version__ = "0.1.0"

__all__ = [
    "Annulus", "Binomial", "ChannelModel", "Disk", "EnsembleEstimate", "Fixed", "NodeSet", "Obstacle",
    "PfcBreakdown", "Poisson", "Regime", "Sphere", "SphericalShell", "SquareWithObstacles",
    "connect_prob", "connectivity_mass", "estimate_pfc", "exact_connection_prob", "is_connected",
    "pfc_numeric", "sample_binomial", "sample_poisson", "sample_graph",
]
