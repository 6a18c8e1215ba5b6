"""Structure-preserving lattice simulator for the U(1) Yang-Mills-Higgs gradient flow on a flat 2-torus."""

from .fiber import FiberModel
from .fields import FlowState, GaugeTransform, apply_gauge
from .flow import IntegratorConfig, run
from .grid import GridSpec

__all__ = ["FiberModel", "FlowState", "GaugeTransform", "GridSpec", "IntegratorConfig", "apply_gauge", "run"]
__version__ = "0.1.0"
