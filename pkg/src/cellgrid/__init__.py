"""cellgrid: deterministic switch-fabric simulation and control-protocol codecs."""

__version__ = "0.1.0"
