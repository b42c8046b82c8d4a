"""Link-level simulator for an on-vehicle refracting-surface-aided
high-mobility link: two-stage estimation/beamforming protocol, baselines,
and a Monte Carlo experiment harness."""

from . import baselines, channel, estimation, harness, protocol, signal_math

__all__ = ["baselines", "channel", "estimation", "harness", "protocol", "signal_math"]
__version__ = "0.1.0"
