"""Path-planning MIPs over free-space partitions: big-M and independent-branching formulations."""

__version__ = "0.1.0"
