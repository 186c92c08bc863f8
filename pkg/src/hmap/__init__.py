"""Energy-aware hierarchical aggregation for mobile agents."""

__version__ = "0.1.0"
