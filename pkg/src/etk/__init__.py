"""Schmidt-number robustness and tailored channel-discrimination toolkit."""

__version__ = "0.1.0"
