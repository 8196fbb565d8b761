"""Social network analysis of software-team interaction traces."""

__version__ = "0.1.0"
