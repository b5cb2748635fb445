"""Fair active learning with fair clustering, uncertainty and representativeness."""

__version__ = "0.1.0"
