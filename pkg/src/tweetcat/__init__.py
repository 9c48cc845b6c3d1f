"""Multi-class short-text (tweet) categorization toolkit."""

__version__ = "0.1.0"
