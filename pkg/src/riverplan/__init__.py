"""Basin-scale hydropower portfolio planning toolkit."""

__version__ = "0.1.0"
