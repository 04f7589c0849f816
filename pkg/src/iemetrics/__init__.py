"""Reading-order dependent and independent metrics for named-entity extraction."""

__version__ = "0.1.0"
