"""Two-stage planner for urban green space budgets, locations, and designs."""

__version__ = "0.1.0"
