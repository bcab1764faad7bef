"""Day-ahead electricity price forecasting workbench."""

__version__ = "0.1.0"
