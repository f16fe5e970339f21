"""String constraint solving with cyclic reduction trees, grammar extraction
and Presburger length reasoning."""

__version__ = "0.1.0"
