"""nimkit: neighbourhood data-model integration engine.

The package combines a small textual schema language (NDF) for describing
sensor and asset data models, a generic composite store that holds ingested
data as category/entry trees with timed values, forecasts and access
policies, and a registry service that turns newly registered models into
live HTTP endpoints without code generation or restarts.
"""

__version__ = "0.1.0"
