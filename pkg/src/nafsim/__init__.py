"""Space-time block codes and Monte Carlo tooling for half-duplex
amplify-and-forward relay channels: code construction, channel models,
exact ML decoding, tradeoff curves and a reproducible simulation harness."""

__version__ = "0.1.0"
