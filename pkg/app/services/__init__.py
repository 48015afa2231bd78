"""Evolution, simulation and analysis services."""
