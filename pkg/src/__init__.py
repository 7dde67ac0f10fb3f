"""EMOS pooling: post-processing, combination and verification of ensemble forecasts."""
