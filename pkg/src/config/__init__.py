"""Process settings, pipeline configuration and synthetic scenarios."""
