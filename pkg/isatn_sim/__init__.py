"""Carbon-aware orchestration simulator for integrated satellite-aerial-terrestrial networks."""

__version__ = "1.0.0"
