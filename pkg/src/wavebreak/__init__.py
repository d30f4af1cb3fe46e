"""wavebreak: damped cold plasma oscillations, breaking and its suppression."""

__version__ = "0.1.0"
