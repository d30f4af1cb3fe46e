"""Rich terminal components for the wavebreak CLI."""
