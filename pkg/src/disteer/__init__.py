"""Device-independent steering: witnesses, simulation and self-testing bounds."""
