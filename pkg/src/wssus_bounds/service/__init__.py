"""HTTP service exposing the scenario drivers."""
