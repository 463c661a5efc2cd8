"""Dynamical-decoupling simulation under realistic pulse errors."""
