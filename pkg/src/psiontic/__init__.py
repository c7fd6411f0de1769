"""Finite ontological models and mechanical checks of psi-ontology theorems."""
