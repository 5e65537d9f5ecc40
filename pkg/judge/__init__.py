"""Tests and brute-force oracles for the softchase engine."""
