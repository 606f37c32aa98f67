"""Test suite for the ODIA downlink simulator."""
