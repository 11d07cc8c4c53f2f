"""Test suite for the Wishart one-point function toolkit."""
