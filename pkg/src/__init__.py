"""Correlated Wishart one-point function toolkit"""
