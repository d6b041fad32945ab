"""Exact and asymptotic tools for the prime-sum deficit C_n."""
