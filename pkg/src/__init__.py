"""Exact Virasoro Kac-module computations at central charge c_{p,q}"""
