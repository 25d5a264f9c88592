"""Lateral grids, fields and spectral calculus"""
