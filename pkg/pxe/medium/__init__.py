"""Coefficient model, benchmark media and assumption checks"""
