"""Frozen-coefficient generators and resolvents"""
