"""Numerical engine: symbols, paths, time sets, box counting, condition checks, covers and the runner"""
