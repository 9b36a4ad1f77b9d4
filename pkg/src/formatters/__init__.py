"""Formatters for lab results"""
