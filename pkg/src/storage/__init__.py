"""Persistence of lab artifacts: reports, manifests and path dumps"""
