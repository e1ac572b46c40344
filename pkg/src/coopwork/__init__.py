"""Cooperative task execution under a partitionable network."""
