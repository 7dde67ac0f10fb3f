"""Tests for emos-pooling."""
