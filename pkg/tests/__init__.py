"""Tests for calabiflow package."""
