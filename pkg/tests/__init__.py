"""Tests for tripartite_optomech package."""
