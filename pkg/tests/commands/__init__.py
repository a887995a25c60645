"""Tests for the mixfed command line."""
