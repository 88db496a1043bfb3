"""Test suite for msmodal."""
