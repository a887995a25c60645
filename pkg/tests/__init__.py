# Test package for mixfed.
