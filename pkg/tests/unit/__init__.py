# Unit tests for the mixfed library, formatters and response helpers.
