# Test suite for the MEA classification pipeline
