# Utility functions 