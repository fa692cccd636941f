# Sampling adapters
