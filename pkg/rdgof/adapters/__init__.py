# Adapters
