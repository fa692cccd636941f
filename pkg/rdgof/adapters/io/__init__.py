# File adapters
