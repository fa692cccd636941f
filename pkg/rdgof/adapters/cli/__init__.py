# Command-line adapter
