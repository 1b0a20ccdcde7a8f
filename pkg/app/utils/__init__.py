# Report formatting
