def solution():
    """Average of 7 and 8 as a float."""
    result = float(7 + 8) / 2
    return result
