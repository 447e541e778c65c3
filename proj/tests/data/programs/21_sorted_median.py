def solution():
    """Find the median of 7, 3, 9, 1, 5."""
    values = sorted([7, 3, 9, 1, 5])
    result = values[len(values) // 2]
    return result
