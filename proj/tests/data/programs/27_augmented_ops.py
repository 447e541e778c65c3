def solution():
    """Apply a sequence of augmented operations."""
    x = 7
    x *= 6
    x -= 2
    x //= 3
    x **= 2
    x %= 100
    result = x
    return result
