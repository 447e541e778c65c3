def solution():
    """First square number above 500."""
    n = 1
    while True:
        if n * n > 500:
            break
        n += 1
    result = n * n
    return result
