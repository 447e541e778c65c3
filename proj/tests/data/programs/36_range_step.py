def solution():
    """Sum of every 4th number from 100 down to 1."""
    total = 0
    for n in range(100, 0, -4):
        total += n
    result = total
    return result
