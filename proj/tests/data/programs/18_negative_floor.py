def solution():
    """Python-style floor division and modulo with negatives."""
    a = -17 // 5
    b = -17 % 5
    c = 17 // -5
    result = a * 100 + b * 10 + c
    return result
