def solution():
    """Temperatures are -4 and 11 degrees. What is the difference?"""
    result = abs(-4 - 11)
    return result
