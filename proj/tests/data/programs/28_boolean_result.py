def solution():
    """Is 91 divisible by 7?"""
    result = 91 % 7 == 0
    return result
