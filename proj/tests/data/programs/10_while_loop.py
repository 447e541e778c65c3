def solution():
    """Sam saves $15 a week. How many weeks until he has at least $200?"""
    savings = 0
    weeks = 0
    while savings < 200:
        savings += 15
        weeks += 1
    result = weeks
    return result
