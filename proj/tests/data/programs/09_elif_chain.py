def solution():
    """Tickets cost $5 for kids under 12, $9 for adults under 65 and $6 for seniors. A family has ages 8, 35, 40 and 70. Total cost?"""
    ages = [8, 35, 40, 70]
    total = 0
    for age in ages:
        if age < 12:
            total += 5
        elif age < 65:
            total += 9
        else:
            total += 6
    result = total
    return result
