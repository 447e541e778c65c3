import math

def solution():
    """Buses hold 42 people. How many buses for 250 people, and how many full buses?"""
    people = 250
    buses_needed = math.ceil(people / 42)
    full_buses = math.floor(people / 42)
    result = buses_needed * 10 + full_buses
    return result
