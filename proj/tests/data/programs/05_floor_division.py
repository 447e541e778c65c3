def solution():
    """Eggs are packed 12 per carton. How many full cartons come from 250 eggs?"""
    eggs = 250
    cartons = eggs // 12
    result = cartons
    return result
