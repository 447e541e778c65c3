def solution():
    """A colony doubles every hour. Starting with 3 cells, how many after 10 hours?"""
    cells = 3 * 2 ** 10
    result = cells
    return result
