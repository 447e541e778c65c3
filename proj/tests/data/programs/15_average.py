def solution():
    """Test scores 82, 90, 77 and 95. What is the average?"""
    scores = [82, 90, 77, 95]
    result = sum(scores) / len(scores)
    return result
