def solution():
    """Three friends split a $47.85 bill. How much does each pay, rounded to cents?"""
    bill = 47.85
    share = bill / 3
    result = round(share, 2)
    return result
