def solution():
    """$1000 at 5% yearly interest compounded monthly for 2 years."""
    principal = 1000
    rate = 0.05
    months = 24
    amount = principal * (1 + rate / 12) ** months
    result = round(amount, 2)
    return result
