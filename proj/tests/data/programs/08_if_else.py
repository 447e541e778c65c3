def solution():
    """Shipping is free over $50, otherwise $7. Ann buys 3 books at $14. What does she pay?"""
    subtotal = 3 * 14
    if subtotal > 50:
        shipping = 0
    else:
        shipping = 7
    result = subtotal + shipping
    return result
