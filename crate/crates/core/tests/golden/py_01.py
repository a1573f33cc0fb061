def add(a, b):
    # sum two numbers
    return a + b
