def foo():
    return 1 / 0
foo()
