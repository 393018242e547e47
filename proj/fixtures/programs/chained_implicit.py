settings = {}


def size_of(value):
    return len(value)


def fallback():
    return settings["default_size"]


try:
    size_of(42)
except TypeError:
    fallback()
