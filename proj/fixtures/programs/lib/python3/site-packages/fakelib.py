def run(handler, items):
    return [handler(item) for item in items]


def validate(value):
    if value < 0:
        raise ValueError("negative values are not allowed: %d" % value)
    return value
