def read_timeout(raw):
    return float(raw)


def configure(raw):
    try:
        return read_timeout(raw)
    except ValueError as err:
        raise RuntimeError("invalid timeout setting") from err


configure("soon")
