def shout(name):
    return name.upper()


shout(None)
