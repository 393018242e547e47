config = {"host": "localhost"}


def lookup(key):
    return config[key]


lookup("port")
