def parse_port(text):
    return int(text)


def load(settings):
    return parse_port(settings["port"])


load({"port": "eighty"})
