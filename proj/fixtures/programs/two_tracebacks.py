import traceback


def first():
    return {}["alpha"]


try:
    first()
except KeyError:
    traceback.print_exc()

print("continuing after the first error")


def second():
    return [][0]


second()
