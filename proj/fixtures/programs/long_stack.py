def level14(items):
    return items[99]


def level13(items):
    return level14(items)


def level12(items):
    return level13(items)


def level11(items):
    return level12(items)


def level10(items):
    return level11(items)


def level9(items):
    return level10(items)


def level8(items):
    return level9(items)


def level7(items):
    return level8(items)


def level6(items):
    return level7(items)


def level5(items):
    return level6(items)


def level4(items):
    return level5(items)


def level3(items):
    return level4(items)


def level2(items):
    return level3(items)


def level1(items):
    return level2(items)


level1([1, 2, 3])
