import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "lib", "python3", "site-packages"))
import fakelib


def handler(item):
    return fakelib.validate(item - 10)


def main():
    return fakelib.run(handler, [12, 4])


main()
