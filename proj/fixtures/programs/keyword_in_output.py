import sys

print("Traceback logging is enabled for this run", file=sys.stderr)
print("no errors: Traceback count = 0", file=sys.stderr)
