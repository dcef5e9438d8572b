"""Serves the halfspace w = e1, b = B over the line protocol; B is argv[1]."""
import sys

dim = int(sys.argv[2]) if len(sys.argv) > 2 else 2
b = float(sys.argv[1])
out = sys.stdout
out.write(f"CSMOOTH/1 d={dim} classes=2\n")
out.flush()
for line in sys.stdin:
    line = line.rstrip("\n")
    if line == "Q":
        break
    k = int(line.split(" ")[1])
    labels = []
    for _ in range(k):
        z = sys.stdin.readline().split(" ")
        labels.append("1" if float(z[0]) <= b else "0")
    out.write(" ".join(labels) + "\n")
    out.flush()
