"""Column sums and per-method mean of per-pair mean ranks.

Reads data/reference/user_study_per_pair.csv with the csv module only.
Prints values frozen into tests/test_oracles.cpp.
"""
import csv
import pathlib
from fractions import Fraction

path = pathlib.Path(__file__).resolve().parents[2] / "data" / "reference" / "user_study_per_pair.csv"
with open(path, newline="") as f:
    rows = [r for r in csv.reader(f) if r and not r[0].startswith("#")]
header, body = rows[0], rows[1:]
methods = header[1:]
print("pairs", len(body))
print("row sums", sorted({str(sum(Fraction(x) for x in r[1:])) for r in body}))
for i, m in enumerate(methods, start=1):
    total = sum(Fraction(r[i]) for r in body)
    print(f"{m}: mean of means = {float(total / len(body)):.17g} ({total}/{len(body)})")
