"""Every good two-couple mechanism, found by brute force and drawn as a lattice.

A two-couple profile only matters through the set of agents who prefer the
"diagonal" matching. A mechanism is the family of such sets that get it.
"""

from neutralmatch.core import Symmetry
from neutralmatch.fouragent import (
    PAIR, catalog_lemma4, catalog_names, enumerate_valid_four, named_mechanism, render_lattice,
)

survivors = enumerate_valid_four()
names = catalog_names()
print(f"{len(survivors)} of 65536 truth tables are monotone, efficient and symmetric")
print("same set as the named catalog:", survivors == catalog_lemma4())

for m in sorted(survivors, key=lambda m: (len(m.generators), m.generators)):
    tag = " (anonymous)" if m.is_anonymous() else ""
    print(f"  {str(m):<44} {'/'.join(names[m])}{tag}")

print("\nMatched-by-default: either royal alone can insist on the royal couple.")
print(render_lattice(named_mechanism("mbd")))

crossed = Symmetry(PAIR, (3, 2, 1, 0))
print("\nUnder the crossed symmetry the count is the same:", len(enumerate_valid_four(crossed)))
