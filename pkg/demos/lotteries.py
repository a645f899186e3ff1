"""Three lotteries over the same cyclic market, compared agent by agent.

Run with ``python3 demos/lotteries.py``.
"""

from neutralmatch.core import two_sided_profile
from neutralmatch.fouragent import catalog_entries
from neutralmatch.randomized import (
    find_ranking_flip, fosd_dominates, half_support_matrix, rsd_matrix, uniform_royalty_matrix,
)

# Each man's first choice is the woman who ranks him last, and vice versa.
p = two_sided_profile([[3, 2, 1], [1, 3, 2], [2, 1, 3]], [[3, 2, 1], [1, 3, 2], [2, 1, 3]])
print("profile:", p)

rsd = rsd_matrix(p)
print("\nRandom serial dictatorship over all 720 calling orders:")
print(rsd)

royalty = uniform_royalty_matrix(p)
print("\nRoyal couple drawn uniformly from the 9 man-woman pairs (majority rule at the end):")
print(royalty)

half = half_support_matrix(p)
print("\nCoin flip between the men-optimal and women-optimal stable matchings:")
print(half)

print("\nfirst-order dominance:")
for a, b, x, y in (("half", "rsd", half, rsd), ("rsd", "royalty", rsd, royalty),
                   ("royalty", "rsd", royalty, rsd)):
    print(f"  {a:>7} over {b:<7}: {fosd_dominates(p, x, y)}")

# Which endgame rules give the same royalty matrix? Not all of them do.
hits = {}
for name, m in catalog_entries():
    if uniform_royalty_matrix(p, m) == royalty:
        hits.setdefault(m, []).append(name)
print(f"\n{len(hits)} distinct endgame rules reproduce the royalty matrix:")
print("  " + ", ".join(sorted("/".join(v) for v in hits.values())))
print("with matched-by-default instead:")
print(uniform_royalty_matrix(p, "f"))

flip = find_ranking_flip(seed=0, budget=100)
print("\nrandom search for a profile where royalty beats RSD (100 draws):",
      flip if flip is not None else "none found")
