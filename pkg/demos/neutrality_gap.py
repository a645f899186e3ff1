"""A mechanism that looks gender-neutral but is not, once some agents have left.

The cascade lets couples act as royals in index order. When a royal couple
splits, whoever took the lower-indexed partner decides which side picks next.
Reflecting every profile reflects every outcome, yet some subgames are plain
dictatorships of one side.
"""

from neutralmatch import axioms as ax
from neutralmatch.core import Instance, Symmetry
from neutralmatch.twosided import RoyalCascade, one_side_dictatorship, uniform_neutral_royalty

inst = Instance.two_sided(3)
cascade = ax.MechanismTable.from_mechanism(RoyalCascade(inst))
sigma = Symmetry.canonical(inst)

print("weakly neutral:", ax.check_weak_gn(cascade, sigma).verdict)
report = ax.check_gn(cascade)
print("neutral in every subgame:", report.verdict)
w = report.witness
print("  agents left:", w["subset"])
print("  fixed rankings of those gone:", w["outsiders"])
print("  witness replays:", ax.revalidate(report, cascade))

P = inst.parse_agent
sub = ax.continuation_submechanism(cascade, [P(a) for a in w["subset"]],
                                   {P(a): tuple(P(x) for x in r) for a, r in w["outsiders"].items()})
side, order = one_side_dictatorship(sub.table)
print(f"  the subgame is a serial dictatorship of the {side}:",
      [inst.label(sub.agent_map[a]) for a in order])

print("\nBy contrast, a neutral royalty mechanism passes both checks.")
royal = ax.MechanismTable.from_mechanism(uniform_neutral_royalty(inst))
print("  weakly neutral:", ax.check_weak_gn(royal, sigma).verdict)
print("  neutral in every subgame:", ax.check_gn(royal).verdict)
print("  but it is not stable:", ax.check_stability(royal).witness["blocking_pair"])
