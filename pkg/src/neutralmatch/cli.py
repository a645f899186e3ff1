"""Command-line front end.

Exit codes: 0 everything passed, 1 an axiom or reproduction failed, 2 usage
or parse error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from importlib import resources

from . import axioms as ax
from .core import (
    Instance, Matching, ProfileError, Symmetry, load_profile, profile_from_json,
    reflect_matching,
)
from .fouragent import (
    catalog_lemma4, catalog_names, enumerate_valid_four, named_mechanism,
    render_lattice,
)
from .onesided import (
    DomainGapError, SequentialDictatorship, TableOrder, TwoAgentRule, identify_picking_order,
    run_two_agent,
)
from .randomized import (
    RationalMatrix, fosd_dominates, half_support_matrix, rsd_matrix, uniform_royalty_matrix,
)
from .twosided import (
    RoyalCascade, RoyaltyMechanism, SerialDictatorship2, StableChoice, induced_one_sided,
    one_side_dictatorship, stable_matchings, uniform_neutral_royalty,
)

AXIOMS = {"eff", "gsp", "wgn", "gn", "ir", "stab"}
TARGETS = ["rsd-table", "royalty-table", "fosd", "stability", "lemma4", "axiom-counterexamples"]


class UsageError(Exception):
    pass


# --- mechanism specs -------------------------------------------------------

class _TwoAgent:
    def __init__(self, rule: TwoAgentRule):
        self.instance = Instance.one_sided(2)
        self.rule = rule
        self.name = rule.label(self.instance)

    def __call__(self, p):
        return run_two_agent(self.rule, p)


def _int_list(text: str) -> list[int]:
    try:
        vals = json.loads(text)
    except json.JSONDecodeError:
        raise UsageError(f"expected a list like [1,2,3], got {text!r}") from None
    if not isinstance(vals, list) or not all(isinstance(v, int) for v in vals):
        raise UsageError(f"expected a list of integers, got {text!r}")
    return vals


def _options(text: str) -> dict:
    out = {}
    for part in filter(None, re.split(r",(?![^\[]*\])", text)):
        if "=" not in part:
            raise UsageError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_mechanism(spec: str, n: int | None = None):
    """Build a mechanism object from a command-line spec string."""
    head, _, rest = spec.partition(":")
    try:
        if head == "fixed" or (head == "sd" and rest.startswith("fixed=")):
            seq = _int_list(rest if head == "fixed" else rest[len("fixed="):])
            inst = Instance.one_sided(len(seq))
            return SequentialDictatorship.fixed(inst, [inst.parse_agent(a) for a in seq])
        if head == "sd2":
            opts = _options(rest)
            labels = opts.get("order", "").strip("[]").split(",")
            inst = Instance.two_sided(len(labels) // 2)
            return SerialDictatorship2(inst, [inst.parse_agent(a) for a in labels])
        if head in ("all_D", "all_U"):
            opts = _options(rest)
            inst = Instance.two_sided(_need_n(n, spec))
            first = inst.parse_agent("m" + opts.get("first", "1"))
            terminal = opts.get("terminal", "f")
            named_mechanism(terminal)
            return uniform_neutral_royalty(inst, head[-1], first, terminal)
        if head == "royal_cascade":
            return RoyalCascade(Instance.two_sided(_need_n(n, spec)))
        if head == "stable":
            return StableChoice(Instance.two_sided(_need_n(n, spec)))
        if head == "rmin":
            inst = Instance.one_sided(n or 3)
            return ax.RMinMechanism(inst, ax.three_agent_priority(inst))
        if head == "dictator":
            return _TwoAgent(TwoAgentRule.dictator(Instance.one_sided(2).parse_agent(rest)))
        if head == "unanimity":
            return _TwoAgent(TwoAgentRule.unanimity(rest))
        if head == "constant":
            kind_two = rest[:1] in ("m", "w")
            size = _need_n(n, spec)
            inst = Instance.two_sided(size) if kind_two else Instance.one_sided(size)
            return ax.ConstantMechanism(Matching.parse(inst, rest))
        if head == "json":
            with open(rest) as fh:
                data = json.load(fh)
            if data.get("kind") == "picking_order":
                order = TableOrder.from_json(data)
                return SequentialDictatorship(order.instance, order, name=f"json:{rest}")
            if data.get("kind") == "royalty":
                return RoyaltyMechanism.from_json(data)
            raise UsageError(f"{rest}: unknown mechanism kind {data.get('kind')!r}")
    except (ValueError, KeyError, OSError) as e:
        raise UsageError(f"bad mechanism spec {spec!r}: {e}") from None
    raise UsageError(f"unknown mechanism spec {spec!r}")


def _need_n(n, spec):
    if n is None:
        raise UsageError(f"{spec!r} needs --n (or a --profile to read it from)")
    return n


# --- output helpers ----------------------------------------------------------

def _emit(args, text: str, data):
    if args.format == "json":
        print(json.dumps(data, indent=2, sort_keys=False))
    else:
        print(text)


def _involution(mu: Matching) -> dict:
    lab = mu.instance.label
    return {lab(i): lab(j) for i, j in enumerate(mu.partner)}


def _fixtures() -> dict:
    return json.loads(resources.files("neutralmatch").joinpath("data/fixtures.json").read_text())


# --- commands --------------------------------------------------------------------

def cmd_run(args) -> int:
    p = load_profile(args.profile)
    mech = parse_mechanism(args.mech, p.instance.n)
    if mech.instance != p.instance:
        raise UsageError(f"mechanism is for a {mech.instance}, profile is a {p.instance}")
    mu = mech(p)
    inv = _involution(mu)
    text = f"{mu}\n" + " ".join(f"{k}->{v}" for k, v in inv.items())
    _emit(args, text, {"mechanism": getattr(mech, "name", args.mech), "matching": str(mu),
                       "involution": inv})
    return 0


def _sigma(inst: Instance, text: str | None) -> Symmetry:
    if not text or text == "canonical":
        return Symmetry.canonical(inst)
    sub = Matching.parse(inst, text)
    return Symmetry(inst, sub.partner)


def cmd_verify(args) -> int:
    mech = parse_mechanism(args.mech, args.n)
    inst = mech.instance
    wanted = [a.strip() for a in args.axioms.split(",")] if args.axioms else (
        ["eff", "gsp", "wgn"] if inst.two else ["eff", "gsp", "ir"])
    bad = [a for a in wanted if a not in AXIOMS]
    if bad:
        raise UsageError(f"unknown axiom(s): {', '.join(bad)}")
    if not inst.two and {"wgn", "gn", "stab"} & set(wanted):
        raise UsageError("wgn, gn and stab apply to two-sided mechanisms")
    if inst.two and "ir" in wanted:
        raise UsageError("ir applies to one-sided mechanisms")
    mode = ax.Mode.parse(args.mode)
    table = ax.MechanismTable.from_mechanism(mech, materialize=False)
    if mode.exhaustive:
        table.materialize(args.jobs)
    coalition = "all" if args.coalition == "all" else int(args.coalition)
    sigma = _sigma(inst, args.sigma) if inst.two else None
    reports = []
    for a in wanted:
        if a == "eff":
            rep = ax.check_efficiency(table, mode)
        elif a == "gsp":
            rep = ax.check_group_sp(table, coalition, mode)
        elif a == "wgn":
            rep = ax.check_weak_gn(table, sigma, mode)
        elif a == "gn":
            rep = ax.check_gn(table, mode)
        elif a == "ir":
            rep = ax.check_ir(table, mode)
        else:
            rep = ax.check_stability(table, mode)
        reports.append(rep)
    lines = []
    for r in reports:
        lines.append(f"{r.axiom}: {r.verdict} ({r.profiles_checked} profiles, {r.mode})")
        if not r.holds:
            lines.append("  witness: " + json.dumps(r.to_json()["witness"]))
    _emit(args, "\n".join(lines), [r.to_json() for r in reports])
    return 0 if all(r.holds for r in reports) else 1


def cmd_enumerate_four(args) -> int:
    from .fouragent import PAIR
    sigma = Symmetry.canonical(PAIR) if args.sigma == "canonical" else Symmetry(PAIR, (3, 2, 1, 0))
    survivors = enumerate_valid_four(sigma)
    names = catalog_names(sigma)
    catalog = catalog_lemma4(sigma)
    rows = sorted(survivors, key=lambda m: (len(m.generators), m.generators))
    text = [f"{len(survivors)} monotone, efficient, symmetric two-couple mechanisms"
            f"; catalog has {len(catalog)}; "
            f"missing from catalog {len(survivors - catalog)}, extra {len(catalog - survivors)}",
            "note: the empty generator set in case (d) is excluded (it never picks the diagonal)"]
    for m in rows:
        text.append(f"  {str(m):<44} {'/'.join(names.get(m, ['?']))}"
                    + ("  [anonymous]" if m.is_anonymous() else ""))
        if args.lattice:
            text.append(render_lattice(m))
    data = {"survivors": len(survivors), "catalog": len(catalog),
            "missing": len(survivors - catalog), "extra": len(catalog - survivors),
            "mechanisms": [{"generators": [list(g) for g in m.generators], "table": m.table,
                            "names": names.get(m, []), "anonymous": m.is_anonymous()}
                           for m in rows]}
    _emit(args, "\n".join(text), data)
    return 0 if survivors == catalog else 1


def cmd_induce(args) -> int:
    mech = parse_mechanism(args.mech, args.n)
    inst = mech.instance
    if not inst.two:
        raise UsageError("induce needs a two-sided mechanism")
    table = ax.MechanismTable.from_mechanism(mech, jobs=args.jobs)
    g = induced_one_sided(table, _sigma(inst, args.sigma))
    rep = [ax.check_efficiency(g), ax.check_group_sp(g, 2)]
    order = identify_picking_order(g)
    text = [f"induced one-sided mechanism on {g.instance.n} agents"]
    text += [f"{r.axiom}: {r.verdict}" for r in rep]
    text.append("picking order: " + (json.dumps(order.to_json()["nodes"]) if order
                                      else "not a sequential dictatorship"))
    _emit(args, "\n".join(text), {"reports": [r.to_json() for r in rep],
                                  "picking_order": order.to_json() if order else None})
    return 0 if all(r.holds for r in rep) else 1


def cmd_randomize(args) -> int:
    p = load_profile(args.profile)
    if not p.instance.two:
        raise UsageError("randomize needs a two-sided profile")
    out = {}
    if args.scheme in ("rsd", "all"):
        out["rsd"] = rsd_matrix(p)
    if args.scheme in ("royalty", "all"):
        named_mechanism(args.terminal)
        out["royalty"] = uniform_royalty_matrix(p, args.terminal)
    if args.scheme in ("half", "all"):
        out["half_support"] = half_support_matrix(p)
    text = []
    for k, m in out.items():
        text += [f"[{k}]", str(m)]
    data = {k: m.to_json() for k, m in out.items()}
    if args.scheme == "royalty" or args.scheme == "all":
        note = ("royal pair drawn uniformly from all man-woman pairs, regime D; later rounds "
                "use the lowest free man and woman; terminal rule " + args.terminal
                + " with the index-order pairing as its diagonal (a reconstruction)")
        text.append("note: " + note)
        data["note"] = note
    _emit(args, "\n".join(text), data)
    return 0


# --- reproduce -------------------------------------------------------------------

def _matrix_check(name, got: RationalMatrix, expected, provenance):
    want = RationalMatrix.parse(expected)
    return {"check": name, "pass": got == want, "provenance": provenance,
            "got": got.to_json(), "expected": want.to_json()}


def reproduce(target: str) -> list[dict]:
    fx = _fixtures()
    cyc = profile_from_json(fx["cyclic_profile"]["profile"])
    inst = cyc.instance
    results = []
    if target == "rsd-table":
        results.append(_matrix_check("RSD allocation at the cyclic profile", rsd_matrix(cyc),
                                     fx["rsd_table"]["matrix"], fx["rsd_table"]["provenance"]))
    elif target == "royalty-table":
        spec = fx["royalty_table"]
        results.append(_matrix_check(
            f"uniform royal-pair lottery (terminal {spec['terminal']})",
            uniform_royalty_matrix(cyc, spec["terminal"]), spec["matrix"], spec["provenance"]))
        want = RationalMatrix.parse(spec["matrix"])
        from .fouragent import catalog_entries
        hits = {}
        for name, mech in catalog_entries():
            if uniform_royalty_matrix(cyc, mech) == want:
                hits.setdefault(mech.table, []).append(name)
        results.append({"check": "catalog terminal rules reproducing the table",
                        "pass": bool(hits), "provenance": "derived",
                        "got": sorted("/".join(v) for v in hits.values())})
    elif target == "fosd":
        h, r, y = half_support_matrix(cyc), rsd_matrix(cyc), uniform_royalty_matrix(cyc)
        prov = fx["fosd_chain"]["provenance"]
        results.append({"check": "half-support dominates RSD", "pass": fosd_dominates(cyc, h, r),
                        "provenance": prov})
        results.append({"check": "RSD dominates royalty", "pass": fosd_dominates(cyc, r, y),
                        "provenance": prov})
        results.append({"check": "royalty does not dominate RSD",
                        "pass": not fosd_dominates(cyc, y, r), "provenance": "derived"})
    elif target == "stability":
        sigma = Symmetry.canonical(inst)
        got = stable_matchings(cyc)
        want = {Matching.parse(inst, s) for s in fx["stability"]["stable"]}
        results.append({"check": "stable matchings", "pass": set(got) == want,
                        "provenance": fx["stability"]["provenance"],
                        "got": [str(m) for m in got]})
        for mu in got:
            refl = reflect_matching(sigma, mu)
            results.append({"check": f"{mu} is not its own reflection", "pass": refl != mu,
                            "provenance": "published", "got": str(refl)})
    elif target == "lemma4":
        surv, cat = enumerate_valid_four(), catalog_lemma4()
        anon = sorted(m.table for m in surv if m.is_anonymous())
        want_anon = sorted(named_mechanism(a).table for a in fx["lemma4"]["anonymous"])
        results.append({"check": "survivor count", "pass": len(surv) == fx["lemma4"]["survivors"],
                        "provenance": fx["lemma4"]["provenance"], "got": len(surv)})
        results.append({"check": "catalog diff is empty", "pass": surv == cat,
                        "provenance": "derived",
                        "got": {"missing": len(surv - cat), "extra": len(cat - surv)}})
        results.append({"check": "anonymous survivors are the quota rules",
                        "pass": anon == want_anon,
                        "provenance": fx["lemma4"]["anonymous_provenance"]})
    elif target == "axiom-counterexamples":
        results += _reproduce_counterexamples(fx)
    else:
        raise UsageError(f"unknown target {target!r}; choose from {', '.join(TARGETS)}")
    return results


def _reproduce_counterexamples(fx) -> list[dict]:
    out = []
    spec = fx["rmin_counterexample"]
    p = profile_from_json(spec["profile"])
    one = p.instance
    f = ax.MechanismTable.from_mechanism(ax.RMinMechanism(one, ax.three_agent_priority(one)))
    hits = ax.manipulations_at(f, p, 1)
    match = [w for w in hits if w["coalition"] == spec["coalition"]
             and w["misreport"] == spec["misreport"]
             and w["deviation_outcome"] == Matching.parse(one, spec["deviation_outcome"])]
    out.append({"check": "R-minimizing mechanism: agent 2 gains by reporting 3,2,1",
                "pass": bool(match) and f(p) == Matching.parse(one, spec["outcome"]),
                "provenance": spec["provenance"]})
    out.append({"check": "R-minimizing mechanism is efficient",
                "pass": ax.check_efficiency(f).holds, "provenance": "published"})
    cspec = fx["cascade_counterexample"]
    inst = Instance.two_sided(3)
    c = ax.MechanismTable.from_mechanism(RoyalCascade(inst))
    out.append({"check": "royal cascade is weakly gender-neutral",
                "pass": ax.check_weak_gn(c, Symmetry.canonical(inst)).holds,
                "provenance": cspec["provenance"]})
    rep = ax.check_gn(c)
    out.append({"check": "royal cascade is not gender-neutral (3 couples)",
                "pass": not rep.holds and ax.revalidate(rep, c), "provenance": cspec["provenance"],
                "got": {"subset": rep.witness and rep.witness["subset"],
                        "outsiders": rep.witness and rep.witness["outsiders"]}})
    cont = cspec["continuation"]
    inst4 = Instance.two_sided(cont["n"])
    subset = [inst4.parse_agent(a) for a in cont["subset"]]
    prefs = {inst4.parse_agent(a): tuple(inst4.parse_agent(x) for x in r)
             for a, r in cont["outsiders"].items()}
    g = ax.continuation_submechanism(RoyalCascade(inst4), subset, prefs)
    kind = one_side_dictatorship(g.table) if g else None
    ok = g is not None and not ax.weak_gn_symmetries(g.table) and kind and kind[0] == "women"
    out.append({"check": "continuation after m1->w3, w1->m2 is a women serial dictatorship "
                         "with no symmetry (4 couples)",
                "pass": bool(ok), "provenance": cspec["provenance"],
                "got": None if not kind else {
                    "side": kind[0], "order": [inst4.label(g.agent_map[a]) for a in kind[1]]}})
    return out


def cmd_reproduce(args) -> int:
    targets = TARGETS if args.target == "all" else [args.target]
    all_results, lines = {}, []
    for t in targets:
        res = reproduce(t)
        all_results[t] = res
        for r in res:
            lines.append(f"{'PASS' if r['pass'] else 'FAIL'}  {t}: {r['check']} [{r['provenance']}]")
            if "got" in r and args.format == "text":
                lines.append("      " + json.dumps(r["got"]))
    _emit(args, "\n".join(lines), all_results)
    return 0 if all(r["pass"] for res in all_results.values() for r in res) else 1


# --- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neutralmatch",
        description="Run and audit group strategy-proof matching mechanisms.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, jobs=False):
        p.add_argument("--format", choices=["text", "json"], default="text")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("run", help="run a mechanism on a profile")
    p.add_argument("--mech", required=True)
    p.add_argument("--profile", required=True)
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="check axioms over the profile space")
    p.add_argument("--mech", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--axioms", help="comma list of eff,gsp,wgn,gn,ir,stab")
    p.add_argument("--mode", default="exhaustive", help="exhaustive or sample:K:SEED")
    p.add_argument("--coalition", default="2", help="largest coalition size, or 'all'")
    p.add_argument("--sigma", help="symmetry as pairs, e.g. m1-w1,m2-w2 (default canonical)")
    common(p, jobs=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("enumerate-four", help="brute-force the two-couple catalog")
    p.add_argument("--sigma", choices=["canonical", "crossed"], default="canonical")
    p.add_argument("--lattice", action="store_true", help="draw each survivor's lattice")
    common(p)
    p.set_defaults(func=cmd_enumerate_four)

    p = sub.add_parser("induce", help="induced one-sided mechanism of a neutral mechanism")
    p.add_argument("--mech", required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--sigma")
    common(p, jobs=True)
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("randomize", help="exact lottery matrices at a profile")
    p.add_argument("--profile", required=True)
    p.add_argument("--scheme", choices=["rsd", "royalty", "half", "all"], default="all")
    p.add_argument("--terminal", default="a2", help="catalog name of the four-agent rule")
    common(p)
    p.set_defaults(func=cmd_randomize)

    p = sub.add_parser("reproduce", help="recompute a published table or counterexample")
    p.add_argument("target", choices=TARGETS + ["all"])
    common(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except (UsageError, ProfileError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (DomainGapError, ax.BudgetError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
