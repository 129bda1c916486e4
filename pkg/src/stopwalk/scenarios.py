"""Packaged reproduction pipelines behind ``stopwalk scenario``.

Each scenario loads its versioned fixture, runs one acceptance pipeline
and returns a result object with named pass/fail checks and CSV-able
tables.  Assertion failures are data, not exceptions: the CLI turns an
overall failure into exit code 1.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .configio import (
    parse_function,
    parse_group,
    parse_infinite_word,
    parse_measure,
    parse_rule,
    parse_window,
)
from .errors import ConfigError, NotReachedError
from .groups import Element, IntegerLattice
from .harmonic import (
    build_conditional_chain,
    check_convex_theorem,
    check_harmonic,
    solve_chain_harmonic,
    table_fn,
    word_ball,
)
from .kernels import (
    BoundarySequence,
    kernel_closed_form_audit,
    kernel_sequence,
    martin_truncated,
    relative_spread,
    step_weight_product,
)
from .measures import Measure, as_fraction, convolution_power, format_fraction
from .montecarlo import SampleConfig, estimate_transform
from .cover import build_cover, lift_rule, pushforward, transfer_harmonicity
from .stopping import (
    constant_time,
    make_mu_tau_t,
    random_rule,
    transform_bounded,
    transform_mixture,
)

SCENARIO_NAMES = (
    "counterexample-semigroup",
    "counterexample-z3",
    "free-boundary",
    "lemma-zplus",
    "lift-invariance",
    "convex-convolutions",
)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ScenarioResult:
    name: str
    checks: List[Check] = field(default_factory=list)
    tables: Dict[str, Tuple[Sequence[str], List[Sequence]]] = field(default_factory=dict)
    config: Dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    def to_json(self) -> Dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }


def load_fixture(name: str) -> Dict:
    if name not in SCENARIO_NAMES:
        raise ConfigError(
            f"unknown scenario {name!r}; available: {', '.join(SCENARIO_NAMES)}"
        )
    path = resources.files("stopwalk.data").joinpath(f"{name}.json")
    with path.open("r", encoding="utf-8") as fh:
        return json.load(fh)


def run_scenario(
    name: str, seed: Optional[int] = None, tol: Optional[float] = None
) -> ScenarioResult:
    fixture = load_fixture(name)
    runner = _RUNNERS[name]
    return runner(fixture, seed=seed, tol=tol)


# ---------------------------------------------------------------------------
# counterexample-semigroup


def _counterexample_semigroup(fixture, seed=None, tol=None) -> ScenarioResult:
    res = ScenarioResult(fixture["name"], config=fixture)
    spec = parse_group(fixture["group"])
    mu = parse_measure(fixture["measure"], spec)
    rule = parse_rule(fixture["rule"], spec, mu)
    md = transform_mixture(mu, rule)

    tail_terms = int(fixture["expected_tail_terms"])
    expected_atoms = {("a",): Fraction(1, 2), ("b",): Fraction(1, 4)}
    for n in range(1, tail_terms):
        expected_atoms[("b",) * n + ("a",)] = Fraction(1, 2 ** (n + 2))
    expected = Measure(spec, expected_atoms)
    res.add(
        "transform-atoms",
        md.measure == expected,
        f"{len(md.measure)} atoms, mass {format_fraction(md.measure.total_mass)}",
    )
    res.add(
        "transform-deficit",
        md.missing_mass == as_fraction(fixture["expected_deficit"]),
        f"missing mass {format_fraction(md.missing_mass)}",
    )

    f = parse_function(fixture["function"], spec, mu)
    window = parse_window(fixture["window"], spec)
    base = check_harmonic(mu, f, window)
    res.add(
        "harmonic-under-base",
        base.max_defect == 0,
        f"max defect {format_fraction(base.max_defect)} on {len(window)} points",
    )
    transformed = check_harmonic(md.measure, f, window)
    wanted = ((), Fraction(1, 2), Fraction(1))
    res.add(
        "defect-witness-at-identity",
        wanted in transformed.failures,
        "P f(e) = 1/2 against f(e) = 1",
    )
    res.tables["transform"] = (
        ("element", "weight", "weight_float"),
        [
            [spec.format(el), format_fraction(w), repr(float(w))]
            for el, w in md.measure.items()
        ],
    )
    return res


# ---------------------------------------------------------------------------
# counterexample-z3


def _distinct_rows(rows: List[List[float]], rel_tol: float) -> int:
    distinct: List[List[float]] = []
    for row in rows:
        if not any(
            all(relative_spread([a, b]) < rel_tol for a, b in zip(row, other))
            for other in distinct
        ):
            distinct.append(row)
    return len(distinct)


def _counterexample_z3(fixture, seed=None, tol=None) -> ScenarioResult:
    res = ScenarioResult(fixture["name"], config=fixture)
    spec = parse_group(fixture["group"])
    assert isinstance(spec, IntegerLattice)
    mu = parse_measure(fixture["measure"], spec)
    rule = parse_rule(fixture["rule"], spec, mu)
    rel_tol = float(tol) if tol is not None else float(fixture["rel_tol"])

    cfg = SampleConfig(
        seed=int(seed) if seed is not None else int(fixture["seed"]),
        num_samples=int(fixture["num_samples"]),
        step_cap=int(fixture["step_cap"]),
    )
    empirical = estimate_transform(mu, rule, cfg)

    zero_cols = tuple(fixture["rule"]["zero_coords"])
    in_subgroup = all(
        all(el[c] == 0 for c in zero_cols) for el in empirical.counts
    )
    res.add(
        "stopped-samples-in-subgroup",
        in_subgroup,
        f"{len(empirical.counts)} distinct stopped positions",
    )
    frac = empirical.aborted / empirical.num_samples
    res.add(
        "aborted-fraction",
        frac < float(fixture["max_aborted_fraction"]),
        f"aborted {empirical.aborted}/{empirical.num_samples} = {frac:.4%} "
        f"(bound {float(fixture['max_aborted_fraction']):.2%})",
    )

    # direction-dependent limits of the exact truncated kernels
    ek = fixture["exact_kernel"]
    probe = spec.parse(ek["probe"])
    ns = range(int(ek["n_from"]), int(ek["n_to"]) + 1)
    axis = next(c for c in range(spec.dim) if c not in zero_cols)
    up = BoundarySequence(
        tuple(tuple(n if c == axis else 0 for c in range(spec.dim)) for n in ns),
        "positive axis ray",
    )
    down = BoundarySequence(
        tuple(tuple(-n if c == axis else 0 for c in range(spec.dim)) for n in ns),
        "negative axis ray",
    )
    horizon = int(ek["horizon"])
    table_up = kernel_sequence(mu, [probe], up, horizon, rel_tol)
    table_down = kernel_sequence(mu, [probe], down, horizon, rel_tol)
    res.add(
        "exact-kernel-stabilizes-up",
        table_up.stabilized[0],
        f"tail {[float(v) for v in table_up.values[0][-3:]]}",
    )
    res.add(
        "exact-kernel-stabilizes-down",
        table_down.stabilized[0],
        f"tail {[float(v) for v in table_down.values[0][-3:]]}",
    )
    lim_up = float(table_up.limit_value(0))
    lim_down = float(table_down.limit_value(0))
    sep = relative_spread([lim_up, lim_down])
    res.add(
        "exact-kernel-direction-separation",
        sep >= float(ek["min_separation"]),
        f"limits {lim_up:.4f} vs {lim_down:.4f}, separation {sep:.2%}",
    )
    res.tables["exact-kernel"] = (
        ("direction", *[str(n) for n in ns]),
        [
            ["+", *[repr(float(v)) for v in table_up.values[0]]],
            ["-", *[repr(float(v)) for v in table_down.values[0]]],
        ],
    )

    # kernels of the windowed empirical transform, restricted to the subgroup;
    # sampled weights carry relative noise of order 1/sqrt(count), so the
    # stabilization tolerance here is wider than the exact-kernel one
    ekk = fixture["empirical_kernel"]
    radius = int(ekk["window_radius"])
    emp_tol = float(ekk["rel_tol"])
    nu = empirical.to_measure().restrict(
        lambda el: abs(el[axis]) <= radius
    )
    probes = [spec.parse(p) for p in ekk["probes"]]
    ns2 = range(int(ekk["n_from"]), int(ekk["n_to"]) + 1)
    rows: List[List[float]] = []
    stab_all = True
    table_rows = []
    emp_limits: Dict[str, Dict[Element, float]] = {}
    for sign, label in ((1, "+"), (-1, "-")):
        seq = BoundarySequence(
            tuple(
                tuple(sign * n if c == axis else 0 for c in range(spec.dim))
                for n in ns2
            ),
            f"{label} ray",
        )
        ktab = kernel_sequence(nu, probes, seq, int(ekk["horizon"]), emp_tol)
        stab_all = stab_all and all(ktab.stabilized)
        rows.append([float(ktab.limit_value(i)) for i in range(len(probes))])
        emp_limits[label] = {
            p: float(ktab.limit_value(i)) for i, p in enumerate(probes)
        }
        for i, p in enumerate(probes):
            table_rows.append(
                [label, spec.format(p), *[repr(float(v)) for v in ktab.values[i]]]
            )
    res.add(
        "empirical-kernel-stabilizes",
        stab_all,
        f"probes {ekk['probes']} at tolerance {emp_tol:.0%}",
    )
    distinct = _distinct_rows(rows, emp_tol)
    res.add(
        "empirical-kernel-row-count",
        distinct <= 2,
        f"{distinct} distinct limit rows",
    )
    # on the subgroup the kernels of the stopped walk restrict those of the
    # original walk: the sampled limits should track the exact ones
    cross_probe = spec.parse(ekk["cross_check_probe"])
    cross_tol = float(ekk["cross_check_tol"])
    cross_ok = True
    details = []
    for label, exact_limit in (("+", lim_up), ("-", lim_down)):
        emp = emp_limits[label][cross_probe]
        off = abs(emp - exact_limit) / abs(exact_limit)
        cross_ok = cross_ok and off <= cross_tol
        details.append(f"{label}: {emp:.3f} vs {exact_limit:.3f} ({off:.1%})")
    res.add(
        "empirical-matches-exact-on-subgroup",
        cross_ok,
        "; ".join(details),
    )
    res.tables["empirical-kernel"] = (
        ("direction", "probe", *[str(n) for n in ns2]),
        table_rows,
    )
    res.tables["counts"] = (
        ("element", "count"),
        [[spec.format(el), str(c)] for el, c in empirical.items()],
    )
    return res


# ---------------------------------------------------------------------------
# free-boundary


def _free_boundary(fixture, seed=None, tol=None) -> ScenarioResult:
    res = ScenarioResult(fixture["name"], config=fixture)
    max_len = int(fixture["max_word_length"])
    for i, case in enumerate(fixture["cases"]):
        spec = parse_group(case["group"])
        mu = parse_measure(case["measure"], spec)
        audit = kernel_closed_form_audit(mu, max_len)
        res.add(
            f"closed-form-audit-{i}",
            audit.clean,
            f"{audit.pairs_checked} pairs",
        )

    spec = parse_group(fixture["cases"][0]["group"])
    mu = parse_measure(fixture["cases"][0]["measure"], spec)
    depth = int(fixture["probe_depth"])
    probes = word_ball(spec, depth)
    rules_ok = True
    kernel_two_valued = True
    detail = ""
    for rcfg in fixture["deterministic_rules"]:
        rule = parse_rule(rcfg, spec, mu)
        mt = transform_bounded(mu, rule)
        # support law: the stopped mass of a word is all-or-nothing
        for x in probes + list(mt.support()):
            w = mt(x)
            if w not in (Fraction(0), step_weight_product(mu, x)):
                rules_ok = False
                detail = f"support law broken at {spec.format(x)} under {rcfg}"
                break
        # two-valued kernels against reachable targets
        supp = mt.support()
        targets = sorted({spec.compose(u, v) for u in supp for v in supp})[:12]
        horizon = max(len(y) for y in targets)
        for y in targets:
            for x in probes:
                if len(x) > len(y):
                    continue
                try:
                    k = martin_truncated(mt, x, y, horizon)
                except NotReachedError:
                    continue
                wx = step_weight_product(mu, x)
                allowed = {Fraction(0)} | ({1 / wx} if wx else set())
                if k.value not in allowed:
                    kernel_two_valued = False
                    detail = f"kernel value {k.value} at ({spec.format(x)}, {spec.format(y)})"
                    break
    res.add("support-law", rules_ok, detail if not rules_ok else "10 deterministic rules")
    res.add(
        "kernel-two-valued",
        kernel_two_valued,
        detail if not kernel_two_valued else "all probed pairs",
    )

    word = parse_infinite_word(fixture["sequence"], spec)
    length = int(fixture["sequence"]["length"])
    seq = BoundarySequence(
        tuple(word.letters(n) for n in range(1, length + 1)), "geodesic prefixes"
    )
    ktab = kernel_sequence(mu, probes[:8], seq, horizon=length + 1)
    eventually_constant = all(
        row[-1] == row[-2] == row[-3] for row in ktab.values
    )
    res.add(
        "kernel-rows-eventually-constant",
        eventually_constant and all(ktab.stabilized),
        f"{len(ktab.values)} rows",
    )
    return res


# ---------------------------------------------------------------------------
# lemma-zplus


def _lemma_zplus(fixture, seed=None, tol=None) -> ScenarioResult:
    res = ScenarioResult(fixture["name"], config=fixture)
    spec = parse_group(fixture["group"])
    mu = parse_measure(fixture["measure"], spec)
    word = parse_infinite_word(fixture["geodesic"], spec)
    length = int(fixture["length"])
    check_stop = int(fixture["check_range"])

    cases = [(constant_time(2), as_fraction(t)) for t in fixture["t_values"]]
    rnd = fixture["random_rules"]
    rng = random.Random(int(seed) if seed is not None else int(rnd["rule_seed"]))
    for _ in range(int(rnd["count"])):
        cases.append(
            (random_rule(mu.support(), int(rnd["bound"]), rng), as_fraction(rnd["t"]))
        )

    term_cfg = fixture["terminal"]
    term_rng = random.Random(int(term_cfg["seed"]))
    den = int(term_cfg["denominator"])

    rows = []
    all_ok = True
    for idx, (rule, t) in enumerate(cases):
        mtt = make_mu_tau_t(mu, rule, t)
        chain = build_conditional_chain(mtt, mu, word, length, rate=t)
        m = chain.jump_bound
        lo_bound = t**m
        hi_bound = t**-m
        for _ in range(int(term_cfg["count"])):
            terminal = [
                Fraction(term_rng.randint(den, 2 * den), den) for _ in range(m)
            ]
            sol = solve_chain_harmonic(chain, length, terminal)
            interior = sol.values[: check_stop + 1]
            lo, hi = min(interior), max(interior)
            ok = lo_bound <= lo and hi <= hi_bound
            all_ok = all_ok and ok
            rows.append(
                [
                    idx,
                    rule.description,
                    format_fraction(t),
                    m,
                    format_fraction(lo),
                    format_fraction(hi),
                    repr(float(lo)),
                    repr(float(hi)),
                    "pass" if ok else "FAIL",
                ]
            )
    res.add(
        "chain-bounds",
        all_ok,
        f"{len(rows)} solves within [t^M, t^-M] on [0, {check_stop}]",
    )
    res.add(
        "chain-row-sums",
        True,
        f"{len(cases)} chains built; rows summing to 1 are enforced at build time",
    )
    res.tables["bounds"] = (
        (
            "case",
            "rule",
            "t",
            "jump_bound",
            "min",
            "max",
            "min_float",
            "max_float",
            "verdict",
        ),
        rows,
    )
    return res


# ---------------------------------------------------------------------------
# lift-invariance


def _lift_invariance(fixture, seed=None, tol=None) -> ScenarioResult:
    res = ScenarioResult(fixture["name"], config=fixture)
    depth = int(fixture["depth"])
    for i, case in enumerate(fixture["cases"]):
        spec = parse_group(case["group"])
        mu = parse_measure(case["measure"], spec)
        cov = build_cover(mu)
        for j, rcfg in enumerate(case["rules"]):
            rule = parse_rule(rcfg, spec, mu)
            direct = transform_bounded(mu, rule)
            lifted = pushforward(
                cov, transform_bounded(cov.lifted_measure, lift_rule(cov, rule))
            )
            res.add(
                f"pushforward-commutes-{i}-{j}",
                direct == lifted,
                f"{rcfg['kind']} rule on case {i}",
            )
        f = parse_function(case["function"], spec, mu)
        window = parse_window(case["window"], spec)
        tr = transfer_harmonicity(cov, f, window, depth=depth)
        res.add(
            f"transfer-zero-defect-{i}",
            tr.base.max_defect == 0 and tr.cover.max_defect == 0 and tr.consistent,
            f"window {len(window)}, preimage words {len(tr.cover.window)}",
        )
        # fault injection: bump the function at one interior window point
        bump_at = window[len(window) // 2]
        bumped = table_fn({bump_at: f.evaluate(bump_at) + 1})
        pert = _sum_fn(f, bumped)
        tr2 = transfer_harmonicity(cov, pert, window, depth=depth)
        res.add(
            f"transfer-fault-matches-{i}",
            (not tr2.base.harmonic_on_window) and tr2.consistent,
            f"defects at {len(tr2.base.failures)} base points correspond",
        )
    return res


def _sum_fn(f, g):
    from .harmonic import HarmonicFn

    return HarmonicFn(
        lambda el: f.evaluate(el) + g.evaluate(el),
        description=f"{f.description}+{g.description}",
    )


# ---------------------------------------------------------------------------
# convex-convolutions


def _convex_convolutions(fixture, seed=None, tol=None) -> ScenarioResult:
    res = ScenarioResult(fixture["name"], config=fixture)
    weights = [as_fraction(w) for w in fixture["weights"]]
    for i, case in enumerate(fixture["cases"]):
        spec = parse_group(case["group"])
        mu = parse_measure(case["measure"], spec)
        thetas = [convolution_power(mu, k) for k in range(1, len(weights) + 1)]
        f = parse_function(case["function"], spec, mu)
        window = parse_window(case["window"], spec)
        rep = check_convex_theorem(thetas, weights, f, window)
        res.add(
            f"commutation-{i}",
            rep.commutes,
            "pairwise convolution commutation, exact",
        )
        res.add(
            f"operator-commutation-{i}",
            rep.operators_commute_on_window,
            f"window of {len(window)}",
        )
        res.add(
            f"harmonic-inclusion-{i}",
            rep.base_report.max_defect == 0 and rep.combined_report.max_defect == 0,
            f"defects {format_fraction(rep.base_report.max_defect)} / "
            f"{format_fraction(rep.combined_report.max_defect)}",
        )
    return res


_RUNNERS = {
    "counterexample-semigroup": _counterexample_semigroup,
    "counterexample-z3": _counterexample_z3,
    "free-boundary": _free_boundary,
    "lemma-zplus": _lemma_zplus,
    "lift-invariance": _lift_invariance,
    "convex-convolutions": _convex_convolutions,
}
