"""Model files, subcommand dispatch, deterministic reporting.

Exit codes: 0 on success or a true verdict, 1 on a false/none verdict,
2 on any input error.  Reports are byte-identical for identical inputs
and seeds; all state sets print in the declared carrier order.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Mapping

from . import game as game_mod
from . import logic as logic_mod
from .coalgebra import Coalgebra, SpanLeg, StochRelationPair, check_stochastic_span, product_mediator
from .effectivity import (EffectivityFunction, Portfolio, eff_from_kernel,
                          eff_from_transition, kernel_from_eff)
from .monad import INSTANCES, check_monad_laws
from .prob import FinMeasure, MarkovKernel, as_fraction, format_fraction
from .space import FinMeasurableSpace, InputError, PreconditionError


@dataclass
class ModelBundle:
    space: FinMeasurableSpace
    kernels: dict
    valuations: dict
    portfolios: dict   # game name -> EffectivityFunction
    transitions: dict  # game name -> powerset Coalgebra

    def kripke_model(self) -> logic_mod.KripkeModel:
        if not self.kernels:
            raise InputError("model declares no kernels; a Kripke check needs at least one")
        return logic_mod.KripkeModel(self.space, self.kernels, self.valuations)

    def game_model(self) -> game_mod.GameModel:
        effectivity: dict = {}
        for name, k in self.kernels.items():
            effectivity[name] = eff_from_kernel(k)
        for name, eff in self.portfolios.items():
            effectivity[name] = eff
        for name, ts in self.transitions.items():
            effectivity[name] = eff_from_transition(ts)
        return game_mod.GameModel(self.space, effectivity, self.valuations)

    def sole_kernel(self, name: str | None) -> MarkovKernel:
        if name is not None:
            if name not in self.kernels:
                raise InputError(f"model has no kernel named {name!r}")
            return self.kernels[name]
        if len(self.kernels) != 1:
            raise InputError("model has several kernels; pick one with --kernel")
        return next(iter(self.kernels.values()))


def _fail(path: str, reason: str):
    raise InputError(f"{path}: {reason}")


def _parse_space(doc, path: str) -> FinMeasurableSpace:
    if not isinstance(doc, dict) or "states" not in doc:
        _fail(path, "expected an object with a states list")
    states = doc["states"]
    if not isinstance(states, list) or not states or not all(isinstance(s, str) for s in states):
        _fail(f"{path}.states", "expected a nonempty list of state names")
    atoms = doc.get("atoms")
    try:
        if atoms is None:
            return FinMeasurableSpace.discrete(states)
        return FinMeasurableSpace.make(states, atoms)
    except InputError as e:
        _fail(f"{path}.atoms", str(e))


def _parse_measure(space: FinMeasurableSpace, doc, path: str) -> FinMeasure:
    if not isinstance(doc, dict):
        _fail(path, "expected an object of weights")
    try:
        if all(k in set(space.carrier) for k in doc):
            return FinMeasure.from_state_weights(space, doc)
        atom_by_name = {",".join(sorted(a)): a for a in space.atoms}
        weights = {}
        for k, v in doc.items():
            if k not in atom_by_name:
                _fail(f"{path}.{k}", "unknown state or atom")
            weights[atom_by_name[k]] = v
        return FinMeasure.from_atom_weights(space, weights)
    except InputError as e:
        _fail(path, str(e))


def _parse_portfolio(space: FinMeasurableSpace, doc, path: str) -> Portfolio:
    if not isinstance(doc, dict) or "kind" not in doc or "measures" not in doc:
        _fail(path, 'expected {"kind": ..., "measures": [...]}')
    kind = doc["kind"]
    if kind not in ("kernel", "generators"):
        _fail(f"{path}.kind", f"unknown kind {kind!r}")
    measures = doc["measures"]
    if not isinstance(measures, list) or not measures:
        _fail(f"{path}.measures", "expected a nonempty list")
    parsed = tuple(_parse_measure(space, m, f"{path}.measures[{i}]") for i, m in enumerate(measures))
    try:
        return Portfolio(kind, parsed)
    except InputError as e:
        _fail(path, str(e))


def load_model(path: str) -> ModelBundle:
    """Parse and validate a model file; every invariant is checked eagerly
    and errors carry the offending key path."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read model file {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"model file {path} is not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise InputError("model document must be a JSON object")
    space = _parse_space(doc.get("space"), "space")
    carrier = set(space.carrier)

    kernels = {}
    for name, rows in (doc.get("kernels") or {}).items():
        if not isinstance(rows, dict):
            _fail(f"kernels.{name}", "expected an object of rows")
        parsed_rows = {}
        for x in space.carrier:
            if x not in rows:
                _fail(f"kernels.{name}.{x}", "missing row")
            parsed_rows[x] = _parse_measure(space, rows[x], f"kernels.{name}.{x}")
        extra = set(rows) - carrier
        if extra:
            _fail(f"kernels.{name}", f"rows for unknown states {sorted(extra)}")
        try:
            kernels[name] = MarkovKernel(space, space, parsed_rows)
        except InputError as e:
            _fail(f"kernels.{name}", str(e))

    valuations = {}
    for p, states in (doc.get("valuations") or {}).items():
        if not isinstance(states, list):
            _fail(f"valuations.{p}", "expected a list of states")
        unknown = set(states) - carrier
        if unknown:
            _fail(f"valuations.{p}", f"unknown states {sorted(unknown)}")
        v = frozenset(states)
        if not space.is_measurable(v):
            _fail(f"valuations.{p}", "valuation is not a measurable set")
        valuations[p] = v

    portfolios = {}
    for name, per_state in (doc.get("portfolios") or {}).items():
        if not isinstance(per_state, dict):
            _fail(f"portfolios.{name}", "expected an object keyed by state")
        table = {}
        for x in space.carrier:
            if x not in per_state:
                _fail(f"portfolios.{name}.{x}", "missing portfolio")
            table[x] = _parse_portfolio(space, per_state[x], f"portfolios.{name}.{x}")
        try:
            portfolios[name] = EffectivityFunction(space, table)
        except InputError as e:
            _fail(f"portfolios.{name}", str(e))

    transitions = {}
    for name, succ in (doc.get("transitions") or {}).items():
        if not isinstance(succ, dict):
            _fail(f"transitions.{name}", "expected an object of successor lists")
        table = {}
        for x in space.carrier:
            if x not in succ:
                _fail(f"transitions.{name}.{x}", "missing successor list")
            unknown = set(succ[x]) - carrier
            if unknown:
                _fail(f"transitions.{name}.{x}", f"unknown states {sorted(unknown)}")
            table[x] = frozenset(succ[x])
        transitions[name] = Coalgebra("powerset", space.carrier, table)

    names = list(kernels) + list(portfolios) + list(transitions)
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise InputError(f"game names declared in several sections: {sorted(dupes)}")
    return ModelBundle(space, kernels, valuations, portfolios, transitions)


def _print_states(space: FinMeasurableSpace, states: frozenset) -> None:
    print("states:", " ".join(str(s) for s in space.sorted(states)) if states else "(none)")


def _cmd_check(args) -> int:
    bundle = load_model(args.model[0])
    if args.game:
        model = bundle.game_model()
        phi = game_mod.parse_game_formula(args.formula)
        result = game_mod.eval_game_formula(model, phi, args.star_depth)
        space = model.space
    else:
        model = bundle.kripke_model()
        phi = logic_mod.parse_formula(args.formula)
        result = logic_mod.validity_set(model, phi)
        space = model.space
    print(f"formula: {args.formula}")
    _print_states(space, result)
    if args.report_dir:
        from . import report
        rows = [(str(s), int(s in result)) for s in space.carrier]
        report.write_csv(args.report_dir, "validity.csv", ["state", "holds"], rows)
        if args.game and isinstance(phi, game_mod.GDiamond):
            sub = game_mod.eval_game_formula(model, phi.sub, args.star_depth)
            tf = game_mod.threshold_eval(model, game_mod.normalize(phi.game), sub, args.star_depth)
            report.write_interval_figure(args.report_dir, "validity.png", tf, phi.q,
                                         title=args.formula)
        else:
            report.write_membership_figure(args.report_dir, "validity.png", space, result,
                                           title=args.formula)
        print(f"report written to {args.report_dir}")
    return 0 if result else 1


def _cmd_equiv(args) -> int:
    if len(args.model) != 2:
        raise InputError("equiv needs exactly two --model arguments")
    m1 = load_model(args.model[0]).kripke_model()
    m2 = load_model(args.model[1]).kripke_model()
    if args.behavioral:
        witness = logic_mod.behavioral_witness(m1, m2)
        if witness is None:
            print("behaviorally equivalent: no")
            return 1
        print("behaviorally equivalent: yes")
        print("mediator states:", " ".join(str(s) for s in witness.mediator.space.carrier))
        for label, leg in (("left", witness.left), ("right", witness.right)):
            pairs = " ".join(f"{k}->{v}" for k, v in sorted(leg.items(), key=lambda kv: repr(kv[0])))
            print(f"{label} morphism: {pairs}")
        return 0
    verdict = logic_mod.logically_equivalent(m1, m2)
    print(f"logically equivalent: {'yes' if verdict else 'no'}")
    return 0 if verdict else 1


def _load_span(path: str, k1: MarkovKernel, k2: MarkovKernel) -> StochRelationPair:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read span file {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"span file {path} is not valid JSON: {e}") from None
    med = doc.get("mediator")
    if not isinstance(med, dict):
        raise InputError("span.mediator: expected an object")
    dom = _parse_space(med.get("dom"), "span.mediator.dom")
    cod = _parse_space(med.get("cod"), "span.mediator.cod") if "cod" in med else dom
    rows = med.get("rows")
    if not isinstance(rows, dict):
        raise InputError("span.mediator.rows: expected an object")
    parsed = {x: _parse_measure(cod, rows[x], f"span.mediator.rows.{x}") for x in dom.carrier
              if x in rows}
    missing = set(dom.carrier) - set(parsed)
    if missing:
        raise InputError(f"span.mediator.rows: missing rows for {sorted(missing)}")
    mediator = MarkovKernel(dom, cod, parsed)
    legs = []
    for side in ("left", "right"):
        leg = doc.get(side)
        if not isinstance(leg, dict) or "f" not in leg or "g" not in leg:
            raise InputError(f"span.{side}: expected an object with f and g tables")
        legs.append(SpanLeg(f=dict(leg["f"]), g=dict(leg["g"])))
    return StochRelationPair(mediator, legs[0], legs[1], k1, k2)


def _cmd_bisim(args) -> int:
    if len(args.model) != 2:
        raise InputError("bisim needs exactly two --model arguments")
    b1 = load_model(args.model[0])
    b2 = load_model(args.model[1])
    k1 = b1.sole_kernel(args.kernel)
    k2 = b2.sole_kernel(args.kernel)
    if args.product:
        span = product_mediator(k1, k2)
    elif args.span:
        span = _load_span(args.span, k1, k2)
    else:
        raise InputError("bisim needs --span FILE or --product")
    verdict = check_stochastic_span(span)
    print(f"verdict: {verdict.kind}")
    print(f"detail: {verdict.detail}")
    if verdict.common_atoms is not None:
        for atom in verdict.common_atoms:
            print("common atom:", " ".join(str(s) for s in span.mediator.cod.sorted(atom)))
    return 0 if verdict.kind == "bisimilar" else 1


def _cmd_laws(args) -> int:
    if args.monad not in INSTANCES:
        raise InputError(f"unknown monad {args.monad!r}; pick one of {sorted(INSTANCES)}")
    report = check_monad_laws(INSTANCES[args.monad], args.trials, args.seed)
    for line in report.lines():
        print(line)
    return 0 if report.passed else 1


def _cmd_eff2kernel(args) -> int:
    bundle = load_model(args.model[0])
    model = bundle.game_model()
    if args.game not in model.effectivity:
        raise InputError(f"model declares no game named {args.game!r}")
    recovery = kernel_from_eff(model.effectivity[args.game])
    if recovery.ok:
        print("kernel recovered:")
        k = recovery.kernel
        for x in k.dom.carrier:
            row = k(x)
            cells = " ".join(
                f"{{{','.join(sorted(map(str, atom)))}}}={format_fraction(w)}"
                for atom, w in zip(k.cod.atoms, row.weights))
            print(f"  {x}: {cells}")
        return 0
    print("no generating kernel:")
    for state in model.space.carrier:
        if state in recovery.diagnostics:
            print(f"  {state}: {recovery.diagnostics[state]}")
    return 1


def _cmd_oracle(args) -> int:
    bundle = load_model(args.model[0])
    model = bundle.game_model()
    tau = game_mod.normalize(game_mod.parse_game(args.game))
    event = frozenset(args.set.split(",")) if args.set else frozenset()
    if not model.space.is_measurable(event):
        raise InputError(f"--set {args.set!r} is not a measurable event")
    q = as_fraction(args.q)
    oracle = game_mod.oracle_eval(model, tau, event, q, args.denominator, args.depth)
    tf = game_mod.threshold_eval(model, tau, event, args.star_depth)
    derived = tf.at(q)
    print(f"game: {game_mod.format_game(tau)}")
    print(f"event: {' '.join(model.space.sorted(event))}  q: {format_fraction(q)}")
    print("oracle ", end="")
    _print_states(model.space, oracle)
    print("derived", end=" ")
    _print_states(model.space, derived)
    agree = oracle == derived
    print(f"agreement: {'yes' if agree else 'no'}" + ("" if tf.exact else " (derived is a lower bound)"))
    if args.report_dir:
        from . import report
        rows = [(str(s), int(s in oracle), int(s in derived), str(tf.interval_at(s)))
                for s in model.space.carrier]
        report.write_csv(args.report_dir, "oracle.csv",
                         ["state", "oracle", "derived", "interval"], rows)
        report.write_interval_figure(args.report_dir, "oracle.png", tf, q,
                                     title=f"{game_mod.format_game(tau)} at {format_fraction(q)}")
        print(f"report written to {args.report_dir}")
    return 0 if agree else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgk",
        description="Finite exact-rational workbench for Markov kernels, "
                    "probabilistic modal logic, and stochastic game semantics.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model(p, twice=False):
        p.add_argument("--model", action="append", required=True,
                       help="model file (JSON)" + ("; pass twice" if twice else ""))

    p = sub.add_parser("check", help="evaluate a formula's validity set")
    add_model(p)
    p.add_argument("--formula", required=True)
    p.add_argument("--game", action="store_true", help="use the game-logic grammar and semantics")
    p.add_argument("--star-depth", type=int, default=None)
    p.add_argument("--report-dir", default=None, help="write validity.csv and validity.png here")
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("equiv", help="compare two Kripke models")
    add_model(p, twice=True)
    p.add_argument("--behavioral", action="store_true", help="construct a mediating cospan")
    p.set_defaults(fn=_cmd_equiv)

    p = sub.add_parser("bisim", help="verify a stochastic bisimulation span")
    add_model(p, twice=True)
    p.add_argument("--span", default=None, help="span file (JSON)")
    p.add_argument("--product", action="store_true", help="use the product-measure mediator")
    p.add_argument("--kernel", default=None, help="kernel name when a model has several")
    p.set_defaults(fn=_cmd_bisim)

    p = sub.add_parser("laws", help="run the monad-law suite")
    p.add_argument("--monad", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_laws)

    p = sub.add_parser("eff2kernel", help="recover the kernel generating an effectivity function")
    add_model(p)
    p.add_argument("--game", required=True, help="atomic game name")
    p.set_defaults(fn=_cmd_eff2kernel)

    p = sub.add_parser("oracle", help="compare the derived game semantics with the literal recursion")
    add_model(p)
    p.add_argument("--game", required=True, help="game expression")
    p.add_argument("--set", required=True, help="comma-separated event states")
    p.add_argument("--q", required=True, help="threshold, a rational like 1/2")
    p.add_argument("--denominator", type=int, default=16)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--star-depth", type=int, default=None)
    p.add_argument("--report-dir", default=None, help="write oracle.csv and oracle.png here")
    p.set_defaults(fn=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, PreconditionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
