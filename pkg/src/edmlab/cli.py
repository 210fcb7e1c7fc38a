"""Command-line front end.

Exit codes: 0 success, 1 check failure, 2 usage or validation error,
3 numeric divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import counterexamples as cx
from .ebm import pseudo_state_dist
from .errors import Divergence, EdmLabError, NumericalError, ValidationError
from .mdp import TabularMdp, random_mdp, rollout, visitation, write_trajectories
from .objectives import PopulationSpec, gradient_descent
from .policies import CoupledPolicy, SoftmaxPolicy
from .sampler import (
    FIXTURES,
    SurrogateEnergy,
    langevin_sample,
    langevin_tv,
    load_fixture,
    sample_categorical,
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_DIVERGENCE = 0, 1, 2, 3
CHECKS = ("example1", "example2", "example3", "theorem1", "consistency")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _emit(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        write_atomic(path, text)


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise UsageError(f"{what} file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} file {path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise UsageError(f"{what} file {path}: top level must be a JSON object")
    return obj


def _load_policy(path: str | None, m: TabularMdp | None = None):
    if path is None:
        if m is None:
            raise UsageError("--policy is required")
        return SoftmaxPolicy.uniform(m.n_states, m.n_actions)
    obj = _load_json(path, "policy")
    try:
        if "theta" in obj:
            return CoupledPolicy.from_json(obj)
        return SoftmaxPolicy.from_json(obj)
    except (EdmLabError, TypeError, ValueError) as exc:
        raise UsageError(f"policy file {path}: {exc}") from None


def _load_mdp(path: str) -> TabularMdp:
    obj = _load_json(path, "mdp")
    try:
        return TabularMdp.from_json(obj)
    except EdmLabError as exc:
        raise UsageError(f"mdp file {path}: {exc}") from None


def _parse_weights(text: str) -> tuple[float, float]:
    if text == "uniform":
        return 0.5, 0.5
    if text == "s1":
        return 1.0, 0.0
    if text == "s2":
        return 0.0, 1.0
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"weights must be uniform, s1, s2 or w1:w2, got {text!r}") from None
    if a < 0 or b < 0 or a + b <= 0 or not np.isfinite(a + b):
        raise argparse.ArgumentTypeError(f"weights {text!r} must be non-negative with a positive sum")
    return a / (a + b), b / (a + b)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not (value > 0 and np.isfinite(value)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return value


def cmd_check(args) -> int:
    results = []
    only = args.only
    if only in (None, "example1"):
        results += [cx.example1_check(n) for n in (2, 5, 10)]
    if only in (None, "example2"):
        rng = np.random.default_rng(args.seed)
        for i in range(3):
            policy = SoftmaxPolicy(rng.normal(size=(3, 2)) * 2.0)
            results.append(cx.example2_check(policy, random_mdp(3, 2, rng), label=f"seed={args.seed}#{i}"))
    if only in (None, "example3"):
        ks = (0.25, 0.5, 1.0, 2.0) if args.k is None else (args.k,)
        results += [cx.example3_check(k) for k in ks]
    if only in (None, "theorem1"):
        results.append(cx.theorem1_check())
        results += [cx.theorem1_check(mode) for mode in ("discounted", "stationary")]
    if only in (None, "consistency"):
        results.append(cx.consistency_experiment(0.5 if args.k is None else args.k).check)

    report = {"checks": [r.to_json() for r in results]}
    _emit(args.out, json.dumps(report, indent=2) + "\n")
    failed = [r for r in results if r.applicable and not r.passed]
    for r in failed:
        print(f"check failed: {r.name}", file=sys.stderr)
    return EXIT_CHECK if failed else EXIT_OK


def cmd_train(args) -> int:
    spec = PopulationSpec.coupled(args.theta_expert, args.k, args.weights)
    trace = gradient_descent(args.objective, args.theta0, args.lr, args.steps, spec)
    _emit(args.out, trace.to_csv())
    gap = abs(trace.final_theta - args.theta_expert)
    print(f"final_theta={trace.final_theta:.10f} final_grad={trace.final_grad:.3e} "
          f"gap={gap:.6f}", file=sys.stdout if args.out not in (None, "-") else sys.stderr)
    return EXIT_OK


def cmd_visitation(args) -> int:
    m = _load_mdp(args.mdp)
    policy = _load_policy(args.policy, m)
    d = visitation(m, policy, args.mode, args.horizon)
    _emit(args.out, json.dumps({"kind": d.kind.value, "probs": d.probs.tolist()}) + "\n")
    return EXIT_OK


def cmd_rollout(args) -> int:
    m = _load_mdp(args.mdp)
    policy = _load_policy(args.policy, m)
    trajectories = rollout(m, policy, args.episodes, args.horizon, args.seed)
    if args.out in (None, "-"):
        write_trajectories(trajectories, sys.stdout)
    else:
        lines = "".join(json.dumps(t.to_json()) + "\n" for t in trajectories)
        write_atomic(args.out, lines)
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.policy is not None:
        pseudo = pseudo_state_dist(_load_policy(args.policy))
        batch = sample_categorical(pseudo, args.n, args.seed)
        _emit(args.out, batch.to_jsonl())
        return EXIT_OK
    if args.energy is not None:
        try:
            energy = SurrogateEnergy.from_json(_load_json(args.energy, "energy"))
        except (ValidationError, TypeError, ValueError) as exc:
            raise UsageError(f"energy file {args.energy}: {exc}") from None
    else:
        energy = load_fixture(args.fixture)
    batch = langevin_sample(energy, args.n, args.steps, args.step_size, args.seed)
    _emit(args.out, batch.to_jsonl())
    tv = langevin_tv(energy, batch, args.bins)
    print(f"tv={tv:.6f}", file=sys.stdout if args.out not in (None, "-") else sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="edmlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="run the counterexample suite and write a JSON report")
    p.add_argument("--only", choices=CHECKS)
    p.add_argument("--k", type=float, help="coupling constant for example3 / consistency")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report path (default: stdout)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("train", help="population BC or EDM descent on the coupled family")
    p.add_argument("--objective", choices=("bc", "edm"), required=True)
    p.add_argument("--k", type=float, default=0.5)
    p.add_argument("--theta0", type=float, default=0.0)
    p.add_argument("--theta-expert", type=float, default=1.0)
    p.add_argument("--lr", type=_positive_float, default=0.5)
    p.add_argument("--steps", type=_positive_int, default=5000)
    p.add_argument("--weights", type=_parse_weights, default=(0.5, 0.5))
    p.add_argument("--out", help="trace CSV path (default: stdout)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("visitation", help="state visitation distribution of a policy")
    p.add_argument("--mdp", required=True)
    p.add_argument("--policy", help="policy JSON (default: uniform)")
    p.add_argument("--mode", choices=("discounted", "stationary", "finite-horizon"), default="discounted")
    p.add_argument("--horizon", type=_positive_int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_visitation)

    p = sub.add_parser("rollout", help="sample demonstration trajectories")
    p.add_argument("--mdp", required=True)
    p.add_argument("--policy")
    p.add_argument("--episodes", type=_positive_int, default=1)
    p.add_argument("--horizon", type=_positive_int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("sample", help="Langevin or exact categorical sampling")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--fixture", choices=FIXTURES, default="single_gaussian")
    src.add_argument("--energy", help="surrogate energy JSON")
    src.add_argument("--policy", help="policy JSON; samples its pseudo-state distribution exactly")
    p.add_argument("--n", type=_positive_int, default=20_000)
    p.add_argument("--steps", type=_positive_int, default=2000)
    p.add_argument("--step-size", type=_positive_float, default=0.01)
    p.add_argument("--bins", type=_positive_int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValidationError) as exc:
        print(f"edmlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (Divergence, NumericalError) as exc:
        print(f"edmlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
