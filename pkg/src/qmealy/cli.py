"""Command-line interface.

Exit codes:
    0  success (either verdict)
    2  usage error, missing file or parse error
    3  invalid machine or state, or target dimension out of range
    4  the brute-force oracle disagrees with the checker
"""

import argparse
import json
import sys
from pathlib import Path

from .bench import DEFAULT_NAIVE_MAX_N, format_csv, format_table, run_bench
from .circuits import ParseError, build_machine, build_state, parse_machine_spec
from .equivalence import (
    TRACE_TOL,
    check_machines,
    check_states,
    check_states_k,
    check_states_naive,
    experiment_bound,
    machines_bound,
)
from .minimise import encode_problem1, encode_problem2
from .model import InvalidDensityError, InvalidMachineError, direct_sum, embed_states
from .oracle import brute_force_equiv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_DISAGREE = 4
ORACLE_CAP = 12
ORACLE_WARN = 8


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _err(msg):
    print(f"qmealy: {msg}", file=sys.stderr)


def _load(path, validate=True):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}", EXIT_USAGE) from None
    try:
        spec = parse_machine_spec(text)
    except ParseError as e:
        raise CliError(f"{path}: {e}", EXIT_USAGE) from None
    try:
        return spec, build_machine(spec, validate=validate)
    except InvalidMachineError as e:
        raise CliError(f"{path}: {e}", EXIT_INVALID) from None


def _state(spec, name, path):
    try:
        return build_state(spec, name)
    except KeyError:
        raise CliError(f"{path}: unknown state {name!r}", EXIT_USAGE) from None
    except InvalidDensityError as e:
        raise CliError(f"{path}: state {name!r}: {e}", EXIT_INVALID) from None


def cmd_validate(args):
    spec, m = _load(args.file, validate=False)
    unitarity, completeness = m.residuals()
    for s, r in unitarity.items():
        print(f"unitarity[{s}] residual {r:.3e}")
    print(f"completeness residual {completeness:.3e}")
    try:
        m.validate()
    except InvalidMachineError as e:
        raise CliError(f"{args.file}: {e}", EXIT_INVALID) from None
    for name in spec.states:
        _state(spec, name, args.file)
    print(f"valid, n={m.dimension}, |Σ|={len(m.inputs)}, |Γ|={len(m.outputs)}")
    return EXIT_OK


def _fmt(p):
    return f"{p:.10g}"


def cmd_check(args):
    spec, m = _load(args.file)
    rho_s = _state(spec, args.state_s, args.file)
    kw = {"trace_tol": args.tolerance, "mode": args.mode}
    try:
        if args.machines:
            spec2, m2 = _load(args.machines)
            rho_t = _state(spec2, args.state_t, args.machines)
            if m2.inputs != m.inputs or m2.outputs != m.outputs:
                raise CliError("the two machines have different alphabets", EXIT_INVALID)
            verdict = check_machines(m, rho_s, m2, rho_t, k=args.k,
                                     method="naive" if args.naive else "fast", **kw)
            bound = machines_bound(m.dimension, m2.dimension)
            oracle_args = (direct_sum(m, m2), *embed_states(rho_s, rho_t))
        else:
            rho_t = _state(spec, args.state_t, args.file)
            if args.naive:
                verdict = check_states_naive(m, rho_s, rho_t, k=args.k, **kw)
            elif args.k is not None:
                verdict = check_states_k(m, rho_s, rho_t, args.k, **kw)
            else:
                verdict = check_states(m, rho_s, rho_t, **kw)
            bound = experiment_bound(m.dimension)
            oracle_args = (m, rho_s, rho_t)
    except ValueError as e:
        raise CliError(str(e), EXIT_INVALID) from None

    disagree = False
    oracle = None
    if args.oracle_size is not None:
        size = args.oracle_size
        if size > ORACLE_CAP:
            raise CliError(f"--oracle-size is capped at {ORACLE_CAP}", EXIT_USAGE)
        if size > ORACLE_WARN:
            _err(f"warning: brute force at size {size} enumerates exponentially many experiments")
        oracle = brute_force_equiv(*oracle_args, size, max_measurements=args.k, tol=args.tolerance)
        if verdict.equivalent:
            disagree = not oracle.equivalent
        else:
            # a witness beyond the oracle's horizon is invisible to it
            disagree = oracle.equivalent and verdict.witness.size <= size

    if args.json:
        out = verdict.to_dict()
        if oracle is not None:
            out["oracle"] = {"max_size": args.oracle_size, "equivalent": oracle.equivalent,
                             "agrees": not disagree}
        print(json.dumps(out, indent=2))
    else:
        if verdict.equivalent:
            if args.k is not None:
                print(f"EQUIVALENT (k={args.k})")
            else:
                print(f"EQUIVALENT (bound {bound}, basis {verdict.basis_sizes[-1]} of max {bound + 1})")
        else:
            print("NOT EQUIVALENT")
            print(f"{verdict.witness}, p_s={_fmt(verdict.prob_s)}, p_t={_fmt(verdict.prob_t)}")
        mode = "real" if verdict.real_mode else "complex"
        print(f"mode {mode}, method {verdict.method}, basis sizes {verdict.basis_sizes}",
              file=sys.stderr)
        if oracle is not None:
            tag = "agrees" if not disagree else "DISAGREES"
            print(f"oracle (size <= {args.oracle_size}) {tag}: "
                  f"{'equivalent' if oracle.equivalent else 'not equivalent'}")
    if disagree:
        _err("brute-force oracle disagrees with the checker")
        return EXIT_DISAGREE
    return EXIT_OK


def cmd_bench(args):
    rows = run_bench(args.filter, repeat=args.repeat, naive_max_n=args.naive_max_n,
                     workers=args.workers)
    print(format_csv(rows) if args.csv else format_table(rows))
    if not all(r.agree for r in rows):
        _err("fast and naive verdicts differ on at least one case")
        return EXIT_DISAGREE
    return EXIT_OK


def cmd_encode_min(args):
    spec, m = _load(args.file)
    rho = _state(spec, args.state, args.file)
    if args.target_dim >= m.dimension:
        raise CliError(f"target dimension {args.target_dim} must be below the machine "
                       f"dimension {m.dimension}", EXIT_INVALID)
    if args.problem == 1:
        system = encode_problem1(m, rho, args.target_dim)
    else:
        system = encode_problem2(m, rho, args.k, args.target_dim)
    text = system.to_text()
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    counts = ", ".join(f"{c} {v}" for c, v in system.constraint_counts().items())
    print(f"variables {system.n_variables}, constraints {system.n_constraints} ({counts})",
          file=sys.stderr if args.out == "-" else sys.stdout)
    return EXIT_OK


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="qmealy", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and validate a .qmm file")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("check", help="decide equivalence of two states or machines")
    c.add_argument("file")
    c.add_argument("state_s")
    c.add_argument("state_t", help="state of FILE, or of --machines when given")
    c.add_argument("--k", type=_nonneg, default=None, help="measurement budget")
    c.add_argument("--machines", metavar="FILE2", help="compare against a second machine")
    c.add_argument("--naive", action="store_true", help="use the elimination baseline")
    c.add_argument("--oracle-size", type=_nonneg, default=None, metavar="M",
                   help="cross-check by brute force up to experiment size M")
    c.add_argument("--tolerance", type=float, default=TRACE_TOL)
    c.add_argument("--mode", choices=("auto", "real", "complex"), default="auto")
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="time fast against naive checking")
    b.add_argument("filter", nargs="?", default=None, help="substring of case names")
    b.add_argument("--repeat", type=_positive, default=3)
    b.add_argument("--workers", type=_positive, default=1)
    b.add_argument("--naive-max-n", type=int, default=DEFAULT_NAIVE_MAX_N)
    b.add_argument("--csv", action="store_true")
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("encode-min", help="write a minimisation constraint system")
    e.add_argument("file")
    e.add_argument("state")
    e.add_argument("--problem", type=int, choices=(1, 2), required=True)
    e.add_argument("--k", type=_positive, default=None)
    e.add_argument("--target-dim", type=_positive, required=True)
    e.add_argument("--out", required=True, help="output path, or - for stdout")
    e.set_defaults(func=cmd_encode_min)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "encode-min" and args.problem == 2 and args.k is None:
        parser.error("--problem 2 requires --k")
    try:
        return args.func(args)
    except CliError as e:
        _err(str(e))
        return e.code


if __name__ == "__main__":
    sys.exit(main())
