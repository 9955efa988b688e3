"""Command line entry point: ``rdx <subcommand> ...``.

Exit codes: 0 success, 1 parse/config error, 2 simulation failure,
3 failed invariant checks.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, parse_config
from .diagnostics import config_hash, verify_invariants, write_outputs
from .discretization import Grid
from .dual import estimate_cmr
from .integrate import StepFailure, simulate
from .network import (NetworkSyntaxError, classify_mass_condition, growth_exponent,
                      parse_network)
from .theory import (admissible_p_threshold, bootstrap_sequence, check_preconditions,
                     cmr_interpolation_bound, gronwall_mass_bound, select_dual_exponent)

EXIT_OK, EXIT_INPUT, EXIT_SIM, EXIT_CHECK = 0, 1, 2, 3

log = logging.getLogger("rdx")


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_network(path: str):
    try:
        return parse_network(_read(path))
    except NetworkSyntaxError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_config(path: str, network):
    text = _read(path)
    try:
        cfg = parse_config(text)
        cfg.validate(network)
    except (ConfigError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    return cfg


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RDX_THREADS", "1")))
    except ValueError:
        return 1


def _dump(obj) -> None:
    print(json.dumps(obj, indent=2, default=_json_default))


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float):
        return str(o)
    raise TypeError(type(o))


# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    net = _load_network(args.network)
    mc = classify_mass_condition(net)
    print(f"species: {' '.join(net.names)}")
    print(f"reactions: {net.n_reactions}")
    print(f"λ={growth_exponent(net)}")
    print(f"mass condition: {mc}")
    print("S =")
    if net.n_reactions:
        width = max(len(n) for n in net.names)
        for name, row in zip(net.names, net.stoich):
            print(f"  {name:>{width}} " + " ".join(f"{v:3d}" for v in row))
    else:
        print("  (no reactions)")
    return EXIT_OK


def _run_one(net, cfg, net_text, out_dir, do_check):
    res = simulate(net, cfg)
    report = None
    if do_check:
        report = verify_invariants(res.log, net, None, cfg.grid, cfg.flux(net), cfg.time.steady_tol)
    extra = {"stats": {"accepted_steps": res.n_accepted, "rejected_steps": res.n_rejected,
                       "steady": res.steady, "t_final": res.log.times[-1]}}
    write_outputs(res.log, report, out_dir, res.snapshots,
                  config_digest=config_hash(net_text, cfg.text), extra=extra)
    return res, report


def cmd_simulate(args) -> int:
    net = _load_network(args.network)
    cfg = _load_config(args.config, net)
    out = args.out or cfg.output.dir
    try:
        res, _ = _run_one(net, cfg, _read(args.network), out, do_check=False)
    except (StepFailure, FloatingPointError) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIM
    print(f"wrote {out}/timeseries.csv ({len(res.log)} rows, t={res.log.times[-1]:g}, "
          f"steps={res.n_accepted}, rejections={res.n_rejected}, steady={res.steady})")
    return EXIT_OK


def cmd_check(args) -> int:
    net = _load_network(args.network)
    net_text = _read(args.network)
    cfgs = [_load_config(p, net) for p in args.config]
    outs = []
    for k, cfg in enumerate(cfgs):
        base = args.out or cfg.output.dir
        outs.append(base if len(cfgs) == 1 else os.path.join(base, f"run{k}"))

    def job(k):
        return _run_one(net, cfgs[k], net_text, outs[k], do_check=True)

    try:
        with ThreadPoolExecutor(max_workers=min(_threads(), len(cfgs))) as pool:
            results = list(pool.map(job, range(len(cfgs))))
    except (StepFailure, FloatingPointError) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIM

    ok = True
    for path, (_, report) in zip(args.config, results):
        print(f"# {path}")
        for line in report.lines():
            print(line)
        ok = ok and report.passed
    print("ALL CHECKS PASSED" if ok else "CHECKS FAILED")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_theory(args) -> int:
    what = args.what
    if what == "lambda":
        net = _load_network(args.network)
        _dump({"lambda": growth_exponent(net)})
    elif what == "threshold":
        _dump({"n": args.n, "lambda": args.lam, "threshold": admissible_p_threshold(args.n, args.lam)})
    elif what == "bootstrap":
        rep = bootstrap_sequence(args.p0, args.n, args.lam, args.max_iter)
        _dump(rep.to_dict())
    elif what == "select-p":
        _dump(select_dual_exponent(args.d_max, args.c32).to_dict())
    elif what == "interp":
        _dump({"r": args.r, "mr": args.mr, "c_three_halves": args.c32,
               "bound": cmr_interpolation_bound(args.r, args.mr, args.c32)})
    elif what == "gronwall":
        _dump({"bound": gronwall_mass_bound(args.c1, args.c2, args.m0, args.volume, args.inflow, args.t)})
    elif what == "preconditions":
        net = _load_network(args.network)
        _dump(check_preconditions(net, args.n, args.p, args.cmr).to_dict())
    return EXIT_OK


def cmd_dual_estimate(args) -> int:
    grid = Grid.line(args.nx, args.lx)
    est = estimate_cmr(grid, args.D, args.p_prime, args.samples, args.seed, args.T, args.nt)
    _dump(est.to_dict())
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdx", description="Mass-action reaction-diffusion simulator and checks")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="parse a reaction file and print lambda, mass condition, S")
    s.add_argument("network")
    s.set_defaults(func=cmd_validate)

    for name, func, hlp in (("simulate", cmd_simulate, "run a simulation and write diagnostics"),
                            ("check", cmd_check, "simulate and verify invariants")):
        s = sub.add_parser(name, help=hlp)
        s.add_argument("--network", required=True)
        if name == "check":
            s.add_argument("--config", required=True, action="append",
                           help="config file; repeat to run several (RDX_THREADS workers)")
        else:
            s.add_argument("--config", required=True)
        s.add_argument("--out", default=None)
        s.set_defaults(func=func)

    t = sub.add_parser("theory", help="exponent bootstrap and related calculations")
    tsub = t.add_subparsers(dest="what", required=True)
    x = tsub.add_parser("lambda")
    x.add_argument("--network", required=True)
    x = tsub.add_parser("threshold")
    x.add_argument("--n", type=int, required=True)
    x.add_argument("--lambda", dest="lam", type=float, required=True)
    x = tsub.add_parser("bootstrap")
    x.add_argument("--p0", type=float, required=True)
    x.add_argument("--n", type=int, required=True)
    x.add_argument("--lambda", dest="lam", type=float, required=True)
    x.add_argument("--max-iter", type=int, default=1000)
    x = tsub.add_parser("select-p")
    x.add_argument("--d-max", type=float, required=True)
    x.add_argument("--c32", type=float, required=True, help="C_mr(3/2), e.g. from dual-estimate")
    x = tsub.add_parser("interp")
    x.add_argument("--r", type=float, required=True)
    x.add_argument("--mr", type=float, required=True)
    x.add_argument("--c32", type=float, required=True)
    x = tsub.add_parser("gronwall")
    for flag in ("--c1", "--c2", "--m0", "--t"):
        x.add_argument(flag, type=float, required=True)
    x.add_argument("--volume", type=float, default=1.0)
    x.add_argument("--inflow", type=float, default=0.0)
    x = tsub.add_parser("preconditions")
    x.add_argument("--network", required=True)
    x.add_argument("--n", type=int, required=True)
    x.add_argument("--p", type=float, required=True)
    x.add_argument("--cmr", type=float, default=None)
    t.set_defaults(func=cmd_theory)

    d = sub.add_parser("dual-estimate", help="empirical maximal-regularity ratio")
    d.add_argument("--nx", type=int, default=128)
    d.add_argument("--lx", type=float, default=1.0)
    d.add_argument("--D", type=float, default=1.0)
    d.add_argument("--p-prime", type=float, default=1.5)
    d.add_argument("--samples", type=int, default=20)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--T", type=float, default=1.0)
    d.add_argument("--nt", type=int, default=1000)
    d.set_defaults(func=cmd_dual_estimate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
