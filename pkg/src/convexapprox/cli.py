"""Command line: ``convexapprox <subcommand> [options]``.

Exit status is 0 iff every certificate produced by the command passes, 2 on
usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .kernels import KernelParameterError, default_params, kernel_bank, normalization_report
from .partition_facts import EXPLICIT_FACTS, verify_partition_facts


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n")


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def cmd_partition_check(args):
    ns = args.n or [1, 2, 4, 8, 16, 32, 64, 128, 256]
    ok = True
    report = []
    for n in ns:
        for fr in verify_partition_facts(n, grid_size=args.grid):
            report.append(fr.to_dict())
            if fr.fact_id in EXPLICIT_FACTS and not fr.passed:
                ok = False
                print(f"FAIL n={n} {fr.fact_id} measured={fr.measured_constant:.6g}")
    print(f"partition-check n={ns}: {'pass' if ok else 'FAIL'} ({len(report)} fact reports)")
    if args.out:
        _write_json(_out_dir(args) / "partition_facts.json", report)
    return ok


def cmd_kernel_check(args):
    from .kernel_checks import pair_envelopes
    r = args.r or 2
    params = default_params(alpha=args.alpha or 2 * r + 2, k=r + 2)
    ns = args.n or [8, 16, 32]
    ok = True
    out = {"params": params.to_dict(), "normalization": {}, "envelopes": {}}
    for n in ns:
        try:
            rep = normalization_report(kernel_bank(n, 0, 0, params.xi, params.mu))
        except KernelParameterError as exc:
            print(f"n={n}: {exc}")
            ok = False
            continue
        err = float(np.max(np.abs(rep["tau_end_error"])))
        inside = bool(np.all(rep["inside"]))
        ok &= err <= 1e-9 and inside
        out["normalization"][str(n)] = {"max_tau_end_error": err, "integrals_inside": inside}
        line = f"n={n}: |tau(1)-1| <= {err:.2e}, integrals inside: {inside}"
        if args.envelopes:
            env = pair_envelopes(n, params)
            out["envelopes"][str(n)] = env
            signs = env["p_min_second"] >= 0 and env["pt_max_outside"] <= 0
            ok &= signs
            line += (f", envelopes second={env['second']:.4g} first={env['first']:.4g}"
                     f" value={env['value']:.4g}, signs ok: {signs}")
        print(line)
    if args.out:
        _write_json(_out_dir(args) / "kernel_check.json", out)
    return ok


def cmd_build(args):
    out, cert = harness.build(args.function, args.r or 2, (args.n or [32])[0], tol=args.tol)
    d = _out_dir(args)
    if out is not None:
        _write_json(d / "approximant.json", out.to_dict())
    _write_json(d / "certificate.json", cert)
    if out is None:
        print(f"build {args.function}: {cert['failure']}")
    else:
        print(f"build {args.function} r={out.r} N={out.n} degree={out.degree}: "
              f"convexity_min={cert['convexity_min']:.3e} "
              f"endpoint={max(cert['endpoint_residuals']):.1e} "
              f"{'pass' if cert['passed'] else 'FAIL'}")
    return cert["passed"]


def _sweep_config(args):
    if args.config:
        return harness.SweepConfig.load(args.config)
    if not args.function:
        raise harness.ConfigError("sweep needs --config or --function")
    return harness.SweepConfig([args.function], [args.r or 2], args.n or [16, 32],
                               {"tol": args.tol})


def cmd_sweep(args):
    cfg = _sweep_config(args)
    rows, certs = harness.run_sweep(cfg, jobs=args.jobs)
    d = _out_dir(args)
    (d / "sweep.csv").write_text(harness.sweep_csv(rows))
    (d / "sweep.json").write_text(harness.sweep_json(cfg, rows, certs))
    for c in certs:
        print(f"{c['function']} r={c['r']} n={c['n_requested']}: "
              f"{'pass' if c['passed'] else 'FAIL'} N={c.get('N_detected')}")
    return all(c["passed"] for c in certs)


def cmd_oracle_compare(args):
    fids = [args.function] if args.function else ["x4", "exp", "cosh2x", "x6x2", "flat_right"]
    results = []
    for fid in fids:
        for n in args.n or [8, 16]:
            res = harness.oracle_compare(fid, args.r or 2, n, tol=args.tol)
            results.append(res)
            print(f"{fid} n={n}: pipeline {res['pipeline_error']:.3e} (degree "
                  f"{res['pipeline_degree']}), oracle {res['oracle_error']:.3e} (degree {n}), "
                  f"ratio {res['ratio']:.3g} {'pass' if res['passed'] else 'FAIL'}")
    if args.out:
        _write_json(_out_dir(args) / "oracle_compare.json", results)
    return all(r["passed"] for r in results)


def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="sweep configuration (JSON)")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--n", type=_int_list, help="partition size(s), comma separated")
    common.add_argument("--r", type=int, help="smoothness order (>= 2)")
    common.add_argument("--function", help="corpus id or expression in x")
    common.add_argument("--tol", type=float, default=1e-9, help="convexity tolerance")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="convexapprox", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("partition-check", parents=[common], help="partition inequalities")
    p.add_argument("--grid", type=int, default=10_000)
    p.set_defaults(func=cmd_partition_check)
    p = sub.add_parser("kernel-check", parents=[common], help="kernel normalization and envelopes")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--envelopes", action="store_true", help="also measure the pair envelopes")
    p.set_defaults(func=cmd_kernel_check)
    p = sub.add_parser("build", parents=[common], help="one certified approximant")
    p.set_defaults(func=cmd_build, out_default="build")
    p = sub.add_parser("sweep", parents=[common], help="bound ratios over a grid of runs")
    p.set_defaults(func=cmd_sweep, out_default="sweep")
    p = sub.add_parser("oracle-compare", parents=[common], help="compare with the LP oracle")
    p.set_defaults(func=cmd_oracle_compare)
    return ap


def main(argv=None):
    ap = make_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.out is None and getattr(args, "out_default", None):
        args.out = args.out_default
    if args.command == "build" and not args.function:
        ap.error("build needs --function")
    try:
        ok = args.func(args)
    except harness.ConfigError as exc:
        ap.error(str(exc))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
