"""Command-line frontend: ``seclist <capacity|region|build|eval|commit|auction> ...``.

Exit codes: 0 ok, 2 bad input, 3 enumeration budget exceeded, 4 rate pair
outside the construction hypothesis. ``SLX_BUDGET`` overrides the budget.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import channels as ch
from .codes import load_code, save_code
from .errors import BudgetExceeded, HypothesisViolated, ValidationError
from .info import InfoContext, capacity, v_max, zeta1
from .region import compute_region, corollary_region, h0_and_pmax, write_region_csv

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_HYPOTHESIS = 0, 2, 3, 4


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _clean(obj):
    # JSON has no inf/nan; emit null instead
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _clean(obj.item())
    return _finite(obj)


def parse_channel(spec: str) -> ch.Channel:
    """A JSON file path, or shorthand ``bsc:P``, ``z:P``, ``noiseless:K``."""
    if ":" in spec and not os.path.exists(spec):
        kind, _, arg = spec.partition(":")
        try:
            if kind == "bsc":
                return ch.bsc(float(arg))
            if kind == "z":
                return ch.z_channel(float(arg))
            if kind == "noiseless":
                return ch.noiseless(int(arg))
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        raise ValidationError(f"unknown channel shorthand {kind!r}")
    try:
        return ch.load_channel(spec)
    except OSError as exc:
        raise ValidationError(f"cannot read channel file: {exc}") from None


def _load_code(path):
    try:
        return load_code(path)
    except OSError as exc:
        raise ValidationError(f"cannot read code file: {exc}") from None


def _seed(args) -> int:
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % 2**63)
    return args.seed


def _echo(args, **extra):
    params = {k: v for k, v in vars(args).items() if k not in ("func",) and v is not None}
    params.update(extra)
    print("params: " + json.dumps(_clean(params), sort_keys=True))


def _emit(args, doc: dict):
    text = json.dumps(_clean(doc), sort_keys=True, indent=1)
    if getattr(args, "json", None):
        with open(args.json, "w") as fh:
            fh.write(text + "\n")
    print(text)


def cmd_capacity(args):
    W = parse_channel(args.channel)
    _echo(args)
    C, _ = capacity(W)
    H0, P_max = h0_and_pmax(W)
    ctx = InfoContext(W, P_max)
    z1 = zeta1(ctx)
    V = v_max(ctx, strict=False)
    print(f"C(W)      = {C:.6f} bits")
    print(f"H0        = {H0:.6f} bits")
    print("P_max     = " + " ".join(f"{p:.6f}" for p in P_max))
    print(f"zeta1     = {z1:.6f}")
    print(f"V(W,Pmax) = {V:.6f}")
    _emit(args, {"C": C, "H0": H0, "P_max": P_max, "zeta1": z1, "V": V})
    return EXIT_OK


def cmd_region(args):
    W = parse_channel(args.channel)
    if args.grid < 1:
        raise ValidationError("--grid must be >= 1")
    _echo(args)
    region = compute_region(W, grid=args.grid)
    if args.out:
        write_region_csv(region, args.out)
        print(f"wrote {len(region.r1)} rows to {args.out}")
    flags = {}
    for which in ("cor56", "cor66"):
        cr = corollary_region(W, which, grid=min(args.grid, 64))
        flags[which] = bool(cr.applies)
        print(f"{which}: {'applies' if cr.applies else 'does not apply'}")
    print(f"C={region.C:.6f} H0={region.H0:.6f} log|X|={region.logX:.6f}")
    _emit(args, {"C": region.C, "H0": region.H0, "logX": region.logX, "rows": len(region.r1),
                 "flags": flags})
    return EXIT_OK


def cmd_build(args):
    from .random_coding import build_secure_code
    from .info import context

    W = parse_channel(args.channel)
    for name in ("n", "r1", "r2"):
        if getattr(args, name) is None:
            raise ValidationError(f"--{name} is required")
    seed = _seed(args)
    _echo(args)
    print(f"seed={seed}")
    code, report = build_secure_code(context(W), args.n, args.r1, args.r2, seed=seed,
                                     attempts=args.attempts,
                                     evaluate_security=not args.no_eval)
    if args.out:
        save_code(code, args.out)
        print(f"code written to {args.out}")
    print(f"M={report.M} L={report.L} kept={report.expurgated_M} eps4={report.eps4:.6g}")
    if report.warning:
        print("warning: " + report.warning)
    _emit(args, report.to_json())
    return EXIT_OK


def cmd_eval(args):
    from .security import evaluate, evaluate_mc

    W = parse_channel(args.channel)
    if not args.code:
        raise ValidationError("--code is required")
    code = _load_code(args.code)
    code.check_channel(W)
    seed = _seed(args)
    _echo(args)
    print(f"seed={seed}")
    if args.mc:
        rep = evaluate_mc(code, W, args.trials, seed=seed, restarts=args.restarts)
    else:
        budget = ch.enumeration_budget()
        if W.output_size**code.n > budget:
            raise BudgetExceeded("|Y|^n", W.output_size**code.n, budget)
        rep = evaluate(code, W, budget, seed=seed, search_restarts=args.restarts)
    for k in ("eps_A", "delta_B", "delta_C", "delta_D"):
        v = getattr(rep, k)
        print(f"{k:8s}= {'n/a' if v is None else format(v, '.6g')}")
    _emit(args, rep.to_json())
    return EXIT_OK


def cmd_commit(args):
    from .protocols import bc_security, commit, make_hash, write_jsonl

    W = parse_channel(args.channel)
    if not args.code:
        raise ValidationError("--code is required")
    code = _load_code(args.code)
    code.check_channel(W)
    seed = _seed(args)
    t = args.t if args.t is not None else int(round(math.log2(code.M)))
    if code.M != 2**t:
        raise ValidationError(f"code has M={code.M} messages, commitment needs 2^t={2**t}")
    _echo(args, t=t)
    print(f"seed={seed}")
    ss = np.random.SeedSequence(seed)
    hseed, rseed = ss.spawn(2)
    h = make_hash(t, hseed)
    rng = np.random.default_rng(rseed)
    runs = []
    for _ in range(args.runs):
        bit = int(rng.integers(0, 2)) if args.bit is None else args.bit
        runs.append(commit(bit, code, h, W, rng=rng))
    rate = sum(r.accept for r in runs) / len(runs)
    doc = {"hash": h.bits, "runs": len(runs), "accept_rate": rate}
    if not args.no_security:
        sec = bc_security(code, h, W, seed=seed)
        doc["security"] = sec.to_json()
        print(f"H2(M|Y)={sec.h2:.6g} I(f(M);Y)={sec.bob_info:.6g} bound={sec.bound:.6g} "
              f"alice_cheat={sec.alice_cheat:.6g}")
    if args.out:
        write_jsonl(runs, args.out)
    print(f"accept rate {rate:.4f} over {len(runs)} runs")
    _emit(args, doc)
    return EXIT_OK


def _parse_bids(text: str) -> dict:
    bids = {}
    try:
        for part in text.split(","):
            if part.strip():
                pid, price = part.split(":")
                bids[int(pid)] = float(price)
    except ValueError:
        raise ValidationError(f"bad --bids {text!r}; use ID:PRICE,ID:PRICE") from None
    return bids


def cmd_auction(args):
    from .protocols import collusion_strategy, run_auction, write_jsonl

    W = parse_channel(args.channel)
    if not args.code:
        raise ValidationError("--code is required")
    code = _load_code(args.code)
    code.check_channel(W)
    bids = _parse_bids(args.bids)
    seed = _seed(args)
    _echo(args)
    print(f"seed={seed}")
    strat = collusion_strategy(code, W, seed=seed) if args.cheat else None
    if strat is not None and strat.cheater not in bids:
        bids[strat.cheater] = max(bids.values(), default=0.0) + 1.0
    rng = np.random.default_rng(seed)
    runs = [run_auction(W, code, bids, cheat_strategy=strat, rng=rng) for _ in range(args.runs)]
    fail = sum(not r.verified for r in runs) / len(runs)
    doc = {"runs": len(runs), "verification_failure_rate": fail, "winner": runs[0].winner}
    if strat is not None:
        doc["collusion_success_rate"] = sum(r.cheat["colluder_listed"] for r in runs) / len(runs)
        doc["strategy"] = {"cheater": strat.cheater, "colluder": strat.colluder,
                           "x_block": list(strat.x_block)}
    if args.out:
        write_jsonl(runs, args.out)
    print(f"verification failure rate {fail:.4f} over {len(runs)} runs")
    _emit(args, doc)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--channel", required=True,
                        help="channel JSON file or shorthand bsc:P, z:P, noiseless:K")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=1,
                        help="worker cap (computation is single-threaded)")
    common.add_argument("--json", default=None, help="also write the JSON result here")

    p = argparse.ArgumentParser(prog="seclist", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("capacity", parents=[common])
    s.set_defaults(func=cmd_capacity)

    s = sub.add_parser("region", parents=[common])
    s.add_argument("--grid", type=int, default=512)
    s.add_argument("--out", default=None, help="CSV path")
    s.set_defaults(func=cmd_region)

    s = sub.add_parser("build", parents=[common])
    s.add_argument("--n", type=int)
    s.add_argument("--r1", type=float)
    s.add_argument("--r2", type=float)
    s.add_argument("--attempts", type=int, default=16)
    s.add_argument("--no-eval", action="store_true")
    s.add_argument("--out", default=None, help="code JSON path")
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("eval", parents=[common])
    s.add_argument("--code")
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", default=True)
    mode.add_argument("--mc", action="store_true")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--restarts", type=int, default=8)
    s.add_argument("--out", dest="json", default=None, help="report JSON path")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("commit", parents=[common])
    s.add_argument("--code")
    s.add_argument("--t", type=int, default=None, help="hash length; code needs M = 2^t")
    s.add_argument("--bit", type=int, choices=(0, 1), default=None)
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--no-security", action="store_true")
    s.add_argument("--out", default=None, help="JSON-lines transcript path")
    s.set_defaults(func=cmd_commit)

    s = sub.add_parser("auction", parents=[common])
    s.add_argument("--code")
    s.add_argument("--bids", default="1:10,2:5")
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--cheat", action="store_true")
    s.add_argument("--out", default=None, help="JSON-lines transcript path")
    s.set_defaults(func=cmd_auction)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HypothesisViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except BudgetExceeded as exc:
        print(f"error: {exc}; rerun with --mc", file=sys.stderr)
        return EXIT_BUDGET
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
