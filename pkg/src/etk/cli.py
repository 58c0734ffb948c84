"""Command-line entry point: ``etk <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 certification failure.
"""

import argparse
import csv
import io
import json
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .config import DEFAULT
from .discrimination import binary_advantage, is_k_positive
from .io import FormatError, load_channel, load_matrix, load_state, matrix_to_dict
from .linalg import NotHermitianError, DimensionError, min_eig
from .multichannel import advantage_ratio
from .quantum import BipartiteState, is_cp, is_tp, is_unital, isotropic_state, max_entangled, product_state
from .robustness import RobustnessConfig, robustness_bounds, search_order_reversal
from .schmidt import UncertifiedWitnessError, min_schmidt_k_expectation, reduction_family
from .sdp import SdpError

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_CERT = 0, 2, 3, 4


class CertificationFailure(RuntimeError):
    pass


def _dims(values: Optional[Sequence[int]], n: int = 2) -> List[int]:
    if not values:
        raise ValueError("--dims is required")
    vals = list(values)
    if len(vals) == 1:
        vals = vals * n
    if any(v < 1 for v in vals):
        raise ValueError("dimensions must be positive")
    return vals


def _state(args) -> BipartiteState:
    if args.preset:
        dA, dB = _dims(args.dims)
        if args.preset == "maxent":
            if dA != dB:
                raise ValueError("maxent preset needs equal dimensions")
            return max_entangled(dA)
        a = np.zeros(dA)
        a[0] = 1.0
        b = np.zeros(dB)
        b[0] = 1.0
        return BipartiteState(product_state(a, b), (dA, dB))
    if not args.input:
        raise ValueError("give --input FILE or --preset")
    return load_state(args.input)


def _config(args) -> RobustnessConfig:
    tols = DEFAULT.with_overrides(sdp_gap=args.tol) if args.tol else DEFAULT
    return RobustnessConfig(
        max_rounds=args.max_rounds,
        restarts=args.restarts,
        seed=args.seed,
        tolerances=tols,
    )


def cmd_robustness(args) -> Dict:
    rho = _state(args)
    cert = robustness_bounds(rho, args.k, _config(args))
    return {"certificate": cert.to_dict()}


def _isotropic_table(d: int, k: int, ktp, points: int = 11) -> List[Dict]:
    rows = []
    for f in np.linspace(1.0 / (d * d), 1.0, points):
        rep, _ = binary_advantage(isotropic_state(d, float(f)), k, ktp, check_positivity=False)
        rows.append({"fidelity": float(f), "p_guess": rep.p_guess_rho, "p_guess_Sk": rep.p_guess_Sk, "margin": rep.margin})
    return rows


def cmd_binary_demo(args) -> Dict:
    d = _dims(args.dims, 1)[0]
    if args.t is None:
        raise ValueError("--t is required")
    L, pos = reduction_family(d, args.t)
    if not 1 <= args.k <= d:
        raise ValueError(f"k must lie in [1, {d}]")
    if pos.level < args.k:
        raise ValueError(f"the map with t={args.t} is only {pos.level}-positive, not {args.k}-positive")
    ktp = L.channel
    rep, _ = binary_advantage(max_entangled(d), args.k, ktp, check_positivity=False)
    return {
        "report": rep.to_dict(),
        "positivity_level": pos.level,
        "table": _isotropic_table(d, args.k, ktp),
    }


def cmd_multichannel_demo(args) -> Dict:
    rho = _state(args)
    rep = advantage_ratio(rho, args.k, config=_config(args))
    if not rep.consistent:
        raise CertificationFailure(
            f"ratio {rep.ratio:.10g} outside 1 + [{rep.robustness_interval[0]:.10g}, {rep.robustness_interval[1]:.10g}]"
        )
    return {"report": rep.to_dict()}


def cmd_witness_certify(args) -> Dict:
    if not args.witness:
        raise ValueError("--witness FILE is required")
    W = load_matrix(args.witness)
    dA, dB = _dims(args.dims)
    if W.shape != (dA * dB, dA * dB):
        raise ValueError(f"witness of shape {W.shape} does not match dims ({dA}, {dB})")
    oracle = min_schmidt_k_expectation(W, (dA, dB), args.k, restarts=args.restarts, seed=args.seed)
    out = {"oracle": {"restarts": args.restarts, "seed": args.seed, "value": oracle.value}, "k": args.k}
    out["upper_bounded_by_identity"] = bool(min_eig(np.eye(dA * dB) - W) >= -1e-9)
    if oracle.value < -DEFAULT.witness_eps:
        raise UncertifiedWitnessError(f"witness takes value {oracle.value:.3e} on a Schmidt-rank-{args.k} state")
    if args.input:
        rho = load_state(args.input)
        ex = float(np.real(np.trace(W @ rho.operator)))
        out["expectation"] = ex
        out["detected"] = ex < -DEFAULT.witness_eps
    return out


def cmd_choi(args) -> Dict:
    if args.input:
        ch = load_channel(args.input)
        level = None
    else:
        d = _dims(args.dims, 1)[0]
        if args.t is None:
            raise ValueError("give --input FILE or --dims D --t T")
        L, pos = reduction_family(d, args.t)
        ch, level = L.channel, pos.level
    out = {
        "d_in": ch.d_in,
        "d_out": ch.d_out,
        "choi": matrix_to_dict(ch.choi),
        "tp": list(is_tp(ch)),
        "unital": list(is_unital(ch)),
        "cp": list(is_cp(ch)),
        "choi_min_eig": float(min_eig(ch.choi)),
    }
    if level is not None:
        out["positivity_level"] = level
    return out


def cmd_order_search(args) -> Dict:
    dA, dB = _dims(args.dims)
    found = search_order_reversal((dA, dB), args.k, args.k2, trials=args.trials, config=_config(args))
    return {"pairs": found}


COMMANDS = {
    "robustness": cmd_robustness,
    "binary-demo": cmd_binary_demo,
    "multichannel-demo": cmd_multichannel_demo,
    "witness-certify": cmd_witness_certify,
    "choi": cmd_choi,
    "order-search": cmd_order_search,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="etk", description="Schmidt-number robustness and discrimination tools")
    p.add_argument("--version", action="version", version=f"etk {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--input", help="state (or channel for 'choi') JSON file")
        s.add_argument("--preset", choices=["maxent", "product"], help="built-in state instead of --input")
        s.add_argument("--witness", help="witness matrix JSON file (witness-certify)")
        s.add_argument("--dims", type=int, nargs="+")
        s.add_argument("--k", type=int, default=1)
        s.add_argument("--k2", type=int, default=2, help="second level for order-search")
        s.add_argument("--t", type=float)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--restarts", type=int, default=32)
        s.add_argument("--max-rounds", type=int, default=60)
        s.add_argument("--trials", type=int, default=10)
        s.add_argument("--tol", type=float)
        s.add_argument("--out", choices=["json", "csv"], default="json")
    return p


def _scenario(args) -> Dict:
    return {
        "command": args.command,
        "input": args.input,
        "preset": args.preset,
        "witness": args.witness,
        "dims": args.dims,
        "k": args.k,
        "t": args.t,
        "seed": args.seed,
        "restarts": args.restarts,
        "max_rounds": args.max_rounds,
        "tol": args.tol,
    }


def _flat(d: Dict, prefix: str = "") -> Dict:
    out = {}
    for key, v in d.items():
        name = f"{prefix}{key}"
        if isinstance(v, dict) and "data" not in v:
            out.update(_flat(v, name + "."))
        elif isinstance(v, (int, float, str, bool)) or v is None:
            out[name] = v
    return out


def _to_csv(result: Dict) -> str:
    buf = io.StringIO()
    if "table" in result:
        rows = result["table"]
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    else:
        flat = _flat(result)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for key in sorted(flat):
            w.writerow([key, flat[key]])
    return buf.getvalue()


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except (FormatError, NotHermitianError, DimensionError, ValueError, FileNotFoundError) as exc:
        if isinstance(exc, UncertifiedWitnessError):
            print(f"etk: certification failed: {exc}", file=sys.stderr)
            return EXIT_CERT
        print(f"etk: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SdpError as exc:
        print(f"etk: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except CertificationFailure as exc:
        print(f"etk: certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT
    if args.out == "csv":
        sys.stdout.write(_to_csv(result))
    else:
        doc = {"version": __version__, "config": _scenario(args), "result": result}
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
