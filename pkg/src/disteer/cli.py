"""Command-line front end: ``disteer {reproduce-fig3,selftest,simulate,verify}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .protocol import (
    CountsRecord,
    ProtocolConfig,
    blue_curve_chsh,
    bootstrap_witness,
    estimate_behavior,
    exact_behavior,
    sample_counts,
)
from .selftest.bounds import DEFAULT_BASIS, SolverError, selftest_bounds
from .selftest.relaxation import CHSH_MAX
from .witness import chsh_lines, payoff_eq7, werner_payoff

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3
SIG = 10


class InputError(ValueError):
    pass


def sig(x):
    """Round floats (recursively) to 10 significant digits."""
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.{SIG}g}")
    if isinstance(x, dict):
        return {k: sig(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [sig(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    return x


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{SIG}g}"
    return str(x)


def write_atomic(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    if not target.parent.exists():
        raise InputError(f"output directory {target.parent} does not exist")
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_triple(text, name: str) -> tuple[float, float, float]:
    if isinstance(text, (list, tuple)):
        parts = list(text)
    else:
        parts = str(text).split(",")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise InputError(f"--{name} expects three comma-separated numbers, got {text!r}") from None
    if len(vals) != 3:
        raise InputError(f"--{name} expects three values, got {len(vals)}")
    return vals


def parse_grid(text) -> np.ndarray:
    """Comma list, or ``start:stop:num`` for an inclusive linspace."""
    if isinstance(text, (list, tuple)):
        grid = np.asarray(text, dtype=float)
    else:
        try:
            if ":" in str(text):
                a, b, n = str(text).split(":")
                grid = np.linspace(float(a), float(b), int(n))
            else:
                grid = np.array([float(p) for p in str(text).split(",")])
        except ValueError:
            raise InputError(f"cannot parse visibility grid {text!r}") from None
    if grid.size == 0 or np.any(grid < 0) or np.any(grid > 1):
        raise InputError("visibility grid must be nonempty and lie within [0, 1]")
    if np.any(np.diff(grid) <= 0):
        raise InputError("visibility grid must be strictly increasing")
    return grid


def _check_chsh(vals) -> tuple[float, float, float]:
    for s in vals:
        if not 0.0 <= s <= CHSH_MAX + 1e-9:
            raise InputError(f"CHSH value {s} outside [0, 2*sqrt(2)]")
    return tuple(vals)


def _check_fidelities(vals) -> tuple[float, float, float]:
    for f in vals:
        if not 0.0 <= f <= 1.0:
            raise InputError(f"fidelity {f} outside [0, 1]")
    return tuple(vals)


def _read_counts(path: str) -> CountsRecord:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read counts file: {exc}") from None
    return CountsRecord.from_json(text)


@dataclass(frozen=True)
class SweepSpec:
    grid: np.ndarray
    fidelities: tuple[float, float, float]
    budget: int | None
    seed: int
    resamples: int = 400


def fidelity_source(args) -> tuple[tuple[float, float, float], dict]:
    """Fidelities from --fidelities, --chsh (via the SDP) or --from-counts."""
    chosen = [k for k in ("fidelities", "chsh", "from_counts") if getattr(args, k, None) is not None]
    if len(chosen) > 1:
        raise InputError(f"pass only one of --fidelities, --chsh, --from-counts (got {chosen})")
    if not chosen:
        return (1.0, 1.0, 1.0), {"source": "ideal"}
    if chosen[0] == "fidelities":
        return _check_fidelities(parse_triple(args.fidelities, "fidelities")), {"source": "fixed"}
    if chosen[0] == "chsh":
        chsh = _check_chsh(parse_triple(args.chsh, "chsh"))
    else:
        beh = estimate_behavior(_read_counts(args.from_counts))
        if beh.chsh is None:
            raise InputError("counts file has no CHSH counts")
        chsh = _check_chsh(tuple(min(s, CHSH_MAX) for s in chsh_lines(beh)))
    b = selftest_bounds(chsh, basis=args.basis)
    return tuple(b.per_j), {"source": "sdp", "chsh": list(chsh), "bounds": b.to_dict()}


def reproduce_fig3(spec: SweepSpec) -> list[dict]:
    rows = []
    for k, v in enumerate(spec.grid):
        cfg = ProtocolConfig(v=float(v))
        beh = exact_behavior(cfg)
        row = {
            "v": float(v),
            "payoff_ideal": werner_payoff(float(v)),
            "payoff_noisy": payoff_eq7(beh, spec.fidelities).value,
            "chsh_value": blue_curve_chsh(float(v)),
        }
        if spec.budget is not None:
            counts = sample_counts(beh, spec.budget, seed=spec.seed * 1000 + k)
            rep = bootstrap_witness(counts, spec.fidelities, spec.resamples, seed=spec.seed * 1000 + k)
            row["payoff_noisy"] = rep.value
            row["stderr"] = rep.stderr
        rows.append(row)
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = list(rows[0])
    w.writerow(keys)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in keys])
    return buf.getvalue()


def _dump(obj) -> str:
    return json.dumps(sig(obj), indent=2) + "\n"


# --- command handlers -------------------------------------------------------------


def cmd_reproduce_fig3(args) -> int:
    f, meta = fidelity_source(args)
    budget = None if args.budget is None else int(args.budget)
    if budget is not None and budget < 1:
        raise InputError("--budget must be positive")
    spec = SweepSpec(parse_grid(args.v_grid), f, budget, int(args.seed), int(args.resamples))
    rows = reproduce_fig3(spec)
    if args.format == "json":
        text = _dump({"fidelities": list(f), **meta, "rows": rows})
    else:
        text = rows_to_csv(rows)
    write_atomic(args.out, text)
    return EXIT_OK


def cmd_selftest(args) -> int:
    if args.fidelities is not None:
        raise InputError("selftest takes --chsh or --from-counts, not --fidelities")
    if args.chsh is None and args.from_counts is None:
        raise InputError("selftest needs --chsh or --from-counts")
    _, meta = fidelity_source(args)
    write_atomic(args.out, _dump({"chsh": meta["chsh"], **meta["bounds"]}))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.budget is None:
        raise InputError("simulate needs --budget")
    budget = int(args.budget)
    chsh_budget = budget if args.chsh_budget is None else int(args.chsh_budget)
    if budget < 1 or chsh_budget < 1:
        raise InputError("budgets must be positive")
    cfg = ProtocolConfig(
        v=float(args.v),
        bc_visibility=float(args.w),
        noise_model=args.noise_model,
        yes_efficiency=float(args.yes_efficiency),
    )
    counts = sample_counts(exact_behavior(cfg), budget, int(args.seed), chsh_budget, config=cfg.to_dict())
    write_atomic(args.out, counts.to_json() + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.from_counts is None:
        raise InputError("verify needs --from-counts")
    counts = _read_counts(args.from_counts)
    eta = float(counts.config.get("yes_efficiency", 1.0))
    if args.fidelities is not None and args.chsh is not None:
        raise InputError("pass only one of --fidelities, --chsh")
    if args.chsh is not None:
        ns = argparse.Namespace(chsh=args.chsh, fidelities=None, from_counts=None, basis=args.basis)
        f, meta = fidelity_source(ns)
    elif args.fidelities is not None:
        f, meta = _check_fidelities(parse_triple(args.fidelities, "fidelities")), {"source": "fixed"}
    else:
        f, meta = (1.0, 1.0, 1.0), {"source": "ideal"}
    point = payoff_eq7(estimate_behavior(counts, eta), f)
    boot = bootstrap_witness(counts, f, int(args.resamples), int(args.seed), eta)
    report = point.to_dict()
    report["stderr"] = boot.stderr
    report["bootstrap_mean"] = boot.value
    report["fidelities"] = list(f)
    report["fidelity_source"] = meta["source"]
    write_atomic(args.out, _dump(report))
    return EXIT_OK


# --- argument plumbing ------------------------------------------------------------

DEFAULTS = {
    "v_grid": "0.5:1.0:51",
    "seed": 0,
    "format": "csv",
    "resamples": 400,
    "basis": DEFAULT_BASIS,
    "v": 1.0,
    "w": 1.0,
    "noise_model": "werner",
    "yes_efficiency": 1.0,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="disteer", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file mirroring the flags; flags win")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--seed", type=int)

    def fid(sp):
        sp.add_argument("--fidelities", help="f1,f2,f3")
        sp.add_argument("--chsh", help="three CHSH values; fidelities come from the SDP bound")
        sp.add_argument("--basis", help="relaxation basis preset")

    sp = sub.add_parser("reproduce-fig3", help="payoff and CHSH curves over a visibility grid")
    common(sp)
    fid(sp)
    sp.add_argument("--from-counts", help="counts file whose CHSH block feeds the SDP")
    sp.add_argument("--v-grid", help="comma list or start:stop:num")
    sp.add_argument("--budget", type=int, help="events per setting; omit for exact curves")
    sp.add_argument("--resamples", type=int)
    sp.add_argument("--format", choices=("csv", "json"))
    sp.set_defaults(handler=cmd_reproduce_fig3)

    sp = sub.add_parser("selftest", help="swap-fidelity lower bounds from CHSH values")
    common(sp)
    fid(sp)
    sp.add_argument("--from-counts")
    sp.set_defaults(handler=cmd_selftest)

    sp = sub.add_parser("simulate", help="sample a counts file")
    common(sp)
    sp.add_argument("--v", type=float)
    sp.add_argument("--w", type=float, help="visibility of the Bob-Charlie pair")
    sp.add_argument("--noise-model", choices=("werner", "alice_flip"))
    sp.add_argument("--yes-efficiency", type=float)
    sp.add_argument("--budget", type=int, help="events per (x,z) setting")
    sp.add_argument("--chsh-budget", type=int, help="events per (y,z) setting (default --budget)")
    sp.set_defaults(handler=cmd_simulate)

    sp = sub.add_parser("verify", help="payoff with bootstrap stderr from a counts file")
    common(sp)
    fid(sp)
    sp.add_argument("--from-counts")
    sp.add_argument("--resamples", type=int)
    sp.set_defaults(handler=cmd_verify)
    return p


def merge_config(args: argparse.Namespace) -> argparse.Namespace:
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot load config: {exc}") from None
        if not isinstance(cfg, dict):
            raise InputError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = set(cfg) - set(vars(args))
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
    for key in vars(args):
        if getattr(args, key) is None:
            if key in cfg:
                setattr(args, key, cfg[key])
            elif key in DEFAULTS:
                setattr(args, key, DEFAULTS[key])
    return args


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(merge_config(args))
    except SolverError as exc:
        print(f"disteer: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError) as exc:
        print(f"disteer: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
