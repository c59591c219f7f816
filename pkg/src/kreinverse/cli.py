"""Command-line interface: ``kreinverse <command> [options]``.

Every command writes CSV whose first lines are a ``#``-prefixed manifest
(command, config, parameters, timestamp).  The data rows depend only on the
manifest parameters, so re-running a command reproduces them bit for bit.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import gk_model as gk
from . import glm, hfun, krein, refpot
from .errors import KreinError

log = logging.getLogger("kreinverse")

BUILTIN_CONFIGS = ("xe2_reference", "toy_lorentzian", "free")
FLOAT_FMT = "%.16e"


class UsageError(Exception):
    pass


def resolve_config(name: str) -> tuple[str, gk.ModelConfig]:
    """Load a config by path or by builtin name.

    Builtins are ``xe2_reference``, ``toy_lorentzian`` and ``free`` (g = 0, C = 1).
    """
    path = Path(name)
    if path.is_file():
        return str(path), gk.load_config(path)
    stem = name[:-4] if name.endswith(".cfg") else name
    if stem == "free":
        return "builtin:free", gk.ModelConfig(gk.zero_model(), {"C_meV_A2": 1.0}, None)
    if stem in BUILTIN_CONFIGS:
        text = resources.files("kreinverse").joinpath("configs", stem + ".cfg").read_text("utf-8")
        return f"builtin:{stem}", gk.parse_config(text)
    raise UsageError(f"config {name!r} is neither a file nor one of {', '.join(BUILTIN_CONFIGS)}")


def manifest_lines(command: str, config: str, params: dict) -> list[str]:
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return [f"# command: {command}",
            f"# config: {config}",
            f"# parameters: {json.dumps(params, sort_keys=True)}",
            f"# timestamp: {stamp}"]


def write_csv(out, header: list[str], columns: list[str], rows: np.ndarray) -> None:
    lines = header + [",".join(columns)]
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    body = [",".join(FLOAT_FMT % v for v in row) for row in rows]
    text = "\n".join(lines + body) + "\n"
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def read_potential_csv(path: str, C: float) -> krein.PotentialCurve:
    """Read a two-column (r, V) CSV, ignoring ``#`` lines and a text header."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            try:
                rows.append([float(parts[0]), float(parts[1])])
            except ValueError:
                continue
    if len(rows) < 4:
        raise UsageError(f"{path}: need at least 4 (r, V) rows")
    arr = np.array(rows)
    return krein.PotentialCurve(arr[:, 0], arr[:, 1], C)


def _parse_state(text: str) -> glm.BoundStateSpec:
    try:
        gamma, norm = (float(t) for t in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"bound state {text!r} must be GAMMA:NORM_CONST") from exc
    return glm.BoundStateSpec(gamma, norm)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_gk(args, cfg_name: str, cfg: gk.ModelConfig) -> None:
    if args.k_min <= 0 or args.k_max <= 0:
        raise UsageError("k range must be positive")
    if args.k_min > args.k_max:
        raise UsageError("k-min exceeds k-max")
    if args.samples < 1:
        raise UsageError("samples must be >= 1")
    if args.samples == 1:
        k = np.array([args.k_min])
    elif args.linear:
        k = np.linspace(args.k_min, args.k_max, args.samples)
    else:
        k = np.geomspace(args.k_min, args.k_max, args.samples)
    g = gk.eval_gk(cfg.model, k)
    params = {"k_min": args.k_min, "k_max": args.k_max, "samples": args.samples, "linear": args.linear}
    write_csv(args.out, manifest_lines("gk", cfg_name, params), ["k", "g"], np.column_stack([k, g]))


def cmd_hfun(args, cfg_name: str, cfg: gk.ModelConfig) -> None:
    table = hfun.build_h_table(cfg.model, args.step, args.n)
    cols = [table.r, table.values]
    names = ["r", "H"]
    if args.oracle:
        cols.append(np.array([hfun.h_quadrature(cfg.model, float(r)) for r in table.r]))
        names.append("H_quadrature")
    params = {"step": args.step, "n": args.n, "oracle": args.oracle}
    write_csv(args.out, manifest_lines("hfun", cfg_name, params), names, np.column_stack(cols))


def cmd_krein(args, cfg_name: str, cfg: gk.ModelConfig) -> None:
    if args.n < 2:
        raise UsageError("krein needs n >= 2")
    table = hfun.build_h_table(cfg.model, args.step, args.n)
    sol = krein.g_function(table, range(0, args.n + 1, args.stride), workers=args.workers)
    if sol.x.size < 3:
        raise UsageError("stride leaves fewer than 3 G samples")
    pot = krein.potential_from_g(sol, cfg.C)
    cols = [sol.x, sol.G, pot.v]
    names = ["x", "G", "V0"]
    if args.riccati:
        if cfg.refpot is None:
            raise UsageError("--riccati needs a [refpot] section in the config")
        p = refpot.PseudoMorseParams.from_mapping(cfg.refpot)
        grid = 3.0 * args.step * np.arange(args.n + 1)
        ref = refpot.riccati_integrate(p, -table[0], grid, cfg.C)
        idx = np.rint(sol.x / (3.0 * args.step)).astype(int)
        cols += [ref[idx], sol.G - ref[idx]]
        names += ["G_riccati", "diff"]
    params = {"step": args.step, "n": args.n, "stride": args.stride, "riccati": args.riccati}
    write_csv(args.out, manifest_lines("krein", cfg_name, params), names, np.column_stack(cols))


def cmd_states(args, cfg_name: str, cfg: gk.ModelConfig) -> None:
    C = cfg.C
    if args.potential:
        pot = read_potential_csv(args.potential, C)
    else:
        pot = krein.PotentialCurve.free(args.r_max, args.step, C)
    for spec in args.add or []:
        pot, _ = glm.add_bound_state(pot, _parse_state(spec))
    for _ in range(args.remove):
        _, eig = glm.ground_state(pot)
        pot = glm.remove_top_bound_state(pot, eig)
    params = {"potential": args.potential, "r_max": args.r_max, "step": args.step,
              "add": args.add or [], "remove": args.remove}
    write_csv(args.out, manifest_lines("states", cfg_name, params), ["r", "V"],
              np.column_stack([pot.r, pot.v]))


def cmd_calibrate(args, cfg_name: str, cfg: gk.ModelConfig) -> None:
    if cfg.refpot is None:
        raise UsageError("calibrate needs a [refpot] section in the config")
    if cfg.model.tail_segment is None:
        raise UsageError("calibrate needs an asymptotic tail in the config")
    p = refpot.PseudoMorseParams.from_mapping(cfg.refpot)
    h0 = refpot.h_zero(cfg.model)
    seed = refpot.quadratic_seed(p, cfg.C, h0)
    b3 = refpot.calibrate_b3(cfg.model, seed.a, tuple(args.bracket))
    h0_new = refpot.h_zero(cfg.model.with_tail_b3(b3))
    params = {"bracket": list(args.bracket)}
    header = manifest_lines("calibrate", cfg_name, params) + [
        f"# seed a = {seed.a!r}, b = {seed.b!r}, c = {seed.c!r}",
        f"# configured b3 = {cfg.model.tail_segment.tail_b[2]!r}",
        f"# H(0) before = {h0!r}, after = {h0_new!r}",
    ]
    write_csv(args.out, header, ["b3", "H0", "seed_a", "residual"],
              np.array([[b3, h0_new, seed.a, h0_new + seed.a]]))


COMMANDS = {"gk": cmd_gk, "hfun": cmd_hfun, "krein": cmd_krein,
            "states": cmd_states, "calibrate": cmd_calibrate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kreinverse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, default_config: str = "xe2_reference") -> None:
        p.add_argument("--config", default=default_config,
                       help="config file path or builtin name (%(default)s)")
        p.add_argument("--out", default="-", help="output CSV path, '-' for stdout")

    p = sub.add_parser("gk", help="tabulate g(k)")
    common(p)
    p.add_argument("--k-min", type=float, default=1.0)
    p.add_argument("--k-max", type=float, default=1e5)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--linear", action="store_true", help="linear instead of log spacing")

    p = sub.add_parser("hfun", help="tabulate H(r) on r = i h, i = 0..3n")
    common(p)
    p.add_argument("--step", type=float, default=1e-9)
    p.add_argument("--n", type=int, default=333)
    p.add_argument("--oracle", action="store_true", help="add a quadrature column")

    p = sub.add_parser("krein", help="solve for G(x) and V0 on x = 3 j h")
    common(p)
    p.add_argument("--step", type=float, default=1e-9)
    p.add_argument("--n", type=int, default=333, help="largest system index (3n+1 unknowns)")
    p.add_argument("--stride", type=int, default=1, help="solve every stride-th system")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--riccati", action="store_true", help="append the Riccati reference G")

    p = sub.add_parser("states", help="add/remove bound states of a potential")
    common(p, "toy_lorentzian")
    p.add_argument("--potential", help="input (r, V) CSV; default is the free potential")
    p.add_argument("--r-max", type=float, default=30.0)
    p.add_argument("--step", type=float, default=0.005)
    p.add_argument("--add", action="append", metavar="GAMMA:NORM",
                   help="bound state to add (repeatable, applied in order)")
    p.add_argument("--remove", type=int, default=0, help="number of lowest levels to remove")

    p = sub.add_parser("calibrate", help="fit the tail b3 to the quadratic seed")
    common(p)
    p.add_argument("--bracket", type=float, nargs=2, default=(-1e26, 1e26), metavar=("LO", "HI"))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        cfg_name, cfg = resolve_config(args.config)
        COMMANDS[args.command](args, cfg_name, cfg)
    except UsageError as exc:
        print(f"kreinverse {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (KreinError, ValueError, OSError) as exc:
        print(f"kreinverse {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
