"""Command-line experiment runner.

Three subcommands share one set of flags:

``run``     the Cartesian product of the given values (single cell by default)
``table1``  unit-square sweep over problems, degrees, gamma and smoothers
``table2``  deformed-domain sweep (shear angles, bump heights) at p_L = 64, gamma = 7

List-valued flags take comma-separated values (``--p 8,16`` or ``--gamma 1-8``).
Settings may also come from a plain ``key=value`` file passed with ``--config``;
command-line flags take precedence over the file.  Output is CSV on stdout or
``--out``.  The exit status is 1 only when a cell raised an error;
non-convergent cells are reported as ``>N`` and do not count as errors.
"""

import argparse
import csv
import itertools
import sys
from pathlib import Path

from .experiments import CSV_COLUMNS, PROBLEMS, ProblemSpec, run_experiment
from .geometry import bump, parse_map, shear, unit_square
from .mg import GammaCycleConfig

TABLE1_DEGREES = (8, 16, 32, 64)
TABLE1_GAMMAS = tuple(range(1, 9))
TABLE2_ANGLES = (0, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23)
TABLE2_HEIGHTS = (0.0, 0.10, 0.15, 0.16, 0.17, 0.18, 0.19, 0.20)

# flag name -> (parser for one item, is a list)
_KEYS = {
    "problem": (str, True),
    "map": (str, True),
    "p": (int, True),
    "gamma": (int, True),
    "smoother": (str, True),
    "alpha": (float, False),
    "m": (int, False),
    "tol": (float, False),
    "max_iters": (int, False),
    "p0": (int, False),
    "k": (int, False),
    "restriction": (str, False),
    "line_entries": (str, False),
    "angles": (float, True),
    "heights": (float, True),
    "out": (str, False),
}


def _parse_items(text, conv):
    items = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        head, dash, tail = part[1:].partition("-")
        if conv is int and dash:
            items.extend(range(int(part[0] + head), int(tail) + 1))
        else:
            items.append(conv(part))
    return items


def _convert(key, value):
    conv, is_list = _KEYS[key]
    if is_list:
        return _parse_items(value, conv)
    return conv(value)


def read_config_file(path):
    """Parse ``key=value`` lines; ``#`` starts a comment, dashes in keys become underscores."""
    settings = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in _KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        settings[key] = _convert(key, value)
    return settings


def build_parser():
    parser = argparse.ArgumentParser(prog="gllmg", description="Line-smoothed p-multigrid GMRES experiments.")
    parser.add_argument("command", choices=("run", "table1", "table2"))
    parser.add_argument("--config", type=Path, help="plain-text key=value settings file")
    parser.add_argument("--problem", help=f"comma list from {','.join(PROBLEMS)}")
    parser.add_argument("--map", help="unit_square, shear:<deg> or bump:<height> (comma list)")
    parser.add_argument("--p", help="finest degree(s) p_L")
    parser.add_argument("--gamma", help="cycle index(es), 1..8")
    parser.add_argument("--smoother", help="GLL and/or FEM")
    parser.add_argument("--alpha", help="relaxation weight (default 2/3 for GLL, 0.16 for FEM)")
    parser.add_argument("--m", help="smoothing steps per orientation")
    parser.add_argument("--tol", help="relative residual reduction")
    parser.add_argument("--max-iters", dest="max_iters", help="GMRES iteration budget")
    parser.add_argument("--p0", help="coarsest degree")
    parser.add_argument("--k", help="wave number of the sine problem")
    parser.add_argument("--restriction", help="interpolation or transpose")
    parser.add_argument("--line-entries", dest="line_entries", help="probe or band")
    parser.add_argument("--angles", help="table2 shear angles in degrees")
    parser.add_argument("--heights", help="table2 bump heights")
    parser.add_argument("--out", help="CSV output path (default stdout)")
    return parser


def _defaults(command):
    d = {
        "problem": ["constant"],
        "map": ["unit_square"],
        "p": [8],
        "gamma": [1],
        "smoother": ["GLL"],
        "alpha": None,
        "m": 1,
        "tol": 1e-8,
        "max_iters": 200,
        "p0": 4,
        "k": 1,
        "restriction": "interpolation",
        "line_entries": "probe",
        "angles": list(TABLE2_ANGLES),
        "heights": list(TABLE2_HEIGHTS),
        "out": None,
    }
    if command == "table1":
        d.update(problem=list(PROBLEMS), p=list(TABLE1_DEGREES), gamma=list(TABLE1_GAMMAS), smoother=["GLL", "FEM"])
    elif command == "table2":
        d.update(problem=["boundary_layer"], p=[64], gamma=[7], smoother=["GLL", "FEM"], max_iters=30)
    return d


def resolve_settings(args):
    settings = _defaults(args.command)
    if args.config is not None:
        settings.update(read_config_file(args.config))
    for key in _KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = _convert(key, value)
    return settings


def _maps(command, s):
    if command == "table2":
        return [shear(a) for a in s["angles"]] + [bump(h) for h in s["heights"]]
    return [unit_square() if name == "unit_square" else parse_map(name) for name in s["map"]]


def iter_cells(command, s):
    for kind, dom, p, g, src in itertools.product(s["problem"], _maps(command, s), s["p"], s["gamma"], s["smoother"]):
        yield dict(
            problem=ProblemSpec(kind, k=s["k"]),
            domain=dom,
            p_L=p,
            gamma=g,
            smoother_source=src.upper(),
            alpha=s["alpha"],
            m=s["m"],
            tol=s["tol"],
            max_iters=s["max_iters"],
            p0=s["p0"],
            restriction=s["restriction"],
            line_entries=s["line_entries"],
        )


def run_sweep(command, settings, stream):
    """Run every cell and stream CSV rows; returns the number of errored cells."""
    writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    errors = 0
    for cell in iter_cells(command, settings):
        row = run_experiment(**cell)
        writer.writerow(row.as_csv())
        stream.flush()
        if row.iterations == "error":
            errors += 1
            print(f"[gllmg] {row.problem} {row.map} p_L={row.p_L} gamma={row.gamma}: {row.error}", file=sys.stderr)
    return errors


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        settings = resolve_settings(args)
        # validate the whole sweep before spending time on it
        for cell in iter_cells(args.command, settings):
            GammaCycleConfig(
                gamma=cell["gamma"],
                alpha=cell["alpha"],
                m=cell["m"],
                p0=cell["p0"],
                smoother_source=cell["smoother_source"],
                restriction=cell["restriction"],
                line_entries=cell["line_entries"],
            )
    except (ValueError, OSError) as err:
        print(f"[gllmg] {err}", file=sys.stderr)
        return 2
    if settings["out"]:
        with open(settings["out"], "w", newline="") as fh:
            errors = run_sweep(args.command, settings, fh)
    else:
        errors = run_sweep(args.command, settings, sys.stdout)
    return 1 if errors else 0


if __name__ == "__main__":
    sys.exit(main())
