"""Command-line entry point: ``swarm-spectral {check,spectrum,decompose,simulate,visibility}``.

Exit codes: 0 on success, 2 when ``check`` finds the protocol is not
gathering, 1 on any error (bad input, usage errors, numerical failure).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dynamics, spectral
from .classify import classify
from .decompose import decompose, evolve
from .configuration import Configuration, random_cloud
from .eigen import ConvergenceError
from .topology import CirculantTopology, WeightMatrix, dense_matrix

THREADS_ENV = "SWARM_SPECTRAL_THREADS"


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    return "%.17g" % x


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory and rename into place."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        write_atomic(path, text)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def json_text(payload) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _read_json(path: str, what: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {what} file {path!r}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(
            f"malformed JSON in {what} file {path!r}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None


def load_topology(path: str) -> CirculantTopology:
    data = _read_json(path, "topology")
    try:
        return CirculantTopology.from_dict(data)
    except ValueError as exc:
        raise InputError(f"invalid topology {path!r}: {exc}") from None


def load_matrix(path: str) -> WeightMatrix:
    data = _read_json(path, "matrix")
    if not isinstance(data, dict) or "matrix" not in data:
        raise InputError(f"invalid matrix {path!r}: expected an object with field 'matrix'")
    try:
        return WeightMatrix(np.asarray(data["matrix"], dtype=float))
    except (ValueError, TypeError) as exc:
        raise InputError(f"invalid matrix {path!r}: field 'matrix': {exc}") from None


def load_configuration(path: str) -> Configuration:
    """Read ``{"positions": [[x, y], ...]}`` or a CSV with ``x,y`` columns."""
    if path.lower().endswith(".csv"):
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.DictReader(fh)
                if reader.fieldnames is None or not {"x", "y"} <= set(reader.fieldnames):
                    raise InputError(f"invalid configuration CSV {path!r}: line 1: header must contain x,y")
                rows = []
                for lineno, row in enumerate(reader, start=2):
                    try:
                        rows.append([float(row["x"]), float(row["y"])])
                    except (TypeError, ValueError):
                        raise InputError(
                            f"invalid configuration CSV {path!r}: line {lineno}: x and y must be numbers"
                        ) from None
        except OSError as exc:
            raise InputError(f"cannot read configuration file {path!r}: {exc.strerror}") from None
        if not rows:
            raise InputError(f"invalid configuration CSV {path!r}: no rows")
        return Configuration(np.array(rows))
    data = _read_json(path, "configuration")
    try:
        return Configuration.from_dict(data)
    except ValueError as exc:
        raise InputError(f"invalid configuration {path!r}: {exc}") from None


def initial_configuration(args, n: int) -> Configuration:
    if (args.init is None) == (args.random_seed is None):
        raise InputError("give exactly one of --init PATH or --random-seed S")
    if args.init is not None:
        z0 = load_configuration(args.init)
        if z0.n != n:
            raise InputError(f"initial configuration has {z0.n} agents but the topology has {n}")
        return z0
    return random_cloud(n, args.random_seed)


def positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not (value > 0 and np.isfinite(value)):
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be >= 1")
    return value


def radius_arg(text: str):
    return "auto" if text == "auto" else positive(text)


def trajectory_csv(traj: dynamics.Trajectory) -> str:
    n = traj.states.shape[1]
    header = ["t"] + [f"{c}_{i}" for i in range(n) for c in ("x", "y")]
    rows = ([float(t)] + [float(v) for v in state.reshape(-1)] for t, state in zip(traj.times, traj.states))
    return csv_text(header, rows)


def distances_csv(edges, traj: dynamics.Trajectory) -> str:
    dist = dynamics.edge_distances(traj.states, list(edges))
    header = ["t"] + [f"d_{i}_{j}" for i, j in edges] + ["max_edge_distance"]
    rows = (
        [float(t)] + [float(d) for d in row] + [float(row.max()) if row.size else 0.0]
        for t, row in zip(traj.times, dist)
    )
    return csv_text(header, rows)


def resolve_radius(radius, z0: Configuration, top: CirculantTopology) -> float:
    if radius != "auto":
        return radius
    d = dynamics.edge_distances(z0.positions[None], dynamics.undirected_edges(top))
    if d.size == 0 or d.max() == 0:
        raise InputError("--radius auto needs at least one communicating pair at positive distance")
    return float(d.max())


# subcommands ---------------------------------------------------------------

def cmd_check(args) -> int:
    if args.matrix is not None:
        target = load_matrix(args.matrix)
    else:
        top = load_topology(args.topology)
        target = dense_matrix(top) if args.general else top
    report = classify(target)
    emit(json_text(report.to_dict()), args.out)
    return 0 if report.gathering else 2


def cmd_spectrum(args) -> int:
    top = load_topology(args.topology)
    spec = spectral.closed_form_spectrum(top)
    rows = [
        [s.index, float(s.eigenvalue.real), float(s.eigenvalue.imag), s.rate, s.dim,
         "true" if spec.strong_stable == s.index else "false"]
        for s in spec.subspaces
    ]
    text = csv_text(["j", "re_lambda", "im_lambda", "rate", "dim", "strong_stable"], rows)
    if args.generating_config is not None:
        gen_rows = [
            [s.index, i, float(x), float(y)]
            for s in spec.subspaces
            for i, (x, y) in enumerate(s.generating_config)
        ]
        gen_text = csv_text(["j", "agent", "x", "y"], gen_rows)
        if args.generating_config == "-":
            text = text + "\n" + gen_text
        else:
            write_atomic(args.generating_config, gen_text)
    emit(text, args.out)
    return 0


def cmd_decompose(args) -> int:
    top = load_topology(args.topology)
    z0 = initial_configuration(args, top.n)
    spec = spectral.closed_form_spectrum(top)
    try:
        dec = decompose(z0, spec)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    payload = {
        "zstar": [float(v) for v in dec.zstar],
        "components": [
            {
                "j": s.index,
                "dim": s.dim,
                "rate": s.rate,
                "decay_exponent": s.decay_exponent,
                "rotation": s.rotation,
                "beta0": [float(b) for b in beta],
                "norm_beta0": float(np.linalg.norm(beta)),
            }
            for s, beta in zip(dec.subspaces, dec.beta0)
        ],
    }
    emit(json_text(payload), args.out)
    if args.series is not None:
        steps = int(round(args.T / args.dt))
        times = np.linspace(0.0, args.T, steps + 1)
        js = [s.index for s in dec.subspaces]
        header = ["t"] + [f"alpha_{j}" for j in js] + [f"norm_beta_{j}" for j in js]
        rows = []
        for t in times:
            comp = evolve(dec, float(t))
            rows.append([float(t)] + [float(a) for a in comp.alpha]
                        + [float(np.linalg.norm(b)) for b in comp.beta])
        write_atomic(args.series, csv_text(header, rows))
    return 0


def _normalizer(text: str) -> dynamics.Normalizer:
    try:
        return dynamics.Normalizer.parse(text)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _run_one(top, W, z0, args, nrm, seed=None, stride=None):
    meta = {"topology": top.name or "", "seed": seed}
    stride = args.stride if stride is None else stride
    return dynamics.simulate(W, z0, dt=args.dt, T=args.T, normalizer=nrm, stride=stride, metadata=meta)


def cmd_simulate(args) -> int:
    top = load_topology(args.topology)
    W = dense_matrix(top)
    nrm = _normalizer(args.normalizer)
    if args.ensemble is not None:
        return _simulate_ensemble(args, top, W, nrm)
    z0 = initial_configuration(args, top.n)
    if args.radius is None:
        emit(trajectory_csv(_run_one(top, W, z0, args, nrm, args.random_seed)), args.out)
        return 0
    # visibility is judged on every step, the CSV is strided afterwards
    traj = _run_one(top, W, z0, args, nrm, args.random_seed, stride=1)
    report = dynamics.visibility_monitor(traj, top, resolve_radius(args.radius, z0, top))
    emit(trajectory_csv(traj.subsample(args.stride)), args.out)
    stream = sys.stdout if args.out not in (None, "-") else sys.stderr
    stream.write(json_text(report.to_dict()))
    return 0


def _simulate_ensemble(args, top, W, nrm) -> int:
    if args.random_seed is None or args.out in (None, "-"):
        raise InputError("--ensemble needs --random-seed and a file --out")
    cap = os.environ.get(THREADS_ENV)
    try:
        workers = max(1, int(cap)) if cap else 1
    except ValueError:
        raise InputError(f"{THREADS_ENV} must be an integer, got {cap!r}") from None
    seeds = [args.random_seed + i for i in range(args.ensemble)]
    out = Path(args.out)

    def job(seed):
        traj = _run_one(top, W, random_cloud(top.n, seed), args, nrm, seed)
        write_atomic(str(out.with_name(f"{out.stem}_seed{seed}{out.suffix}")), trajectory_csv(traj))

    with ThreadPoolExecutor(max_workers=min(workers, len(seeds))) as pool:
        list(pool.map(job, seeds))
    return 0


def cmd_visibility(args) -> int:
    top = load_topology(args.topology)
    z0 = initial_configuration(args, top.n)
    radius = resolve_radius(args.radius, z0, top)
    try:
        dynamics.check_valid_start(z0, top, radius)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    traj = _run_one(top, dense_matrix(top), z0, args, _normalizer(args.normalizer), args.random_seed, stride=1)
    report = dynamics.visibility_monitor(traj, top, radius)
    emit(json_text(report.to_dict()), args.out)
    if args.distances is not None:
        write_atomic(args.distances, distances_csv(report.edges, traj.subsample(args.stride)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swarm-spectral", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", help="classify a protocol and print the report as JSON")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--topology", help="circulant topology JSON {n, w, name}")
    src.add_argument("--matrix", help="general weight matrix JSON {matrix: [[...]]}")
    p.add_argument("--general", action="store_true", help="classify the topology as a general matrix")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("spectrum", help="closed-form eigenvalues, rates and subspace dimensions as CSV")
    p.add_argument("--topology", required=True)
    p.add_argument("--generating-config", nargs="?", const="-", default=None, metavar="PATH",
                   help="also emit generating configurations (Re v_j, Im v_j); to PATH or appended to the output")
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    def add_init(p):
        p.add_argument("--init", help="initial configuration (JSON {positions} or CSV x,y)")
        p.add_argument("--random-seed", type=int, help="uniform cloud on [-1,1]^2 from a PCG64 seed")

    def add_time(p):
        p.add_argument("--dt", type=positive, default=1e-3)
        p.add_argument("--T", type=positive, default=20.0)

    p = sub.add_parser("decompose", help="gathering point and per-subspace coefficients as JSON")
    p.add_argument("--topology", required=True)
    add_init(p)
    add_time(p)
    p.add_argument("--out")
    p.add_argument("--series", help="CSV time series of alpha_j(t) and |beta_j(t)| on the dt grid up to T")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("simulate", help="RK4 trajectory as CSV")
    p.add_argument("--topology", required=True)
    add_init(p)
    add_time(p)
    p.add_argument("--normalizer", default="identity", help="identity or smooth:EPS")
    p.add_argument("--stride", type=positive_int, default=1)
    p.add_argument("--radius", type=radius_arg, help="also report visibility for this viewing range (or 'auto')")
    p.add_argument("--ensemble", type=positive_int,
                   help=f"run K seeds starting at --random-seed; parallelism capped by ${THREADS_ENV}")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("visibility", help="visibility report as JSON")
    p.add_argument("--topology", required=True)
    add_init(p)
    add_time(p)
    p.add_argument("--radius", type=radius_arg, required=True, help="viewing range C, or 'auto'")
    p.add_argument("--normalizer", default="identity")
    p.add_argument("--stride", type=positive_int, default=1)
    p.add_argument("--out")
    p.add_argument("--distances", help="per-edge distance CSV")
    p.set_defaults(func=cmd_visibility)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError, ConvergenceError, dynamics.BlowupError) as exc:
        print(f"swarm-spectral {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
