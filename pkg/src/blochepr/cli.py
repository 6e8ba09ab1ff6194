"""Command-line interface: design tables, simulations, noisy runs, oracle checks, heatmaps.

    blochepr design   --config dev.json
    blochepr simulate --config dev.json --fractions 0.1,0.4 --out runs/a
    blochepr noisy    --config dev.json --seed 7 --workers 4
    blochepr oracle   --config dev.json [--negative-control]
    blochepr heatmap  runs/a/gamma_f0.4.csv --out gamma.pgm

The output directory defaults to $BLOCHEPR_OUT, then ``blochepr-out``.
Every command except ``heatmap`` writes ``manifest.json`` last; the
manifest can be passed back as ``--config`` to reproduce the run.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import coupler as dc
from .analysis import (
    bell_violation,
    bunched_fraction,
    diagonal_fraction,
    interparticle_distance,
    similarity,
    with_significance,
)
from .config import MANIFEST_TOOL, RunConfig, load_config
from .errors import BlochEPRError, ConfigError
from .evolve import propagate
from .lattice import LatticeSpec, build_hamiltonian, curvature_for_fraction, design_table
from .noise import bootstrap_similarity, emulate
from .twophoton import (
    MAX_ORACLE_SITES,
    correlation,
    epr_state,
    evolve_state,
    oracle_deviation,
    separable_state,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_ORACLE = 3

OUT_ENV = "BLOCHEPR_OUT"
DEFAULT_OUT = "blochepr-out"
ORACLE_TOL = 1e-9
BATTERY_SIZE = 20
ZERO_BATTERY_SIZE = 5
# scale applied to U in the negative control; breaks unitarity by ~10%
CORRUPTION = 1.05


# -- file output -------------------------------------------------------------


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and an atomic rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(value, fmt):
    if isinstance(value, str):
        return value
    return fmt % value


def csv_text(rows, header: str, fmt: str = "%.16e", blank=None) -> str:
    """One '#' header line, then comma-separated rows; ``blank`` marks empty cells."""
    lines = [f"# {header}"]
    rows = np.asarray(rows) if not isinstance(rows, list) else rows
    for i, row in enumerate(rows):
        cells = []
        for j, value in enumerate(row):
            if blank is not None and blank[i][j]:
                cells.append("")
            else:
                cells.append(_cell(value, fmt))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def read_matrix_csv(path) -> np.ndarray:
    """Parse a rectangular numeric CSV; '#' lines are skipped and blank cells read as NaN."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read: {exc.strerror}") from None
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ConfigError(f"{path}:row {lineno}", f"expected {width} fields, found {len(fields)}")
        try:
            rows.append([float(x) if x.strip() else np.nan for x in fields])
        except ValueError as exc:
            raise ConfigError(f"{path}:row {lineno}", f"not a number ({exc})") from None
    if not rows:
        raise ConfigError(str(path), "no data rows")
    return np.array(rows, dtype=float)


def pgm_bytes(matrix: np.ndarray, scale: int = 1) -> bytes:
    """Binary P5 grayscale image, white at the matrix maximum, black at <= 0 or blank."""
    m = np.asarray(matrix, dtype=float)
    finite = m[np.isfinite(m)]
    peak = float(finite.max()) if finite.size else 0.0
    if peak > 0:
        levels = np.clip(np.round(np.nan_to_num(m, nan=0.0) / peak * 255.0), 0, 255)
    else:
        levels = np.zeros_like(m)
    img = np.kron(levels.astype(np.uint8), np.ones((scale, scale), dtype=np.uint8))
    h, w = img.shape
    header = f"P5\n# max={peak!r}\n{w} {h}\n255\n".encode("ascii")
    return header + img.tobytes()


def fraction_tag(fraction: float) -> str:
    return f"f{fraction!r}"


def fraction_word(fraction: float) -> int:
    """The IEEE bit pattern of ``fraction``: a seed word independent of sweep order."""
    return int(np.float64(fraction).view(np.uint64))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, cfg: RunConfig, files, resolved) -> Path:
    manifest = {
        "tool": MANIFEST_TOOL,
        "version": __version__,
        "command": command,
        "config": cfg.to_document(),
        "resolved": resolved,
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "files": {name: _sha256(out / name) for name in sorted(files)},
    }
    path = out / "manifest.json"
    write_atomic(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _resolved_device(cfg: RunConfig) -> dict:
    info = {"phase": cfg.phase, "detuning": cfg.detuning}
    if cfg.source == "epr":
        info["splitter_length"] = dc.splitter_length(cfg.detuning, cfg.coupler_coupling)
    info["fractions"] = {}
    for f in cfg.fractions:
        lat = cfg.device().lattice(f)
        entry = {"bloch_period": cfg.device_length / f, "ramp": lat.ramp}
        if cfg.geometry is not None:
            entry["curvature_radius"] = curvature_for_fraction(f, cfg.geometry).curvature_radius
        info["fractions"][fraction_tag(f)] = entry
    return info


def _run_parallel(job, items, workers: int):
    if workers <= 1:
        return [job(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, items))


# -- commands ---------------------------------------------------------------


def cmd_design(cfg: RunConfig, out: Path) -> list[str]:
    if cfg.geometry is None:
        raise ConfigError("geometry", "section is required for the design table")
    rows = [
        [r.fraction, r.bloch_period, r.ramp, r.curvature_radius]
        for r in design_table(cfg.fractions, cfg.geometry)
    ]
    name = "design.csv"
    write_atomic(
        out / name,
        csv_text(rows, "columns: fraction, bloch_period_cm, ramp_per_cm, curvature_radius_cm"),
    )
    write_manifest(out, "design", cfg, [name], {"omega": cfg.geometry.omega})
    return [name]


def _matrix_header(what: str, n: int) -> str:
    return f"{what}; rows: output site k = 0..{n - 1}, columns: output site l = 0..{n - 1}"


def _simulate_one(cfg: RunConfig, out: Path, f: float):
    device = cfg.device()
    n = cfg.num_sites
    g = device.gamma(f)
    tag = fraction_tag(f)
    v = bell_violation(g)
    prof = interparticle_distance(g)
    files = {
        f"gamma_{tag}.csv": csv_text(g.gamma, _matrix_header("Gamma[k,l]", n)),
        f"violation_{tag}.csv": csv_text(
            v.values, _matrix_header("V[k,l], blank where V <= 0", n), blank=~v.violating
        ),
        f"distance_{tag}.csv": csv_text(
            [[float(d), prof.values[d], float(prof.weights[d])] for d in range(n)],
            "columns: separation D, mean correlation g(D), number of cells",
        ),
    }
    for name, text in files.items():
        write_atomic(out / name, text)
    summary = [f, device.bloch_period(f), diagonal_fraction(g), bunched_fraction(g, device.split)]
    return list(files), summary


def cmd_simulate(cfg: RunConfig, out: Path, workers: int = 1) -> list[str]:
    results = _run_parallel(lambda f: _simulate_one(cfg, out, f), cfg.fractions, workers)
    files = [name for names, _ in results for name in names]
    write_atomic(
        out / "summary.csv",
        csv_text(
            [row for _, row in results],
            "columns: fraction, bloch_period_cm, diagonal_fraction d, bunched_fraction",
        ),
    )
    files.append("summary.csv")
    write_manifest(out, "simulate", cfg, files, _resolved_device(cfg))
    return files


def _noisy_one(cfg: RunConfig, out: Path, f: float):
    device = cfg.device()
    n = cfg.num_sites
    det = cfg.detection.derive(fraction_word(f))
    ideal = device.gamma(f)
    run = emulate(ideal, det)
    v = with_significance(bell_violation(run.gamma), run.counts, run.scale)
    s_mean, s_std = bootstrap_similarity(run.counts, ideal, cfg.resamples, det)
    tag = fraction_tag(f)
    files = {
        f"counts_{tag}.csv": csv_text(run.counts, _matrix_header("coincidence counts, unordered cell stored twice", n), fmt="%d"),
        f"gamma_est_{tag}.csv": csv_text(run.gamma.gamma, _matrix_header("estimated Gamma[k,l]", n)),
        f"sigma_{tag}.csv": csv_text(run.scale * run.sigma, _matrix_header("Poisson sigma of Gamma[k,l]", n)),
        f"significance_{tag}.csv": csv_text(
            v.significance, _matrix_header("V/sigma_V, blank where V <= 0", n), blank=~v.violating
        ),
    }
    for name, text in files.items():
        write_atomic(out / name, text)
    max_sig = float(np.nanmax(v.significance))
    total = int(np.triu(run.counts).sum())
    summary = [f, float(total), max_sig, similarity(run.gamma, ideal), s_mean, s_std, float(det.seed)]
    return list(files), summary


def cmd_noisy(cfg: RunConfig, out: Path, workers: int = 1) -> list[str]:
    results = _run_parallel(lambda f: _noisy_one(cfg, out, f), cfg.fractions, workers)
    files = [name for names, _ in results for name in names]
    rows = [[_cell(x, "%.16e") if i != 6 else str(int(x)) for i, x in enumerate(row)] for _, row in results]
    write_atomic(
        out / "summary.csv",
        csv_text(
            rows,
            "columns: fraction, coincidences, max V significance, similarity, "
            "bootstrap similarity mean, bootstrap similarity std, derived seed",
        ),
    )
    files.append("summary.csv")
    write_manifest(out, "noisy", cfg, files, _resolved_device(cfg))
    return files


def _oracle_u(state, h, z, corrupt):
    u = propagate(h, z).matrix
    return oracle_deviation(state, h, z, u * CORRUPTION if corrupt else u)


def _random_instance(rng, z=None):
    n = int(rng.integers(3, 9))
    spec = LatticeSpec(n, float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.0, 1.0)), float(rng.normal()))
    m = int(rng.integers(0, n - 1))
    if rng.random() < 0.5:
        state = epr_state(m, m + 1, float(rng.uniform(0, np.pi)), n)
        kind = "epr"
    else:
        state = separable_state(m, m + 1, n)
        kind = "separable"
    zz = float(rng.uniform(0.0, 10.0)) if z is None else z
    return {"num_sites": n, "coupling": spec.coupling, "ramp": spec.ramp,
            "diag_offset": spec.diag_offset, "input": kind, "site": m, "z": zz}, state, build_hamiltonian(spec)


def cmd_oracle(cfg: RunConfig, out: Path, negative_control: bool = False) -> tuple[list[str], bool]:
    report = {"tolerance": ORACLE_TOL, "negative_control": negative_control}
    device = cfg.device()
    if cfg.num_sites <= MAX_ORACLE_SITES:
        state = (
            device.input_state() if cfg.source != "distinguishable"
            else separable_state(device.feed_site, device.feed_site + 1, cfg.num_sites)
        )
        report["device"] = {
            fraction_tag(f): _oracle_u(state, device.hamiltonian(f), device.length, negative_control)
            for f in cfg.fractions
        }
    else:
        report["device"] = f"skipped: {cfg.num_sites} sites exceeds the oracle limit of {MAX_ORACLE_SITES}"

    rng = np.random.default_rng(cfg.detection.seed)
    battery = []
    for _ in range(BATTERY_SIZE):
        params, state, h = _random_instance(rng)
        params["deviation"] = _oracle_u(state, h, params["z"], negative_control)
        battery.append(params)
    report["battery"] = battery

    zero = []
    for _ in range(ZERO_BATTERY_SIZE):
        params, state, h = _random_instance(rng, z=0.0)
        params["deviation"] = _oracle_u(state, h, 0.0, negative_control)
        params["identity_exact"] = bool(
            np.array_equal(correlation(evolve_state(state, propagate(h, 0.0))).gamma, correlation(state).gamma)
        )
        zero.append(params)
    report["zero_battery"] = zero

    devs = [p["deviation"] for p in battery + zero]
    if isinstance(report["device"], dict):
        devs += list(report["device"].values())
    worst = float(max(devs))
    passed = worst <= ORACLE_TOL and all(p["identity_exact"] for p in zero)
    report["max_deviation"] = worst
    report["passed"] = passed
    name = "oracle.json"
    write_atomic(out / name, json.dumps(report, indent=2, sort_keys=True) + "\n")
    write_manifest(out, "oracle", cfg, [name], {"max_deviation": worst, "passed": passed})
    return [name], passed


def cmd_heatmap(csv_path, out=None, scale: int = 8) -> Path:
    matrix = read_matrix_csv(csv_path)
    csv_path = Path(csv_path)
    if out is None:
        target = csv_path.with_suffix(".pgm")
    else:
        out = Path(out)
        target = out if out.suffix == ".pgm" else out / csv_path.with_suffix(".pgm").name
    target.parent.mkdir(parents=True, exist_ok=True)
    data = pgm_bytes(matrix, scale)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    os.replace(tmp, target)
    return target


# -- entry point ------------------------------------------------------------


def _origin(exc: BaseException) -> str:
    tb = exc.__traceback__
    module = "blochepr"
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("blochepr"):
            module = name
        tb = tb.tb_next
    return module


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blochepr", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in [
        ("design", "curvature table for the requested Bloch-cycle fractions"),
        ("simulate", "ideal correlation, distance and violation matrices"),
        ("noisy", "emulated coincidence counts with significance and bootstrap similarity"),
        ("oracle", "cross-check amplitude evolution against the Fock-space oracle"),
    ]:
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="JSON configuration or run manifest")
        s.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or {DEFAULT_OUT})")
        s.add_argument("--seed", type=int, help="override detection.seed (unsigned 64-bit)")
        s.add_argument("--fractions", help="comma-separated z/lambda_B list overriding run.fractions")
        if name in ("simulate", "noisy"):
            s.add_argument("--workers", type=int, default=1, help="fractions processed concurrently")
        if name == "oracle":
            s.add_argument("--negative-control", action="store_true",
                           help="corrupt the propagator; the check must then fail")
    h = sub.add_parser("heatmap", help="render a matrix CSV as a binary PGM image")
    h.add_argument("csv", help="matrix CSV written by simulate or noisy")
    h.add_argument("--out", help="output .pgm file or directory (default: next to the CSV)")
    h.add_argument("--scale", type=int, default=8, help="pixels per matrix cell")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "heatmap":
            if args.scale < 1:
                raise ConfigError("--scale", f"must be >= 1, got {args.scale}")
            target = cmd_heatmap(args.csv, args.out, args.scale)
            print(target)
            return EXIT_OK
        cfg = load_config(args.config, seed=args.seed, fractions=args.fractions, output=args.out)
        if getattr(args, "workers", 1) < 1:
            raise ConfigError("--workers", f"must be >= 1, got {args.workers}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(cfg.output or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    try:
        if args.command == "design":
            files = cmd_design(cfg, out)
        elif args.command == "simulate":
            files = cmd_simulate(cfg, out, args.workers)
        elif args.command == "noisy":
            files = cmd_noisy(cfg, out, args.workers)
        else:
            files, passed = cmd_oracle(cfg, out, args.negative_control)
            report = json.loads((out / "oracle.json").read_text())
            print(f"oracle max deviation {report['max_deviation']:.3e} "
                  f"(tolerance {ORACLE_TOL:g}): {'pass' if passed else 'FAIL'}")
            if not passed:
                return EXIT_ORACLE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlochEPRError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure in {_origin(exc)}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for name in files:
        print(out / name)
    print(out / "manifest.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
