"""Command line entry points: simulate | image | compare | ingest | validate-identities.

Exit codes: 0 success, 1 validation failure, 2 I/O error, 3 numerical failure.
"""

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fileio, music, theory
from .forward import (Generator, MatrixKind, NoiseSpec, NumericalError, add_noise, apply_mask,
                      assemble_msr, strip_diagonal)
from .scene import (ArrayConfig, ContrastMode, ROIGrid, fresnel_array, grid_from_dict,
                    benchmark_scene, scene_from_dict, uniform_directions)

log = logging.getLogger("dfmusic")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERICAL = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scene: object
    N_values: list
    frequencies: list
    generator: Generator = Generator.BORN
    noise: NoiseSpec = None
    kinds: tuple = ("full", "diagonal_free")
    bistatic: bool = False
    fresnel_export: bool = False
    grid: ROIGrid = field(default_factory=ROIGrid)
    polarization: str = "tm"
    rank_policy: music.RankPolicy = field(default_factory=music.RankPolicy)
    output_dir: Path = Path("out")
    raw: dict = field(default_factory=dict)

    @property
    def sha(self):
        # output location does not change the science, so it stays out of the hash
        return fileio.config_hash({k: v for k, v in self.raw.items() if k != "output_dir"})


def _resolve_scene(spec, base_dir):
    if isinstance(spec, str):
        if spec.startswith("benchmark:"):
            return benchmark_scene(spec.split(":", 1)[1])[0]
        path = (base_dir / spec)
        if not path.exists():
            raise FileNotFoundError(f"scene file {path} not found")
        doc = json.loads(path.read_text())
        return scene_from_dict(doc.get("scene", doc))
    return scene_from_dict(spec)


def parse_run_config(doc, base_dir=Path(".")):
    """Build a RunConfig from the JSON document; raises ConfigError on bad values."""
    try:
        scene = _resolve_scene(doc.get("scene_path", doc.get("scene", "benchmark:permittivity")), base_dir)
        N_values = [int(n) for n in doc.get("N", [36])]
        for n in N_values:
            uniform_directions(n)
        freqs = [float(f) for f in doc["frequencies"]]
        if not freqs or any(not (math.isfinite(f) and f > 0) for f in freqs):
            raise ConfigError("frequencies must be positive")
        noise = None
        if doc.get("noise") is not None:
            n = doc["noise"]
            noise = NoiseSpec(float(n.get("snr_db", 20.0)), int(n.get("seed", 0)))
        kinds = tuple(doc.get("kinds", ["full", "diagonal_free"]))
        for k in kinds:
            if k not in ("full", "diagonal_free"):
                raise ConfigError(f"unknown matrix kind {k!r}")
        generator = Generator(doc.get("generator", "born"))
        if generator is Generator.FOLDY_LAX and scene.contrast_mode is not ContrastMode.PERMITTIVITY:
            raise ConfigError("Foldy-Lax generation supports permittivity contrast only")
        return RunConfig(
            scene=scene, N_values=N_values, frequencies=freqs, generator=generator, noise=noise,
            kinds=kinds, bistatic=bool(doc.get("bistatic", False)),
            fresnel_export=bool(doc.get("fresnel_export", False)),
            grid=grid_from_dict(doc["grid"]) if "grid" in doc else ROIGrid(),
            polarization=doc.get("polarization", "tm"),
            rank_policy=music.RankPolicy.parse(doc.get("rank_policy", "threshold:0.1")),
            output_dir=base_dir / doc.get("output_dir", "out"),
            raw=doc,
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid run config: {exc}") from exc


def load_run_config(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_run_config(doc, path.parent)


def _combo_seed(base, *keys):
    return int(np.random.SeedSequence([base, *keys]).generate_state(1)[0])


def freq_tag(f):
    return f"{f / 1e9:g}GHz"


def _simulate_one(cfg, fi, ni, out):
    f, N = cfg.frequencies[fi], cfg.N_values[ni]
    scene = cfg.scene.at_frequency(f)
    msr = assemble_msr(scene, ArrayConfig.full_view(N), cfg.generator)
    if cfg.noise is not None:
        msr = add_noise(msr, NoiseSpec(cfg.noise.snr_db, _combo_seed(cfg.noise.rng_seed, fi, ni)))
    written = []
    for kind in cfg.kinds:
        m = msr if kind == "full" else strip_diagonal(msr)
        path = out / f"msr_{freq_tag(f)}_N{N}_{kind}.txt"
        fileio.write_msr(path, m, cfg.sha)
        written.append(path)
    return written


def _simulate_bistatic(cfg, fi):
    f = cfg.frequencies[fi]
    array = fresnel_array()
    msr = apply_mask(assemble_msr(cfg.scene.at_frequency(f), array, cfg.generator), array.mask)
    if cfg.noise is not None:
        msr = add_noise(msr, NoiseSpec(cfg.noise.snr_db, _combo_seed(cfg.noise.rng_seed, fi, 1 << 16)))
    return msr


def cmd_simulate(cfg, threads=1):
    """Write Full / DiagonalFree (and optionally Bistatic) matrices for every (f, N)."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    combos = [(fi, ni) for fi in range(len(cfg.frequencies)) for ni in range(len(cfg.N_values))]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(lambda c: _simulate_one(cfg, c[0], c[1], out), combos))
    written = [p for r in results for p in r]
    if cfg.bistatic or cfg.fresnel_export:
        bistatic = [_simulate_bistatic(cfg, fi) for fi in range(len(cfg.frequencies))]
        if cfg.bistatic:
            for m in bistatic:
                path = out / f"msr_{freq_tag(m.frequency)}_fresnel_bistatic.txt"
                fileio.write_msr(path, m, cfg.sha)
                written.append(path)
        if cfg.fresnel_export:
            path = out / "fresnel_synthetic.exp"
            seed = None if cfg.noise is None else cfg.noise.rng_seed
            path.write_text(fileio.format_fresnel(fileio.fresnel_records(bistatic), cfg.sha, seed))
            written.append(path)
    return written


def cmd_image(matrix_path, out_dir, grid=None, policy=None, polarization="tm", xi_angle_deg=0.0,
              xi_sweep=False, side=None, peak_cap=music.PEAK_CAP):
    """Image one MSR file; writes map CSV + PGM and the singular value spectrum."""
    matrix_path = Path(matrix_path)
    raw = matrix_path.read_bytes()
    msr, _ = fileio.parse_msr(raw.decode(), str(matrix_path))
    grid = grid or ROIGrid()
    policy = policy or music.RankPolicy()
    options = {"input_sha256": fileio.config_hash(raw), "grid": [grid.x_min, grid.x_max, grid.y_min,
               grid.y_max, grid.nx, grid.ny], "rank_policy": str(policy), "polarization": polarization,
               "xi_angle_deg": xi_angle_deg, "xi_sweep": xi_sweep, "side": side}
    sha = fileio.config_hash(options)
    xi = music.xi_from_angle(math.radians(xi_angle_deg))
    imap, dec = music.music_map(msr, grid, policy, polarization, side, xi=xi, xi_sweep=xi_sweep,
                                peak_cap=peak_cap)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = matrix_path.stem
    paths = (out / f"map_{stem}_{polarization}.csv", out / f"map_{stem}_{polarization}.pgm",
             out / f"spectrum_{stem}.csv")
    fileio.write_map_csv(paths[0], imap, sha, msr.seed)
    fileio.write_pgm(paths[1], imap, sha, msr.seed)
    fileio.write_spectrum_csv(paths[2], dec.singular_values[: min(msr.shape)], sha, msr.seed)
    return imap, dec, paths


DEFAULT_MIN_CORRELATION = 0.99
DEFAULT_MAX_L2_REL = 1.99e-4  # TM, N=72, f=2 GHz, single inclusion, noiseless Born


def cmd_compare(map_path, *, predicted_path=None, params=None, polarization="tm",
                exclusion_radius=None, min_correlation=DEFAULT_MIN_CORRELATION,
                max_l2_rel=DEFAULT_MAX_L2_REL, out_stem=None):
    """Compare an empirical map with a theory prediction (or a second map file).

    Returns ``(report, passed)``.
    """
    emp = fileio.read_map_csv(map_path)
    if predicted_path is not None:
        pred = fileio.read_map_csv(predicted_path)
        centers = [tuple(pred.metadata["z"])] if "z" in pred.metadata else []
    else:
        pred = theory.predicted_map(emp.grid, params, polarization, emp.peak_cap)
        centers = [params.z]
    report = theory.compare_maps(emp, pred, exclusion_radius, centers)
    passed = report["correlation"] >= min_correlation and report["l2_rel"] <= max_l2_rel
    full = dict(report, min_correlation=min_correlation, max_l2_rel=max_l2_rel,
                status="pass" if passed else "fail")
    if out_stem is not None:
        Path(out_stem).parent.mkdir(parents=True, exist_ok=True)
        sha = fileio.config_hash({"map": str(map_path), "predicted": str(predicted_path),
                                  "params": None if params is None else [params.N, params.k_b, list(params.z)]})
        fileio.write_report(out_stem, full, sha)
    return full, passed


def cmd_ingest(path, out_dir, column_map=None, **kwargs):
    msrs = fileio.read_fresnel(path, column_map or fileio.ColumnMap(), **kwargs)
    sha = fileio.config_hash(Path(path).read_bytes())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for f, m in msrs.items():
        p = out / f"msr_{freq_tag(f)}_ingested_bistatic.txt"
        fileio.write_msr(p, m, sha)
        written.append(p)
    return msrs, written


def cmd_validate_identities(N=64, points=200, seed=0, max_arg=8.0, k=1.0):
    """Check the uniform-direction sum identities on random points with k|x| <= max_arg."""
    rng = np.random.default_rng(seed)
    theta = uniform_directions(N)
    r = max_arg * np.sqrt(rng.uniform(1e-4, 1.0, points)) / k
    phi = rng.uniform(0, 2 * np.pi, points)
    x = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    xi_ang = rng.uniform(0, 2 * np.pi, points)
    xis = np.column_stack([np.cos(xi_ang), np.sin(xi_ang)])
    from .specfun import bessel_j
    e0 = np.max(np.abs(theory.identity_j0_sum(x, theta, k) - bessel_j(0, k * r)))
    e1 = max(abs(theory.identity_j1_sum(x[i], xis[i], theta, k) - theory.j1_closed_form(x[i], xis[i], N, k))
             for i in range(points))
    e2 = max(abs(theory.identity_j2_sum(x[i], xis[i], theta[0], theta, k)
                 - theory.j2_closed_form(x[i], xis[i], theta[0], N, k)) for i in range(points))
    moments = max(abs(theory.second_moment(xi, uniform_directions(n)) - n / 2) / n
                  for n in range(3, 129) for xi in xis[:32])
    report = {"N": N, "points": points, "j0_max_abs_err": float(e0), "j1_max_err_over_N": float(e1 / N),
              "j2_max_err_over_N": float(e2 / N), "second_moment_max_err_over_N": float(moments)}
    passed = e0 <= 1e-8 and e1 <= 1e-7 * N and e2 <= 1e-6 * N and moments <= 1e-12
    report["status"] = "pass" if passed else "fail"
    return report, passed


# ------------------------------------------------------------------ argparse

def _grid_arg(text):
    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError("grid is x_min,x_max,y_min,y_max,nx,ny")
    return ROIGrid(*(float(p) for p in parts[:4]), int(parts[4]), int(parts[5]))


def _point_arg(text):
    x, y = (float(v) for v in text.split(","))
    return (x, y)


def build_parser():
    p = argparse.ArgumentParser(prog="dfmusic", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="synthesize MSR matrix files from a run config")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, help="override the noise seed")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out", help="override the output directory")

    s = sub.add_parser("image", help="MUSIC map of an MSR matrix file")
    s.add_argument("matrix")
    s.add_argument("--grid", type=_grid_arg, default=ROIGrid(), help="x_min,x_max,y_min,y_max,nx,ny")
    s.add_argument("--rank", type=music.RankPolicy.parse, default=music.RankPolicy(),
                   help="threshold:TAU or fixed:R (default threshold:0.1)")
    s.add_argument("--polarization", choices=[v.value for v in music.Polarization], default="tm")
    s.add_argument("--xi-angle", type=float, default=0.0, help="TE polarization direction in degrees")
    s.add_argument("--xi-sweep", action="store_true", help="max over 16 TE directions")
    s.add_argument("--side", choices=[v.value for v in music.Side])
    s.add_argument("--out", default="out")

    s = sub.add_parser("compare", help="compare a map with the closed-form prediction")
    s.add_argument("map")
    s.add_argument("--predicted", help="second map file instead of a theory prediction")
    s.add_argument("--N", type=int)
    s.add_argument("--k", type=float, help="background wavenumber (rad/m)")
    s.add_argument("--z", type=_point_arg, help="inclusion center x,y (m)")
    s.add_argument("--polarization", choices=["tm", "te"], default="tm")
    s.add_argument("--exclusion-radius", type=float)
    s.add_argument("--min-correlation", type=float, default=DEFAULT_MIN_CORRELATION)
    s.add_argument("--max-l2", type=float, default=DEFAULT_MAX_L2_REL)
    s.add_argument("--out", help="report path stem")

    s = sub.add_parser("ingest", help="Fresnel-style ASCII measurements -> bistatic MSR files")
    s.add_argument("path")
    s.add_argument("--column-map", help="JSON file with the column layout")
    s.add_argument("--epsilon-b", type=float, default=8.854e-12)
    s.add_argument("--mu-b", type=float, default=1.257e-6)
    s.add_argument("--out", default="out")

    s = sub.add_parser("validate-identities", help="check the direction-sum Bessel identities")
    s.add_argument("--N", type=int, default=64)
    s.add_argument("--points", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    return p


def _run(args):
    if args.command == "simulate":
        cfg = load_run_config(args.config)
        if args.seed is not None:
            if cfg.noise is None:
                raise ConfigError("--seed given but the config has no noise section")
            cfg.noise = NoiseSpec(cfg.noise.snr_db, args.seed)
            cfg.raw = dict(cfg.raw, noise=dict(cfg.raw["noise"], seed=args.seed))
        if args.out:
            cfg.output_dir = Path(args.out)
        for path in cmd_simulate(cfg, args.threads):
            print(path)
        return EXIT_OK
    if args.command == "image":
        imap, dec, paths = cmd_image(args.matrix, args.out, args.grid, args.rank, args.polarization,
                                     args.xi_angle, args.xi_sweep, args.side)
        print(f"signal rank {dec.signal_rank}; wrote {', '.join(str(p) for p in paths)}")
        return EXIT_OK
    if args.command == "compare":
        params = None
        if args.predicted is None:
            if args.N is None or args.k is None or args.z is None:
                raise ConfigError("compare needs --predicted or all of --N --k --z")
            params = theory.TheoryParams(args.N, args.k, args.z)
        report, passed = cmd_compare(args.map, predicted_path=args.predicted, params=params,
                                     polarization=args.polarization, exclusion_radius=args.exclusion_radius,
                                     min_correlation=args.min_correlation, max_l2_rel=args.max_l2,
                                     out_stem=args.out)
        for k, v in report.items():
            print(f"{k}: {v}")
        return EXIT_OK if passed else EXIT_VALIDATION
    if args.command == "ingest":
        columns = fileio.ColumnMap()
        if args.column_map:
            columns = fileio.ColumnMap.from_dict(json.loads(Path(args.column_map).read_text()))
        msrs, written = cmd_ingest(args.path, args.out, columns, epsilon_b=args.epsilon_b, mu_b=args.mu_b)
        for p in written:
            print(p)
        return EXIT_OK
    if args.command == "validate-identities":
        report, passed = cmd_validate_identities(args.N, args.points, args.seed)
        for k, v in report.items():
            print(f"{k}: {v}")
        return EXIT_OK if passed else EXIT_VALIDATION
    raise ConfigError(f"unknown command {args.command}")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
