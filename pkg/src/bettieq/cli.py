"""Experiment harness CLI.

Subcommands: sample, betti, excess-mass, equiv, verify, regimes.  Options come
from an INI config file (one section per subcommand) overridden by flags; all
randomness flows from one master seed (flag > config > BETTIEQ_SEED > 0), so
identical configs reproduce identical CSV bytes, also under --jobs N.

Exit codes: 0 success / expectations met, 2 configuration error, 3 numerical
failure, 4 verdict mismatch.
"""

from __future__ import annotations

import argparse
import configparser
import math
import multiprocessing
import os
import sys
from pathlib import Path

import numpy as np

from . import rng as _rng
from .checks import check_names, run_checks
from .equivalence import (CompareConfig, betti_curve, compare, excess_mass_mc,
                          format_theta, theta_key, write_betti_csv,
                          write_excess_csv, write_report_csv)
from .errors import BettieqError, ConfigError, InvalidParam, VerdictMismatch
from .families import family_ids, make_family, manifest
from .geom import build_cech_filtration, write_cloud_csv
from .homology import betti_at, compute_persistence
from .invariance import write_checks_csv

# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

# key -> (type tag, default); None default means "required"
_COMMON = {
    "family": ("str", None),
    "opt": ("strlist", ""),
    "theta": ("strlist", None),
    "seed": ("int", ""),          # resolved against BETTIEQ_SEED later
    "out": ("str", "out"),
    "jobs": ("int", "1"),
    "gnuplot": ("bool", "false"),
}

_SCHEMAS: dict[str, dict] = {
    "sample": {**_COMMON, "n": ("int", "1000"), "replications": ("int", "1")},
    "betti": {**_COMMON, "n": ("int", "1000"), "replications": ("int", "8"),
              "t_min": ("float", "0.1"), "t_max": ("float", "0.8"),
              "t_steps": ("int", "8"), "k_max": ("int", "1"),
              "raw": ("bool", "false"), "budget": ("int", "20000000"),
              "degree_cap": ("float", "60.0")},
    "excess-mass": {**_COMMON, "n": ("int", "10000"), "t_min": ("float", None),
                    "t_max": ("float", None), "t_steps": ("int", "25")},
    "equiv": {**_COMMON, "n": ("int", "100000"), "alpha": ("float", "0.001"),
              "betti": ("bool", "false"), "betti_n": ("int", "1000"),
              "betti_replications": ("int", "8"), "betti_k_max": ("int", "1"),
              "t_min": ("float", "0.2"), "t_max": ("float", "0.8"),
              "t_steps": ("int", "6"), "expect": ("strlist", ""),
              "budget": ("int", "20000000"), "degree_cap": ("float", "60.0")},
    "verify": {"checks": ("strlist", "all"), "seed": ("int", ""),
               "out": ("str", "out"), "gnuplot": ("bool", "false")},
    "regimes": {"n_list": ("strlist", "500,1000,2000,4000"), "c": ("float", "0.5"),
                "replications": ("int", "3"), "seed": ("int", ""),
                "out": ("str", "out"), "jobs": ("int", "1"),
                "gnuplot": ("bool", "false")},
}

_NO_FAMILY = {"verify", "regimes"}


class ExperimentConfig:
    """Validated key/value configuration for one subcommand.

    Values are kept in canonical string form so that parse -> serialize ->
    parse is the identity.
    """

    def __init__(self, subcommand: str, values: dict[str, str]):
        if subcommand not in _SCHEMAS:
            raise ConfigError(f"unknown subcommand {subcommand!r}")
        schema = _SCHEMAS[subcommand]
        unknown = set(values) - set(schema)
        if unknown:
            raise ConfigError(f"unknown keys for {subcommand}: {sorted(unknown)}")
        self.subcommand = subcommand
        self.values = dict(values)
        for key, (_, default) in schema.items():
            if key not in self.values:
                if default is None:
                    raise ConfigError(f"{subcommand}: missing required key {key!r}")
                self.values[key] = default

    # typed accessors ------------------------------------------------------
    def _get(self, key):
        return self.values[key]

    def str_(self, key) -> str:
        return self._get(key).strip()

    def int_(self, key) -> int:
        raw = self._get(key).strip()
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected integer, got {raw!r}") from exc

    def float_(self, key) -> float:
        raw = self._get(key).strip()
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{key}: expected number, got {raw!r}") from exc

    def bool_(self, key) -> bool:
        raw = self._get(key).strip().lower()
        if raw in ("true", "1", "yes", "on"):
            return True
        if raw in ("false", "0", "no", "off", ""):
            return False
        raise ConfigError(f"{key}: expected boolean, got {raw!r}")

    def list_(self, key) -> list[str]:
        raw = self._get(key)
        return [item.strip() for item in raw.split(",") if item.strip()]

    def thetas(self) -> list[list[float]]:
        out = []
        for item in self.list_("theta"):
            try:
                out.append([float(v) for v in item.split(";") if v.strip()])
            except ValueError as exc:
                raise ConfigError(f"bad theta {item!r}") from exc
        if not out:
            raise ConfigError("no theta values given")
        return out

    def seed(self) -> int:
        raw = self._get("seed").strip()
        if raw:
            return self.int_("seed")
        env = os.environ.get("BETTIEQ_SEED", "").strip()
        if env:
            try:
                return int(env)
            except ValueError as exc:
                raise ConfigError(f"BETTIEQ_SEED={env!r} is not an integer") from exc
        return 0

    def family(self):
        opts = {}
        for item in self.list_("opt"):
            if "=" not in item:
                raise ConfigError(f"family option {item!r} must be key=value")
            k, v = item.split("=", 1)
            opts[k.strip()] = _coerce_opt(v.strip())
        try:
            return make_family(self.str_("family"), **opts)
        except BettieqError:
            raise
        except TypeError as exc:
            raise ConfigError(f"bad family options: {exc}") from exc

    # round-trip -----------------------------------------------------------
    def serialize(self) -> str:
        parser = configparser.ConfigParser()
        parser[self.subcommand] = dict(sorted(self.values.items()))
        import io
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @staticmethod
    def parse(subcommand: str, text: str, overrides: dict[str, str] | None = None
              ) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        values: dict[str, str] = {}
        if parser.has_section(subcommand):
            values.update({k: v for k, v in parser.items(subcommand)})
        if overrides:
            values.update(overrides)
        return ExperimentConfig(subcommand, values)


def _coerce_opt(value: str):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _outdir(cfg: ExperimentConfig) -> Path:
    path = Path(cfg.str_("out"))
    path.mkdir(parents=True, exist_ok=True)
    return path


def _maybe_gnuplot(cfg: ExperimentConfig, csv_path: Path) -> None:
    """Mirror a CSV as a whitespace-separated .dat file for gnuplot."""
    if not cfg.bool_("gnuplot"):
        return
    dat = csv_path.with_suffix(".dat")
    with open(csv_path) as src, open(dat, "w") as dst:
        for i, line in enumerate(src):
            cells = line.rstrip("\n").split(",")
            if i == 0:
                dst.write("# " + " ".join(cells) + "\n")
            else:
                dst.write(" ".join(cells) + "\n")


def _grid(cfg: ExperimentConfig) -> np.ndarray:
    lo, hi, steps = cfg.float_("t_min"), cfg.float_("t_max"), cfg.int_("t_steps")
    if steps < 1 or hi <= lo:
        raise ConfigError("need t_max > t_min and t_steps >= 1")
    return np.linspace(lo, hi, steps)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_sample(cfg: ExperimentConfig) -> int:
    family = cfg.family()
    out = _outdir(cfg)
    seed = cfg.seed()
    n = cfg.int_("n")
    reps = cfg.int_("replications")
    for ti, theta in enumerate(cfg.thetas()):
        family.validate(theta)
        for rep in range(reps):
            gen = _rng.stream(seed, _rng.SAMPLE, theta_key(theta), rep)
            cloud = family.sample(theta, n, gen)
            path = out / f"sample_{family.id}_theta{ti}_rep{rep}.csv"
            write_cloud_csv(cloud, path)
            _maybe_gnuplot(cfg, path)
            mean = cloud.points.mean(axis=0)
            print(f"theta={format_theta(theta)} rep={rep}: n={cloud.n} "
                  f"mean=({', '.join(f'{m:.4f}' for m in mean)}) -> {path}")
    return 0


def cmd_betti(cfg: ExperimentConfig) -> int:
    family = cfg.family()
    out = _outdir(cfg)
    seed = cfg.seed()
    t_grid = _grid(cfg)
    for ti, theta in enumerate(cfg.thetas()):
        curves, raw = betti_curve(
            family, theta, cfg.int_("n"), t_grid, cfg.int_("k_max"),
            cfg.int_("replications"), seed, jobs=cfg.int_("jobs"),
            max_simplices=cfg.int_("budget"), degree_cap=cfg.float_("degree_cap"),
            return_raw=True)
        path = out / f"betti_{family.id}_theta{ti}.csv"
        write_betti_csv(path, theta, curves)
        _maybe_gnuplot(cfg, path)
        print(f"theta={format_theta(theta)}: wrote {path}")
        if cfg.bool_("raw"):
            rpath = out / f"betti_{family.id}_theta{ti}_raw.csv"
            with open(rpath, "w") as fh:
                fh.write("theta,k,t,rep,value\n")
                label = format_theta(theta)
                for rep in range(raw.shape[0]):
                    for k in range(raw.shape[1]):
                        for j, t in enumerate(t_grid):
                            fh.write(f"{label},{k},{float(t)!r},{rep},"
                                     f"{float(raw[rep, k, j])!r}\n")
            _maybe_gnuplot(cfg, rpath)
    return 0


def cmd_excess_mass(cfg: ExperimentConfig) -> int:
    family = cfg.family()
    out = _outdir(cfg)
    seed = cfg.seed()
    t_grid = _grid(cfg)
    for ti, theta in enumerate(cfg.thetas()):
        curve = excess_mass_mc(family, theta, t_grid, cfg.int_("n"), seed)
        path = out / f"excess_{family.id}_theta{ti}.csv"
        write_excess_csv(path, theta, curve)
        _maybe_gnuplot(cfg, path)
        print(f"theta={format_theta(theta)}: wrote {path}")
    return 0


def cmd_equiv(cfg: ExperimentConfig) -> int:
    family = cfg.family()
    out = _outdir(cfg)
    compare_cfg = CompareConfig(
        n_push=cfg.int_("n"), alpha=cfg.float_("alpha"),
        betti_enabled=cfg.bool_("betti"), betti_n=cfg.int_("betti_n"),
        betti_t_grid=tuple(_grid(cfg)), betti_k_max=cfg.int_("betti_k_max"),
        betti_replications=cfg.int_("betti_replications"), jobs=cfg.int_("jobs"),
        max_simplices=cfg.int_("budget"), degree_cap=cfg.float_("degree_cap"))
    report = compare(family, cfg.thetas(), compare_cfg, seed=cfg.seed())
    path = _outdir(cfg) / f"equiv_{family.id}.csv"
    write_report_csv(path, report)
    _maybe_gnuplot(cfg, path)
    for pair in report.pairs:
        print(f"{format_theta(pair.theta_a)} vs {format_theta(pair.theta_b)}: "
              f"{pair.verdict}")
    print(f"wrote {path}")
    expect = cfg.list_("expect")
    if expect:
        if len(expect) == 1:
            expect = expect * len(report.pairs)
        if len(expect) != len(report.pairs):
            raise ConfigError(f"expect lists {len(expect)} verdicts for "
                              f"{len(report.pairs)} pairs")
        got = report.verdicts
        if got != expect:
            raise VerdictMismatch(f"verdicts {got} != expected {expect}")
    return 0


def cmd_verify(cfg: ExperimentConfig) -> int:
    names = cfg.list_("checks")
    if names == ["all"] or not names:
        names = None
    results = run_checks(names, seed=cfg.seed())
    rows = [(spec.name, spec.family, spec.theta, res) for spec, res in results]
    path = _outdir(cfg) / "checks.csv"
    write_checks_csv(path, rows)
    _maybe_gnuplot(cfg, path)
    bad = []
    for spec, res in results:
        status = "pass" if res.passed else "FAIL"
        expected = "pass" if spec.expected_pass else "FAIL"
        marker = "ok" if res.passed == spec.expected_pass else "UNEXPECTED"
        print(f"{spec.name:32s} {status:4s} (expected {expected:4s}) "
              f"violation={res.max_violation:.3e} [{marker}]")
        if res.passed != spec.expected_pass:
            bad.append(spec.name)
    print(f"wrote {path}")
    if bad:
        raise VerdictMismatch(f"checks with unexpected outcome: {bad}")
    return 0


_REGIME_SCHEDULES = ("sparse", "thermodynamic", "dense")


def _regime_radius(schedule: str, c: float, n: int, d: int) -> float:
    if schedule == "sparse":
        return c * n ** (-2.0 / d)
    if schedule == "thermodynamic":
        return c * n ** (-1.0 / d)
    return c * n ** (-1.0 / (2.0 * d))


def _regime_task(args):
    schedule, n, rep, c, seed = args
    family = make_family("location", dim=2, g="uniform")
    gen = _rng.stream(seed, _rng.REGIME, _REGIME_SCHEDULES.index(schedule), n, rep)
    cloud = family.sample([0.0, 0.0], n, gen)
    r = _regime_radius(schedule, c, n, 2)
    filt = build_cech_filtration(cloud, r_max=r, dim_max=1)
    edges = int(np.count_nonzero(filt.dims == 1))
    beta0 = betti_at(compute_persistence(filt, 0), r, 0)
    return schedule, n, rep, r, edges, beta0


def cmd_regimes(cfg: ExperimentConfig) -> int:
    """Edge-count and component trajectories for the three radius schedules
    r_n = c n^{-2/d}, c n^{-1/d}, c n^{-1/(2d)} on a uniform planar cloud."""
    seed = cfg.seed()
    c = cfg.float_("c")
    reps = cfg.int_("replications")
    try:
        n_list = [int(v) for v in cfg.list_("n_list")]
    except ValueError as exc:
        raise ConfigError(f"bad n_list: {exc}") from exc
    tasks = [(schedule, n, rep, c, seed)
             for schedule in _REGIME_SCHEDULES for n in n_list for rep in range(reps)]
    jobs = cfg.int_("jobs")
    if jobs > 1:
        with multiprocessing.get_context("fork").Pool(jobs) as pool:
            rows = pool.map(_regime_task, tasks)
    else:
        rows = [_regime_task(t) for t in tasks]
    path = _outdir(cfg) / "regimes.csv"
    with open(path, "w") as fh:
        fh.write("schedule,n,rep,r,edges,beta0,beta0_over_n\n")
        for schedule, n, rep, r, edges, beta0 in rows:
            fh.write(f"{schedule},{n},{rep},{r!r},{edges},{beta0},{beta0 / n!r}\n")
    _maybe_gnuplot(cfg, path)
    for schedule in _REGIME_SCHEDULES:
        for n in n_list:
            vals = [b / n for s, nn, _, _, _, b in rows if s == schedule and nn == n]
            print(f"{schedule:14s} n={n:5d} beta0/n={np.mean(vals):.4f}")
    print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_HANDLERS = {
    "sample": cmd_sample,
    "betti": cmd_betti,
    "excess-mass": cmd_excess_mass,
    "equiv": cmd_equiv,
    "verify": cmd_verify,
    "regimes": cmd_regimes,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bettieq",
        description="Seeded experiments on Betti-number equivalence of "
                    "parametric families")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, schema in _SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI file with a "
                       f"[{name}] section; flags override file keys")
        for key, (kind, _) in schema.items():
            flag = "--" + key.replace("_", "-")
            if key in ("theta", "opt", "checks", "expect"):
                p.add_argument(flag, action="append", default=None, dest=key)
            elif kind == "bool":
                p.add_argument(flag, action="store_const", const="true",
                               default=None, dest=key)
            else:
                p.add_argument(flag, default=None, dest=key)
    return parser


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides: dict[str, str] = {}
    for key in _SCHEMAS[args.subcommand]:
        val = getattr(args, key, None)
        if val is None:
            continue
        overrides[key] = ",".join(val) if isinstance(val, list) else str(val)
    text = ""
    if args.config:
        cfg_path = Path(args.config)
        if not cfg_path.exists():
            raise ConfigError(f"config file {cfg_path} not found")
        text = cfg_path.read_text()
    cfg = ExperimentConfig.parse(args.subcommand, text, overrides)
    if args.subcommand not in _NO_FAMILY and cfg.str_("family") not in family_ids():
        raise ConfigError(f"unknown family {cfg.str_('family')!r}; "
                          f"known: {family_ids()}")
    # manifest-driven validation of theta before any heavy work; parameter
    # problems are configuration errors here, not runtime failures
    if args.subcommand not in _NO_FAMILY:
        try:
            fam = cfg.family()
            assert fam.id in manifest()
            for theta in cfg.thetas():
                fam.validate(theta)
        except InvalidParam as exc:
            raise ConfigError(str(exc)) from exc
    return _HANDLERS[args.subcommand](cfg)


def main(argv=None) -> None:
    try:
        code = run(argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        sys.exit(2)
    except VerdictMismatch as exc:
        print(f"verdict mismatch: {exc}", file=sys.stderr)
        sys.exit(4)
    except BettieqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(3)
    sys.exit(code)


if __name__ == "__main__":
    main()
