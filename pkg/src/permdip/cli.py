"""Command-line front end: ``sim <mode> --config FILE [--key value ...] --out PATH``.

Exit codes: 0 success, 1 configuration error, 2 oracle-check tolerance failure.
"""

from __future__ import annotations

import argparse
import csv
import difflib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import dressed, oracle
from .double_dressed import collective_inversion
from .params import Physical, RateModel, SystemParams, check_regime, derive_dressed, frames
from .susceptibility import (
    ExtractionError,
    Spectrum,
    chi_closed_form,
    default_grid,
    dielectric_prefactor,
    extract_dipole_difference,
    susceptibility_prefactor,
)

MODES = ("inversion-sweep", "coherence-sweep", "collective-sweep", "spectrum",
         "oracle-check", "extract")
AXES = ("delta_over_2omega", "Omega", "Delta", "G", "omega")

COLUMNS = {
    "inversion-sweep": ["Rz", "Re_Rplus", "Im_Rplus", "Sz", "error"],
    "coherence-sweep": ["Re_Rplus", "Im_Rplus", "Rz_tilde", "error"],
    "collective-sweep": ["Rz", "Re_Rplus", "Im_Rplus", "Sz", "x", "Rz_tilde", "Sz_per_N", "error"],
    "spectrum": ["delta_p", "re_chi", "im_chi", "n", "error"],
    "extract": ["S_measured", "G_R", "G", "d_diff_debye"],
    "oracle-check": ["check", "cases", "max_error", "tolerance", "pass"],
}


class ConfigError(ValueError):
    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("\n".join(self.messages))


def _float_list(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return parse


@dataclass
class RunConfig:
    mode: str | None = None
    Omega: float | None = None
    Delta: float | None = None
    G: tuple = ()
    omega: float | None = None
    N: int = 1
    gamma_ref: float = 2.6e6
    rate_model: str = "equal"
    shifted: bool = False
    physical_d: float | None = None
    physical_omega21: float | None = None
    physical_omegaL: float | None = None
    physical_Nbar: float | None = None
    physical_E2: float | None = None
    sweep_axis: str = "delta_over_2omega"
    sweep_min: float | None = None
    sweep_max: float | None = None
    sweep_points: int | None = None
    out: str | None = None
    seed: int = 42
    draws: int = 100
    workers: int = 1
    K: float = 10.0
    collective_scaling: str = "N"
    chi_mode: str = "single"
    spectrum_file: str | None = None
    tol_single: float = 1e-8
    tol_collective: float = 1e-6
    tol_offdiag: float = 1e-8
    tol_chi: float = 1e-3
    source: dict = field(default_factory=dict, repr=False)

    def physical(self) -> Physical | None:
        vals = {k: getattr(self, "physical_" + k) for k in ("d", "omega21", "omegaL", "Nbar", "E2")}
        if all(v is None for v in vals.values()):
            return None
        return Physical(**vals)

    def params(self, G: float, **changes) -> SystemParams:
        base = dict(Omega=self.Omega, Delta=self.Delta if self.Delta is not None else 0.0,
                    G=G, omega=self.omega, N=self.N, gamma_ref=self.gamma_ref,
                    rate_model=RateModel(self.rate_model), physical=self.physical(),
                    shifted=self.shifted)
        base.update(changes)
        return SystemParams(**base)


# config key -> (attribute, parser)
_KEYS = {
    "mode": ("mode", _choice(MODES)),
    "Omega": ("Omega", float),
    "Delta": ("Delta", float),
    "G": ("G", _float_list),
    "omega": ("omega", float),
    "N": ("N", int),
    "gamma_ref": ("gamma_ref", float),
    "rate_model": ("rate_model", _choice(tuple(m.value for m in RateModel))),
    "shifted": ("shifted", _bool),
    "physical.d": ("physical_d", float),
    "physical.omega21": ("physical_omega21", float),
    "physical.omegaL": ("physical_omegaL", float),
    "physical.Nbar": ("physical_Nbar", float),
    "physical.E2": ("physical_E2", float),
    "sweep_axis": ("sweep_axis", _choice(AXES)),
    "sweep_min": ("sweep_min", float),
    "sweep_max": ("sweep_max", float),
    "sweep_points": ("sweep_points", int),
    "out": ("out", str),
    "seed": ("seed", int),
    "draws": ("draws", int),
    "workers": ("workers", int),
    "K": ("K", float),
    "collective_scaling": ("collective_scaling", _choice(("N", "none"))),
    "chi_mode": ("chi_mode", _choice(("single", "collective"))),
    "spectrum_file": ("spectrum_file", str),
    "tol_single": ("tol_single", float),
    "tol_collective": ("tol_collective", float),
    "tol_offdiag": ("tol_offdiag", float),
    "tol_chi": ("tol_chi", float),
}


def _unknown(key, where):
    hint = difflib.get_close_matches(key, list(_KEYS), n=1)
    msg = f"{where}: unknown key {key!r}"
    return msg + (f" (did you mean {hint[0]!r}?)" if hint else "")


def parse_config(text: str, overrides: dict | None = None, mode: str | None = None) -> RunConfig:
    """Parse flat ``key = value`` text (``#`` comments) plus flag overrides."""
    cfg = RunConfig()
    errors = []
    seen = {}

    def assign(key, raw, where):
        if key not in _KEYS:
            errors.append(_unknown(key, where))
            return
        attr, parse = _KEYS[key]
        try:
            setattr(cfg, attr, parse(raw.strip()))
        except ValueError as exc:
            errors.append(f"{where}: bad value for {key!r}: {exc}")
            return
        seen[key] = where

    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            errors.append(f"line {lineno}: expected 'key = value', got {body!r}")
            continue
        key, raw = (s.strip() for s in body.split("=", 1))
        assign(key, raw, f"line {lineno}")
    for key, raw in (overrides or {}).items():
        assign(key, str(raw), f"--{key}")
    if mode is not None:
        assign("mode", mode, "command line")

    if errors:
        raise ConfigError(errors)
    cfg.source = dict(seen)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    missing = []
    if cfg.mode is None:
        missing.append("mode")
    needs_system = cfg.mode != "oracle-check"
    if needs_system:
        for key in ("Omega", "G", "omega"):
            if getattr(cfg, key) in (None, ()):
                missing.append(key)
        sweeping_delta = cfg.mode in ("inversion-sweep", "coherence-sweep", "collective-sweep") \
            and cfg.sweep_axis in ("delta_over_2omega", "Delta")
        if cfg.Delta is None and not sweeping_delta:
            missing.append("Delta")
    if cfg.mode == "extract" and cfg.physical_E2 is None:
        missing.append("physical.E2")
    if missing:
        raise ConfigError([f"missing required key: {k}" for k in missing])

    problems = []
    for name in ("sweep_min", "sweep_max"):
        v = getattr(cfg, name)
        if v is not None and not math.isfinite(v):
            problems.append(f"{name} must be finite")
    if cfg.sweep_points is not None and cfg.sweep_points < 2:
        problems.append("sweep_points must be >= 2")
    if cfg.sweep_min is not None and cfg.sweep_max is not None and not cfg.sweep_min < cfg.sweep_max:
        problems.append("sweep_min must be < sweep_max")
    if cfg.workers < 1:
        problems.append("workers must be >= 1")
    if cfg.mode in ("spectrum", "extract", "coherence-sweep") and len(cfg.G) > 1:
        problems.append(f"mode {cfg.mode} takes a single G value")
    if needs_system:
        try:
            for G in cfg.G:
                cfg.params(G)
        except ValueError as exc:
            problems.append(str(exc))
    if problems:
        raise ConfigError(problems)


# -- per-point evaluation (top level so worker processes can pickle it) ------

def _point_params(cfg: RunConfig, G: float, value: float) -> SystemParams:
    scale = cfg.N if (cfg.mode == "collective-sweep" and cfg.collective_scaling == "N") else 1
    p = cfg.params(G, Omega=cfg.Omega * scale, omega=cfg.omega * scale)
    axis = cfg.sweep_axis
    if axis == "delta_over_2omega":
        return replace(p, Delta=2.0 * p.Omega * value)
    if axis in ("Omega", "omega"):
        return replace(p, **{axis: value * scale})
    return replace(p, **{axis: value})


def _evaluate(args):
    cfg, G, value = args
    try:
        p = _point_params(cfg, G, value)
        f = derive_dressed(p)
        st = dressed.steady_state(f)
        row = {"Rz": st.Rz, "Re_Rplus": st.Rplus.real, "Im_Rplus": st.Rplus.imag, "Sz": st.Sz}
        if cfg.mode == "coherence-sweep":
            _, g = frames(p)
            row["Rz_tilde"] = collective_inversion(g.x, 1)
        elif cfg.mode == "collective-sweep":
            _, g = frames(p)
            Rzt = collective_inversion(g.x, p.N)
            c = f.cos2theta * g.cos2phi + f.sin2theta * g.sin2phi
            row.update(x=g.x, Rz_tilde=Rzt, Sz_per_N=0.5 * c * Rzt / p.N)
        row["error"] = ""
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        row = {"error": str(exc)}
    return row


def _map_ordered(func, jobs, workers):
    if workers <= 1:
        return [func(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _axis_grid(cfg: RunConfig, default=(-1.0, 1.0, 801)):
    lo = default[0] if cfg.sweep_min is None else cfg.sweep_min
    hi = default[1] if cfg.sweep_max is None else cfg.sweep_max
    n = default[2] if cfg.sweep_points is None else cfg.sweep_points
    return np.linspace(lo, hi, n)


@dataclass
class Table:
    columns: list
    rows: list
    path: Path
    meta: dict


def run_sweep(cfg: RunConfig) -> list[Table]:
    """Evaluate a sweep mode; one table per G value, rows in grid order."""
    grid = _axis_grid(cfg)
    out = Path(cfg.out or f"{cfg.mode}.csv")
    tables = []
    for G in cfg.G:
        rows = _map_ordered(_evaluate, [(cfg, G, float(v)) for v in grid], cfg.workers)
        for v, row in zip(grid, rows):
            row[cfg.sweep_axis] = float(v)
        path = out if len(cfg.G) == 1 else out.with_name(f"{out.stem}_G{G:g}{out.suffix}")
        cols = [cfg.sweep_axis] + COLUMNS[cfg.mode]
        tables.append(Table(cols, rows, path, {"table_G": G} if len(cfg.G) > 1 else {}))
    return tables


def run_spectrum(cfg: RunConfig) -> Table:
    p = cfg.params(cfg.G[0])
    f, g = frames(p)
    if cfg.chi_mode == "collective":
        Rzt = collective_inversion(g.x, p.N) / p.N
    else:
        Rzt = collective_inversion(g.x, 1)
    grid = default_grid(p.omega)
    if cfg.sweep_min is not None or cfg.sweep_max is not None or cfg.sweep_points is not None:
        grid = _axis_grid(cfg, (grid[0], grid[-1], len(grid)))
    spec = chi_closed_form(f, g, Rzt, grid)
    phys = p.physical
    coeff = None
    if phys is not None and phys.Nbar is not None and phys.d is not None:
        coeff = dielectric_prefactor(phys, p.gamma_ref)
    rows = []
    for dp, chi in zip(spec.detunings, spec.chi):
        row = {"delta_p": dp, "re_chi": chi.real, "im_chi": chi.imag, "n": "", "error": ""}
        if coeff is not None:
            rad = 1.0 + coeff * chi.real
            if rad > 0:
                row["n"] = math.sqrt(rad)
            else:
                row["error"] = "refractive index undefined: 1 + 4 pi chi' <= 0"
        rows.append(row)
    meta = {"Rz_tilde": Rzt, "Rz_tilde_mode": cfg.chi_mode, "G_R": g.G_R, "Gamma_s": g.Gamma_s}
    if coeff is not None:
        meta["susceptibility_prefactor"] = susceptibility_prefactor(phys, p.gamma_ref)
        meta["dielectric_prefactor"] = coeff
    return Table(COLUMNS["spectrum"], rows, Path(cfg.out or "spectrum.csv"), meta)


def read_spectrum_csv(path) -> Spectrum:
    dp, re, im = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        for row in reader:
            dp.append(float(row["delta_p"]))
            re.append(float(row["re_chi"]))
            im.append(float(row["im_chi"]))
    return Spectrum(np.array(dp), np.array(re) + 1j * np.array(im))


def run_extract(cfg: RunConfig) -> Table:
    p = cfg.params(cfg.G[0])
    if cfg.spectrum_file:
        spec = read_spectrum_csv(cfg.spectrum_file)
        meta = {"source": str(cfg.spectrum_file)}
    else:
        f, g = frames(p)
        spec = chi_closed_form(f, g, collective_inversion(g.x, 1), default_grid(p.omega))
        meta = {"source": "synthetic", "G_true": cfg.G[0]}
    res = extract_dipole_difference(spec, p)
    row = {"S_measured": res.S_measured, "G_R": res.G_R, "G": res.G, "d_diff_debye": res.d_diff_debye}
    return Table(COLUMNS["extract"], [row], Path(cfg.out or "extract.csv"), meta)


def run_oracle_check(cfg: RunConfig) -> Table:
    rows = []
    rng = np.random.default_rng(cfg.seed)
    draws = oracle.draw_regime_valid(rng, cfg.draws, K=cfg.K)
    err = max(oracle.single_dressed_error(p) for p in draws)
    rows.append({"check": "single-dressed steady state", "cases": len(draws), "max_error": err,
                 "tolerance": cfg.tol_single, "pass": err < cfg.tol_single})

    coll, off = 0.0, 0.0
    cases = 0
    for N in (1, 2, 4, 8):
        for p in draws[:10]:
            e, o = oracle.collective_error(p, N)
            coll, off, cases = max(coll, e), max(off, o), cases + 1
    rows.append({"check": "collective inversion (N=1,2,4,8)", "cases": cases, "max_error": coll,
                 "tolerance": cfg.tol_collective, "pass": coll < cfg.tol_collective})
    rows.append({"check": "collective off-diagonals", "cases": cases, "max_error": off,
                 "tolerance": cfg.tol_offdiag, "pass": off < cfg.tol_offdiag})

    chi_err, cases = 0.0, 0
    for p in oracle.figure3_params():
        chi_err = max(chi_err, oracle.spectrum_error(p))
        cases += 1
    rows.append({"check": "susceptibility regression vs closed form", "cases": cases,
                 "max_error": chi_err, "tolerance": cfg.tol_chi, "pass": chi_err < cfg.tol_chi})
    return Table(COLUMNS["oracle-check"], rows, Path(cfg.out or "oracle-check.csv"), {})


# -- output ----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def header_lines(cfg: RunConfig, table: Table) -> list[str]:
    lines = [f"# permdip {__version__} mode={cfg.mode}"]
    for f_ in fields(RunConfig):
        if f_.name in ("source", "workers"):
            continue
        lines.append(f"# {f_.name} = {_fmt(getattr(cfg, f_.name)) if getattr(cfg, f_.name) is not None else ''}")
    for k, v in table.meta.items():
        lines.append(f"# {k} = {_fmt(v)}")
    return lines


def write_table(cfg: RunConfig, table: Table):
    table.path.parent.mkdir(parents=True, exist_ok=True)
    with open(table.path, "w", newline="") as fh:
        for line in header_lines(cfg, table):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_fmt(row.get(c, "")) for c in table.columns])


def write_sidecar(cfg: RunConfig, tables: list[Table], elapsed: float, extra=None):
    path = Path(str(tables[0].path) + ".meta.jsonl") if len(tables) == 1 \
        else Path(str(Path(cfg.out or f"{cfg.mode}.csv")) + ".meta.jsonl")
    records = [{"kind": "config", **{k: getattr(cfg, k) for k in (f.name for f in fields(RunConfig))
                                      if k != "source"}}]
    if cfg.mode != "oracle-check":
        for G in cfg.G:
            p = cfg.params(G)
            records.append({"kind": "regime", "G": G, "K": cfg.K,
                            "violations": [{"name": v.name, "lhs": v.lhs, "rhs": v.rhs,
                                            "margin": v.margin} for v in check_regime(p, cfg.K)]})
    records.append({"kind": "run", "version": __version__, "outputs": [str(t.path) for t in tables],
                    "elapsed_s": elapsed, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")})
    if extra:
        records.append({"kind": "result", **extra})
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, tuple):
        return list(o)
    return str(o)


def _split_overrides(extra):
    out, i = {}, 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError([f"unexpected argument {tok!r}"])
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError([f"--{key} needs a value"])
            val = extra[i + 1]
            i += 2
        out[key] = val
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="sim", description=__doc__.splitlines()[0])
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", help="flat key = value configuration file")
    ap.add_argument("--out", help="output CSV path")
    args, extra = ap.parse_known_args(argv)
    try:
        overrides = _split_overrides(extra)
        if args.out:
            overrides["out"] = args.out
        text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text, overrides, mode=args.mode)
    except (ConfigError, OSError) as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return 1

    t0 = time.perf_counter()
    if cfg.mode in ("inversion-sweep", "coherence-sweep", "collective-sweep"):
        tables = run_sweep(cfg)
    elif cfg.mode == "spectrum":
        tables = [run_spectrum(cfg)]
    elif cfg.mode == "extract":
        try:
            tables = [run_extract(cfg)]
        except ExtractionError as exc:
            print(f"extraction failed: {exc}", file=sys.stderr)
            return 1
    else:
        tables = [run_oracle_check(cfg)]
    elapsed = time.perf_counter() - t0

    for t in tables:
        write_table(cfg, t)
    write_sidecar(cfg, tables, elapsed)
    for t in tables:
        print(f"wrote {t.path} ({len(t.rows)} rows)")

    if cfg.mode == "oracle-check":
        ok = all(r["pass"] for r in tables[0].rows)
        for r in tables[0].rows:
            flag = "PASS" if r["pass"] else "FAIL"
            print(f"{flag}  {r['check']:<45s} max {r['max_error']:.3e}  tol {r['tolerance']:.1e}")
        return 0 if ok else 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
