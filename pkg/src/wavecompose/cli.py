"""Command-line experiment runner.

    wavecompose compose --method multlfg --n 2 --k 2 --out runs/a
    wavecompose freq-analysis --steps 200 --scale 10 --out runs/b
    wavecompose verify --out runs/c
    wavecompose jacobian --codec downsample --size 8 --out runs/d

Every flag has a config-file equivalent (``--band-scales`` <-> ``band_scales``);
flags override values read from ``--config``. Exit codes: 0 ok, 1 failed
verification, 2 bad configuration, 3 numeric failure.
"""
import argparse
import csv
import dataclasses
import hashlib
import io
import sys
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from . import analysis
from .field import field_to_csv, field_to_pgm, gaussian_field, make_rng
from .guidance import GuidanceConfig
from .latent_map import CODEC_KINDS, ToyCodec, jacobian_band_analysis
from .sandbox import (
    FAMILIES,
    band_errors,
    composite_run,
    energy_trajectory,
    make_concepts,
    multlfg_run,
    switch_run,
)
from .schedule import linear_schedule
from .wavelet import BANDS

METHODS = ("multlfg", "composite", "switch")
DEFAULT_FAMILIES = ("blob", "checker", "stripes", "bars")


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class RunConfig:
    seed: int = 0
    method: str = "multlfg"
    n: int = None
    k: int = 2
    steps: int = 100
    scale: float = 7.0
    band_scales: tuple = None
    tau: float = 0.01
    eps_fd: float = 1e-5
    codec: str = "identity"
    deterministic: bool = True
    uniform_weights: bool = False
    equal_scales: bool = False
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    size: int = None
    channels: int = 1
    concepts: tuple = None
    spread: float = None
    pairs: int = 1000
    out: str = "out"


# command-specific values for fields left unset
COMMAND_DEFAULTS = {
    "compose": {"n": 2, "size": 32, "spread": 0.0},
    "freq-analysis": {"n": 1, "size": 32, "spread": 0.3},
    "verify": {"n": 2, "size": 32, "spread": 0.0},
    "jacobian": {"n": 1, "size": 8, "spread": 0.0},
}


def _parse_bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _parse_concepts(s):
    out = []
    for item in str(s).split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) not in (1, 2, 3):
            raise ConfigError(f"concept spec {item!r} should be family[:seed[:amplitude]]")
        family = parts[0]
        if family not in FAMILIES:
            raise ConfigError(f"unknown concept family {family!r}; expected one of {tuple(FAMILIES)}")
        seed = int(parts[1]) if len(parts) > 1 else 0
        amp = float(parts[2]) if len(parts) > 2 else 1.0
        out.append((family, seed, amp))
    if not out:
        raise ConfigError("empty concept list")
    return tuple(out)


def _parse_scales(s):
    if isinstance(s, (tuple, list)):
        vals = tuple(float(v) for v in s)
    else:
        vals = tuple(float(v) for v in str(s).split(","))
    if len(vals) != 4:
        raise ConfigError(f"band_scales needs 4 values (LL,LH,HL,HH), got {len(vals)}")
    return vals


def _coerce(name, value):
    if value is None:
        return None
    try:
        if name in ("deterministic", "uniform_weights", "equal_scales"):
            return value if isinstance(value, bool) else _parse_bool(value)
        if name == "band_scales":
            return _parse_scales(value)
        if name == "concepts":
            return value if isinstance(value, tuple) else _parse_concepts(value)
        if name in ("seed", "n", "k", "steps", "size", "channels", "pairs"):
            return int(value)
        if name in ("scale", "tau", "eps_fd", "beta_start", "beta_end", "spread"):
            return float(value)
        return str(value).strip()
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {value!r} ({exc})") from None


FIELD_NAMES = [f.name for f in dataclasses.fields(RunConfig)]


def parse_config_text(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in FIELD_NAMES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    return values


def resolve_config(command, file_values=None, overrides=None):
    """Merge defaults, file values and flag overrides; validate everything."""
    values = {}
    values.update(file_values or {})
    values.update({k: _coerce(k, v) for k, v in (overrides or {}).items() if v is not None})
    unknown = set(values) - set(FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    cfg = RunConfig(**values)
    for key, default in COMMAND_DEFAULTS[command].items():
        if getattr(cfg, key) is None:
            setattr(cfg, key, default)
    if cfg.concepts is not None:
        if "n" in values and values["n"] != len(cfg.concepts):
            raise ConfigError(f"n = {values['n']} but {len(cfg.concepts)} concepts listed")
        cfg.n = len(cfg.concepts)
    else:
        cfg.concepts = tuple((DEFAULT_FAMILIES[i % len(DEFAULT_FAMILIES)], cfg.seed + 1000 * i, 1.0)
                             for i in range(cfg.n))
    if cfg.equal_scales or cfg.band_scales is None:
        cfg.band_scales = (cfg.scale,) * 4
    _validate(cfg)
    return cfg


def _validate(cfg):
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    need(0 <= cfg.seed < 2**64, f"seed must be an unsigned 64-bit integer, got {cfg.seed}")
    need(cfg.method in METHODS, f"method must be one of {METHODS}, got {cfg.method!r}")
    need(cfg.codec in CODEC_KINDS, f"codec must be one of {CODEC_KINDS}, got {cfg.codec!r}")
    need(cfg.n >= 1, f"n must be >= 1, got {cfg.n}")
    need(cfg.k >= 1, f"k must be >= 1, got {cfg.k}")
    need(cfg.steps >= 1, f"steps must be >= 1, got {cfg.steps}")
    need(0 < cfg.beta_start <= cfg.beta_end < 1, "need 0 < beta_start <= beta_end < 1")
    need(cfg.channels >= 1, "channels must be >= 1")
    need(cfg.size >= 4 and cfg.size % 4 == 0, f"size must be a positive multiple of 4, got {cfg.size}")
    need(cfg.spread >= 0, f"spread must be >= 0, got {cfg.spread}")
    need(cfg.pairs >= 1, f"pairs must be >= 1, got {cfg.pairs}")
    need(all(np.isfinite(cfg.band_scales)) and np.isfinite(cfg.scale), "guidance scales must be finite")
    need(cfg.tau >= 0, f"tau must be >= 0, got {cfg.tau}")
    need(cfg.eps_fd > 0, f"eps_fd must be > 0, got {cfg.eps_fd}")


def config_text(cfg):
    """Canonical ``key = value`` rendering (the output directory is left out)."""
    lines = []
    for name in FIELD_NAMES:
        if name == "out":
            continue
        v = getattr(cfg, name)
        if name == "concepts":
            v = ", ".join(f"{f}:{s}:{a!r}" for f, s, a in v)
        elif name == "band_scales":
            v = ",".join(repr(x) for x in v)
        elif isinstance(v, bool):
            v = str(v).lower()
        lines.append(f"{name} = {v}")
    return "\n".join(lines) + "\n"


def config_hash(cfg):
    return hashlib.sha256(config_text(cfg).encode()).hexdigest()


# --- outputs ---------------------------------------------------------------

def _csv_text(header, rows, comments):
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _write(out, name, data):
    path = Path(out) / name
    if isinstance(data, bytes):
        path.write_bytes(data)
    else:
        path.write_text(data, newline="")
    return path


def _setup(cfg):
    shape = (cfg.size, cfg.size, cfg.channels)
    codec = ToyCodec(cfg.codec, shape)
    sched = linear_schedule(cfg.steps, cfg.beta_start, cfg.beta_end)
    concepts = make_concepts(cfg.concepts, shape, codec, band_std=(cfg.spread,) * 4)
    return shape, codec, sched, concepts


def _run(cfg, codec, sched, concepts):
    rng = make_rng(cfg.seed)
    if cfg.method == "multlfg":
        gcfg = GuidanceConfig(band_scales=cfg.band_scales, top_k=min(cfg.k, cfg.n), tau=cfg.tau,
                              eps_fd=cfg.eps_fd, num_concepts=cfg.n)
        return multlfg_run(concepts, gcfg, sched, codec, rng, cfg.deterministic, uniform=cfg.uniform_weights)
    runner = composite_run if cfg.method == "composite" else switch_run
    return runner(concepts, cfg.scale, sched, codec, rng, cfg.deterministic)


def _weights_rows(trace):
    for s in trace.steps:
        for b, band in enumerate(BANDS):
            for i, w in enumerate(s.weights[b]):
                yield (s.t, band, i, float(w))


def _energy_rows(trace):
    for s, e in zip(trace.steps, energy_trajectory(trace)):
        yield (s.t, *(float(v) for v in e))


def _write_image(out, stem, img, tag):
    paths = [_write(out, f"{stem}.csv", field_to_csv(img, [tag]))]
    for ch in range(img.shape[2]):
        suffix = "" if img.shape[2] == 1 else f"_c{ch}"
        paths.append(_write(out, f"{stem}{suffix}.pgm", field_to_pgm(img[:, :, ch:ch + 1], tag)))
    return paths


def cmd_compose(cfg):
    tag = f"config_sha256={config_hash(cfg)}"
    _, codec, sched, concepts = _setup(cfg)
    trace = _run(cfg, codec, sched, concepts)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_image(out, "final", trace.final_image, tag)
    err_rows = []
    for i, ((family, seed, amp), m) in enumerate(zip(cfg.concepts, concepts)):
        target = codec.decode(m.target)
        for band, (abs_e, rel_e) in zip(BANDS, band_errors(trace.final_image, target)):
            err_rows.append((i, family, band, abs_e, rel_e, band == m.band_profile))
    _write(out, "band_errors.csv", _csv_text(
        ["concept", "family", "band", "abs_error", "rel_error", "owned"], err_rows, [tag]))
    _write(out, "weights.csv", _csv_text(["t", "band", "concept", "weight"], _weights_rows(trace), [tag]))
    _write(out, "energy.csv", _csv_text(["t"] + [f"E_{b}" for b in BANDS], _energy_rows(trace), [tag]))
    print(f"compose: method={cfg.method} n={cfg.n} k={cfg.k} steps={cfg.steps} -> {out}")
    for i, family, band, abs_e, rel_e, owned in err_rows:
        if owned:
            print(f"  concept {i} ({family}) owned band {band}: rel error {rel_e:.4f}")
    return 0


def cmd_freq_analysis(cfg):
    tag = f"config_sha256={config_hash(cfg)}"
    _, codec, sched, concepts = _setup(cfg)
    trace = _run(cfg, codec, sched, concepts)
    energy = energy_trajectory(trace)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out, "energy.csv", _csv_text(["t"] + [f"E_{b}" for b in BANDS], _energy_rows(trace), [tag]))
    rho = trend_statistic(trace.timesteps, energy[:, 0])
    summary = f"spearman(t, E_LL) = {rho!r}\n"
    _write(out, "summary.txt", f"# {tag}\n{summary}")
    print(f"freq-analysis: steps={cfg.steps} spread={cfg.spread} -> {out}")
    print(f"  trend: {summary.strip()} (positive: LL share higher early)")
    return 0


def trend_statistic(t, e_ll):
    """Spearman rank correlation; NaN when the curve is flat."""
    if np.ptp(e_ll) == 0:
        return float("nan")
    return float(spearmanr(t, e_ll).statistic)


def cmd_verify(cfg):
    tag = f"config_sha256={config_hash(cfg)}"
    results = analysis.run_checks(cfg.seed)
    width = max(len(r[0]) for r in results)
    for name, ok, detail in results:
        print(f"  {'PASS' if ok else 'FAIL'}  {name.ljust(width)}  {detail}")
    rows = analysis.interference_rows(cfg.pairs, cfg.seed)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    header = list(rows[0])
    _write(out, "interference.csv", _csv_text(header, ([r[h] for h in header] for r in rows), [tag]))
    pairs, bands = analysis.interference_summary(rows)
    print(f"  REPORT band interference: {len(rows)} pairs; all bands below spatial in "
          f"{pairs:.3f} of pairs, {bands:.3f} of individual bands -> {out / 'interference.csv'}")
    return 0 if all(ok for _, ok, _ in results) else 1


def cmd_jacobian(cfg):
    tag = f"config_sha256={config_hash(cfg)}"
    shape = (cfg.size, cfg.size, cfg.channels)
    try:
        codec = ToyCodec(cfg.codec, shape)
        x = gaussian_field(shape, make_rng(cfg.seed))
        report = jacobian_band_analysis(x, codec, cfg.eps_fd)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write(out, "band_gains.csv", report.to_csv([tag]))
    print(f"jacobian: codec={cfg.codec} size={cfg.size} -> {out / 'band_gains.csv'}")
    for i, band in enumerate(BANDS):
        gains = " ".join(f"{g:.4f}" for g in report.gains[i])
        print(f"  {band} -> [{gains}]  sigma_max {report.singular_values[band].max():.4f}")
    return 0


COMMANDS = {
    "compose": cmd_compose,
    "freq-analysis": cmd_freq_analysis,
    "verify": cmd_verify,
    "jacobian": cmd_jacobian,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="wavecompose", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat 'key = value' file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--method", choices=METHODS)
    parser.add_argument("--n", type=int)
    parser.add_argument("--k", type=int)
    parser.add_argument("--steps", type=int)
    parser.add_argument("--scale", type=float)
    parser.add_argument("--band-scales", help="LL,LH,HL,HH")
    parser.add_argument("--tau", type=float)
    parser.add_argument("--eps-fd", type=float)
    parser.add_argument("--codec", choices=CODEC_KINDS)
    parser.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--uniform-weights", action="store_true", default=None)
    parser.add_argument("--equal-scales", action="store_true", default=None)
    parser.add_argument("--beta-start", type=float)
    parser.add_argument("--beta-end", type=float)
    parser.add_argument("--size", type=int)
    parser.add_argument("--channels", type=int)
    parser.add_argument("--concepts", help="family:seed:amplitude, ...")
    parser.add_argument("--spread", type=float, help="per-band prior std of each concept")
    parser.add_argument("--pairs", type=int, help="random pairs for the interference report")
    parser.add_argument("--out")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_values = parse_config_text(Path(args.config).read_text()) if args.config else {}
        cfg = resolve_config(args.command, file_values, overrides)
        return COMMANDS[args.command](cfg)
    except (ConfigError, OSError) as exc:
        print(f"wavecompose: config error: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, ZeroDivisionError) as exc:
        print(f"wavecompose: numeric error: {exc}", file=sys.stderr)
        return 3
