"""Config-driven experiment runner.

A config is flat ``key=value`` text with a mandatory ``kind=`` line and a
mandatory ``seed=`` (which ``--seed`` may override). Blank lines and ``#``
comments are ignored. Every run writes its CSV tables and a ``summary.kv``
file with a ``status=PASS|FAIL`` line into the output directory.

Exit status: 0 on PASS, 2 when the checked criterion fails, 1 on any error.
"""
from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import nn_approx, pdo, radon, spectral, tikhonov
from .rates import make_rng, fmt

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class ConfigError(ValueError):
    pass


# -- parsing -------------------------------------------------------------------

def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected key=value, got {raw!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {no}: empty key")
        if key in out:
            raise ConfigError(f"line {no}: duplicate key {key!r}")
        out[key] = val
    return out


def parse_symbol(text: str):
    """``bracket:<s>``, ``resolvent:<alpha>`` or a ``*``-joined product of those."""
    parts = []
    for item in text.split("*"):
        name, _, arg = item.strip().partition(":")
        try:
            v = float(arg)
        except ValueError:
            raise ConfigError(f"bad symbol parameter in {item!r}") from None
        if name == "bracket":
            parts.append(pdo.BracketPower(v))
        elif name == "resolvent":
            if v <= 0:
                raise ConfigError("resolvent shift must be positive")
            parts.append(pdo.Resolvent(v))
        else:
            raise ConfigError(f"unknown symbol {name!r}")
    return parts[0] if len(parts) == 1 else pdo.Product(parts)


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _triples(text):
    out = []
    for chunk in text.split(";"):
        vals = _floats(chunk)
        if len(vals) != 3:
            raise ConfigError(f"triple needs three values: {chunk!r}")
        out.append(tuple(vals))
    return out


def _pow2_grid(lo, hi):
    return [2.0**-k for k in range(lo, hi + 1)]


# key -> (converter, default, check); default None means required
SCHEMAS = {
    "norms": {
        "file": (str, "", None),
        "s_values": (_floats, "-2,-1,0,1,2", None),
    },
    "interp": {
        "d": (int, "2", lambda v: v >= 1),
        "functions": (int, "1000", lambda v: v >= 1),
        "k_max": (int, "6", lambda v: v >= 1),
        "n_orbits": (int, "5", lambda v: v >= 1),
        "triples": (_triples, "0,1,2;-2,0,2;-1,0.5,3", lambda v: all(r < s < t for r, s, t in v)),
    },
    "link": {
        "symbol": (parse_symbol, None, None),
        "a": (float, None, lambda v: v > 0),
        "d": (int, "2", lambda v: v >= 1),
        "trials": (int, "200", lambda v: v >= 1),
        "k_max": (int, "8", lambda v: v >= 1),
        "n_orbits": (int, "6", lambda v: v >= 1),
    },
    "stability": {
        "symbol": (parse_symbol, "bracket:-2", None),
        "a": (float, "2", lambda v: v > 0),
        "p": (float, "2", lambda v: v > 0),
        "R": (float, "1", lambda v: v > 0),
        "d": (int, "2", lambda v: v >= 1),
        "trials": (int, "500", lambda v: v >= 1),
        "k_max": (int, "6", lambda v: v >= 1),
        "n_orbits": (int, "5", lambda v: v >= 1),
    },
    "schroedinger": {
        "alpha": (float, "2", lambda v: v > 0),
        "q": (float, "0.3", lambda v: 0 < v < 1),
        "d": (int, "2", lambda v: v >= 1),
        "trials": (int, "5", lambda v: v >= 1),
        "w_orbits": (int, "6", lambda v: v >= 1),
        "w_k_max": (int, "2", lambda v: v >= 1),
        "u_orbits": (int, "6", lambda v: v >= 1),
        "u_k_max": (int, "3", lambda v: v >= 1),
        "tol": (float, "1e-10", lambda v: v > 0),
        "box": (int, "12", lambda v: v >= 1),
    },
    "mc-rate": {
        "d": (int, "2", lambda v: v in (1, 2)),
        "s": (int, "2", lambda v: v >= 0),
        "sigma": (float, "1", lambda v: v > 0),
        "cutoff": (float, "3", lambda v: v > 0),
        "sign": (str, "positive", lambda v: v in nn_approx.SIGNS),
        "n_grid": (_ints, "16,32,64,128,256,512,1024,2048,4096", lambda v: len(v) >= 3),
        "reps": (int, "30", lambda v: v >= 10),
        "grid_points": (int, "33", lambda v: v >= 33),
    },
    "tikhonov-rate": {
        "p": (float, None, lambda v: v > 0),
        "a": (float, None, lambda v: v > 0),
        "R": (float, "1e10", lambda v: v > 0),
        "symbol": (str, "", None),
        "d": (int, "1", lambda v: v >= 1),
        "K_max": (int, "4096", lambda v: v >= 2),
        "k_min": (int, "4", lambda v: v >= 1),
        "n_scales": (int, "32", lambda v: v >= 1),
        "delta_grid": (_floats, ",".join(repr(v) for v in _pow2_grid(2, 9)), lambda v: len(v) >= 3),
        "reps": (int, "20", lambda v: v >= 10),
        "slope_tol": (float, "0.1", lambda v: v > 0),
    },
    "radon-identity": {
        "level": (int, "2", lambda v: v >= 1),
    },
}


def validate(raw: dict[str, str], seed_override: int | None = None) -> dict:
    raw = dict(raw)
    kind = raw.pop("kind", None)
    if kind is None:
        raise ConfigError("missing kind=")
    if kind not in SCHEMAS:
        raise ConfigError(f"unknown kind {kind!r}; expected one of {', '.join(SCHEMAS)}")
    seed = raw.pop("seed", None)
    if seed_override is not None:
        seed = seed_override
    if seed is None:
        raise ConfigError("missing seed=")
    try:
        seed = int(seed)
    except ValueError:
        raise ConfigError(f"seed must be an integer, got {seed!r}") from None
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    out_dir = raw.pop("out", None)
    schema = SCHEMAS[kind]
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown keys for {kind}: {', '.join(sorted(unknown))}")
    cfg = {"kind": kind, "seed": seed, "out": out_dir}
    for key, (conv, default, check) in schema.items():
        text = raw.get(key, default)
        if text is None:
            raise ConfigError(f"missing required key {key}=")
        try:
            val = conv(text)
        except ConfigError:
            raise
        except (TypeError, ValueError):
            raise ConfigError(f"cannot parse {key}={text!r}") from None
        if check is not None and not check(val):
            raise ConfigError(f"{key}={text} is outside the admissible range")
        cfg[key] = val
    return cfg


# -- output helpers --------------------------------------------------------------

def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def kv_text(pairs) -> str:
    return "".join(f"{k}={fmt(v)}\n" for k, v in pairs)


# -- experiments -----------------------------------------------------------------
# each returns (passed, {filename: text}, [summary pairs])

def _sample_function():
    return spectral.loads(resources.files("barron").joinpath("data/sample.sf").read_text())


def run_norms(cfg, workers):
    u = spectral.load(cfg["file"]) if cfg["file"] else _sample_function()
    svals = sorted(cfg["s_values"])
    norms = [spectral.barron_norm(u, s) for s in svals]
    print(f"{'s':>6}  {'B^s norm':>22}")
    for s, v in zip(svals, norms):
        print(f"{s:>6g}  {v:>22.15g}")
    ok = all(a <= b * (1 + 1e-12) for a, b in zip(norms, norms[1:]))
    files = {"norms.csv": csv_text(["s", "barron_norm"], zip(svals, norms))}
    return ok, files, [("atoms", len(u)), ("monotone", ok)]


def _single_shell(rng, d, k_max):
    k = rng.integers(-k_max, k_max + 1, size=d)
    if not np.any(k):
        k[0] = 1
    c = rng.normal() + 1j * rng.normal()
    return spectral.SpectralFunction.from_atoms(d, {tuple(k): c, tuple(-k): np.conj(c)})


def run_interp(cfg, workers):
    rows, ok = [], True
    for j, (r, s, t) in enumerate(cfg["triples"]):
        trip = spectral.InterpolationTriple(r, s, t)
        gmax, shell_dev = 0.0, 0.0
        for i in range(cfg["functions"]):
            rng = make_rng(cfg["seed"], j, i)
            u = spectral.random_function(rng, cfg["d"], cfg["n_orbits"], cfg["k_max"])
            gmax = max(gmax, spectral.interpolation_gap(u, trip))
            shell = _single_shell(rng, cfg["d"], cfg["k_max"])
            shell_dev = max(shell_dev, abs(spectral.interpolation_gap(shell, trip) - 1.0))
        ok &= gmax <= 1 + 1e-12 and shell_dev <= 1e-12
        rows.append((j, r, s, t, trip.theta, gmax, shell_dev))
    files = {"interp.csv": csv_text(["triple_id", "r", "s", "t", "theta", "max_gap", "shell_deviation"], rows)}
    return ok, files, [("functions", cfg["functions"]), ("max_gap", max(row[5] for row in rows))]


def run_link(cfg, workers):
    rep = pdo.link_constants(cfg["symbol"], cfg["a"], cfg["trials"], cfg["seed"], cfg["d"], cfg["k_max"], cfg["n_orbits"])
    return rep.contained, {"link.kv": rep.to_kv()}, [("m", rep.m), ("M", rep.M), ("contained", rep.contained)]


def run_stability(cfg, workers):
    cls = pdo.SmoothnessClass(cfg["p"], cfg["R"])
    rep = pdo.conditional_stability_check(
        cfg["symbol"], cfg["a"], cls, cfg["trials"], cfg["seed"], cfg["d"], cfg["k_max"], cfg["n_orbits"]
    )
    files = {
        "stability.csv": csv_text(["pair_id", "ratio"], enumerate(rep.ratios)),
        "stability.kv": rep.to_kv(),
    }
    return rep.ok, files, [("max_ratio", rep.max_ratio), ("bound", rep.bound)]


def run_schroedinger(cfg, workers):
    alpha, tol, d = cfg["alpha"], cfg["tol"], cfg["d"]
    rows, worst = [], 0.0
    for i in range(cfg["trials"]):
        rng = make_rng(cfg["seed"], i)
        W = spectral.random_function(rng, d, cfg["w_orbits"], cfg["w_k_max"])
        W = W * (cfg["q"] * alpha / spectral.barron_norm(W, 0.0))
        u = spectral.random_function(rng, d, cfg["u_orbits"], cfg["u_k_max"])
        y = pdo.schroedinger_forward(alpha, W, u, tol)
        y_dense = pdo.schroedinger_dense_solve(alpha, W, u, cfg["box"])
        diff = spectral.barron_norm(y - y_dense, 0.0)
        worst = max(worst, diff)
        rows.append((i, spectral.barron_norm(W, 0.0) / alpha, len(W), len(u), len(y), diff,
                     pdo.schroedinger_residual(alpha, W, u, y)))
    ok = worst <= 10 * tol
    header = ["trial", "q", "w_atoms", "u_atoms", "y_atoms", "dense_diff", "residual"]
    return ok, {"schroedinger.csv": csv_text(header, rows)}, [("max_dense_diff", worst), ("tol", tol)]


def run_mc_rate(cfg, workers):
    rho = nn_approx.DensityDescriptor(d=cfg["d"], sigma=cfg["sigma"], cutoff=cfg["cutoff"], sign=cfg["sign"])
    rep = nn_approx.mise_experiment(rho, cfg["s"], cfg["n_grid"], cfg["reps"], cfg["grid_points"], cfg["seed"], workers)
    below = bool(np.all(rep.errors < rep.bound))
    ok = -0.65 <= rep.slope <= -0.35 and below
    files = {
        "mc_rate.csv": csv_text(
            ["n", "rms_error", "stderr", "bound"],
            zip(rep.levels.astype(int), rep.errors, rep.spread, rep.bound),
        ),
        "mc_rate.kv": kv_text(
            [("fitted_slope", rep.slope), ("intercept", rep.intercept), ("residual_rms", rep.fit.residual_rms)]
            + list(rep.meta.items())
            + [("reps", cfg["reps"]), ("grid_points", cfg["grid_points"])]
        ),
    }
    return ok, files, [("fitted_slope", rep.slope), ("below_bound", below)]


def run_tikhonov_rate(cfg, workers):
    p, a = cfg["p"], cfg["a"]
    phi = parse_symbol(cfg["symbol"]) if cfg["symbol"] else pdo.BracketPower(-a)
    spec = tikhonov.InverseProblemSpec(
        phi, a, p, pdo.SmoothnessClass(p, cfg["R"]), cfg["d"], cfg["K_max"], cfg["k_min"], cfg["n_scales"]
    )
    rep = tikhonov.rate_experiment(spec, cfg["delta_grid"], cfg["reps"], cfg["seed"], workers)
    within = all(s.error <= 1.01 * s.bound for s in rep.samples)
    slope_ok = abs(rep.slope - spec.rate) <= cfg["slope_tol"]
    files = {
        "tikhonov_rate.csv": csv_text(
            ["delta", "rep", "error", "bound", "lambda"],
            ((s.delta, s.rep, s.error, s.bound, s.lam) for s in rep.samples),
        ),
        "tikhonov_summary.csv": csv_text(
            ["delta", "median_error", "theory_slope", "fitted_slope"],
            ((dl, e, spec.rate, rep.slope) for dl, e in zip(rep.levels, rep.errors)),
        ),
    }
    pairs = [("theory_slope", spec.rate), ("fitted_slope", rep.slope), ("within_bound", within),
             ("neuron_budget_min_delta", tikhonov.neuron_budget(min(cfg["delta_grid"]), a, p))]
    return slope_ok and within, files, pairs


def run_radon_identity(cfg, workers):
    rep = radon.identity_check(radon.default_family(), cfg["level"])
    pairs = [("cv", rep.cv), ("mean_ratio", float(rep.ratios.mean())),
             ("monotone", bool(np.all(rep.monotone))), ("skipped", len(rep.skipped))]
    return rep.passed, {"radon_identity.csv": rep.to_csv()}, pairs


RUNNERS = {
    "norms": run_norms,
    "interp": run_interp,
    "link": run_link,
    "stability": run_stability,
    "schroedinger": run_schroedinger,
    "mc-rate": run_mc_rate,
    "tikhonov-rate": run_tikhonov_rate,
    "radon-identity": run_radon_identity,
}


def run(cfg: dict, out_dir: Path, workers: int = 1) -> int:
    """Run a validated config and write its artifacts. Returns the exit status."""
    out_dir.mkdir(parents=True, exist_ok=True)
    ok, files, pairs = RUNNERS[cfg["kind"]](cfg, workers)
    for name, text in files.items():
        (out_dir / name).write_text(text)
    summary = [("kind", cfg["kind"]), ("seed", cfg["seed"])] + pairs + [("status", "PASS" if ok else "FAIL")]
    (out_dir / "summary.kv").write_text(kv_text(summary))
    return EXIT_PASS if ok else EXIT_FAIL


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="barron", description="Run a Barron-scale experiment from a key=value config.")
    ap.add_argument("config", type=Path)
    ap.add_argument("--out", type=Path, default=None, help="output directory (default: out= in config, else ./out)")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = ap.parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg = validate(parse_config(args.config.read_text()), args.seed)
        out = args.out or Path(cfg["out"] or "out")
        status = run(cfg, out, args.workers)
    except (ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"barron: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"status={'PASS' if status == EXIT_PASS else 'FAIL'}")
    return status


if __name__ == "__main__":
    sys.exit(main())
