"""Command-line front end.

Usage::

    ncenter <command> --config run.toml [--out DIR] [--seed INT]

Commands are ``solve``, ``admissible``, ``obstacle-sweep``, ``blowup``,
``asymptotics`` and ``kepler-compare``.  The configuration is a TOML file;
see the README for the schema.  Every command writes ``outcome.json`` and
``manifest.json`` into the output directory next to its own artifacts.

Exit codes: 0 success, 1 a numeric check failed, 2 usage or configuration
error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys as _sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import tomli

from . import __version__
from .kepler import (
    ParabolicEjection,
    action_scaling,
    blowup_convergence,
    ejection_action,
    fixed_end_minimize,
    parabolic_arc,
    parabolic_point,
    parabolic_velocity,
    sweep_table,
    total_grazing_sweep,
    write_sweep_csv,
)
from .minimize import MinimizeOptions, multistart, write_log_csv
from .model import CenterSystem, OpenArc, PeriodicLoop
from .regularize import asymptotic_fit, collision_arc, write_fits_csv
from .svg import Curve, write_svg
from .topology import TrivialClassError, WordSyntaxError, is_admissible, reduce_word

__all__ = ["ConfigError", "RunConfig", "load_config", "main", "COMMANDS"]

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_USAGE = 2

SWEEP_TOL = 1e-6
LOOP_COLUMNS = ("t", "x", "y", "vx", "vy")


class ConfigError(ValueError):
    """Invalid or incomplete configuration; maps to exit code 2."""


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """Parsed configuration.

    ``centers`` rows are ``(mass, x, y)``.  Tables other than ``system``,
    ``loop`` and ``optimizer`` are kept verbatim in ``tables`` for the
    command that reads them.
    """

    centers: list = field(default_factory=list)
    alpha: float = 1.0
    period: float = 2 * np.pi
    word: Optional[str] = None
    n: int = 256
    optimizer: MinimizeOptions = field(default_factory=MinimizeOptions)
    out: Path = Path("out")
    seed: int = 0
    tables: dict = field(default_factory=dict)
    digest: str = ""

    def system(self) -> CenterSystem:
        if not self.centers:
            raise ConfigError("[system] centers is missing")
        arr = np.asarray(self.centers, float)
        try:
            return CenterSystem(arr[:, 0], arr[:, 1:3], self.alpha)
        except ValueError as exc:
            raise ConfigError(f"[system] {exc}") from exc

    def table(self, name: str) -> dict:
        return dict(self.tables.get(name, {}))


def _number(tab: dict, key: str, default, kind=float):
    v = tab.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    return kind(v)


def _float_list(tab: dict, key: str, default) -> list:
    v = tab.get(key, default)
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{key} must be a non-empty list of numbers")
    try:
        return [float(x) for x in v]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key} must be a list of numbers") from exc


def load_config(path, out: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    """Read a TOML configuration; ``out`` and ``seed`` override the file.

    Raises
    ------
    ConfigError
        On unreadable files, malformed TOML or invalid values.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        doc = tomli.loads(raw.decode("utf-8"))
    except (tomli.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    cfg = RunConfig(digest=hashlib.sha256(raw).hexdigest())
    system = doc.get("system", {})
    cfg.alpha = _number(system, "alpha", 1.0)
    centers = system.get("centers", [])
    if not isinstance(centers, list) or any(not isinstance(c, list) or len(c) != 3 for c in centers):
        raise ConfigError("[system] centers must be a list of [mass, x, y] triples")
    cfg.centers = [[_number({"v": x}, "v", 0.0) for x in c] for c in centers]

    loop = doc.get("loop", {})
    cfg.word = loop.get("word")
    if cfg.word is not None and not isinstance(cfg.word, str):
        raise ConfigError("[loop] word must be a string")
    cfg.period = _number(loop, "period", 2 * np.pi)
    cfg.n = _number(loop, "n", 256, int)
    if cfg.period <= 0 or cfg.n < 8:
        raise ConfigError("[loop] needs period > 0 and n >= 8")

    cfg.seed = int(doc.get("seed", 0)) if seed is None else int(seed)
    opt = dict(doc.get("optimizer", {}))
    known = {f.name for f in fields(MinimizeOptions)}
    unknown = set(opt) - known
    if unknown:
        raise ConfigError(f"[optimizer] unknown keys: {sorted(unknown)}")
    opt["seed"] = cfg.seed
    try:
        cfg.optimizer = MinimizeOptions(**opt)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[optimizer] {exc}") from exc

    cfg.out = Path(out if out is not None else doc.get("out", "out"))
    cfg.tables = {k: v for k, v in doc.items() if isinstance(v, dict) and k not in ("system", "loop", "optimizer")}
    return cfg


# ---------------------------------------------------------------------------
# output helpers


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    return obj


def write_json(path, data) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_clean(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def loop_velocities(loop: PeriodicLoop) -> np.ndarray:
    """Central-difference node velocities of a periodic loop."""
    x = loop.nodes
    return (np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0)) / (2 * loop.dt)


def write_loop_csv(loop: PeriodicLoop, path) -> None:
    v = loop_velocities(loop)
    rows = [(t, p[0], p[1], q[0], q[1]) for t, p, q in zip(loop.times, loop.nodes, v)]
    _write_rows(path, LOOP_COLUMNS, rows)


def write_arc_csv(arc: OpenArc, path) -> None:
    v = arc.velocities if arc.velocities is not None else np.full_like(arc.points, np.nan)
    rows = [(t, p[0], p[1], q[0], q[1]) for t, p, q in zip(arc.times, arc.points, v)]
    _write_rows(path, LOOP_COLUMNS, rows)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(cfg: RunConfig, command: str, summary: dict, started: float, exit_code: int) -> None:
    """Config hash, version, timestamps, summary and a hash of every artifact."""
    files = sorted(p for p in cfg.out.iterdir() if p.is_file() and p.name != "manifest.json")
    write_json(
        cfg.out / "manifest.json",
        {
            "command": command,
            "tool": "ncenter",
            "version": __version__,
            "config_sha256": cfg.digest,
            "seed": cfg.seed,
            "started_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
            "finished_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "exit_code": exit_code,
            "summary": summary,
            "files": {p.name: {"bytes": p.stat().st_size, "sha256": _sha256(p)} for p in files},
        },
    )


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=_sys.stderr)


# ---------------------------------------------------------------------------
# commands; each returns (exit code, summary dict)


def _checked_word(cfg: RunConfig, sys: CenterSystem):
    if cfg.word is None:
        raise ConfigError("[loop] word is missing")
    try:
        w = reduce_word(cfg.word)
    except WordSyntaxError as exc:
        raise ConfigError(f"[loop] invalid word: {exc}") from exc
    if w.is_trivial:
        raise ConfigError("[loop] word reduces to the trivial class")
    if w.max_generator > sys.n_centers:
        raise ConfigError(f"[loop] word uses generator {w.max_generator} but only {sys.n_centers} centers are given")
    return w


def cmd_solve(cfg: RunConfig):
    sys = cfg.system()
    w = _checked_word(cfg, sys)
    verdict = is_admissible(w, sys)
    if not verdict.admissible:
        _warn(f"class {w} is not admissible; the minimizer may end at a collision")
    try:
        ms = multistart(w, sys, cfg.period, cfg.optimizer, cfg.n)
    except RuntimeError as exc:
        summary = {"word": str(w), "admissible": verdict.admissible, "error": str(exc)}
        write_json(cfg.out / "outcome.json", summary)
        return EXIT_NUMERIC, summary
    best = ms.best
    write_loop_csv(best.loop, cfg.out / "loop.csv")
    write_log_csv(best, cfg.out / "log.csv")
    runs = ms.table()
    _write_rows(
        cfg.out / "runs.csv",
        ("run", "seed", "status", "action", "eom_residual", "min_distance", "iterations"),
        [tuple(r.values()) for r in runs],
    )
    write_svg(
        cfg.out / "trajectory.svg",
        [Curve(best.loop.nodes, closed=True, label=str(w))],
        sys.positions,
        sys.masses,
        title=f"{best.status.value}  action={best.action_value:.6g}",
    )
    summary = {
        "word": str(w),
        "admissible": verdict.admissible,
        "period": cfg.period,
        "n": cfg.n,
        "alpha": sys.alpha,
        **best.summary(),
        "runs": runs,
    }
    write_json(cfg.out / "outcome.json", summary)
    return EXIT_OK, summary


def _describe_subloop(s) -> dict:
    return {
        "crossing": s.crossing,
        "start": s.start,
        "end": s.end,
        "enclosed_centers": sorted(int(k) + 1 for k in s.enclosed_centers),
        "area": s.area,
    }


def cmd_admissible(cfg: RunConfig):
    sys = cfg.system()
    w = _checked_word(cfg, sys)
    res = is_admissible(w, sys, cross_check=True)
    summary = {
        "word": str(res.word),
        "admissible": res.admissible,
        "cross_check": res.cross_check,
        "innermost": [_describe_subloop(s) for s in res.innermost],
        "witness": None if res.witness is None else _describe_subloop(res.witness),
    }
    verdict = "admissible" if res.admissible else "inadmissible"
    print(f"{res.word}: {verdict}")
    if res.witness is not None:
        enc = summary["witness"]["enclosed_centers"]
        print(f"  witness: innermost sub-loop at crossing {res.witness.crossing} enclosing centers {enc or 'none'}")
    write_json(cfg.out / "outcome.json", summary)
    write_svg(cfg.out / "trajectory.svg", [Curve(res.taut_loop.nodes, closed=True, label=str(res.word))], sys.positions, sys.masses, title=f"taut representative: {verdict}")
    if res.cross_check is not None and res.cross_check != res.admissible:
        _warn("independent representatives disagree")
        return EXIT_NUMERIC, summary
    return EXIT_OK, summary


def cmd_obstacle_sweep(cfg: RunConfig):
    tab = cfg.table("sweep")
    alphas = _float_list(tab, "alphas", [1.0, 1.25, 1.5, 1.75])
    if "ratios" in tab:
        ratios = _float_list(tab, "ratios", None)
    else:
        lo = _number(tab, "ratio_min", 0.05)
        hi = _number(tab, "ratio_max", 0.95)
        count = _number(tab, "n_ratios", 20, int)
        if not (0 < lo < hi <= 1) or count < 2:
            raise ConfigError("[sweep] needs 0 < ratio_min < ratio_max <= 1 and n_ratios >= 2")
        ratios = list(np.linspace(lo, hi, count))
    m1 = _number(tab, "m1", 1.0)
    tol = _number(tab, "tol", SWEEP_TOL)
    limit_ratio = _number(tab, "limit_ratio", 1e-4)
    if any(not (1.0 <= a < 2.0) for a in alphas) or any(not (0 < q <= 1) for q in ratios):
        raise ConfigError("[sweep] alphas must lie in [1, 2) and ratios in (0, 1]")
    rows = sweep_table(alphas, ratios, m1)
    write_sweep_csv(rows, cfg.out / "sweep.csv")
    worst = max(r.abs_err for r in rows)
    limits = {repr(a): total_grazing_sweep(a, limit_ratio, m1) for a in alphas}
    summary = {
        "rows": len(rows),
        "max_abs_err": worst,
        "max_arcsin_ratio_abs_err": max(r.arcsin_ratio_abs_err for r in rows),
        "tol": tol,
        "limit_ratio": limit_ratio,
        "total_sweep_at_limit": limits,
        "total_sweep_expected": {repr(a): 2 * np.pi / (2 - a) for a in alphas},
    }
    write_json(cfg.out / "outcome.json", summary)
    return (EXIT_OK if worst <= tol else EXIT_NUMERIC), summary


def _collision_arc(sys: CenterSystem, tab: dict, k: int, angle: float, t_max: float) -> OpenArc:
    h = _number(tab, "h", 0.0)
    t_min = _number(tab, "t_min", 1e-7)
    n = _number(tab, "n", 300, int)
    return collision_arc(sys, k, angle, h, t_min, t_max, n)


def _center_index(tab: dict, sys: CenterSystem) -> int:
    k = _number(tab, "center", 1, int)
    if not 1 <= k <= sys.n_centers:
        raise ConfigError(f"center must lie in 1..{sys.n_centers}")
    return k - 1


def cmd_asymptotics(cfg: RunConfig):
    tab = cfg.table("asymptotics")
    source = tab.get("source", "collision")
    window = tuple(_float_list(tab, "window", [1e-6, 1e-2]))
    if len(window) != 2 or not 0 < window[0] < window[1]:
        raise ConfigError("[asymptotics] window must be [lo, hi] with 0 < lo < hi")
    check = tab.get("check", ["I", "I_dot", "I_ddot", "V", "kinetic"])
    if source == "parabolic":
        m1 = _number(tab, "m1", 1.0)
        alpha = _number(tab, "alpha", cfg.alpha)
        pe = ParabolicEjection(m1, alpha, 0.0, 0.0)
        t = np.geomspace(window[0], window[1], _number(tab, "n", 300, int))
        arc = OpenArc(t, parabolic_point(pe, t), parabolic_velocity(pe, t))
        sys = pe.system()
        k = 0
        tol = _number(tab, "tol", 0.01)
    elif source == "collision":
        sys = cfg.system()
        k = _center_index(tab, sys)
        arc = _collision_arc(sys, tab, k, _number(tab, "angle", 2.0), _number(tab, "t_max", 0.05))
        tol = _number(tab, "tol", 0.03)
    else:
        raise ConfigError("[asymptotics] source must be 'parabolic' or 'collision'")
    try:
        fits = asymptotic_fit(arc, sys, t0=0.0, window=window, k=k)
    except ValueError as exc:
        raise ConfigError(f"[asymptotics] {exc}") from exc
    write_fits_csv(fits, cfg.out / "fits.csv", {"alpha": sys.alpha, "source": source})
    write_arc_csv(arc, cfg.out / "arc.csv")
    bad = [f.quantity for f in fits if f.quantity in check and f.relative_error > tol]
    summary = {
        "source": source,
        "alpha": sys.alpha,
        "tol": tol,
        "fits": {f.quantity: {"expected": f.expected_exponent, "fitted": f.fitted_exponent, "relative_error": f.relative_error, "r_squared": f.r_squared} for f in fits},
        "failed": bad,
    }
    write_json(cfg.out / "outcome.json", summary)
    return (EXIT_NUMERIC if bad else EXIT_OK), summary


def _through_collision(sys: CenterSystem, tab: dict, k: int) -> OpenArc:
    """Arrival along ``angle_in``, a sample on the center at ``t = 0``, departure along ``angle_out``."""
    t_max = _number(tab, "t_max", 0.1)
    a_in = _number(tab, "angle_in", 2.0)
    a_out = _number(tab, "angle_out", a_in)
    arrive = _collision_arc(sys, tab, k, a_in, t_max)
    leave = _collision_arc(sys, tab, k, a_out, t_max)
    c = sys.positions[k]
    return OpenArc(
        np.concatenate([-arrive.times[::-1], [0.0], leave.times]),
        np.vstack([arrive.points[::-1], c, leave.points]),
        np.vstack([-arrive.velocities[::-1], [np.nan, np.nan], leave.velocities]),
    )


def cmd_blowup(cfg: RunConfig):
    tab = cfg.table("blowup")
    source = tab.get("source", "collision")
    T = _number(tab, "T", 1.0)
    lambdas = _float_list(tab, "lambdas", list(np.geomspace(1e-1, 1e-4, 7)))
    scaling_lambdas = _float_list(tab, "scaling_lambdas", list(np.geomspace(1e-3, 1.0, 13)))
    if T <= 0 or any(v <= 0 for v in lambdas + scaling_lambdas):
        raise ConfigError("[blowup] T and all lambdas must be positive")
    if source == "parabolic":
        m1 = _number(tab, "m1", 1.0)
        alpha = _number(tab, "alpha", cfg.alpha)
        pe = ParabolicEjection(m1, alpha, 0.0, _number(tab, "delta_phi", 0.0))
        sys = pe.system()
        center = np.zeros(2)
        # even sample count keeps t = 0 out; add the collision sample explicitly
        base = parabolic_arc(pe, T, 2 * _number(tab, "n", 200, int))
        neg = base.times < 0
        y = OpenArc(
            np.concatenate([base.times[neg], [0.0], base.times[~neg]]),
            np.vstack([base.points[neg], center, base.points[~neg]]),
            np.vstack([base.velocities[neg], [np.nan, np.nan], base.velocities[~neg]]),
        )
        tol = _number(tab, "tol", 1e-9)
    elif source == "collision":
        sys = cfg.system()
        k = _center_index(tab, sys)
        center = sys.positions[k]
        pe = ParabolicEjection(float(sys.masses[k]), sys.alpha)
        y = _through_collision(sys, tab, k)
        tol = None
    else:
        raise ConfigError("[blowup] source must be 'parabolic' or 'collision'")
    try:
        table = blowup_convergence(y, pe, lambdas, T, center)
    except ValueError as exc:
        raise ConfigError(f"[blowup] {exc}") from exc
    _write_rows(cfg.out / "blowup.csv", ("lambda", "sup_distance", "velocity_distance"), table.rows())

    # action scaling of the limiting parabolic motion about its center
    limit = ParabolicEjection(pe.m1, pe.alpha, table.phi_minus, table.phi_plus)
    arc = parabolic_arc(limit, T, 2 * _number(tab, "n", 200, int))
    fit = action_scaling(arc, limit.system(), scaling_lambdas)
    _write_rows(cfg.out / "scaling.csv", ("lambda", "action_ratio"), zip(fit.lambdas, fit.ratios))
    agree = fit.agreement()
    scaling_ok = fit.r_squared > 1 - 1e-9 and sum(agree.values()) == 1
    if source == "parabolic":
        converged = bool(np.max(table.sup_distance) < tol)
    else:
        converged = table.decreasing()
    write_svg(
        cfg.out / "trajectory.svg",
        [Curve(y.points, label="arc"), Curve(parabolic_arc(limit, T, 200, center).points, dashed=True, label="limit")],
        sys.positions,
        sys.masses,
        title=f"blow-up at center, lambda down to {min(lambdas):.1e}",
    )
    summary = {
        "source": source,
        "alpha": pe.alpha,
        "collision_time": table.collision_time,
        "phi_minus": table.phi_minus,
        "phi_plus": table.phi_plus,
        "sup_distance": table.sup_distance,
        "velocity_distance": table.velocity_distance,
        "lambdas": table.lambdas,
        "converged": converged,
        "scaling_exponent": fit.exponent,
        "scaling_r_squared": fit.r_squared,
        "homogeneity_exponent": fit.homogeneity_exponent,
        "position_exponent": fit.position_exponent,
        "scaling_agreement": agree,
    }
    write_json(cfg.out / "outcome.json", summary)
    return (EXIT_OK if converged and scaling_ok else EXIT_NUMERIC), summary


def cmd_kepler_compare(cfg: RunConfig):
    tab = cfg.table("kepler")
    m1 = _number(tab, "m1", 1.0)
    alpha = _number(tab, "alpha", 1.5)
    dphi = _number(tab, "delta_phi", 2 * np.pi)
    T = _number(tab, "T", 1.0)
    n = _number(tab, "n", 512, int)
    min_margin = _number(tab, "min_relative_margin", 0.0)
    try:
        pe = ParabolicEjection(m1, alpha, 0.0, dphi)
    except ValueError as exc:
        raise ConfigError(f"[kepler] {exc}") from exc
    if T <= 0 or n < 16:
        raise ConfigError("[kepler] needs T > 0 and n >= 16")
    res = fixed_end_minimize(pe, T, n, n_random=_number(tab, "n_random", 0, int), seed=cfg.seed)
    write_arc_csv(res.arc, cfg.out / "arc.csv")
    _write_rows(cfg.out / "runs.csv", ("start", "action", "status", "iterations"), [(r.label, r.action, r.status, r.iterations) for r in res.runs])
    ref = parabolic_arc(pe, T, n + 2)
    write_svg(
        cfg.out / "trajectory.svg",
        [Curve(res.arc.points, label="minimizer"), Curve(ref.points, dashed=True, label="collision-ejection")],
        np.zeros((1, 2)),
        np.array([m1]),
        title=f"alpha={alpha:g} dphi={dphi:.4g} margin={res.relative_margin:.3e}",
    )
    summary = {
        "alpha": alpha,
        "delta_phi": dphi,
        "T": T,
        "n": n,
        "action_minimizer": res.action,
        "action_collision_ejection": ejection_action(pe, T),
        "margin": res.margin,
        "relative_margin": res.relative_margin,
        "min_radius": res.min_radius,
        "status": res.status,
        "improves": res.relative_margin > min_margin,
    }
    write_json(cfg.out / "outcome.json", summary)
    return (EXIT_OK if summary["improves"] else EXIT_NUMERIC), summary


COMMANDS = {
    "solve": cmd_solve,
    "admissible": cmd_admissible,
    "obstacle-sweep": cmd_obstacle_sweep,
    "blowup": cmd_blowup,
    "asymptotics": cmd_asymptotics,
    "kepler-compare": cmd_kepler_compare,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ncenter", description="Periodic and collision orbits among fixed attracting centers.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="TOML configuration file")
    p.add_argument("--out", default=None, help="output directory (default: config 'out' or ./out)")
    p.add_argument("--seed", type=int, default=None, help="random seed, overrides the config")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    started = time.time()
    try:
        cfg = load_config(args.config, args.out, args.seed)
        cfg.out.mkdir(parents=True, exist_ok=True)
        code, summary = COMMANDS[args.command](cfg)
    except (ConfigError, TrivialClassError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_USAGE
    write_manifest(cfg, args.command, summary, started, code)
    status = "ok" if code == EXIT_OK else "numeric check failed"
    print(f"{args.command}: {status} -> {os.fspath(cfg.out)}")
    return code


if __name__ == "__main__":
    _sys.exit(main())
