"""Command-line interface: ``echolab <subcommand> --config run.ini --out DIR``.

Exit codes: 0 ok, 2 config/input error, 3 numerical failure, 4 oracle mismatch.
Outputs are staged in a temporary directory and moved into place only when
the command succeeds; the JSON manifest is written last.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime as _dt
import hashlib
import io
import json
import logging
import math
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core_model import ModelParams, ModeVector, NormWeight, norm
from .duhamel_oracle import OracleRefusal, duhamel_solve
from .experiments import (
    candidate_distances,
    fit_exponent,
    modified_scattering_demo,
    norm_inflation_scan,
    resonance_gain,
    run_echo_chain,
)
from .integrator import IntegrationError, IntegratorConfig, evolve
from .scattering_models import (
    composed_scattering,
    hypergeom_scattering,
    three_mode_operator,
)
from .special_functions import SpecialFunctionError

log = logging.getLogger("echolab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_MISMATCH = 0, 2, 3, 4
COMMANDS = ("simulate", "scatter", "fit", "oracle-check", "scan", "demo-scattering")


class ConfigError(ValueError):
    pass


class OracleMismatch(RuntimeError):
    pass


# ---------------------------------------------------------------- config


def load_config(path: str | None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    if path is None:
        return cp
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return cp


def _get(cp, section, key, conv, default=None, required=False):
    if cp.has_option(section, key):
        raw = cp.get(section, key).strip()
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc
    if required:
        raise ConfigError(f"missing required key [{section}] {key}")
    return default


def _floats(raw: str) -> list[float]:
    return [float(x) for x in raw.replace(";", ",").split(",") if x.strip()]


def _ints(raw: str) -> list[int]:
    return [int(x) for x in raw.replace(";", ",").split(",") if x.strip()]


def _words(raw: str) -> list[str]:
    return [x.strip() for x in raw.replace(";", ",").split(",") if x.strip()]


def parse_norm(spec: str) -> NormWeight:
    """'L2', 'H<s>' (Sobolev) or 'G<C>' / 'G<C>:<s>' (Gevrey, s defaults to 1/2)."""
    spec = spec.strip()
    try:
        if spec.upper() == "L2":
            return NormWeight.l2()
        if spec[0] in "Hh":
            return NormWeight.sobolev(float(spec[1:].lstrip("^")))
        if spec[0] in "Gg":
            parts = spec[1:].split(":")
            return NormWeight.gevrey(float(parts[0]), float(parts[1]) if len(parts) > 1 else 0.5)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad norm spec {spec!r}") from exc
    raise ConfigError(f"bad norm spec {spec!r}")


def integrator_config(cp) -> IntegratorConfig:
    s = "integrator"
    try:
        return IntegratorConfig(
            rel_tol=_get(cp, s, "rel_tol", float, 1e-10),
            abs_tol=_get(cp, s, "abs_tol", float, 1e-14),
            max_step=_get(cp, s, "max_step", float, 0.05),
            resonance_refinement=_get(cp, s, "resonance_refinement", float, 0.1),
            delta_res=_get(cp, s, "delta_res", float, None),
        )
    except ValueError as exc:
        raise ConfigError(f"[integrator] {exc}") from exc


def _model(cp, need_k0=True):
    c = _get(cp, "model", "c", float, required=True)
    eta = _get(cp, "model", "eta", float, required=True)
    k0 = _get(cp, "model", "k0", int, required=need_k0)
    if not 0 < c < 0.2:
        raise ConfigError(f"[model] c must lie in (0, 0.2), got {c}")
    if not (math.isfinite(eta) and eta > 0):
        raise ConfigError(f"[model] eta must be positive, got {eta}")
    return c, eta, k0


def config_snapshot(cp) -> str:
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------- outputs


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class OutputSet:
    """Single writer staging files in a temp dir; commit() moves them into place."""

    out_dir: Path
    staging: Path = field(init=False)
    files: list = field(default_factory=list)

    def __post_init__(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.out_dir))

    def write_csv(self, name: str, header, rows):
        path = self.staging / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, delimiter=",", lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        self.files.append(name)

    def write_text(self, name: str, text: str):
        with open(self.staging / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.files.append(name)

    def write_json(self, name: str, obj):
        self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def commit(self) -> list[dict]:
        listed = []
        for name in self.files:
            src = self.staging / name
            digest = sha256_file(src)
            size = src.stat().st_size
            os.replace(src, self.out_dir / name)
            listed.append({"path": name, "sha256": digest, "bytes": size})
        self.discard()
        return listed

    def discard(self):
        shutil.rmtree(self.staging, ignore_errors=True)


def code_version() -> str:
    """Package version plus a digest of the package sources."""
    h = hashlib.sha256()
    root = Path(__file__).resolve().parent
    for path in sorted(root.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return f"{__version__}+src.{h.hexdigest()[:12]}"


def write_manifest(out_dir: Path, command: str, argv, cp, files, started, seed):
    manifest = {
        "command_line": " ".join(argv),
        "command": command,
        "config_snapshot": config_snapshot(cp),
        "code_version": code_version(),
        "seed": seed,
        "started": started,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "outputs": files,
    }
    name = f"manifest-{command}.json"
    fd, tmp = tempfile.mkstemp(prefix=".manifest-", dir=out_dir)
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, out_dir / name)
    return out_dir / name


def verify_manifest(path: Path) -> bool:
    """True when every listed file exists with the recorded digest."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    base = Path(path).parent
    return all(sha256_file(base / f["path"]) == f["sha256"] for f in data["outputs"])


_PLOT_TEMPLATE = '''"""Plot script generated by echolab {command}; run with python after installing matplotlib."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def read(name):
    with open(HERE / name, newline="") as fh:
        return list(csv.DictReader(fh))


{body}

if __name__ == "__main__":
    main()
'''


def _plot_script(command: str, body: str) -> str:
    return _PLOT_TEMPLATE.format(command=command, body=body.strip("\n"))


# ---------------------------------------------------------------- commands


def cmd_simulate(cp, out: OutputSet, jobs: int):
    c, eta, k0 = _model(cp)
    cfg = integrator_config(cp)
    norms = [parse_norm(s) for s in _get(cp, "simulate", "norms", _words, ["L2"])]
    tau_end = _get(cp, "simulate", "tau_end", float, 1.5)
    if k0 < 1 or eta / k0 ** 2 < 1:
        raise ConfigError("[model] needs k0 >= 1 and eta/k0^2 >= 1")
    if tau_end < 1.5:
        raise ConfigError("[simulate] tau_end must be >= 1.5 (end of the chain)")
    run = run_echo_chain(c, eta, k0, cfg, norms=norms)
    p = run.params
    start = ModeVector.unit(p, k0, run.trace[0].interval[0])
    snaps = [start, *run.exit_states]
    if tau_end > run.final_state.time:
        late = IntegratorConfig(cfg.rel_tol, cfg.abs_tol, math.inf, cfg.resonance_refinement, cfg.delta_res)
        snaps.append(evolve(run.final_state, tau_end, p, late).final)
    out.write_csv("states.csv", ["tau", "k", "re", "im"],
                  ((s.time, k, re, im) for s in snaps for k, re, im in s.csv_rows()))
    out.write_csv("norms.csv", ["tau", "norm_kind", "value"],
                  ((s.time, w.label, norm(s, w)) for s in snaps for w in norms))
    out.write_csv("chain.csv",
                  ["k", "xi", "tau_enter", "tau_exit", "gain", "dominant_before", "dominant_after", "handoff_ok"],
                  ((r.resonance_index, r.xi, r.interval[0], r.interval[1], r.gain, r.dominant_before,
                    r.dominant_after, r.handoff_ok) for r in run.trace))
    out.write_text("plot_simulate.py", _plot_script("simulate", '''
def main():
    rows = read("norms.csv")
    kinds = sorted({r["norm_kind"] for r in rows})
    for kind in kinds:
        sel = [r for r in rows if r["norm_kind"] == kind]
        plt.semilogy([float(r["tau"]) for r in sel], [float(r["value"]) for r in sel], "o-", label=kind)
    plt.xlabel("tau")
    plt.ylabel("norm")
    plt.legend()
    plt.savefig(HERE / "simulate.png", dpi=150)
'''))
    log.info("simulate: %d resonances, log total gain %.6g", len(run.trace), run.log_total_gain)


def cmd_scatter(cp, out: OutputSet, jobs: int):
    s = "scatter"
    cs = _get(cp, s, "c_list", _floats, [])
    xis = _get(cp, s, "xi_list", _floats, [])
    variants = _get(cp, s, "variants", _words, ["composed_two_mode", "composed_three_mode", "hypergeometric"])
    known = {"composed_two_mode", "composed_three_mode", "hypergeometric", "three_mode"}
    bad = set(variants) - known
    if bad:
        raise ConfigError(f"[scatter] unknown variants {sorted(bad)}")
    if any(x <= 1 for x in xis):
        raise ConfigError("[scatter] xi values must exceed 1")
    rows2, rows3 = [], []
    for c in cs:
        for xi in xis:
            for v in variants:
                if v == "three_mode":
                    m = three_mode_operator(c, xi)
                    sv = m.singular_values()
                    rows3.append([c, xi, v, *m.entries.ravel(), sv[0], sv[1], sv[2],
                                  math.log(sv[0]) / math.log(xi)])
                    continue
                if v == "hypergeometric":
                    m = hypergeom_scattering(c, xi)
                else:
                    m = composed_scattering(c, xi, v.replace("composed_", ""))
                sv = m.singular_values()
                rows2.append([c, xi, v, *m.entries.ravel(), sv[0], sv[1], math.log(sv[0]) / math.log(xi)])
    out.write_csv("scatter.csv", ["c", "xi", "variant", "m11", "m12", "m21", "m22", "sigma1", "sigma2",
                                  "exponent"], rows2)
    if "three_mode" in variants:
        out.write_csv("scatter_three_mode.csv",
                      ["c", "xi", "variant", "m11", "m12", "m13", "m21", "m22", "m23", "m31", "m32", "m33",
                       "sigma1", "sigma2", "sigma3", "exponent"], rows3)
    out.write_text("plot_scatter.py", _plot_script("scatter", '''
def main():
    rows = read("scatter.csv")
    for v in sorted({r["variant"] for r in rows}):
        sel = [r for r in rows if r["variant"] == v]
        plt.loglog([float(r["xi"]) for r in sel], [float(r["sigma1"]) for r in sel], "o-", label=v)
    plt.xlabel("xi")
    plt.ylabel("sigma1")
    plt.legend()
    plt.savefig(HERE / "scatter.png", dpi=150)
'''))


def _read_fit_csv(path: str):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except FileNotFoundError as exc:
        raise ConfigError(f"fit input not found: {path}") from exc
    if not rows or "xi" not in rows[0] or "gain" not in rows[0]:
        raise ConfigError("fit input needs a header with columns 'xi' and 'gain'")
    try:
        pts = [(float(r["xi"]), float(r["gain"])) for r in rows]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"fit input has non-numeric values: {exc}") from exc
    return pts


def _gain_task(args):
    c, xi, k0, cfg = args
    return resonance_gain(c, xi, k0, cfg)


def cmd_fit(cp, out: OutputSet, jobs: int, input_path: str | None = None):
    s = "fit"
    c = _get(cp, s, "c", float, None)
    if c is None and cp.has_option("model", "c"):
        c = _get(cp, "model", "c", float)
    src = input_path or _get(cp, s, "input", str, None)
    if src:
        pts = _read_fit_csv(src)
    else:
        xis = _get(cp, s, "xi_list", _floats, None)
        if xis is None or c is None:
            raise ConfigError("[fit] needs either 'input' or both 'c' and 'xi_list'")
        k0 = _get(cp, s, "k0", int, 5)
        cfg = integrator_config(cp)
        from .experiments import _pool_map
        gains = _pool_map(_gain_task, [(c, x, k0, cfg) for x in xis], jobs)
        pts = list(zip(xis, gains))
        out.write_csv("sweep.csv", ["xi", "gain"], pts)
    xs = [x for x, _ in pts]
    if len(set(xs)) != len(xs):
        raise ConfigError("fit input has duplicate xi rows")
    if len(pts) < 3:
        raise ConfigError(f"fit needs at least 3 rows, got {len(pts)}")
    try:
        fit = fit_exponent(pts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    summary = {"slope": fit.slope, "intercept": fit.intercept, "residual_rms": fit.residual_rms,
               "n_points": len(pts)}
    if c is not None:
        summary["c"] = c
        summary["candidate_distances"] = candidate_distances(fit.slope, c)
    out.write_json("fit.json", summary)


def _parse_init(raw: str) -> dict[int, complex]:
    out = {}
    for item in _words(raw):
        k, _, val = item.partition(":")
        out[int(k)] = complex(val.strip() or "1")
    return out


def cmd_oracle_check(cp, out: OutputSet, jobs: int):
    c, eta, _ = _model(cp, need_k0=False)
    s = "oracle"
    tau0 = _get(cp, s, "tau0", float, required=True)
    tau1 = _get(cp, s, "tau1", float, required=True)
    max_order = _get(cp, s, "max_order", int, 10)
    quad_tol = _get(cp, s, "quad_tol", float, 1e-10)
    k_min = _get(cp, s, "k_min", int, -2)
    k_max = _get(cp, s, "k_max", int, 8)
    init = _get(cp, s, "init", _parse_init, {})
    if tau1 < tau0:
        raise ConfigError("[oracle] needs tau0 <= tau1")
    p = ModelParams(c, eta, k_min, k_max)
    amps = np.zeros(p.size, dtype=complex)
    for k, v in init.items():
        if not k_min <= k <= k_max:
            raise ConfigError(f"[oracle] init mode {k} outside window")
        amps[k - k_min] = v
    state = ModeVector(tau0, amps, k_min, eta=eta)
    cfg = integrator_config(cp)
    try:
        d = duhamel_solve(state, tau1, p, max_order, quad_tol, record_paths=True)
    except OracleRefusal as exc:
        raise ConfigError(str(exc)) from exc
    e = evolve(state, tau1, p, cfg)
    scale = float(np.max(np.abs(e.final.amplitudes))) if amps.any() else 0.0
    integ = 10.0 * (cfg.rel_tol * scale + cfg.abs_tol) if amps.any() else 0.0
    bound = d.remainder_bound + d.quadrature_error + integ
    rows, worst = [], 0.0
    for k, a, b in zip(p.ks, d.state.amplitudes, e.final.amplitudes):
        disc = abs(a - b)
        worst = max(worst, disc)
        rows.append([k, a.real, a.imag, b.real, b.imag, disc, bound])
    out.write_csv("oracle.csv", ["k", "oracle_re", "oracle_im", "evolve_re", "evolve_im", "discrepancy",
                                 "bound"], rows)
    out.write_csv("paths.csv", ["path", "value_re", "value_im", "error"],
                  ((pth, v.real, v.imag, err) for pth, v, err in d.contributions))
    out.write_json("oracle.json", {"majorant_ratio": d.majorant_ratio, "remainder_bound": d.remainder_bound,
                                   "quadrature_error": d.quadrature_error, "integration_allowance": integ,
                                   "max_discrepancy": worst, "paths": d.paths_evaluated,
                                   "pass": bool(worst <= bound)})
    if worst > bound:
        return OracleMismatch(f"oracle discrepancy {worst:.3e} exceeds bound {bound:.3e}")
    return None


def cmd_scan(cp, out: OutputSet, jobs: int):
    c = _get(cp, "scan", "c", float, None) or _get(cp, "model", "c", float, required=True)
    etas = _get(cp, "scan", "eta_list", _floats, required=True)
    variant = _get(cp, "scan", "variant", str, "two_mode")
    norms = [parse_norm(x) for x in _get(cp, "scan", "norms", _words, ["L2"])]
    if not 0 < c < 0.2:
        raise ConfigError("c must lie in (0, 0.2)")
    if any(e < 1 for e in etas):
        raise ConfigError("[scan] eta values must be >= 1")
    rows = norm_inflation_scan(c, etas, norms, variant, integrator_config(cp), jobs)
    out.write_csv("scan.csv", ["eta", "k", "log_total_gain", "log_predicted", "ratio_sqrt_eta",
                               "handoff_failures", *[f"norm_{w.label}" for w in norms]],
                  ([r.eta, r.k, r.log_total_gain, r.log_predicted, r.ratio_sqrt_eta, r.handoff_failures,
                    *[r.final_norms[w.label] for w in norms]] for r in rows))
    out.write_text("plot_scan.py", _plot_script("scan", '''
def main():
    rows = read("scan.csv")
    plt.semilogx([float(r["eta"]) for r in rows], [float(r["ratio_sqrt_eta"]) for r in rows], "o-")
    plt.xlabel("eta")
    plt.ylabel("log(total gain)/sqrt(eta)")
    plt.savefig(HERE / "scan.png", dpi=150)
'''))


def cmd_demo_scattering(cp, out: OutputSet, jobs: int):
    s = "demo"
    c = _get(cp, s, "c", float, None) or _get(cp, "model", "c", float, required=True)
    sigma0 = _get(cp, s, "sigma0", float, 0.0)
    grid = _get(cp, s, "eta_grid", _floats, required=True)
    tau_final = _get(cp, s, "tau_final", float, 10.0)
    if not 0 < c < 0.2:
        raise ConfigError("c must lie in (0, 0.2)")
    r = modified_scattering_demo(c, sigma0, grid, cfg=integrator_config(cp), tau_final=tau_final, jobs=jobs)
    out.write_csv("demo_weights.csv", ["eta", "k", "g_re", "g_im", "weight", "cell_weight", "psi",
                                       "final_mode1_re", "final_mode1_im"],
                  ([e, k, g.real, g.imag, w, cw, ps, f.real, f.imag] for e, k, g, w, cw, ps, f in
                   zip(r.eta_grid, r.k_values, r.g_values, r.weights, r.cell_weights, r.psi_values,
                       r.final_mode1)))
    out.write_csv("demo_norms.csv", ["tau", "norm_kind", "value"],
                  ([tau, lab, v] for lab, hist in r.norm_histories.items() for tau, v in hist))
    out.write_csv("demo_cutoffs.csv", ["n_eta", "eta_cutoff", "norm_kind", "value"],
                  ([j + 1, r.eta_grid[j], lab, v] for lab, vals in r.cutoff_norms.items()
                   for j, v in enumerate(vals)))
    out.write_csv("demo_velocity.csv", ["t", "velocity_l2"], r.velocity_history)
    out.write_text("plot_demo_scattering.py", _plot_script("demo-scattering", '''
def main():
    rows = read("demo_velocity.csv")
    plt.semilogx([float(r["t"]) for r in rows], [float(r["velocity_l2"]) for r in rows], "o-")
    plt.xlabel("t")
    plt.ylabel("velocity l2")
    plt.savefig(HERE / "demo_velocity.png", dpi=150)
'''))


HANDLERS = {
    "simulate": cmd_simulate,
    "scatter": cmd_scatter,
    "oracle-check": cmd_oracle_check,
    "scan": cmd_scan,
    "demo-scattering": cmd_demo_scattering,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS, help="INI config file")
    common.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS,
                        help="output directory (ECHOLAB_OUT overrides)")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker processes")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="reserved; all algorithms are deterministic")
    common.add_argument("--log-level", default=argparse.SUPPRESS,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser = argparse.ArgumentParser(prog="echolab", parents=[common],
                                     description="Echo-chain simulator and verification toolkit.")
    parser.add_argument("--version", action="version", version=f"echolab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "fit":
            sp.add_argument("input", nargs="?", help="CSV with columns xi,gain")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    opts = vars(ns)
    logging.basicConfig(level=getattr(logging, opts.get("log_level", "WARNING")),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    out_dir = Path(os.environ.get("ECHOLAB_OUT") or opts.get("out") or "echolab-out")
    jobs = max(1, int(opts.get("jobs", 1)))
    seed = opts.get("seed", 0)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    try:
        cp = load_config(opts.get("config"))
    except ConfigError as exc:
        print(f"echolab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outputs = OutputSet(out_dir)
    status = EXIT_OK
    try:
        if ns.command == "fit":
            alarm = cmd_fit(cp, outputs, jobs, opts.get("input"))
        else:
            alarm = HANDLERS[ns.command](cp, outputs, jobs)
        if isinstance(alarm, OracleMismatch):
            print(f"echolab: oracle mismatch: {alarm}", file=sys.stderr)
            status = EXIT_MISMATCH
    except ConfigError as exc:
        outputs.discard()
        print(f"echolab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, SpecialFunctionError, ArithmeticError, np.linalg.LinAlgError) as exc:
        outputs.discard()
        print(f"echolab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        outputs.discard()
        print(f"echolab: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BaseException:
        outputs.discard()
        raise
    files = outputs.commit()
    write_manifest(out_dir, ns.command, ["echolab", *argv], cp, files, started, seed)
    return status


if __name__ == "__main__":
    sys.exit(main())
