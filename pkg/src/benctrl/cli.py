"""Command-line front end: scenario files, experiments, CSV/JSON emission.

A scenario is a JSON file with explicit keys (flags override file values);
every run writes a ``report.json`` plus experiment CSVs into the output
directory.  All randomness flows from one 64-bit seed through NumPy's PCG64
generator, and reports are canonical JSON (sorted keys, shortest round-trip
float repr, no timestamps), so identical scenario + seed reproduces
byte-identical reports.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import moment_control as mc
from . import spectrum as spectrum_mod
from . import stabilization as stab
from .errors import BenctrlError, ConfigurationError
from .operators import (apply_G, build_bump, bump_from_coefficients,
                        evolve_free, m_matrix)
from .spectral import TorusFunction, mean, sobolev_norm

SCHEMA_VERSION = 1

EXPERIMENTS = ("spectrum", "simulate", "control", "stabilize", "observability")


def _parse_number(value):
    """Accept floats or exact-rational strings like '7/3'."""
    if isinstance(value, str) and "/" in value:
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value) if value.isdigit() else float(value)
    return value


@dataclass
class Scenario:
    """Validated experiment description (see README for the grammar)."""

    experiment: str = "spectrum"
    alpha: object = 1.0            # float or Fraction
    mu: object = 0.0
    n: int = 16
    n_sim: int | None = None
    T: float = 1.0
    s: float = 0.0
    bump: dict = field(default_factory=lambda: {
        "kind": "raised_cosine", "center": float(np.pi),
        "width": float(np.pi / 2)})
    u0: dict = field(default_factory=lambda: {"type": "random", "norm": 1.0})
    u1: dict = field(default_factory=lambda: {"type": "random", "norm": 1.0})
    law: str = "simple"            # stabilize: simple | gramian
    decay_lambda: float = 1.0      # stabilize: requested rate for gramian law
    t_final: float | None = None   # stabilize/simulate horizon (auto if None)
    n_times: int = 120
    T_list: tuple = (0.01, 0.1, 1.0)   # observability horizons
    strict: bool = False           # control: error out on singular Gram
    seed: int = 0
    outdir: str = "out"

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(
                f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if float(self.alpha) <= 0:
            raise ConfigurationError("alpha must be positive")
        if self.T <= 0:
            raise ConfigurationError("T must be positive")
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if self.s < 0:
            raise ConfigurationError("s must be >= 0")
        if self.n_sim is not None and self.n_sim < self.n:
            raise ConfigurationError("n_sim must be >= n")
        if self.law not in ("simple", "gramian"):
            raise ConfigurationError("law must be 'simple' or 'gramian'")
        if self.law == "gramian" and self.decay_lambda <= 0:
            raise ConfigurationError("decay_lambda must be positive")
        return self

    def canonical(self) -> dict:
        d = dataclasses.asdict(self)
        d["alpha"] = str(self.alpha) if isinstance(self.alpha, Fraction) \
            else float(self.alpha)
        d["mu"] = str(self.mu) if isinstance(self.mu, Fraction) else float(self.mu)
        d["T_list"] = list(self.T_list)
        return d

    def digest(self) -> str:
        ident = {k: v for k, v in self.canonical().items() if k != "outdir"}
        text = json.dumps(ident, sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def load_scenario(path=None, overrides=None) -> Scenario:
    data = {}
    if path is not None:
        with open(path) as fh:
            data = json.load(fh)
    if overrides:
        for key, val in overrides.items():
            if val is not None:
                data[key] = val
    known = {f.name for f in dataclasses.fields(Scenario)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown scenario keys: {sorted(unknown)}")
    for key in ("alpha", "mu"):
        if key in data:
            data[key] = _parse_number(data[key])
    if "T_list" in data:
        data["T_list"] = tuple(float(v) for v in data["T_list"])
    return Scenario(**data).validate()


# -- deterministic state generation ------------------------------------------


def random_state(seed: int, n: int, s: float, norm: float = 1.0) -> TorusFunction:
    """Seeded real mean-zero state with coefficients ~ (1+|k|)^{-s-1}.

    Scaled so that the H^s norm equals ``norm`` exactly (to rounding).
    Determinism: NumPy PCG64 seeded with ``seed``.
    """
    rng = np.random.default_rng(seed)
    c = np.zeros(2 * n + 1, dtype=complex)
    for k in range(1, n + 1):
        z = (rng.standard_normal() + 1j * rng.standard_normal()) \
            * (1.0 + k) ** (-s - 1.0)
        c[n + k] = z
        c[n - k] = np.conj(z)
    f = TorusFunction(n, c, real_flag=True)
    current = sobolev_norm(f, s)
    return f.with_coeffs(f.coeffs * (norm / current))


def _state_from_config(cfg: dict, n: int, s: float, seed: int) -> TorusFunction:
    kind = cfg.get("type", "random")
    if kind == "random":
        return random_state(seed, n, s, float(cfg.get("norm", 1.0)))
    if kind == "zero":
        return TorusFunction.zero(n)
    if kind == "preset":
        name = cfg.get("name", "cos")
        c = np.zeros(2 * n + 1, dtype=complex)
        if name == "cos":
            c[n + 1] = 0.5
            c[n - 1] = 0.5
        elif name == "sin":
            c[n + 1] = -0.5j
            c[n - 1] = 0.5j
        else:
            raise ConfigurationError(f"unknown preset {name!r}")
        return TorusFunction(n, c, real_flag=True)
    if kind == "coeffs":
        c = np.zeros(2 * n + 1, dtype=complex)
        for k, re, im in cfg["data"]:
            if abs(int(k)) > n:
                raise ConfigurationError(f"coefficient index {k} beyond n={n}")
            c[int(k) + n] = re + 1j * im
        return TorusFunction(n, c, real_flag=bool(cfg.get("real", False)))
    raise ConfigurationError(f"unknown state type {kind!r}")


def _build_bump(scn: Scenario):
    cfg = scn.bump
    if "coefficients" in cfg:
        ghat = np.array([re + 1j * im for _, re, im in cfg["coefficients"]])
        return bump_from_coefficients(ghat)
    return build_bump(kind=cfg.get("kind", "raised_cosine"),
                      center=float(cfg.get("center", np.pi)),
                      width=float(cfg.get("width", np.pi / 2)),
                      kmax=2 * scn.n)


# -- report/CSV emission -----------------------------------------------------


def _write_report(outdir: Path, payload: dict, scn: Scenario) -> Path:
    payload = dict(payload)
    payload["schema_version"] = SCHEMA_VERSION
    payload["provenance"] = {
        "toolkit": "benctrl",
        "version": __version__,
        "scenario_hash": scn.digest(),
        "seed": scn.seed,
    }
    path = outdir / "report.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# -- experiments -------------------------------------------------------------


def _run_spectrum(scn: Scenario, outdir: Path) -> dict:
    spec = spectrum_mod.analyze(scn.n, scn.alpha, scn.mu)
    return spectrum_mod.spectrum_report(spec)


def _run_simulate(scn: Scenario, outdir: Path) -> dict:
    u0 = _state_from_config(scn.u0, scn.n, scn.s, scn.seed)
    t_final = scn.t_final if scn.t_final is not None else scn.T
    times = np.linspace(0.0, t_final, scn.n_times)
    rows = []
    for t in times:
        u = evolve_free(u0, float(t), scn.alpha, scn.mu)
        rows.append((t, sobolev_norm(u, 0.0), sobolev_norm(u, scn.s)))
    _write_csv(outdir / "norms.csv", "t,L2_norm,Hs_norm", rows)
    u_end = evolve_free(u0, float(times[-1]), scn.alpha, scn.mu)
    drift = abs(sobolev_norm(u_end, scn.s) - sobolev_norm(u0, scn.s))
    return {
        "experiment": "simulate",
        "t_final": float(times[-1]),
        "norm_drift": drift,
        "mean_drift": abs(complex(mean(u_end)) - complex(mean(u0))),
    }


def _run_control(scn: Scenario, outdir: Path) -> dict:
    bump = _build_bump(scn)
    u0 = _state_from_config(scn.u0, scn.n, scn.s, scn.seed)
    u1 = _state_from_config(scn.u1, scn.n, scn.s, scn.seed + 1)
    # the shared mean rides along in mode 0 (feedback/control never touch it);
    # recorded so downstream tools can re-add it after mean-zero analysis
    mu0 = complex(mean(u0))
    problem = mc.ControlProblem(float(scn.alpha), float(scn.mu), scn.T, scn.s,
                                scn.n, bump, u0, u1)
    result = mc.synthesize_control(
        problem, on_singular="error" if scn.strict else "lstsq")
    hum_signal, hum_info = mc.hum_control(problem, result.spectrum,
                                          result.mmatrix)
    hum_res = mc.terminal_residual(problem, hum_signal, result.mmatrix)

    # oversampled diagnostic: mass of G(h) in modes n < |k| <= n_sim that the
    # (2n+1)-truncated simulation never sees, relative to |Gh|
    spillover = None
    if scn.n_sim and scn.n_sim > scn.n and "coefficients" not in scn.bump:
        fine = build_bump(kind=scn.bump.get("kind", "raised_cosine"),
                          center=float(scn.bump.get("center", np.pi)),
                          width=float(scn.bump.get("width", np.pi / 2)),
                          kmax=scn.n_sim + scn.n)
        spillover = 0.0
        for t in np.linspace(0.0, scn.T, 9):
            h_t = result.signal.at_time(float(t))
            gh, dropped = apply_G(fine, h_t, out_n=scn.n,
                                  return_spillover=True)
            base = sobolev_norm(gh, 0.0)
            if base > 0:
                spillover = max(spillover, dropped / base)

    # per-mode coefficient JSON + sampled control CSV
    coeff_payload = {
        "lambdas": [float(v) for v in result.signal.lambdas],
        "modes": [
            {"k": int(k), "coeffs": [[float(z.real), float(z.imag)]
                                     for z in row]}
            for k, row in zip(range(-scn.n, scn.n + 1),
                              result.signal.exp_coeffs)
        ],
    }
    with open(outdir / "control_coeffs.json", "w") as fh:
        json.dump(coeff_payload, fh, sort_keys=True)
    xs = np.linspace(0.0, 2 * np.pi, 65, endpoint=False)
    ts = np.linspace(0.0, scn.T, 33)
    vals = result.signal.sample_grid(xs, ts)
    with open(outdir / "control_samples.csv", "w") as fh:
        fh.write("t,x,h_re,h_im\n")
        for i, t in enumerate(ts):
            for j, x in enumerate(xs):
                fh.write(f"{float(t)!r},{float(x)!r},"
                         f"{vals[i, j].real!r},{vals[i, j].imag!r}\n")
    return {
        "experiment": "control",
        "terminal_residual": result.terminal_residual,
        "moment_residual": result.moment_residual,
        "nu_empirical": result.nu_empirical,
        "cond_gamma": result.cond_gamma,
        "control_norm": result.control_norm,
        "hermitian_defect": result.signal.hermitian_defect(),
        "spillover_beyond_n": spillover,
        "mean_carried": [mu0.real, mu0.imag],
        "hum": {"terminal_residual": hum_res,
                "control_norm": hum_signal.l2_hs_norm(0.0),
                "cond_W": hum_info["cond_W"]},
    }


def _run_stabilize(scn: Scenario, outdir: Path) -> dict:
    bump = _build_bump(scn)
    spec = spectrum_mod.analyze(scn.n, scn.alpha, scn.mu)
    mm = m_matrix(bump, scn.n)
    if scn.law == "simple":
        law = stab.feedback_simple(mm, spec)
    else:
        L = stab.build_L_lambda(mm, spec, scn.decay_lambda, scn.T)
        law = stab.feedback_gramian(L, mm, spec)
    absc = stab.spectral_abscissa(law)
    u0 = _state_from_config(scn.u0, scn.n, scn.s, scn.seed)
    t_final = scn.t_final if scn.t_final is not None else \
        min(12.0 / max(abs(absc), 1e-6), 1e6)
    times = np.linspace(0.0, t_final, scn.n_times)
    hist = stab.norm_history(u0, law, times, s_values=(0.0, scn.s))
    _write_csv(outdir / "decay.csv", "t,L2_norm,Hs_norm",
               zip(hist["times"], hist[0.0], hist[scn.s]))
    fitobj = stab.estimate_decay_rate(hist["times"], hist[0.0])
    delta, _ = stab.observability_constant(mm, spec, scn.T)
    return {
        "experiment": "stabilize",
        "law": scn.law,
        "lambda": scn.decay_lambda if scn.law == "gramian" else 0.0,
        "fitted_rate": fitobj.rate,
        "M": fitobj.M,
        "r2": fitobj.r2,
        "spectral_abscissa": absc,
        "delta": delta,
        "t_final": float(t_final),
    }


def _run_observability(scn: Scenario, outdir: Path) -> dict:
    bump = _build_bump(scn)
    spec = spectrum_mod.analyze(scn.n, scn.alpha, scn.mu)
    mm = m_matrix(bump, scn.n)
    pairs = []
    for T in scn.T_list:
        delta, _ = stab.observability_constant(mm, spec, float(T))
        pairs.append({"T": float(T), "delta": delta})
    return {"experiment": "observability", "pairs": pairs}


_RUNNERS = {
    "spectrum": _run_spectrum,
    "simulate": _run_simulate,
    "control": _run_control,
    "stabilize": _run_stabilize,
    "observability": _run_observability,
}


def run(scn: Scenario) -> int:
    """Dispatch a validated scenario; returns the process exit code."""
    outdir = Path(scn.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        payload = _RUNNERS[scn.experiment](scn, outdir)
    except ConfigurationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except BenctrlError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    path = _write_report(outdir, payload, scn)
    print(path)
    return 0


def _run_sweep_entry(args):
    base, item, index = args
    merged = dict(base)
    merged.update(item)
    if "seed" not in item:
        merged["seed"] = int(base.get("seed", 0)) + index
    merged["outdir"] = str(Path(base.get("outdir", "out")) / f"case_{index:03d}")
    scn = load_scenario(None, merged)
    return run(scn)


def run_sweep(path, workers: int | None = None) -> int:
    """Fan independent scenarios out across processes.

    The sweep file holds a base scenario plus a ``sweep`` list of overrides;
    case i runs with seed base_seed + i unless the override pins one.
    """
    with open(path) as fh:
        data = json.load(fh)
    cases = data.pop("sweep", None)
    if not cases:
        raise ConfigurationError("sweep file needs a non-empty 'sweep' list")
    jobs = [(data, item, i) for i, item in enumerate(cases)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        codes = list(ex.map(_run_sweep_entry, jobs))
    return max(codes)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="benctrl",
        description="spectral control toolkit for the linearized Benjamin "
                    "equation on the torus")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--scenario", help="JSON scenario file")
        p.add_argument("--alpha", type=str)
        p.add_argument("--mu", type=str)
        p.add_argument("--n", type=int)
        p.add_argument("--T", type=float)
        p.add_argument("--s", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--outdir", type=str)

    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        add_common(p)
        if name == "stabilize":
            p.add_argument("--law", choices=("simple", "gramian"))
            p.add_argument("--lambda", dest="decay_lambda", type=float)
            p.add_argument("--t-final", dest="t_final", type=float)
        if name == "observability":
            p.add_argument("--T-list", dest="T_list", type=float, nargs="+")

    p = sub.add_parser("sweep")
    p.add_argument("scenario", help="JSON sweep file")
    p.add_argument("--workers", type=int, default=None)

    args = parser.parse_args(argv)
    if args.command == "sweep":
        try:
            return run_sweep(args.scenario, args.workers)
        except (ConfigurationError, OSError, json.JSONDecodeError) as exc:
            print(f"validation error: {exc}", file=sys.stderr)
            return 2

    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "scenario") and v is not None}
    overrides["experiment"] = args.command
    if "alpha" in overrides:
        overrides["alpha"] = _parse_number(overrides["alpha"])
    if "mu" in overrides:
        overrides["mu"] = _parse_number(overrides["mu"])
    if "T_list" in overrides:
        overrides["T_list"] = tuple(overrides["T_list"])
    try:
        scn = load_scenario(args.scenario, overrides)
    except (ConfigurationError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    return run(scn)


if __name__ == "__main__":
    sys.exit(main())
