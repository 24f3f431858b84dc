"""Command-line pipeline: generate spectra, analyze them, sweep ensembles.

Every file written gets a ``<file>.meta.json`` sidecar holding the complete
run configuration, and ``ergokit rerun <sidecar>`` regenerates the outputs
from it.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import classical as cl
from . import cyclic as cy
from . import errcoeff as ec
from . import io
from . import mixed as mx
from .errors import EmptySpectrumError, NumericError, ParameterError, SpectrumFormatError
from .spectra import Spectrum, generate, load_spectrum, sample_poisson, save_spectrum

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
KINDS = ("cue", "coe", "cse", "poisson", "torus", "picket")
# stream index reserved for the companion Poisson reference spectrum
POISSON_REF_STREAM = 1 << 62


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    generator: dict = field(default_factory=dict)
    cfg: dict = field(default_factory=lambda: {"t0": "auto", "q": "sorted"})
    p_range: dict = field(default_factory=dict)
    thresholds: list = field(default_factory=lambda: list(cy.DEFAULT_THRESHOLDS))
    seeds: dict = field(default_factory=lambda: {"master": 0, "count": 1})
    outdir: str = "."
    format: str = "csv"
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        rc = cls(**known)
        rc.validate()
        return rc

    def validate(self) -> None:
        if self.subcommand not in ("gen", "analyze", "sweep", "classical", "mixed", "bound"):
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if self.format not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        g = self.generator
        if self.subcommand in ("gen", "analyze", "sweep") and "input" not in g:
            kind = g.get("kind")
            if kind not in KINDS:
                raise UsageError(f"unknown kind {kind!r}; choose from {', '.join(KINDS)}")
            if kind == "torus":
                if not g.get("omega") or g.get("L1") is None or g.get("L2") is None:
                    raise UsageError("torus needs --omega, --L1 and --L2")
            elif not g.get("d") or int(g["d"]) < 1:
                raise UsageError(f"{kind} needs --d >= 1")
        if self.subcommand == "sweep" and ("input" in g or g.get("kind") in ("torus", "picket")):
            raise UsageError("sweep needs a seeded random generator")
        if self.subcommand in ("sweep", "mixed") and int(self.seeds.get("count", 0)) < 1:
            raise UsageError("count/trials must be >= 1")
        if len(self.thresholds) != 3 or any(not (float(c) > 0) for c in self.thresholds):
            raise UsageError("thresholds must be three positive numbers c_e,c_a,c_r")
        t0 = self.cfg.get("t0", "auto")
        if t0 != "auto" and not (isinstance(t0, (int, float)) and t0 > 0):
            raise UsageError("--t0 must be 'auto' or a positive number")


# argument parsing helpers


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _t0(text: str):
    if text == "auto":
        return "auto"
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("t0 must be 'auto' or a number") from None
    return v


_NAMED = {"sqrt2": math.sqrt(2), "golden": (1 + math.sqrt(5)) / 2, "pi": math.pi, "e": math.e}


def parse_alpha(text: str) -> float:
    t = text.strip().lower().replace("(", "").replace(")", "")
    if t in _NAMED:
        return _NAMED[t]
    if t.startswith("sqrt"):
        return math.sqrt(float(t[4:]))
    try:
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse alpha {text!r}") from None


def _omega(text: str) -> list[float]:
    return [parse_alpha(x) for x in text.split(",")]


def _add_generator_args(p: argparse.ArgumentParser, need_kind: bool = True) -> None:
    p.add_argument("--kind", required=need_kind, help="cue, coe, cse, poisson, torus or picket")
    p.add_argument("--d", type=int, help="number of levels")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--omega", type=_omega, help="torus frequencies wx,wy (names like sqrt2 allowed)")
    p.add_argument("--L1", type=float)
    p.add_argument("--L2", type=float)
    p.add_argument("--spacing", type=float, default=1.0, help="picket-fence spacing")


def _add_threads(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker cap (falls back to ERGOKIT_THREADS)")


def _add_common(p: argparse.ArgumentParser) -> None:
    _add_threads(p)
    p.add_argument("--outdir", default=".")
    p.add_argument("--format", default="csv", choices=("csv", "json"))


def _add_cfg_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t0", type=_t0, default="auto", help="'auto' (Heisenberg) or a value")
    p.add_argument("--q", default="sorted", help="sorted, identity or a file of indices")
    p.add_argument("--thresholds", type=_floats, default=list(cy.DEFAULT_THRESHOLDS), help="c_e,c_a,c_r")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ergokit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ergokit {__version__}")
    ap.add_argument("--threads", type=int, default=None, help="worker cap (falls back to ERGOKIT_THREADS)")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    g = sub.add_parser("gen", help="write a spectrum file")
    _add_generator_args(g)
    _add_common(g)
    g.add_argument("--out", help="output path (default: <outdir>/<kind>.txt)")

    a = sub.add_parser("analyze", help="persistence, SFF, modes, spacings and verdicts")
    _add_generator_args(a, need_kind=False)
    a.add_argument("--input", help="spectrum file instead of a generator")
    _add_common(a)
    _add_cfg_args(a)
    a.add_argument("--p-max", type=int, help="largest |p| (default 2d)")
    a.add_argument("--t-max", type=float, help="SFF range (default 2 d t0)")
    a.add_argument("--t-count", type=int, default=4096)
    a.add_argument("--bins", type=int, default=50)
    a.add_argument("--plot", action="store_true", help="also render PNG figures")

    s = sub.add_parser("sweep", help="ensemble statistics over seeds")
    _add_generator_args(s)
    _add_common(s)
    _add_cfg_args(s)
    s.add_argument("--count", type=int, default=20)

    c = sub.add_parser("classical", help="rotation and torus cyclic permutations")
    c.add_argument("--alpha", type=parse_alpha, required=True)
    c.add_argument("--convergents", type=int, default=6)
    c.add_argument("--max-n", type=int, default=40000, help="skip torus constructions above this size")
    _add_common(c)

    m = sub.add_parser("mixed", help="random checks of the pure-from-mixed bound")
    m.add_argument("--d", type=int, required=True)
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--trials", type=int, required=True)
    m.add_argument("--seed", type=int, default=0)
    _add_common(m)

    b = sub.add_parser("bound", help="minimum one-step error from a power-law SFF")
    b.add_argument("--lam", type=float, required=True)
    b.add_argument("--gamma", type=float, required=True)
    b.add_argument("--t0", type=float, default=1.0)
    b.add_argument("--M", type=float, default=1.0)
    b.add_argument("--d", type=int, help="also tabulate rigidity targets at this d")
    _add_common(b)

    r = sub.add_parser("rerun", help="regenerate outputs from a sidecar")
    r.add_argument("sidecar")
    r.add_argument("--outdir", help="write to a different directory")
    _add_threads(r)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    sc = ns.subcommand
    rc = RunConfig(subcommand=sc, outdir=ns.outdir, format=ns.format)
    if sc in ("gen", "analyze", "sweep"):
        if sc == "analyze" and ns.input:
            rc.generator = {"input": ns.input}
        else:
            kind = (ns.kind or "").lower()
            gen = {"kind": kind, "seed": ns.seed, "stream": ns.stream}
            if kind == "torus":
                if ns.omega and len(ns.omega) != 2:
                    raise UsageError("--omega needs two values")
                gen.update(omega=ns.omega, L1=ns.L1, L2=ns.L2)
            else:
                gen["d"] = ns.d
                if kind == "picket":
                    gen["spacing"] = ns.spacing
            rc.generator = gen
    if sc in ("analyze", "sweep"):
        rc.cfg = {"t0": ns.t0, "q": ns.q}
        rc.thresholds = list(ns.thresholds)
    if sc == "gen":
        rc.options = {"out": ns.out}
    elif sc == "analyze":
        rc.p_range = {"p_max": ns.p_max, "t_max": ns.t_max, "t_count": ns.t_count}
        rc.options = {"bins": ns.bins, "plot": bool(ns.plot)}
    elif sc == "sweep":
        rc.seeds = {"master": ns.seed, "count": ns.count}
    elif sc == "classical":
        rc.options = {"alpha": ns.alpha, "convergents": ns.convergents, "max_n": ns.max_n}
    elif sc == "mixed":
        rc.seeds = {"master": ns.seed, "count": ns.trials}
        rc.options = {"d": ns.d, "n": ns.n}
    elif sc == "bound":
        rc.options = {"lam": ns.lam, "gamma": ns.gamma, "t0": ns.t0, "M": ns.M, "d": ns.d}
    rc.validate()
    return rc


# execution


def resolve_threads(flag: int | None) -> int:
    if flag is not None:
        n = flag
    else:
        env = os.environ.get("ERGOKIT_THREADS")
        try:
            n = int(env) if env else (os.cpu_count() or 1)
        except ValueError:
            raise UsageError(f"ERGOKIT_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


def _spectrum(gen: dict, seed: int | None = None, stream: int | None = None) -> Spectrum:
    if "input" in gen:
        return load_spectrum(gen["input"])
    kw = dict(gen)
    kind = kw.pop("kind")
    kw["seed"] = kw.get("seed", 0) if seed is None else seed
    kw["stream"] = kw.get("stream", 0) if stream is None else stream
    return generate(kind, **kw)


def _cfg(s: Spectrum, cfg: dict) -> cy.CyclicConfig:
    t0 = None if cfg.get("t0", "auto") == "auto" else float(cfg["t0"])
    qmode = cfg.get("q", "sorted")
    if qmode == "sorted":
        q = None
    elif qmode == "identity":
        q = np.arange(s.d)
    else:
        try:
            q = np.loadtxt(qmode, dtype=np.int64, comments="#", ndmin=1)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read permutation file {qmode!r}: {exc}") from None
    return cy.CyclicConfig.for_spectrum(s, t0=t0, q=q)


class Writer:
    """Writes tables in the requested format, each with a sidecar."""

    def __init__(self, rc: RunConfig, outdir: Path):
        self.rc = rc
        self.outdir = outdir
        self.written: list[Path] = []
        outdir.mkdir(parents=True, exist_ok=True)

    def table(self, stem: str, header, columns) -> Path:
        if self.rc.format == "json":
            path = io.write_json(self.outdir / f"{stem}.json", {h: list(c) for h, c in zip(header, columns)})
        else:
            path = io.write_csv(self.outdir / f"{stem}.csv", header, columns)
        return self._done(path)

    def json(self, name: str, obj) -> Path:
        return self._done(io.write_json(self.outdir / name, obj))

    def file(self, path: Path) -> Path:
        return self._done(path)

    def _done(self, path: Path) -> Path:
        io.write_sidecar(path, self.rc.to_dict())
        self.written.append(path)
        return path


def run_gen(rc: RunConfig, w: Writer, threads: int) -> str:
    s = _spectrum(rc.generator)
    out = rc.options.get("out")
    path = Path(out) if out else w.outdir / f"{rc.generator['kind']}.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    save_spectrum(s, path)
    side = io.sidecar_for(path)
    meta = io.read_sidecar(side)
    meta.update({"tool": "ergokit", "version": __version__, "file": path.name, "run_config": rc.to_dict()})
    io.write_json(side, meta)
    w.written.append(path)
    return f"wrote {s.d} levels to {path}"


def _analysis(s: Spectrum, rc: RunConfig):
    cfg = _cfg(s, rc.cfg)
    rep = cy.classify(s, cfg, tuple(float(c) for c in rc.thresholds))
    return cfg, rep


def run_analyze(rc: RunConfig, w: Writer, threads: int) -> str:
    s = _spectrum(rc.generator)
    if s.d < 2:
        raise ParameterError("analysis needs d >= 2")
    cfg, rep = _analysis(s, rc)
    d = s.d
    p_max = rc.p_range.get("p_max") or 2 * d
    ps = np.arange(-p_max, p_max + 1)
    ser = cy.persistence(s, cfg, ps)
    eps1 = rep.eps1
    bound = cy.persistence_lower_bound(eps1, ps)
    gauss = ec.gaussian_estimate(eps1, ps) if eps1 < 1 else np.zeros(ps.size)
    w.table("persistence", ["p", "z", "z2", "eps", "bound", "gaussian"], [ps, ser.z, ser.z2, ser.eps, bound, gauss])

    ref = sample_poisson(d, int(rc.generator.get("seed", 0)), stream=POISSON_REF_STREAM)
    zr = cy.persistence(ref, cy.CyclicConfig.for_spectrum(ref), ps).z2
    w.table("poisson_ref", ["p", "z2"], [ps, zr])

    t_max = rc.p_range.get("t_max") or 2 * d * cfg.t0
    tc = int(rc.p_range.get("t_count") or 4096)
    ts = np.linspace(0.0, t_max, tc)
    K = cy.sff(s, ts)
    w.table("sff", ["t", "K"], [ts, K])

    delta = cy.mode_fluctuations(s, cfg)
    n = np.arange(d)
    w.table("modes", ["n", "delta"], [n, delta])

    h = cy.spacing_histogram(s, int(rc.options.get("bins", 50)))
    e = h.edges
    w.table("spacings", ["s_lo", "s_hi", "density", "poisson", "goe", "gue", "gse"],
            [e[:-1], e[1:], h.density, h.reference["poisson"], h.reference["goe"], h.reference["gue"], h.reference["gse"]])

    pol = cy.polar_trajectory(s, cfg, p_max)
    w.table("polar", ["theta", "r"], [pol[:, 0], pol[:, 1]])

    report = rep.to_dict()
    report["spectrum"] = {"d": d, "kind": s.kind, "meta": {k: v for k, v in s.meta.items() if k not in ("original_order", "run_config", "tool", "version")}}
    w.json("report.json", report)

    if rc.options.get("plot"):
        from . import plotting

        pos = ps >= 0
        w.file(plotting.plot_persistence(w.outdir / "persistence.png", ps[pos], ser.z2[pos], bound[pos], gauss[pos], d, zr[pos], rep.t_R))
        w.file(plotting.plot_sff(w.outdir / "sff.png", ts, K, d))
        w.file(plotting.plot_modes(w.outdir / "modes.png", n, delta))
        w.file(plotting.plot_spacings(w.outdir / "spacings.png", e, h.density, h.reference))
        w.file(plotting.plot_polar(w.outdir / "polar.png", pol[:, 0], pol[:, 1]))

    kind = "quasiperiodic" if rep.quasiperiodic else ("ergodic+aperiodic" if rep.aperiodic else ("ergodic" if rep.ergodic else "not ergodic"))
    return f"d={d} t0={cfg.t0:.6g} eps1={eps1:.4g} sigma2={rep.sigma2:.4g} t_R={rep.t_R} -> {kind}"


def sweep_rows(rc: RunConfig, threads: int) -> list[dict]:
    master = int(rc.seeds["master"])
    count = int(rc.seeds["count"])

    def one(i: int) -> dict:
        s = _spectrum(rc.generator, seed=master, stream=i)
        _, rep = _analysis(s, rc)
        return {"index": i, "seed": master, "stream": i, "sigma2": rep.sigma2, "eps1": rep.eps1,
                "t_R": rep.t_R, "ergodic": rep.ergodic, "aperiodic": rep.aperiodic, "quasiperiodic": rep.quasiperiodic}

    if threads == 1 or count == 1:
        return [one(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(one, range(count)))


def run_sweep(rc: RunConfig, w: Writer, threads: int) -> str:
    rows = sweep_rows(rc, threads)
    keys = ["index", "seed", "stream", "sigma2", "eps1", "t_R", "ergodic", "aperiodic", "quasiperiodic"]
    w.table("sweep", keys, [[r[k] for r in rows] for k in keys])
    summary = {"count": len(rows)}
    for k in ("sigma2", "eps1", "t_R"):
        v = np.array([np.nan if r[k] is None else r[k] for r in rows], dtype=float)
        summary[k] = {"mean": float(np.nanmean(v)) if np.any(np.isfinite(v)) else None,
                      "std": float(np.nanstd(v)) if np.any(np.isfinite(v)) else None,
                      "missing": int(np.sum(~np.isfinite(v)))}
    for k in ("ergodic", "aperiodic", "quasiperiodic"):
        summary[f"{k}_fraction"] = float(np.mean([r[k] for r in rows]))
    summary["thresholds"] = list(rc.thresholds)
    w.json("sweep_summary.json", summary)
    return f"{len(rows)} realizations: mean sigma2={summary['sigma2']['mean']:.4g}, ergodic fraction={summary['ergodic_fraction']:.3g}"


def run_classical(rc: RunConfig, w: Writer, threads: int) -> str:
    alpha = float(rc.options["alpha"])
    k = int(rc.options.get("convergents", 6))
    if k < 1:
        raise UsageError("--convergents must be >= 1")
    conv = cl.convergents(alpha, k)
    rot_rows, tor_rows = [], []
    for c in conv:
        q = c.denominator
        r = cl.rotation_cyclic_permutation(alpha, q)
        rot_rows.append((q, r.p, r.epsbar, r.epsbar * q, r.closed_form))
        if q > 1 and q * q <= int(rc.options.get("max_n", 40000)):
            tp = cl.torus_cyclic_permutation(alpha, q, q)
            tor_rows.append({"q": q, "n": tp.n, "epsbar": tp.epsbar, "n_epsbar": tp.n * tp.epsbar})
    cols = list(zip(*rot_rows))
    w.table("classical_rotation", ["q", "p", "epsbar", "epsbar_q", "closed_form"], cols)
    if tor_rows:
        w.table("classical_torus", ["q", "n", "epsbar", "n_epsbar"], [[r[x] for r in tor_rows] for x in ("q", "n", "epsbar", "n_epsbar")])
    expo = cl.error_exponent(tor_rows) if len(tor_rows) >= 2 else None
    summary = {"alpha": alpha, "convergents": [f"{c.numerator}/{c.denominator}" for c in conv],
               "max_n_epsbar": max((r["n_epsbar"] for r in tor_rows), default=None),
               "measured_exponent": expo}
    w.json("classical_summary.json", summary)
    return f"{len(rot_rows)} convergents; torus max n*epsbar={summary['max_n_epsbar']}; exponent={expo}"


def run_mixed(rc: RunConfig, w: Writer, threads: int) -> str:
    d, n = int(rc.options["d"]), int(rc.options["n"])
    trials = int(rc.seeds["count"])
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    if not 1 <= n <= d:
        raise UsageError("need 1 <= n <= d")
    master = int(rc.seeds["master"])
    cols = {k: [] for k in ("trial", "k", "P", "R", "bound", "margin")}
    viol = 0
    worst = math.inf
    for t in range(trials):
        U, part, tm = mx.random_instance(d, n, master, stream=t)
        rep = mx.verify_mixed_theorem(U, part, tm)
        viol += rep.violations
        worst = min(worst, float(rep.margin.min()))
        for k in range(n):
            cols["trial"].append(t)
            cols["k"].append(k)
            cols["P"].append(rep.P[k])
            cols["R"].append(rep.R[k])
            cols["bound"].append(rep.bound[k])
            cols["margin"].append(rep.margin[k])
    w.table("mixed", list(cols), list(cols.values()))
    w.json("mixed_summary.json", {"d": d, "n": n, "trials": trials, "violations": viol, "min_margin": worst})
    if viol:
        raise NumericError(f"{viol} violations of the pure-from-mixed bound")
    return f"{trials} trials, {viol} violations, min margin {worst:.3g}"


def run_bound(rc: RunConfig, w: Writer, threads: int) -> str:
    o = rc.options
    fit = ec.SffFit(float(o["lam"]), float(o["gamma"]), float(o["t0"]), float(o["M"]))
    val = ec.min_error_bound(fit)
    out = {"lam": fit.lam, "gamma": fit.gamma, "t0": fit.t0, "M": fit.M, "min_eps1": val}
    if o.get("d"):
        out["rigidity_targets"] = ec.rigidity_targets(int(o["d"]))
    w.json("bound.json", out)
    return f"eps_C(1) >~ {val:.6g}"


RUNNERS = {"gen": run_gen, "analyze": run_analyze, "sweep": run_sweep, "classical": run_classical, "mixed": run_mixed, "bound": run_bound}


def execute(rc: RunConfig, threads: int = 1) -> tuple[str, list[Path]]:
    w = Writer(rc, Path(rc.outdir))
    msg = RUNNERS[rc.subcommand](rc, w, threads)
    return msg, w.written


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        threads = resolve_threads(ns.threads)
        if ns.subcommand == "rerun":
            meta = io.read_sidecar(ns.sidecar)
            if "run_config" not in meta:
                raise UsageError(f"{ns.sidecar} has no run_config")
            rc = RunConfig.from_dict(meta["run_config"])
            if ns.outdir:
                rc.outdir = ns.outdir
                if rc.subcommand == "gen" and rc.options.get("out"):
                    rc.options = dict(rc.options, out=str(Path(ns.outdir) / Path(rc.options["out"]).name))
        else:
            rc = config_from_args(ns)
        msg, _ = execute(rc, threads)
    except (UsageError, ParameterError, SpectrumFormatError, EmptySpectrumError, FileNotFoundError, KeyError) as exc:
        print(f"ergokit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"ergokit: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(msg)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
