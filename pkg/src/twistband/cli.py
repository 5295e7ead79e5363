"""Batch front door: parse a run configuration, orchestrate, emit reports.

Configuration lives in a single JSON document; command-line flags override
scalar fields only, so an experiment is fully described by its config file.
Each task writes its report files (CSV or JSON) plus a manifest echoing
every numeric default actually used.  Repeated runs of one configuration
are byte-identical except for the manifest's wall time.

Exit codes: 0 success, 2 configuration/validation failure, 3 degenerate
eigenvalue abort (override with allow_degenerate), 4 solver non-convergence.
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import figures
from .effective import assemble_interval_operator, spectrum_1d
from .errors import ConfigError, DegenerateModeError, MeshError, SolverConvergenceError
from .floquet import (
    band_structure,
    bands_and_gaps,
    fiber_spectrum,
    gap_asymptotics,
)
from .mesh import SectionGeometry, build_mesh, preset
from .reports import Manifest, write_json, write_rows
from .section import assemble_neumann_forms, coupling_matrices, solve_transverse_modes
from .twist import effective_potential, interval_grid, make_twist, periodic_grid, w_potential
from .waveguide import (
    FullModelConfig,
    convergence_study,
    fiber_convergence_study,
    gap_persistence_check,
    validate_change_of_variables,
)

TASKS = (
    "modes", "coupling", "potential", "spectrum-1d", "bands", "gaps",
    "gap-asymptotics", "converge", "fiber-converge", "persistence", "validate",
)


@dataclass
class RunConfig:
    """Resolved run configuration; every numeric default lives here."""

    task: str = ""
    geometry: dict | None = None
    twist: dict | None = None
    n: int = 2
    M: int | None = None              # transverse cutoff; default n + 6
    count: int = 6                    # modes reported by task=modes
    h: float = 0.02
    nodes: int | None = None          # s-grid; default 2048 interval / 1024 periodic
    s_nodes: int | None = None        # full-model axis nodes; default 1024 / 512
    theta_count: int = 65
    jmax: int = 6
    j: int = 0                        # gap index; 0 = first open gap
    theta: float = 0.3
    eps: float = 0.1
    epsilons: list = field(default_factory=lambda: [0.2, 0.1, 0.05])
    betas: list = field(default_factory=lambda: [0.0125, 0.025, 0.05, 0.1])
    c1: float | None = None           # explicit coupling constants bypass the
    c2: float | None = None           # cross-section solve when both are given
    degeneracy_tol: float = 1e-6
    band_tol: float = 1e-6
    gap_tol: float = 1e-4
    tol: float = 1e-9
    threshold: float = 0.01
    allow_degenerate: bool = False
    outdir: str = "out"
    format: str = "csv"
    plot: bool = True

    @classmethod
    def load(cls, task, config_path=None, overrides=None):
        doc = {}
        if config_path is not None:
            try:
                doc = json.loads(Path(config_path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
            if not isinstance(doc, dict):
                raise ConfigError("config document must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.task = task
        for key, value in (overrides or {}).items():
            if value is not None:
                setattr(cfg, key, value)
        cfg.validate()
        return cfg

    def validate(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.n < 1 or self.count < 2 or self.jmax < 1:
            raise ConfigError("n, count, jmax must be positive (count >= 2)")
        if self.M is not None and self.M < self.n:
            raise ConfigError(f"M={self.M} must be >= n={self.n}")
        if not self.h > 0:
            raise ConfigError("h must be positive")
        for name in ("epsilons", "betas"):
            seq = getattr(self, name)
            if not isinstance(seq, (list, tuple)) or not seq:
                raise ConfigError(f"{name} must be a nonempty list")
        needs_twist = self.task not in ("modes", "coupling")
        if needs_twist and self.twist is None:
            raise ConfigError(f"task {self.task} requires a twist spec")
        needs_geometry = self.task in ("modes", "coupling", "converge", "fiber-converge",
                                       "persistence") or (
            self.task in ("potential", "spectrum-1d", "bands", "gaps", "gap-asymptotics")
            and (self.c1 is None or self.c2 is None)
        )
        if needs_geometry and self.geometry is None:
            raise ConfigError(f"task {self.task} requires a geometry spec (or explicit c1/c2)")

    @property
    def cutoff(self):
        return self.M if self.M is not None else self.n + 6

    def resolved(self):
        out = {}
        for f in fields(self):
            out[f.name] = getattr(self, f.name)
        out["M"] = self.cutoff
        return out


def _parse_geometry(doc):
    if "preset" in doc:
        return preset(doc["preset"])
    return SectionGeometry.from_dict(doc)


class _Pipeline:
    """Lazily built shared stages: mesh -> modes -> coupling -> potentials."""

    def __init__(self, cfg, manifest):
        self.cfg = cfg
        self.manifest = manifest
        self._mesh = None
        self._modes = None
        self._coupling = None
        self._profile = None

    @property
    def mesh(self):
        if self._mesh is None:
            geometry = _parse_geometry(self.cfg.geometry)
            self._mesh = build_mesh(geometry, self.cfg.h)
            self.manifest.record(h=self.cfg.h, mesh_vertices=self._mesh.num_vertices,
                                 mesh_h=self._mesh.h, mesh_area=self._mesh.area_total)
        return self._mesh

    def modes(self, count):
        if self._modes is None or self._modes.count < count:
            problem = assemble_neumann_forms(self.mesh)
            self._modes = solve_transverse_modes(
                problem, count, self.cfg.degeneracy_tol, mesh=self.mesh, tol=self.cfg.tol
            )
            self.manifest.record(mode_count=count, degeneracy_tol=self.cfg.degeneracy_tol)
        return self._modes

    def coupling(self, cutoff):
        if self._coupling is None or self._coupling.cutoff < cutoff:
            modes = self.modes(cutoff + 1)
            self._coupling = coupling_matrices(modes, cutoff)
        return self._coupling

    @property
    def profile(self):
        if self._profile is None:
            self._profile = make_twist(self.cfg.twist)
            self.manifest.record(twist=self._profile.description)
        return self._profile

    def constants(self):
        cfg = self.cfg
        if cfg.c1 is not None and cfg.c2 is not None:
            self.manifest.record(c1=cfg.c1, c2=cfg.c2, coupling_source="explicit")
            return float(cfg.c1), float(cfg.c2)
        coupling = self.coupling(cfg.n)
        modes = self.modes(cfg.n + 1)
        if modes.degenerate_flags[cfg.n - 1] and not cfg.allow_degenerate:
            raise DegenerateModeError(f"target mode {cfg.n} is flagged degenerate")
        c1, c2 = coupling.constants(cfg.n)
        self.manifest.record(c1=c1, c2=c2, coupling_source=f"mode {cfg.n}")
        return c1, c2

    def grid(self):
        cfg = self.cfg
        if self.profile.kind == "periodic":
            nodes = cfg.nodes if cfg.nodes is not None else 1024
            return periodic_grid(self.profile.period, nodes), nodes
        nodes = cfg.nodes if cfg.nodes is not None else 2048
        return interval_grid(self.profile.a, self.profile.b, nodes), nodes

    def axis_nodes(self):
        cfg = self.cfg
        if cfg.s_nodes is not None:
            return cfg.s_nodes
        return 512 if self.profile.kind == "periodic" else 1024


def _task_modes(cfg, pipe, outdir, manifest):
    modes = pipe.modes(cfg.count)
    rows = [(n, modes.lambdas[n - 1], bool(modes.degenerate_flags[n - 1]))
            for n in range(1, cfg.count + 1)]
    path = write_rows(outdir / "modes", cfg.format, ["n", "lambda", "degenerate"], rows)
    manifest.add_output(path)
    if cfg.plot:
        manifest.add_output(figures.render_modes(modes.lambdas, modes.degenerate_flags,
                                                 outdir / "modes.png"))


def _task_coupling(cfg, pipe, outdir, manifest):
    coupling = pipe.coupling(cfg.cutoff)
    rows = [(n, coupling.C1[n - 1], coupling.C2[n - 1]) for n in range(1, cfg.cutoff + 1)]
    path = write_rows(outdir / "coupling", cfg.format, ["n", "C1", "C2"], rows)
    manifest.add_output(path)
    mat_path = outdir / "coupling_matrices.json"
    write_json(mat_path, {"A": coupling.A, "B": coupling.B})
    manifest.add_output(mat_path)


def _potential_for(cfg, pipe):
    c1, c2 = pipe.constants()
    grid, nodes = pipe.grid()
    pipe.manifest.record(nodes=nodes)
    return effective_potential(pipe.profile, c1, c2, grid), c1, c2


def _task_potential(cfg, pipe, outdir, manifest):
    V, _, _ = _potential_for(cfg, pipe)
    path = write_rows(outdir / "potential", cfg.format, ["s", "value"],
                      zip(V.grid, V.values))
    manifest.add_output(path)
    if cfg.plot:
        manifest.add_output(figures.render_potential(V, outdir / "potential.png"))


def _task_spectrum_1d(cfg, pipe, outdir, manifest):
    if pipe.profile.kind != "interval":
        raise ConfigError("task spectrum-1d needs an interval twist")
    V, _, c2 = _potential_for(cfg, pipe)
    op = assemble_interval_operator(V, pipe.profile, c2, len(V.grid))
    manifest.record(r_a=op.r_a, r_b=op.r_b, jmax=cfg.jmax)
    spec = spectrum_1d(op, cfg.jmax, tol=cfg.tol)
    rows = [(j + 1, spec.values[j]) for j in range(cfg.jmax)]
    path = write_rows(outdir / "spectrum", cfg.format, ["j", "mu"], rows)
    manifest.add_output(path)
    if cfg.plot:
        manifest.add_output(figures.render_spectrum(spec.values, outdir / "spectrum.png"))


def _bands_report(cfg, pipe):
    if pipe.profile.kind != "periodic":
        raise ConfigError("band tasks need a periodic twist")
    V, _, _ = _potential_for(cfg, pipe)
    bs = band_structure(V, pipe.profile.period, theta_count=cfg.theta_count,
                        jmax=cfg.jmax, band_tol=cfg.band_tol, tol=cfg.tol)
    pipe.manifest.record(theta_count=cfg.theta_count, jmax=cfg.jmax, band_tol=cfg.band_tol,
                         gap_tol=cfg.gap_tol)
    pipe.manifest.diagnose(band_violations=list(bs.violations), band_warnings=list(bs.warnings))
    return bs, bands_and_gaps(bs, gap_tol=cfg.gap_tol)


def _write_gaps(cfg, report, outdir, manifest):
    rows = [(g.j, g.lower, g.upper, g.width) for g in report.open_gaps()]
    path = write_rows(outdir / "gaps", cfg.format, ["j", "lower", "upper", "width"], rows)
    manifest.add_output(path)


def _task_bands(cfg, pipe, outdir, manifest):
    bs, report = _bands_report(cfg, pipe)
    rows = [(bs.thetas[t], j + 1, bs.k[j, t])
            for t in range(len(bs.thetas)) for j in range(bs.jmax)]
    path = write_rows(outdir / "bands", cfg.format, ["theta", "j", "k"], rows)
    manifest.add_output(path)
    _write_gaps(cfg, report, outdir, manifest)
    if cfg.plot:
        manifest.add_output(figures.render_bands(bs, report, outdir / "bands.png"))


def _task_gaps(cfg, pipe, outdir, manifest):
    _, report = _bands_report(cfg, pipe)
    _write_gaps(cfg, report, outdir, manifest)


def _task_gap_asymptotics(cfg, pipe, outdir, manifest):
    if pipe.profile.kind != "periodic":
        raise ConfigError("gap asymptotics needs a periodic twist")
    c1, _ = pipe.constants()
    grid, nodes = pipe.grid()
    manifest.record(nodes=nodes, betas=list(cfg.betas))
    W = w_potential(pipe.profile, c1, grid)
    j = cfg.j if cfg.j >= 1 else 1
    ga = gap_asymptotics(W, pipe.profile.period, j, cfg.betas, tol=cfg.tol)
    rows = [(b, d, ga.predicted_slope * b)
            for b, d in zip(ga.betas, ga.deltas)]
    path = write_rows(outdir / "asymptotics", cfg.format, ["beta", "delta", "predicted"], rows)
    manifest.add_output(path)
    manifest.diagnose(fitted_slope=ga.fitted_slope, predicted_slope=ga.predicted_slope,
                      flagged=[bool(f) for f in ga.flagged], gap_index=j)
    if cfg.plot:
        manifest.add_output(figures.render_gap_asymptotics(ga, outdir / "asymptotics.png"))


def _convergence_rows(report):
    rows = []
    for i, e in enumerate(report.eps):
        for j in range(report.values.shape[1]):
            rows.append((e, j + 1, report.values[i, j], report.oracle[j], report.errors[i, j]))
    return rows


def _task_converge(cfg, pipe, outdir, manifest):
    if pipe.profile.kind != "interval":
        raise ConfigError("task converge runs the bounded-interval case")
    V, _, c2 = _potential_for(cfg, pipe)
    s_nodes = pipe.axis_nodes()
    grid = interval_grid(pipe.profile.a, pipe.profile.b, s_nodes)
    V_axis = effective_potential(pipe.profile, V.c1, V.c2, grid)
    op = assemble_interval_operator(V_axis, pipe.profile, c2, s_nodes)
    oracle = spectrum_1d(op, cfg.jmax, tol=cfg.tol)
    model = FullModelConfig(n=cfg.n, eps=cfg.epsilons[0], M=cfg.cutoff,
                            s_nodes=s_nodes, case="interval")
    modes = pipe.modes(cfg.cutoff + 1)
    coupling = pipe.coupling(cfg.cutoff)
    report = convergence_study(model, modes, coupling, pipe.profile, cfg.epsilons,
                               oracle, cfg.jmax, threshold=cfg.threshold,
                               allow_degenerate=cfg.allow_degenerate)
    manifest.record(s_nodes=s_nodes, M=cfg.cutoff, epsilons=list(cfg.epsilons), jmax=cfg.jmax)
    manifest.diagnose(monotone_errors=report.monotone_errors,
                      monotone_values=report.monotone_values, final_ok=report.final_ok)
    path = write_rows(outdir / "converge", cfg.format,
                      ["epsilon", "j", "shifted_value", "oracle", "abs_err"],
                      _convergence_rows(report))
    manifest.add_output(path)
    if cfg.plot:
        manifest.add_output(figures.render_convergence(report, outdir / "converge.png"))


def _task_fiber_converge(cfg, pipe, outdir, manifest):
    if pipe.profile.kind != "periodic":
        raise ConfigError("task fiber-converge runs the periodic case")
    V, _, _ = _potential_for(cfg, pipe)
    L = pipe.profile.period
    if abs(cfg.theta) > math.pi / L:
        raise ConfigError(f"theta {cfg.theta} outside the Brillouin zone")
    oracle = fiber_spectrum(V, L, cfg.theta, cfg.jmax, tol=cfg.tol)
    s_nodes = pipe.axis_nodes()
    model = FullModelConfig(n=cfg.n, eps=cfg.epsilons[0], M=cfg.cutoff,
                            s_nodes=s_nodes, case="fiber", theta=cfg.theta)
    modes = pipe.modes(cfg.cutoff + 1)
    coupling = pipe.coupling(cfg.cutoff)
    report = fiber_convergence_study(model, modes, coupling, pipe.profile, cfg.epsilons,
                                     oracle, cfg.jmax, threshold=cfg.threshold,
                                     allow_degenerate=cfg.allow_degenerate)
    manifest.record(s_nodes=s_nodes, M=cfg.cutoff, epsilons=list(cfg.epsilons),
                    jmax=cfg.jmax, theta=cfg.theta)
    manifest.diagnose(monotone_errors=report.monotone_errors,
                      monotone_values=report.monotone_values, final_ok=report.final_ok)
    path = write_rows(outdir / "converge", cfg.format,
                      ["epsilon", "j", "shifted_value", "oracle", "abs_err"],
                      _convergence_rows(report))
    manifest.add_output(path)
    if cfg.plot:
        manifest.add_output(figures.render_convergence(report, outdir / "converge.png"))


def _task_persistence(cfg, pipe, outdir, manifest):
    bs, report = _bands_report(cfg, pipe)
    open_gaps = report.open_gaps()
    if cfg.j >= 1:
        matches = [g for g in report.gaps if g.j == cfg.j]
        gap = matches[0] if matches else None
    else:
        gap = open_gaps[0] if open_gaps else None
    if gap is None or not gap.is_open:
        manifest.diagnose(persistence="skipped: no open gap at requested index")
        path = write_rows(outdir / "persistence", cfg.format,
                          ["epsilon", "j", "margin", "half_gap"], [])
        manifest.add_output(path)
        return
    s_nodes = pipe.axis_nodes()
    modes = pipe.modes(cfg.cutoff + 1)
    coupling = pipe.coupling(cfg.cutoff)
    model = FullModelConfig(n=cfg.n, eps=cfg.epsilons[0], M=cfg.cutoff,
                            s_nodes=s_nodes, case="fiber")
    results = [
        gap_persistence_check(model, modes, coupling, pipe.profile, e, gap.j, gap,
                              theta_count=9, allow_degenerate=cfg.allow_degenerate)
        for e in cfg.epsilons
    ]
    manifest.record(s_nodes=s_nodes, M=cfg.cutoff, epsilons=list(cfg.epsilons), gap_index=gap.j)
    rows = [(r.eps, r.j, r.margin, r.half_gap) for r in results]
    path = write_rows(outdir / "persistence", cfg.format,
                      ["epsilon", "j", "margin", "half_gap"], rows)
    manifest.add_output(path)
    if cfg.plot:
        manifest.add_output(figures.render_persistence(results, outdir / "persistence.png"))


def _task_validate(cfg, pipe, outdir, manifest):
    profile = pipe.profile
    s_pts = np.linspace(profile.a, profile.b, 8)
    y_vals = (-0.5, 0.0, 0.5)
    points = [(s, y1, y2) for s in s_pts for y1 in y_vals for y2 in y_vals]
    rep = validate_change_of_variables(profile, cfg.eps, points)
    manifest.record(eps=cfg.eps, sample_points=len(points))
    payload = {
        "eps": cfg.eps,
        "metric_residual": rep.metric_residual,
        "det_residual": rep.det_residual,
        "inverse_residual": rep.inverse_residual,
        "sample_points": len(points),
    }
    path = outdir / "validate.json"
    write_json(path, payload)
    manifest.add_output(path)


_TASK_IMPL = {
    "modes": _task_modes,
    "coupling": _task_coupling,
    "potential": _task_potential,
    "spectrum-1d": _task_spectrum_1d,
    "bands": _task_bands,
    "gaps": _task_gaps,
    "gap-asymptotics": _task_gap_asymptotics,
    "converge": _task_converge,
    "fiber-converge": _task_fiber_converge,
    "persistence": _task_persistence,
    "validate": _task_validate,
}


def run(cfg):
    """Execute a validated RunConfig; returns the process exit code."""
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(cfg.task)
    manifest.record(**{k: v for k, v in cfg.resolved().items() if v is not None})
    pipe = _Pipeline(cfg, manifest)
    try:
        _TASK_IMPL[cfg.task](cfg, pipe, outdir, manifest)
    except (ConfigError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegenerateModeError as exc:
        print(f"error: {exc} (pass allow_degenerate to proceed)", file=sys.stderr)
        return 3
    except SolverConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    manifest.write(outdir)
    return 0


def _add_common(sub):
    sub.add_argument("--config", help="JSON configuration document")
    sub.add_argument("--outdir", help="output directory")
    sub.add_argument("--format", choices=("csv", "json"), dest="format_")
    sub.add_argument("--plot", dest="plot", action="store_true", default=None,
                     help="render figures (default)")
    sub.add_argument("--no-plot", dest="plot", action="store_false", default=None)
    sub.add_argument("--allow-degenerate", dest="allow_degenerate",
                     action="store_true", default=None)
    for name, typ in (("n", int), ("M", int), ("count", int), ("h", float),
                      ("nodes", int), ("s-nodes", int), ("theta-count", int),
                      ("jmax", int), ("j", int), ("theta", float), ("eps", float),
                      ("tol", float), ("threshold", float)):
        sub.add_argument(f"--{name}", type=typ, dest=name.replace("-", "_"))


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="twistband",
        description="Spectral pipeline for thin twisted waveguides.",
    )
    subs = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        _add_common(subs.add_parser(task, help=f"run the {task} task"))
    args = parser.parse_args(argv)

    overrides = {
        "outdir": args.outdir, "format": args.format_, "plot": args.plot,
        "allow_degenerate": args.allow_degenerate, "n": args.n, "M": args.M,
        "count": args.count, "h": args.h, "nodes": args.nodes, "s_nodes": args.s_nodes,
        "theta_count": args.theta_count, "jmax": args.jmax, "j": args.j,
        "theta": args.theta, "eps": args.eps, "tol": args.tol, "threshold": args.threshold,
    }
    try:
        cfg = RunConfig.load(args.task, args.config, overrides)
    except (ConfigError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
