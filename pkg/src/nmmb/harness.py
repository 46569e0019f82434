"""Scenario pipeline: spectral basis, orbital evolution, reduction, metrics
and the CSV time series."""
import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cache
from .errors import NmmbError
from .manybody import (assemble_state, build_frame, number_distribution,
                       reduce_system, vacuum_state)
from .metrics import DistanceReport, max_increase, pair_metrics, witness_scan
from .potential import isolated_well_modes
from .propagation import autocorrelation, evolve, expand, survival_probability

log = logging.getLogger(__name__)


@dataclass
class ScenarioResult:
    report: DistanceReport
    columns: list
    rows: np.ndarray
    csv_path: Path = None
    paths: list = field(default_factory=list)


def time_grid(cfg):
    return np.linspace(0.0, cfg.t_max, cfg.n_samples)


def _context(exc, name):
    exc.args = (f"scenario {name!r}: {exc.args[0] if exc.args else exc}",) + tuple(exc.args[1:])
    return exc


def prepare_orbitals(cfg, basis):
    """Expanded initial orbitals keyed by ``(well index, internal label)``."""
    pairs = sorted({o for s in (cfg.state_a, cfg.state_b) for o in s.orbitals})
    if not pairs:
        return {}
    n_max = max(n for n, _ in pairs)
    wells = isolated_well_modes(cfg.potential, cfg.h, n_max, fem=basis.fem)
    return {(n, lab): expand(wells[n - 1], basis, internal=lab, eps_complete=cfg.eps_complete)
            for n, lab in pairs}


def reduced_at(state_spec, orbitals, t, d_int, n_rows):
    if state_spec.vacuum:
        return vacuum_state(d_int, n_rows)
    evolved = {key: evolve(orb, t) for key, orb in orbitals.items()}
    orbs = [evolved[key] for key in state_spec.orbitals]
    frame = build_frame(orbs, d_int=d_int)
    return reduce_system(assemble_state(frame, state_spec.statistics, orbs))


def run_scenario(cfg, out_dir=None, basis=None, cache_directory=None, use_cache=True):
    """Run one scenario; writes ``<name>.csv`` (and plots, witnesses) when
    ``out_dir`` is given."""
    name = cfg.output.name
    try:
        if basis is None:
            basis = cache.load_or_solve(cfg.potential, cfg.h, cfg.e_cut,
                                        directory=cache_directory, use_cache=use_cache)
        orbitals = prepare_orbitals(cfg, basis)
        times = time_grid(cfg)
        d_int = cfg.d_int
        n_rows = basis.fem.n_system
        kps = tuple(cfg.output.kp)

        wells = sorted({n for n, _ in orbitals})
        tracked = {n: next(o for (m, _), o in orbitals.items() if m == n) for n in wells}
        p1 = {n: survival_probability(o, times) for n, o in tracked.items()}
        corr = ({n: autocorrelation(o, times) for n, o in tracked.items()}
                if cfg.output.correlations else {})

        na, nb = cfg.state_a.n_particles, cfg.state_b.n_particles
        pk_a = np.zeros((times.size, na + 1))
        pk_b = np.zeros((times.size, nb + 1))
        metric_names = ["d_full", "p_lower", "p_upper", "d_1p"] + [f"d_{kp}p" for kp in kps]
        metric_vals = np.zeros((times.size, len(metric_names)))
        step = max(1, times.size // 10)
        for i, t in enumerate(times):
            rho = reduced_at(cfg.state_a, orbitals, t, d_int, n_rows)
            sigma = reduced_at(cfg.state_b, orbitals, t, d_int, n_rows)
            pk_a[i] = number_distribution(rho)[:na + 1] if na else [1.0]
            pk_b[i] = number_distribution(sigma)[:nb + 1] if nb else [1.0]
            row = pair_metrics(rho, sigma, kps)
            metric_vals[i] = [row[m] for m in metric_names]
            if (i + 1) % step == 0:
                log.info("%s: %d/%d samples", name, i + 1, times.size)
    except NmmbError as exc:
        raise _context(exc, name)

    report = DistanceReport(
        times=times, d_full=metric_vals[:, 0], p_lower=metric_vals[:, 1],
        p_upper=metric_vals[:, 2], d_1p=metric_vals[:, 3],
        d_kp={kp: metric_vals[:, 4 + j] for j, kp in enumerate(kps)},
        extra={"p1": p1, "corr": corr, "pk_a": pk_a, "pk_b": pk_b, "name": name},
    )
    report.witnesses = witness_scan(report)
    report.max_increase = max_increase(report.d_full)

    columns = ["t"] + [f"p1_n{n}" for n in p1] + [f"corr_n{n}" for n in corr]
    columns += [f"pk_a_{k}" for k in range(na + 1)] + [f"pk_b_{k}" for k in range(nb + 1)]
    columns += metric_names
    data = np.column_stack([times] + list(p1.values()) + list(corr.values())
                           + [pk_a, pk_b, metric_vals])
    result = ScenarioResult(report=report, columns=columns, rows=data)
    if out_dir is not None:
        write_outputs(result, cfg, Path(out_dir))
    return result


def _fmt(x):
    return format(float(x), ".17g")


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
    return path


def write_outputs(result, cfg, out_dir):
    name = cfg.output.name
    out_dir.mkdir(parents=True, exist_ok=True)
    result.csv_path = write_csv(out_dir / f"{name}.csv", result.columns, result.rows)
    result.paths.append(result.csv_path)
    wpath = out_dir / f"{name}_witnesses.csv"
    with open(wpath, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t0", "t1", "kind", "t1_start", "t1_end", "excess"])
        for wt in result.report.witnesses:
            w.writerow([_fmt(wt.t0), _fmt(wt.t1), wt.kind, _fmt(wt.t1_start),
                        _fmt(wt.t1_end), _fmt(wt.excess)])
    result.paths.append(wpath)
    summary = {
        "scenario": name,
        "samples": int(result.rows.shape[0]),
        "witness_runs": len(result.report.witnesses),
        "max_increase_d_full": float(result.report.max_increase),
    }
    spath = out_dir / f"{name}_summary.json"
    spath.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    result.paths.append(spath)
    if cfg.output.plot:
        from .plot import emit_plot
        result.paths += emit_plot(result.report, out_dir / name,
                                  panels=cfg.output.panels, metrics=cfg.output.metrics)
    return result
