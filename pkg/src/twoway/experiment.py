"""Seeded size sweeps over planted blown-up matrices.

A sweep runs ``seeds`` replicates at every ``(m, n)`` cell. Each trial
samples ``A = B + W``, records its spectrum, the detected gap, the
clustering variances and recovery, subspace distances to the planted
singular subspaces, the correspondence spectrum (when ``A`` is a
nonnegative table) and the reconstruction residual.

Outputs in the output directory:

``trials.csv``
    One row per trial in the fixed column order :data:`TRIAL_COLUMNS`.
    List-valued fields are ``;``-separated, floats use 17 significant
    digits, booleans are 0/1. The file is byte-identical across reruns.
``timings.csv``
    ``trial,wall_time,status``; kept apart so ``trials.csv`` stays reproducible.
``summary.json``
    Per-size aggregates over completed trials (see :func:`summarize`).
``scaling.dat``, ``scaling.gp``
    Plot table and gnuplot script (see :func:`render_report`).

Config file (JSON)::

    {
      "pattern_file": "pattern.json",      # or inline "pattern": {pattern document}
      "sizes": [[400, 400], [800, 800]],
      "noise": {"kind": "uniform", "bound": 0.5},   # bound 0 means noiseless
      "seeds": 10,
      "seed": 0,
      "tau": 0.4,
      "gap_threshold": 3.0,
      "restarts": 10,
      "workers": 1,
      "trial_timeout": 300,
      "out": "results"
    }

Relative paths in the config resolve against the config file's directory.
"""

import csv
import io as _io
import json
import logging
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .clustering import Representation, kmeans, same_partition
from .correspondence import corr_epsilon, corr_transform
from .exceptions import DataError, TwoWayError
from .io import pattern_from_dict, write_json
from .model import NoiseSpec, planted_instance
from .reconstruct import reconstruct, subspace_distances
from .spectra import (
    detect_gap,
    exact_blownup_svd,
    rank_gap,
    singular_values,
    spectral_norm,
    thin_svd,
)

log = logging.getLogger(__name__)

TRIAL_COLUMNS = (
    "trial", "m", "n", "replicate", "seed", "status", "error", "rank",
    "singular_values", "w_norm", "gap_k", "gap_threshold", "gap_ratio",
    "sa2", "sb2", "row_recovered", "col_recovered",
    "dist2_left", "dist2_right", "dist_bound",
    "corr_values", "residual_norm", "residual_bound",
)


class ConfigError(TwoWayError):
    """Unreadable or invalid experiment configuration."""


class ReportError(DataError):
    """Malformed or empty summary."""


@dataclass
class ExperimentConfig:
    pattern: dict
    sizes: list
    noise: dict = field(default_factory=lambda: {"kind": "uniform", "bound": 1.0})
    seeds: int = 1
    seed: int = 0
    tau: float = 0.4
    gap_threshold: float = 3.0
    restarts: int = 10
    workers: int = 1
    trial_timeout: float = 300.0
    out: str = "results"

    def __post_init__(self):
        self.sizes = [tuple(int(v) for v in s) for s in self.sizes]
        if not self.sizes:
            raise ConfigError("the size sweep is empty")
        if any(len(s) != 2 or min(s) < 1 for s in self.sizes):
            raise ConfigError("sizes must be pairs of positive integers")
        if int(self.seeds) < 1:
            raise ConfigError("seeds must be >= 1")
        if not 0 < float(self.tau) < 0.5:
            raise ConfigError("tau must lie in (0, 1/2)")
        if float(self.gap_threshold) <= 0:
            raise ConfigError("gap_threshold must be positive")
        if int(self.restarts) < 1 or int(self.workers) < 1:
            raise ConfigError("restarts and workers must be >= 1")
        if self.noise.get("kind", "uniform") not in ("uniform", "gaussian", "bernoulli"):
            raise ConfigError(f"unknown noise kind {self.noise.get('kind')!r}")
        try:
            pattern_from_dict(self.pattern)
        except (TwoWayError, TypeError) as exc:
            raise ConfigError(f"invalid pattern: {exc}") from exc

    @classmethod
    def from_file(cls, path, **overrides):
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        base = path.parent
        if "pattern_file" in doc:
            pfile = base / doc.pop("pattern_file")
            try:
                doc["pattern"] = json.loads(pfile.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read pattern file {pfile}: {exc}") from exc
        if "out" in doc:
            doc["out"] = str(base / doc["out"])
        doc.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "pattern" not in doc or "sizes" not in doc:
            raise ConfigError("config needs a pattern (or pattern_file) and sizes")
        return cls(**doc)

    def noise_spec(self, seed):
        kind = self.noise.get("kind", "uniform")
        if kind == "uniform" and float(self.noise.get("bound", 1.0)) == 0.0:
            return None
        return NoiseSpec(kind=kind, bound=float(self.noise.get("bound", 1.0)),
                         variance=float(self.noise.get("variance", 1.0)), seed=seed)


def trial_seed(base, m, n, replicate):
    """64-bit trial seed mixed from ``(base, m, n, replicate)`` by ``SeedSequence``.

    Keyed by the cell rather than the trial position, so adding sizes never
    changes the seeds of existing trials.
    """
    state = np.random.SeedSequence([int(base), int(m), int(n), int(replicate)])
    return int(state.generate_state(1, np.uint64)[0])


def run_trial(config, m, n, replicate):
    """Run one cell replicate and return its record as a dict."""
    P, template = pattern_from_dict(config.pattern)
    bs = template.rescaled(m, n)
    seed = trial_seed(config.seed, m, n, replicate)
    noise = config.noise_spec(seed)
    A, B, W = planted_instance(P, bs, noise)
    truth = exact_blownup_svd(P, bs)
    r = truth.k

    svd = thin_svd(A)
    z = svd.singular_values
    w_norm = spectral_norm(W)
    if noise is None:
        # no bulk to separate from: the protruding values are the nonzero ones
        gap = rank_gap(z, (m, n))
    else:
        gap = detect_gap(z, m, n, config.gap_threshold)

    Y = svd.left_vectors[:, :r]
    X = svd.right_vectors[:, :r]
    rows = kmeans(Representation.unweighted(Y), bs.a, seed, config.restarts)
    cols = kmeans(Representation.unweighted(X), bs.b, seed, config.restarts)

    dist2_left = float(np.sum(subspace_distances(Y, truth.left_vectors) ** 2))
    dist2_right = float(np.sum(subspace_distances(X, truth.right_vectors) ** 2))
    delta = float(truth.singular_values[-1])
    dist_bound = r * w_norm ** 2 / (delta - w_norm) ** 2 if delta > w_norm else float("inf")

    corr_values = []
    if np.all(A >= 0) and np.all(A.sum(axis=1) > 0) and np.all(A.sum(axis=0) > 0):
        corr_values = singular_values(corr_transform(A).normalized)[: r + 1].tolist()

    rec = reconstruct(A, r, bs.a, bs.b, seed, config.restarts, svd=svd)
    return {
        "m": m, "n": n, "replicate": replicate, "seed": seed, "status": "ok", "error": "",
        "rank": r,
        "singular_values": z[: r + 3].tolist(),
        "w_norm": w_norm,
        "gap_k": gap.k,
        "gap_threshold": gap.threshold,
        "gap_ratio": gap.gap_ratio,
        "sa2": rows.within_variance,
        "sb2": cols.within_variance,
        "row_recovered": same_partition(rows.labels, bs.row_labels()),
        "col_recovered": same_partition(cols.labels, bs.col_labels()),
        "dist2_left": dist2_left,
        "dist2_right": dist2_right,
        "dist_bound": dist_bound,
        "corr_values": corr_values,
        "residual_norm": rec.residual_norm,
        "residual_bound": rec.residual_bound,
    }


def _timed_trial(args):
    config, index, m, n, replicate = args
    start = time.perf_counter()
    try:
        record = run_trial(config, m, n, replicate)
    except (TwoWayError, np.linalg.LinAlgError, FloatingPointError) as exc:
        record = {"m": m, "n": n, "replicate": replicate,
                  "seed": trial_seed(config.seed, m, n, replicate),
                  "status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    elapsed = time.perf_counter() - start
    if record["status"] == "ok" and elapsed > config.trial_timeout:
        record = {key: record[key] for key in ("m", "n", "replicate", "seed")}
        record.update(status="failed", error=f"timeout: {elapsed:.1f}s > {config.trial_timeout}s")
    record["trial"] = index
    return record, elapsed


def _cell(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (list, tuple)):
        return ";".join(format(float(v), ".17g") for v in value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def trials_csv_text(records):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRIAL_COLUMNS)
    for rec in records:
        writer.writerow([_cell(rec[c]) if c in rec else "" for c in TRIAL_COLUMNS])
    return buf.getvalue()


def _median(values):
    return float(statistics.median(values)) if values else None


def summarize(records, config=None):
    """Per-size aggregates over completed trials.

    Per size: ``trials``, ``failed``, ``rank``, ``median_top_scaled``
    (medians of ``s_i / sqrt(mn)``, ``i <= r``), ``median_tail_scaled``
    (median ``s_{r+1} / sqrt(m+n)``), ``max_noise_ratio`` and
    ``median_noise_ratio`` (``||W|| / sqrt(m+n)``), ``gap_rate`` (fraction
    with detected ``k == r``), ``row_recovery_rate``, ``col_recovery_rate``,
    ``median_sa2_scaled``/``median_sb2_scaled`` (variance times
    ``mn/(m+n)``), ``median_residual_scaled`` (``||A - B_hat|| / sqrt(m+n)``),
    ``median_corr_values`` (or null) and ``corr_tail_max``.
    """
    cells = {}
    for rec in records:
        cells.setdefault((rec["m"], rec["n"]), []).append(rec)
    sizes = []
    for (m, n), recs in cells.items():
        ok = [r for r in recs if r["status"] == "ok"]
        entry = {"m": m, "n": n, "trials": len(recs), "failed": len(recs) - len(ok)}
        if ok:
            r = ok[0]["rank"]
            mn, mpn = np.sqrt(m * n), np.sqrt(m + n)
            scale = m * n / (m + n)
            entry.update({
                "rank": r,
                "median_top_scaled": [_median([t["singular_values"][i] / mn for t in ok])
                                      for i in range(r)],
                "median_tail_scaled": _median([t["singular_values"][r] / mpn for t in ok
                                               if len(t["singular_values"]) > r]),
                "max_noise_ratio": max(t["w_norm"] / mpn for t in ok),
                "median_noise_ratio": _median([t["w_norm"] / mpn for t in ok]),
                "gap_rate": sum(t["gap_k"] == r for t in ok) / len(ok),
                "row_recovery_rate": sum(bool(t["row_recovered"]) for t in ok) / len(ok),
                "col_recovery_rate": sum(bool(t["col_recovered"]) for t in ok) / len(ok),
                "median_sa2_scaled": _median([t["sa2"] * scale for t in ok]),
                "median_sb2_scaled": _median([t["sb2"] * scale for t in ok]),
                "median_residual_scaled": _median([t["residual_norm"] / mpn for t in ok]),
            })
            corr = [t["corr_values"] for t in ok if t["corr_values"]]
            if corr:
                width = min(len(c) for c in corr)
                entry["median_corr_values"] = [_median([c[i] for c in corr]) for i in range(width)]
                entry["corr_tail_max"] = max(c[r] for c in corr) if width > r else None
            else:
                entry["median_corr_values"] = None
                entry["corr_tail_max"] = None
        sizes.append(entry)
    summary = {
        "n_trials": len(records),
        "n_failed": sum(r["status"] != "ok" for r in records),
        "sizes": sizes,
    }
    if config is not None:
        summary["config"] = asdict(config)
        summary["tau"] = config.tau
        summary["epsilon"] = [corr_epsilon(m, n, config.tau) for m, n in config.sizes]
    return summary


@dataclass
class ExperimentOutcome:
    records: list
    summary: dict
    exit_code: int
    out_dir: Path


def run_experiment(config):
    """Run the sweep, write the report files and return an :class:`ExperimentOutcome`.

    Rows are written in trial order whatever the completion order. A trial
    that raises a numerical error or exceeds ``trial_timeout`` seconds is
    recorded as failed; the exit code is then 1.
    """
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = []
    for m, n in config.sizes:
        for rep in range(int(config.seeds)):
            tasks.append((config, len(tasks), m, n, rep))
    if int(config.workers) > 1:
        with ProcessPoolExecutor(max_workers=int(config.workers)) as pool:
            results = list(pool.map(_timed_trial, tasks))
    else:
        results = [_timed_trial(t) for t in tasks]
    records = [rec for rec, _ in results]
    for rec, elapsed in results:
        log.info("trial %d (%dx%d) %s in %.2fs", rec["trial"], rec["m"], rec["n"],
                 rec["status"], elapsed)

    (out / "trials.csv").write_text(trials_csv_text(records))
    with (out / "timings.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial", "wall_time", "status"])
        for rec, elapsed in results:
            writer.writerow([rec["trial"], f"{elapsed:.6f}", rec["status"]])
    summary = summarize(records, config)
    write_json(out / "summary.json", summary)
    if any(s.get("rank") for s in summary["sizes"]):
        render_report(out / "summary.json")
    exit_code = 1 if summary["n_failed"] else 0
    return ExperimentOutcome(records, summary, exit_code, out)


def read_trials_csv(path):
    """Parse ``trials.csv`` back into record dicts."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    records = []
    for row in rows:
        rec = {"trial": int(row["trial"]), "m": int(row["m"]), "n": int(row["n"]),
               "replicate": int(row["replicate"]), "seed": int(row["seed"]),
               "status": row["status"], "error": row["error"]}
        if rec["status"] == "ok":
            floats = lambda s: [float(v) for v in s.split(";")] if s else []  # noqa: E731
            rec.update({
                "rank": int(row["rank"]),
                "singular_values": floats(row["singular_values"]),
                "w_norm": float(row["w_norm"]),
                "gap_k": int(row["gap_k"]),
                "gap_threshold": float(row["gap_threshold"]),
                "gap_ratio": float(row["gap_ratio"]),
                "sa2": float(row["sa2"]),
                "sb2": float(row["sb2"]),
                "row_recovered": row["row_recovered"] == "1",
                "col_recovered": row["col_recovered"] == "1",
                "dist2_left": float(row["dist2_left"]),
                "dist2_right": float(row["dist2_right"]),
                "dist_bound": float(row["dist_bound"]),
                "corr_values": floats(row["corr_values"]),
                "residual_norm": float(row["residual_norm"]),
                "residual_bound": float(row["residual_bound"]),
            })
        records.append(rec)
    return records


_REQUIRED = ("m", "n", "rank", "median_top_scaled", "median_tail_scaled")


def render_report(summary_path, out_dir=None):
    """Write ``scaling.dat`` and a self-contained gnuplot script ``scaling.gp``.

    The plot shows ``s_i / sqrt(mn)`` for the protruding values and
    ``s_{r+1} / sqrt(m+n)`` against ``m + n``. Output is deterministic, so
    rendering twice gives identical files. Raises :class:`ReportError`
    before writing anything if the summary is malformed or has no trials.
    """
    summary_path = Path(summary_path)
    out_dir = Path(out_dir) if out_dir is not None else summary_path.parent
    try:
        summary = json.loads(summary_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportError(f"cannot read summary {summary_path}: {exc}") from exc
    sizes = summary.get("sizes") if isinstance(summary, dict) else None
    if not sizes:
        raise ReportError("summary has no trials")
    usable = [s for s in sizes if isinstance(s, dict) and s.get("rank")]
    if not usable:
        raise ReportError("summary has no completed trials")
    for s in usable:
        missing = [k for k in _REQUIRED if k not in s]
        if missing:
            raise ReportError(f"summary entry lacks {missing}")
    r = max(int(s["rank"]) for s in usable)
    usable = sorted(usable, key=lambda s: (s["m"] + s["n"], s["m"]))

    header = ["m_plus_n", "m", "n"] + [f"s{i + 1}_over_sqrt_mn" for i in range(r)] + \
        [f"s{r + 1}_over_sqrt_m_plus_n"]
    lines = ["# " + " ".join(header)]
    for s in usable:
        tops = list(s["median_top_scaled"]) + [float("nan")] * (r - len(s["median_top_scaled"]))
        tail = s["median_tail_scaled"]
        vals = [s["m"] + s["n"], s["m"], s["n"]] + tops + [float("nan") if tail is None else tail]
        lines.append(" ".join(format(v, ".17g") if isinstance(v, float) else str(v) for v in vals))
    table = "\n".join(lines) + "\n"

    plots = [f"$data using 1:{4 + i} with linespoints title 's_{i + 1}/sqrt(mn)'" for i in range(r)]
    plots.append(f"$data using 1:{4 + r} with linespoints title 's_{r + 1}/sqrt(m+n)'")
    script = (
        "# gnuplot script; run: gnuplot scaling.gp\n"
        "$data << EOD\n" + table + "EOD\n"
        "set terminal pngcairo size 800,500\n"
        "set output 'scaling.png'\n"
        "set xlabel 'm + n'\n"
        "set ylabel 'scaled singular value'\n"
        "set logscale x\n"
        "set key outside\n"
        "plot " + ", \\\n     ".join(plots) + "\n"
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "scaling.dat").write_text(table)
    (out_dir / "scaling.gp").write_text(script)
    return [out_dir / "scaling.dat", out_dir / "scaling.gp"]

