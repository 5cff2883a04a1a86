"""File formats: data and edge CSVs, count matrices with JSON sidecars,
fit and result serialization, and report tables."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from .benchmark import KAPPA_COLUMNS, REPORT_COLUMNS
from .counts import CountMatrix, ResamplePlan, index_pairs
from .graphs import DataMatrix, EdgeSet
from .mixture import LambdaFit, MixtureParams
from .pipeline import RopeResult

PathLike = Union[str, Path]

FORMAT_VERSION = 1


def write_data_csv(data: DataMatrix, path: PathLike) -> None:
    """Observations as CSV, one header row of column names.

    Unnamed columns get x0..x{d-1}, matching the node indices used in
    edge lists.
    """
    names = data.column_names
    if names is None:
        names = [f"x{k}" for k in range(data.d)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in data.values:
            writer.writerow([format(v, ".17g") for v in row])


def read_data_csv(path: PathLike) -> DataMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        values = np.array([[float(v) for v in row] for row in reader])
    if values.ndim != 2 or values.shape[1] != len(header):
        raise ValueError(f"malformed data CSV {path}")
    return DataMatrix(values=values, column_names=tuple(header))


def write_edges_csv(edges: EdgeSet, path: PathLike) -> None:
    """Edge list as CSV with header i,j, sorted, 0-based node indices."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j"])
        for i, j in sorted(edges.edges):
            writer.writerow([i, j])


def read_edges_csv(path: PathLike, n_nodes: int) -> EdgeSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["i", "j"]:
            raise ValueError(f"expected header i,j in {path}")
        pairs = [(int(row[0]), int(row[1])) for row in reader]
    return EdgeSet.from_pairs(n_nodes, pairs)


def counts_sidecar_path(csv_path: PathLike) -> Path:
    return Path(str(csv_path) + ".meta.json")


def write_counts_csv(W: CountMatrix, path: PathLike,
                     sidecar: Optional[PathLike] = None) -> None:
    """Count matrix as CSV of edges with any nonzero count, plus a JSON sidecar.

    Columns are i, j, then one count column per penalty; edges absent from
    the CSV have count zero everywhere. The sidecar records the resampling
    settings and the penalty grid needed to rebuild the matrix.
    """
    sidecar = sidecar if sidecar is not None else counts_sidecar_path(path)
    rows = W.nonzero_rows()
    pairs = index_pairs(rows, W.d)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j"] + [f"w_{k}" for k in range(len(W.lambdas))])
        for (i, j), r in zip(pairs, rows):
            writer.writerow([i, j] + [int(c) for c in W.counts[r]])
    meta = {
        "format_version": FORMAT_VERSION,
        "d": int(W.d), "n": int(W.n), "B": int(W.B),
        "lambdas": [float(l) for l in W.lambdas],
        "resample": W.plan.kind,
        "subsample_size": (None if W.plan.subsample_size is None
                           else int(W.plan.subsample_size)),
        "weakness": float(W.plan.weakness),
        "seed": int(W.plan.seed),
    }
    with open(sidecar, "w") as fh:
        json.dump(meta, fh, indent=1)
        fh.write("\n")


def read_counts_csv(path: PathLike,
                    sidecar: Optional[PathLike] = None) -> CountMatrix:
    sidecar = sidecar if sidecar is not None else counts_sidecar_path(path)
    with open(sidecar) as fh:
        meta = json.load(fh)
    d, n, B = meta["d"], meta["n"], meta["B"]
    lambdas = np.array(meta["lambdas"], dtype=float)
    plan = ResamplePlan(kind=meta["resample"], B=B,
                        subsample_size=meta["subsample_size"],
                        weakness=meta["weakness"], seed=meta["seed"])
    p = d * (d - 1) // 2
    counts = np.zeros((p, len(lambdas)), dtype=np.int32)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            i, j = int(row[0]), int(row[1])
            r = i * (2 * d - i - 1) // 2 + (j - i - 1)
            counts[r] = [int(v) for v in row[2:]]
    return CountMatrix(counts=counts, lambdas=lambdas, B=B, d=d, n=n, plan=plan)


def lambda_fit_to_dict(fit: LambdaFit) -> dict:
    p = fit.params
    return {"lambda": float(fit.lam), "pi": float(p.pi), "mu1": float(p.mu1),
            "sigma1": float(p.sigma1), "gamma": float(p.gamma),
            "mu2": float(p.mu2), "tau1": float(p.tau1), "tau2": float(p.tau2),
            "c": int(p.c), "loglik": float(fit.loglik),
            "separation": float(fit.separation), "u_shaped": bool(fit.u_shaped)}


def lambda_fit_from_dict(entry: dict, B: Optional[int] = None) -> LambdaFit:
    params = MixtureParams(pi=entry["pi"], mu1=entry["mu1"],
                           sigma1=entry["sigma1"], gamma=entry["gamma"],
                           mu2=entry["mu2"], tau1=entry["tau1"],
                           tau2=entry["tau2"], c=entry["c"])
    return LambdaFit(lam=entry["lambda"], params=params, loglik=entry["loglik"],
                     separation=entry["separation"],
                     u_shaped=entry["u_shaped"], B=B)


def write_rope_json(result: RopeResult, path: PathLike) -> None:
    """Joint-procedure result as JSON: metadata, per-penalty fits, edges by q.

    The edges array covers edges selected at least once at lambda_b and is
    sorted ascending by q-value, then by node pair.
    """
    counts = result.counts_at_lambda_b()
    rows = np.flatnonzero(counts)
    pairs = index_pairs(rows, result.W.d)
    edges = [{"i": int(i), "j": int(j),
              "count_at_lambda_b": int(counts[r]),
              "qvalue": float(result.q_curve[counts[r]])}
             for (i, j), r in zip(pairs, rows)]
    edges.sort(key=lambda e: (e["qvalue"], e["i"], e["j"]))
    payload = {
        "format_version": FORMAT_VERSION,
        "d": int(result.W.d), "n": int(result.W.n), "B": int(result.W.B),
        "lambdas": [float(l) for l in result.lambdas],
        "lambda_a": float(result.lambda_a),
        "lambda_b": float(result.lambda_b),
        "pi_star": float(result.pi_star),
        "final_fit": lambda_fit_to_dict(result.final_fit),
        "fits": [None if f is None else lambda_fit_to_dict(f)
                 for f in result.fits],
        "constrained_fits": [None if f is None else lambda_fit_to_dict(f)
                             for f in result.constrained_fits],
        "q_curve": [float(q) for q in result.q_curve],
        "edges": edges,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def write_gcurve_csv(result: RopeResult, path: PathLike) -> None:
    """First-pass separation curve as CSV (lambda, g, pi, loglik)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "g", "pi", "loglik"])
        for fit in result.fits:
            if fit is None:
                continue
            writer.writerow([format(fit.lam, ".17g"),
                             format(fit.separation, ".17g"),
                             format(fit.params.pi, ".17g"),
                             format(fit.loglik, ".17g")])


def write_report_csv(rows: Sequence[dict], path: PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def write_kappa_csv(rows: Sequence[dict], path: PathLike) -> None:
    """Agreement table; an undefined kappa is written as NA."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=KAPPA_COLUMNS)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            if out.get("kappa") is None:
                out["kappa"] = "NA"
            writer.writerow(out)


def read_report_csv(path: PathLike) -> List[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
