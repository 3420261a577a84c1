"""Named experiments that write trajectories and metric summaries to disk."""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import metrics
from .charts import line_chart, thin
from .dynamics import ALL_MODELS, SCORE_MODELS, ModelKind, ModelParams
from .integrator import DEFAULT_BACKEND, IntegratorConfig, convergence_check, integrate
from .payoffs import (
    MatrixGame,
    constant_signal,
    contractivity_report,
    example1_signal,
    example2_signal,
    good_rps,
    source_from_dict,
    standard_rps,
)
from .simplex import IntegrationDiverged, softmax, vertex

TAIL_FRACTION = 0.02
KL_CONSERVATION_TOL = 1e-4
DIVERGENCE_SLOPE = 0.01
STABILITY_TOL = 1e-3
EQUILIBRIUM_SCALE = 1.0
LAMBDA_SWEEP = (0.5, 1.0, 2.0)
CONTRACTIVE_STARTS = 10


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    models: tuple
    params: ModelParams = ModelParams()
    integ: IntegratorConfig = IntegratorConfig()
    seed: int = 0
    outdir: Path = Path("results")
    x0: Optional[tuple] = None
    jobs: int = 1


@dataclass(frozen=True)
class Job:
    experiment: str
    label: str
    model: ModelKind
    params: ModelParams
    x0: tuple
    source: dict
    integ: IntegratorConfig
    outdir: str
    seed: int = 0
    extra: dict = field(default_factory=dict)


DEFAULTS = {
    "example1": {"models": ("bnn", "smith", "logit", "tp"), "T": 500.0, "record_every": 10},
    "example2": {"models": ("rd-latency",), "T": 500.0, "record_every": 10},
    "exrd-counterexample": {"models": ("exrd",), "T": 20.0, "record_every": 10},
    "zerosum-cycle": {"models": ("rd", "sho-ftrl", "sho-dp"), "T": 500.0, "record_every": 10},
    "contractive": {"models": ("rd", "dp", "sho-ftrl", "sho-dp"), "T": 200.0, "record_every": 10},
    "passivity-scan": {"models": tuple(m.value for m in ALL_MODELS), "T": 200.0, "record_every": 50},
}
EXPERIMENTS = tuple(DEFAULTS)


def default_spec(name, **overrides):
    if name not in DEFAULTS:
        raise ValueError(f"unknown experiment {name!r}")
    d = DEFAULTS[name]
    integ = IntegratorConfig(
        dt=overrides.pop("dt", 1e-3), T=overrides.pop("T", d["T"]),
        record_every=overrides.pop("record_every", d["record_every"]),
    )
    params = ModelParams(lam=overrides.pop("lam", 1.0), gamma=overrides.pop("gamma", 1.0))
    models = tuple(ModelKind.parse(m) for m in overrides.pop("models", None) or d["models"])
    if not models:
        raise ValueError("model list must not be empty")
    outdir = Path(overrides.pop("outdir", Path("results") / name))
    return ExperimentSpec(name, models, params, integ, outdir=outdir, **overrides)


def _f(v):
    return None if v is None else float(v)


def _curve(times, values):
    t, v = thin(times, values)
    return t.tolist(), v.tolist()


def _config_record(job):
    return {
        "dt": job.integ.dt, "T": job.integ.T, "record_every": job.integ.record_every,
        "lambda": job.params.lam, "gamma": job.params.gamma, "seed": job.seed,
        "x0": list(job.x0), "source": job.source.get("name"), "backend": DEFAULT_BACKEND,
    }


def _equilibria(kind, n):
    """Forced equilibrium pairs ``(p*, x*)`` used for the EI pairing.

    Every model rests at the uniform point under a zero payoff. Near each
    vertex: models with a softmax target use ``p* = s e_i`` and
    ``x* = softmax(p*)``; every other model rests anywhere (in the closure of
    its rest set) under a constant payoff, so ``x* = e_i`` with ``p* = 0``.
    """
    pairs = [(np.zeros(n), np.full(n, 1.0 / n))]
    for i in range(1, n + 1):
        e = vertex(i, n)
        if kind in (ModelKind.LOGIT, ModelKind.EXRD):
            p_star = EQUILIBRIUM_SCALE * e
            pairs.append((p_star, softmax(p_star)))
        else:
            pairs.append((np.zeros(n), e))
    return pairs


def regret_evidence(times, curves, bounds):
    half = len(times) // 2
    slopes = [metrics.tail_slope(times, c) for c in curves.T]
    if bounds is not None:
        within = bool(np.all(curves <= bounds[None, :] + metrics.REGRET_SLACK))
    else:
        rise = curves[half:] - curves[half][None, :]
        within = bool(rise.max() <= metrics.REGRET_SLACK)
    return {"max_slope": max(slopes), "slopes": slopes, "within_bound": within}


def run_job(job):
    """Integrate one model and write its per-run artifacts; returns a summary dict."""
    kind = job.model
    src = source_from_dict(job.source)
    x0 = np.array(job.x0)
    n = x0.size
    out = Path(job.outdir)
    summary = {"model": kind.value, "experiment": job.experiment, "label": job.label,
               "config": _config_record(job)}
    try:
        traj = integrate(kind, job.params, x0, src, job.integ)
    except IntegrationDiverged as exc:
        summary.update(error=str(exc), diverged_at=exc.time)
        _dump(out / f"{job.label}.json", summary)
        return summary, {}

    traj.to_csv(out / f"{job.label}.csv")
    reg = metrics.regret_report(traj, kind, job.params, x0)
    pairs = _equilibria(kind, n)
    pas = metrics.passivity_report(traj, equilibrium=pairs[0])
    ei_curves = [pas.ei_curve] + [metrics.ei_curve(traj, p, x) for p, x in pairs[1:]]
    avg = metrics.average_reward(traj)

    curves = {f"regret_e{i + 1}": reg.vertex_regret_curves[:, i] for i in range(n)}
    curves["delta"] = pas.delta_curve
    for j, c in enumerate(ei_curves):
        curves[f"ei_{j}"] = c
    curves["average_reward"] = avg
    metrics.write_curves(out / f"{job.label}_curves.csv", traj.times, curves)

    target = src.known_ne if isinstance(src, MatrixGame) and src.known_ne is not None else None
    conv = convergence_check(traj, target, TAIL_FRACTION) if target is not None else None
    summary.update(
        sup_regret=reg.sup_regret,
        storage_bound=_f(reg.storage_bound),
        bounded_verdict=reg.bounded_verdict,
        delta_min=pas.delta_min,
        ei_min=float(min(c.min() for c in ei_curves)),
        final_avg_reward=float(avg[-1]),
        final_dist=None if conv is None else conv["final_dist"],
        final_strategy=traj.strategies[-1].tolist(),
        evidence={
            "regret": regret_evidence(traj.times, reg.vertex_regret_curves, reg.vertex_bounds),
            "delta_stable": metrics.running_min_stable(pas.delta_curve, STABILITY_TOL),
            "ei_stable": all(metrics.running_min_stable(c, STABILITY_TOL) for c in ei_curves),
        },
    )
    if conv is not None:
        summary["converged"] = conv["converged"]
    plots = {"average_reward": _curve(traj.times, avg)}
    for i in range(n):
        plots[f"regret_e{i + 1}"] = _curve(traj.times, reg.vertex_regret_curves[:, i])

    if kind is ModelKind.RD_LATENCY:
        q = metrics.qt_integrand(traj)
        summary["qt_min"] = float(q.min())
        summary["regret_growing"] = [
            not metrics.running_max_stable(c, STABILITY_TOL) for c in reg.vertex_regret_curves.T
        ]
        plots["qt"] = _curve(traj.times, q)
    if target is not None:
        kl = metrics.kl_divergence(target, traj.strategies)
        summary["kl_drift"] = float(np.max(np.abs(kl - kl[0])))
        summary["kl_conserved"] = summary["kl_drift"] <= KL_CONSERVATION_TOL
        plots["dist_to_ne"] = _curve(traj.times, np.linalg.norm(traj.strategies - target, axis=1))
        plots["kl_to_ne"] = _curve(traj.times, kl)
    if kind in SCORE_MODELS:
        summary["final_score"] = traj.states[-1, :n].tolist()
    summary.update(job.extra)
    _dump(out / f"{job.label}.json", summary)
    return summary, plots


def _dump(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _signal_jobs(spec, source, x0, sweep_latency=False):
    jobs = []
    for kind in spec.models:
        lams = [spec.params.lam]
        if sweep_latency and kind is ModelKind.RD_LATENCY:
            lams = sorted(set(LAMBDA_SWEEP) | {spec.params.lam})
        for lam in lams:
            label = kind.value if len(lams) == 1 else f"{kind.value}_lambda-{lam:g}"
            params = replace(spec.params, lam=lam)
            jobs.append(Job(spec.name, label, kind, params, tuple(x0), source, spec.integ,
                            str(spec.outdir), spec.seed, {"lambda": lam}))
    return jobs


def _x0(spec, n):
    return tuple(spec.x0) if spec.x0 is not None else tuple(np.full(n, 1.0 / n))


def build_jobs(spec):
    name = spec.name
    if name == "example1":
        return _signal_jobs(spec, example1_signal().to_dict(), _x0(spec, 2))
    if name == "example2":
        return _signal_jobs(spec, example2_signal().to_dict(), _x0(spec, 2), sweep_latency=True)
    if name == "exrd-counterexample":
        return _signal_jobs(spec, constant_signal([1.0, 0.0], name="e1").to_dict(), _x0(spec, 2))
    if name == "zerosum-cycle":
        x0 = spec.x0 if spec.x0 is not None else (0.5, 0.25, 0.25)
        return _signal_jobs(replace(spec, x0=x0), standard_rps().to_dict(), x0)
    if name == "contractive":
        rng = np.random.default_rng(spec.seed)
        starts = [tuple(rng.dirichlet(np.ones(3))) for _ in range(CONTRACTIVE_STARTS)]
        if spec.x0 is not None:
            starts = [tuple(spec.x0)]
        jobs = []
        for kind in spec.models:
            for s, x0 in enumerate(starts):
                jobs.append(Job(name, f"{kind.value}_start{s:02d}", kind, spec.params, x0,
                                good_rps().to_dict(), spec.integ, str(spec.outdir), spec.seed,
                                {"start": s}))
        return jobs
    if name == "passivity-scan":
        signals = [example1_signal(), example2_signal(), constant_signal([1.0, 0.0], name="e1")]
        jobs = []
        for kind in spec.models:
            for sig in signals:
                jobs.append(Job(name, f"{kind.value}_{sig.name}", kind, spec.params,
                                _x0(spec, 2), sig.to_dict(), spec.integ, str(spec.outdir),
                                spec.seed, {"signal": sig.name}))
        return jobs
    raise ValueError(f"unknown experiment {name!r}")


def _charts(spec, results):
    out = spec.outdir
    ok = [(s, p) for s, p in results if p]
    avg = {s["label"]: p["average_reward"] for s, p in ok}
    if spec.name == "passivity-scan":
        return
    hlines = None
    if spec.name == "example1":
        hlines = {"x_opt": 0.609, "e2": 0.5, "e1": 0.0}
    line_chart(out / "average_reward.svg", avg, f"{spec.name}: average reward",
               ylabel="average reward", hlines=hlines)
    n = max((len([k for k in p if k.startswith("regret_e")]) for _, p in ok), default=0)
    for i in range(1, n + 1):
        key = f"regret_e{i}"
        line_chart(out / f"{key}.svg", {s["label"]: p[key] for s, p in ok if key in p},
                   f"{spec.name}: regret w.r.t. e{i}", ylabel="regret")
    for key, ylabel in (("qt", "Q(t) integrand"), ("dist_to_ne", "|x - x*|"), ("kl_to_ne", "KL(x* || x)")):
        series = {s["label"]: p[key] for s, p in ok if key in p}
        if series:
            line_chart(out / f"{key}.svg", series, f"{spec.name}: {ylabel}", ylabel=ylabel)


def _reference_rows(spec):
    """Fixed reference policies on the example1 signal."""
    sig = example1_signal()
    policies = {
        "x_opt": metrics.best_response_policy(sig),
        "e1": metrics.fixed_policy(vertex(1, 2)),
        "e2": metrics.fixed_policy(vertex(2, 2)),
    }
    rows = {}
    for name, pol in policies.items():
        traj = metrics.reference_trajectory(sig, pol, spec.integ)
        rows[name] = float(metrics.average_reward(traj)[-1])
    return rows


def run(spec):
    """Run ``spec``; returns ``(exit_code, summaries)`` with artifacts written to ``spec.outdir``."""
    outdir = Path(spec.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if not os.access(outdir, os.W_OK):
        raise PermissionError(f"output directory {outdir} is not writable")
    spec = replace(spec, outdir=outdir)
    jobs = build_jobs(spec)
    if spec.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(run_job, jobs))
    else:
        results = [run_job(j) for j in jobs]
    summaries = [s for s, _ in results]

    report = {"experiment": spec.name, "runs": summaries}
    if spec.name == "example1":
        report["reference_average_reward"] = _reference_rows(spec)
    if spec.name == "contractive":
        report["contractivity"] = contractivity_report(good_rps(), 1000, spec.seed)
        report["per_model"] = _aggregate_starts(summaries)
    if spec.name == "passivity-scan" and set(spec.models) == set(ALL_MODELS):
        table = classify(summaries)
        report["classification"] = table
        write_classification(outdir, table)
    _dump(outdir / "summary.json", report)
    _charts(spec, results)
    diverged = any("error" in s for s in summaries)
    return (2 if diverged else 0), report


def _aggregate_starts(summaries):
    agg = {}
    for s in summaries:
        row = agg.setdefault(s["model"], {"final_dist": 0.0, "converged": True, "starts": 0})
        row["starts"] += 1
        if "error" in s:
            row["converged"] = False
            row["final_dist"] = None
            continue
        if row["final_dist"] is not None:
            row["final_dist"] = max(row["final_dist"], s["final_dist"])
        row["converged"] = row["converged"] and s["converged"]
    return agg


def classify(summaries):
    """Passivity-based classification table from scan summaries.

    Regret is ``diverging`` when some vertex regret grows with slope at least
    ``DIVERGENCE_SLOPE`` over the last half of some run, or leaves its
    certificate; otherwise ``bounded``. The delta and EI pairings are
    ``bounded`` when no run sets a new running minimum in its last quarter.
    """
    by_model = {}
    for s in summaries:
        by_model.setdefault(s["model"], []).append(s)
    missing = [m.value for m in ALL_MODELS if m.value not in by_model]
    if missing:
        raise ValueError(f"incomplete scan: no results for {', '.join(missing)}")
    rows = []
    for kind in ALL_MODELS:
        runs = by_model[kind.value]
        if any("error" in r for r in runs):
            rows.append({"model": kind.value, "finite_regret_evidence": "diverging",
                         "delta_evidence": "n/a", "ei_evidence": "n/a"})
            continue
        ev = [r["evidence"] for r in runs]
        growing = any(e["regret"]["max_slope"] >= DIVERGENCE_SLOPE for e in ev)
        within = all(e["regret"]["within_bound"] for e in ev)
        rows.append({
            "model": kind.value,
            "finite_regret_evidence": "bounded" if within and not growing else "diverging",
            "delta_evidence": "bounded" if all(e["delta_stable"] for e in ev) else "diverging",
            "ei_evidence": "bounded" if all(e["ei_stable"] for e in ev) else "diverging",
            "max_regret_slope": max(e["regret"]["max_slope"] for e in ev),
            "delta_min": min(r["delta_min"] for r in runs),
            "ei_min": min(r["ei_min"] for r in runs),
        })
    return rows


def write_classification(outdir, table):
    outdir = Path(outdir)
    _dump(outdir / "classification.json", table)
    cols = ["model", "finite_regret_evidence", "delta_evidence", "ei_evidence"]
    with open(outdir / "classification.csv", "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in table:
            fh.write(",".join(str(row[c]) for c in cols) + "\n")


def classify_dir(indir):
    """Rebuild the classification table from a passivity-scan output directory."""
    indir = Path(indir)
    path = indir / "summary.json"
    if path.exists():
        with open(path) as fh:
            summaries = json.load(fh)["runs"]
    else:
        summaries = []
        for p in sorted(indir.glob("*.json")):
            with open(p) as fh:
                obj = json.load(fh)
            if isinstance(obj, dict) and obj.get("experiment") == "passivity-scan":
                summaries.append(obj)
    table = classify(summaries)
    write_classification(indir, table)
    return table
