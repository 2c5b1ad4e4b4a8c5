"""Command-line entry point.

Subcommands: calibrate, simulate, scaling, kernel, covariance, diagnostics,
report.  Every run is reproducible from (config, master_seed): primary
outputs are byte-identical across reruns, and wall-clock timestamps go only
to the sidecar log (run.log).  Exit codes: 0 success, 1 input/tool error,
2 ran fine but an acceptance flag failed (so CI can gate on the science).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from wignerlab.ensemble import EnsembleConfig, build_matrix, exceedance_stats
from wignerlab.experiments import (
    DEFAULT_BANDS,
    RunPlan,
    assemble_report,
    collect_traces,
)
from wignerlab.heavytail import calibrate, char_fn, truncation_params
from wignerlab.kernel import QuadratureParams, evaluate_C, kernel_value_record
from wignerlab.spectral import (
    TRACE_CSV_HEADER,
    diag_concentration,
    leave_one_out,
    quadratic_form_stats,
    trace_csv_rows,
)

__all__ = ["CliInvocation", "dispatch", "main"]

SUBCOMMANDS = ("calibrate", "simulate", "scaling", "kernel", "covariance",
               "diagnostics", "report")

DEFAULT_CONFIG = {
    "alpha": 3.0,
    "epsilon": 0.01,
    "symmetry_class": "real",
    "mode": "raw",
    "N_list": [128, 256, 512, 1024],
    "replicates_per_N": 400,
    "z_grid": [[0.0, 2.0], [1.0, 1.0], [0.5, 0.8], [0.0, 3.0],
               [0.0, -2.0], [1.0, -1.0], [0.5, -0.8], [0.0, -3.0]],
    "master_seed": 20260810,
    "threads": 4,
    "quadrature": {},
    "kernel_pairs": [[[0.0, 2.0], [0.0, 2.0]], [[0.0, 2.0], [1.0, 1.0]]],
    "covariance": {"N": 1024, "replicates": 2000, "pairs": [[[0.0, 2.0], [1.0, 1.0]]]},
    "diagnostics": {"N_list": [128, 256, 512, 1024], "replicates": 100,
                    "z": [0.0, 2.0], "exceedance_replicates": 200,
                    "exceedance_N": 256},
    "bands": dict(DEFAULT_BANDS),
}


@dataclass
class CliInvocation:
    subcommand: str
    config_path: str | None = None
    output_dir: str = "out"
    overrides: list = field(default_factory=list)
    threads: int | None = None
    master_seed: int | None = None
    traces_path: str | None = None


class InputError(Exception):
    pass


def _parse_override(text: str):
    if "=" not in text:
        raise InputError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _apply_override(config: dict, key: str, value) -> None:
    node = config
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise InputError(f"override path {key!r} crosses a non-object")
    node[parts[-1]] = value


def _load_config(inv: CliInvocation) -> dict:
    config = json.loads(json.dumps(DEFAULT_CONFIG))  # deep copy
    if inv.config_path is not None:
        path = Path(inv.config_path)
        if not path.is_file():
            raise InputError(f"config file not found: {path}")
        try:
            user = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"config file does not parse as JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise InputError("config file must hold a JSON object")
        for key, value in user.items():
            if isinstance(value, dict) and isinstance(config.get(key), dict):
                config[key].update(value)
            else:
                config[key] = value
    for item in inv.overrides:
        key, value = _parse_override(item)
        _apply_override(config, key, value)
    if inv.master_seed is not None:
        config["master_seed"] = inv.master_seed
    if inv.threads is not None:
        config["threads"] = inv.threads
    return config


def _plan_from_config(config: dict) -> RunPlan:
    return RunPlan(alpha=config["alpha"], epsilon=config["epsilon"],
                   symmetry_class=config["symmetry_class"], mode=config["mode"],
                   N_list=tuple(int(n) for n in config["N_list"]),
                   replicates_per_N=int(config["replicates_per_N"]),
                   z_grid=tuple(complex(re, im) for re, im in config["z_grid"]),
                   master_seed=int(config["master_seed"]),
                   threads=int(config["threads"]))


def _quadrature_from_config(config: dict) -> QuadratureParams:
    return QuadratureParams(**config.get("quadrature", {}))


def _out_dir(inv: CliInvocation) -> Path:
    out = Path(inv.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _overrides_dict(inv: CliInvocation) -> dict:
    return dict(_parse_override(item) for item in inv.overrides)


def _log(out: Path, message: str) -> None:
    with open(out / "run.log", "a") as fh:
        fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {message}\n")


def _csv_preamble(config: dict, inv: CliInvocation):
    lines = ["# wignerlab traces v1",
             f"# alpha={config['alpha']!r} mode={config['mode']} class={config['symmetry_class']}"
             f" seed={config['master_seed']}"]
    for key, value in _overrides_dict(inv).items():
        lines.append(f"# override {key}={json.dumps(value)}")
    return lines


def _cmd_calibrate(inv: CliInvocation, config: dict, out: Path) -> int:
    dist = calibrate(config["alpha"])
    (out / "distspec.json").write_text(dist.to_json() + "\n")
    trunc = truncation_params(dist, N=int(config.get("trunc_N", 1000)), epsilon=config["epsilon"])
    (out / "truncation.json").write_text(trunc.to_json() + "\n")
    _log(out, f"calibrate alpha={config['alpha']}")
    return 0


def _cmd_simulate(inv: CliInvocation, config: dict, out: Path) -> int:
    from wignerlab.experiments import run_ensemble

    plan = _plan_from_config(config)
    csv_path = out / "traces.csv"
    # traces arrive in completion order; write them sorted by (N, replicate)
    # so the file is byte-identical regardless of the thread schedule
    keyed = []
    for trace in run_ensemble(plan):
        keyed.append(((trace.N, trace.replicate_index),
                      trace_csv_rows(trace, plan.alpha, plan.mode)))
    keyed.sort(key=lambda item: item[0])
    with open(csv_path, "w") as fh:
        for line in _csv_preamble(config, inv):
            fh.write(line + "\n")
        fh.write(TRACE_CSV_HEADER + "\n")
        for _, rows in keyed:
            for row in rows:
                fh.write(row + "\n")
    _log(out, f"simulate wrote {len(keyed)} replicates to {csv_path}")
    return 0


def read_traces_csv(path) -> tuple[dict, dict]:
    """Read a traces CSV back into {N: {z: complex array}} plus metadata."""
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("replicate,"):
                continue
            rep, N, alpha, mode, re_z, im_z, re_t, im_t = line.split(",")
            rows.append((int(rep), int(N), float(alpha), mode,
                         complex(float(re_z), float(im_z)),
                         complex(float(re_t), float(im_t))))
    if not rows:
        raise InputError(f"no trace rows found in {path}")
    meta["alpha"] = rows[0][2]
    meta["mode"] = rows[0][3]
    store: dict = {}
    for rep, N, _alpha, _mode, z, t in rows:
        store.setdefault(N, {}).setdefault(z, {})[rep] = t
    out = {}
    for N, per_z in store.items():
        out[N] = {z: np.asarray([d[r] for r in sorted(d)]) for z, d in per_z.items()}
    return out, meta


def _store_from_csv_or_run(inv: CliInvocation, config: dict, out: Path, plan: RunPlan):
    """Trace store aligned with plan.z_grid, either read back or computed."""
    if inv.traces_path is not None:
        per_z, meta = read_traces_csv(inv.traces_path)
        store = {}
        for N, zmap in per_z.items():
            cols = []
            for z in plan.z_grid:
                if complex(z) not in zmap:
                    raise InputError(f"traces file lacks grid point {z}")
                cols.append(zmap[complex(z)])
            store[N] = np.stack(cols, axis=1)
        return store
    return collect_traces(plan)


def _cmd_scaling(inv: CliInvocation, config: dict, out: Path) -> int:
    from wignerlab.experiments import variance_scaling_fit

    plan = _plan_from_config(config)
    store = _store_from_csv_or_run(inv, config, out, plan)
    target = 2.0 - plan.alpha / 2.0
    table = []
    for i, z in enumerate(plan.z_grid):
        fit = variance_scaling_fit({N: store[N][:, i] for N in store}, target=target)
        table.append({"z": [complex(z).real, complex(z).imag],
                      "slope": fit.slope, "stderr": fit.stderr, "target": target})
    payload = {"alpha": plan.alpha, "mode": plan.mode, "target": target,
               "overrides": _overrides_dict(inv), "fits": table}
    _write_json(out / "scaling.json", payload)
    with open(out / "scaling.txt", "w") as fh:
        for row in table:
            fh.write(f"z={row['z'][0]:+g}{row['z'][1]:+g}j slope={row['slope']:+.4f} "
                     f"stderr={row['stderr']:.4f} target={row['target']:+.4f}\n")
    _log(out, "scaling table written")
    return 0


def _cmd_kernel(inv: CliInvocation, config: dict, out: Path) -> int:
    dist = calibrate(config["alpha"])
    params = _quadrature_from_config(config)
    records = []
    for (re1, im1), (re2, im2) in config["kernel_pairs"]:
        kv = evaluate_C(complex(re1, im1), complex(re2, im2), dist, params)
        kv_swap = evaluate_C(complex(re2, im2), complex(re1, im1), dist, params)
        rec = kernel_value_record(kv, dist)
        rec["symmetric_pair_ok"] = bool(abs(kv.value - kv_swap.value)
                                        <= kv.est_abs_err + kv_swap.est_abs_err)
        records.append(rec)
    _write_json(out / "kernel.json", {"overrides": _overrides_dict(inv), "values": records})
    _log(out, f"kernel values written for {len(records)} pairs")
    return 0


def _cmd_covariance(inv: CliInvocation, config: dict, out: Path) -> int:
    from wignerlab.experiments import empirical_covariance

    cov_cfg = config["covariance"]
    pairs = [(complex(a, b), complex(c, d)) for (a, b), (c, d) in cov_cfg["pairs"]]
    zs = sorted({z for pair in pairs for z in pair}, key=lambda w: (w.real, w.imag))
    plan = _plan_from_config(config)
    plan = RunPlan(alpha=plan.alpha, epsilon=plan.epsilon,
                   symmetry_class=plan.symmetry_class, mode=plan.mode,
                   N_list=(int(cov_cfg["N"]),),
                   replicates_per_N=int(cov_cfg["replicates"]),
                   z_grid=tuple(zs), master_seed=plan.master_seed,
                   threads=plan.threads)
    store = _store_from_csv_or_run(inv, config, out, plan)
    dist = calibrate(plan.alpha)
    params = _quadrature_from_config(config)
    col = {z: i for i, z in enumerate(plan.z_grid)}
    rows = []
    for z, zp in pairs:
        kv = evaluate_C(z, zp, dist, params)
        for N in sorted(store):
            emp = empirical_covariance(store[N][:, col[z]], store[N][:, col[zp]],
                                       N, plan.alpha)
            rows.append({"z": [z.real, z.imag], "zprime": [zp.real, zp.imag], "N": N,
                         "sample_size": store[N].shape[0],
                         "empirical_re": emp.real, "empirical_im": emp.imag,
                         "kernel_re": kv.value.real, "kernel_im": kv.value.imag,
                         "kernel_est_abs_err": kv.est_abs_err,
                         "rel_err": abs(emp - kv.value) / abs(kv.value)})
    _write_json(out / "covariance.json", {"overrides": _overrides_dict(inv), "rows": rows})
    with open(out / "covariance.txt", "w") as fh:
        for r in rows:
            fh.write(f"(z={r['z']}, z'={r['zprime']}, N={r['N']}): "
                     f"empirical={r['empirical_re']:+.6f}{r['empirical_im']:+.6f}j "
                     f"kernel={r['kernel_re']:+.6f}{r['kernel_im']:+.6f}j "
                     f"rel_err={r['rel_err']:.3f}\n")
    _log(out, "covariance table written")
    return 0


def _cmd_diagnostics(inv: CliInvocation, config: dict, out: Path) -> int:
    diag_cfg = config["diagnostics"]
    dist = calibrate(config["alpha"])
    seed = int(config["master_seed"])
    payload: dict = {"overrides": _overrides_dict(inv)}
    rng = np.random.default_rng(seed)

    # leave-one-out identity residuals on random small samples
    loo = []
    for trial in range(50):
        N = int(rng.integers(20, 201))
        cfg = EnsembleConfig(N=N, dist=dist, seed=seed)
        sample = build_matrix(cfg, replicate_index=1000 + trial)
        z = complex(rng.uniform(-2, 2), rng.choice([-1, 1]) * rng.uniform(0.3, 2.0))
        k = int(rng.integers(0, N))
        res = leave_one_out(sample, z, k)
        loo.append({"N": N, "k": k, "z": [z.real, z.imag],
                    "residual": abs(res.lhs - res.rhs) / (1.0 + abs(res.lhs)),
                    "bound_ok": res.bound_ok,
                    "denom_sign_ok": res.denom_sign_ok,
                    "denom_mag_ok": res.denom_mag_ok})
    payload["leave_one_out"] = {
        "max_residual": max(r["residual"] for r in loo),
        "all_bound_ok": all(r["bound_ok"] for r in loo),
        "all_denom_ok": all(r["denom_sign_ok"] and r["denom_mag_ok"] for r in loo),
        "trials": loo,
    }

    # quadratic-form statistics against their bounds
    N_q = 200
    cfg = EnsembleConfig(N=N_q, dist=dist, seed=seed)
    G = np.linalg.inv((1 + 1j) * np.eye(N_q) - build_matrix(cfg, 0).entries)
    qf = quadratic_form_stats(G, dist, N_draws=2000, rng=np.random.default_rng(seed + 1),
                              epsilon=config["epsilon"])
    qf["X_bound_ok"] = bool(qf["EX2_hat"] <= qf["boundX"] * (1 + 4 / np.sqrt(2000)))
    qf["E_bound_ok"] = bool(qf["EE2_hat"] <= qf["boundE"])
    payload["quadratic_form"] = qf

    # diagonal concentration (cut ensemble realizes the vanishing deviation)
    z_diag = complex(*diag_cfg["z"])
    means = {}
    for N in diag_cfg["N_list"]:
        cfg = EnsembleConfig(N=int(N), dist=dist, mode="truncated",
                             epsilon=config["epsilon"], seed=seed)
        samples = (build_matrix(cfg, rep) for rep in range(int(diag_cfg["replicates"])))
        means.update(diag_concentration(samples, z_diag))
    payload["diag_concentration"] = {
        "z": diag_cfg["z"],
        "mean_max_dev": {str(N): means[N] for N in sorted(means)},
        "strictly_decreasing": all(means[a] > means[b] for a, b in
                                   zip(sorted(means), sorted(means)[1:])),
    }

    # exceedance counts vs the exact tail expectation
    N_e = int(diag_cfg["exceedance_N"])
    reps = int(diag_cfg["exceedance_replicates"])
    cfg = EnsembleConfig(N=N_e, dist=dist, epsilon=config["epsilon"], seed=seed)
    counts = [exceedance_stats(cfg, rep)["observed_count"] for rep in range(reps)]
    expected = exceedance_stats(cfg, 0)["expected_count"]
    payload["exceedance"] = {
        "N": N_e, "replicates": reps,
        "mean_observed": float(np.mean(counts)),
        "expected": expected,
        "within_4_sigma": bool(abs(np.mean(counts) - expected)
                               <= 4.0 * np.sqrt(expected / reps)),
    }

    # characteristic-function expansion gap, scaled by N^(alpha/2)
    lam = -1j
    gaps = {}
    for N in (100, 1000, 10000, 100000):
        trunc = truncation_params(dist, N, config["epsilon"])
        exact, expansion = char_fn(dist, N, lam, trunc)
        gaps[str(N)] = float(N ** (dist.alpha / 2.0) * abs(exact - expansion))
    ordered = [gaps[k] for k in ("100", "1000", "10000", "100000")]
    payload["char_fn_gap"] = {"lambda": [lam.real, lam.imag], "scaled_gap": gaps,
                              "decreasing": all(a > b for a, b in zip(ordered, ordered[1:]))}

    _write_json(out / "diagnostics.json", payload)
    _log(out, "diagnostics written")
    return 0


def _cmd_report(inv: CliInvocation, config: dict, out: Path) -> int:
    plan = _plan_from_config(config)
    store = _store_from_csv_or_run(inv, config, out, plan)
    cov_cfg = config["covariance"]
    pairs = tuple((complex(a, b), complex(c, d)) for (a, b), (c, d) in cov_cfg["pairs"])
    report = assemble_report(plan, store, cov_pairs=pairs,
                             kernel_params=_quadrature_from_config(config),
                             bands=config.get("bands"))
    payload = json.loads(report.to_json())
    payload["overrides"] = _overrides_dict(inv)
    _write_json(out / "report.json", payload)
    with open(out / "summary.txt", "w") as fh:
        for key, value in _overrides_dict(inv).items():
            fh.write(f"# override {key}={json.dumps(value)}\n")
        for line in report.summary_lines():
            fh.write(line + "\n")
    _log(out, f"report flags: {report.flags}")
    if report.flags and not all(report.flags.values()):
        return 2
    return 0


_COMMANDS = {
    "calibrate": _cmd_calibrate,
    "simulate": _cmd_simulate,
    "scaling": _cmd_scaling,
    "kernel": _cmd_kernel,
    "covariance": _cmd_covariance,
    "diagnostics": _cmd_diagnostics,
    "report": _cmd_report,
}


def dispatch(inv: CliInvocation) -> int:
    """Run one invocation; returns the process exit status."""
    if inv.subcommand not in _COMMANDS:
        print(f"error: unknown subcommand {inv.subcommand!r}", file=sys.stderr)
        return 1
    try:
        config = _load_config(inv)
        out = _out_dir(inv)
        return _COMMANDS[inv.subcommand](inv, config, out)
    except (InputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="wignerlab",
                                     description="Heavy-tailed Wigner trace-fluctuation lab")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", dest="config_path", default=None,
                        help="JSON config file (defaults are used when omitted)")
    parser.add_argument("--out", dest="output_dir", default="out",
                        help="output directory (created if needed)")
    parser.add_argument("--seed", dest="master_seed", type=int, default=None,
                        help="override master seed")
    parser.add_argument("--threads", type=int, default=None, help="worker threads")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="config override, repeatable")
    parser.add_argument("--traces", dest="traces_path", default=None,
                        help="reuse a traces CSV instead of simulating")
    args = parser.parse_args(argv)
    inv = CliInvocation(subcommand=args.subcommand, config_path=args.config_path,
                        output_dir=args.output_dir, overrides=args.overrides,
                        threads=args.threads, master_seed=args.master_seed,
                        traces_path=args.traces_path)
    return dispatch(inv)


if __name__ == "__main__":
    sys.exit(main())
