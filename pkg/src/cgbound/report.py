"""End-to-end study orchestration.

``run_report`` executes, per the run configuration: the randomized
inequality certification suite, the bound assembly on the configured
network, the scaling-law sweeps, and the empirical-gap suite over a family
of desk-scale configurations. Results land in an output directory as
canonical JSON plus fixed-column CSV (axis, term2, term3, total); payloads
contain no timestamps, so identical (seed, config) pairs reproduce
byte-identical files.

Exit: 0 when all inequality suites pass, 2 when any trial or gap check
fails (validation problems raise before any compute and map to exit 1 in
the CLI).
"""

import csv
import io
import os

import numpy as np

from .bounds import LossSpec, SweepSpec, geb_bound, scaling_fit, sweep_bound, ymax_estimate
from .datagen import CgDataSpec, empirical_gap, generate_cg_dataset
from .model import MeasurementModel, SignalBounds, SpdMatrix
from .networks import NetworkConfig, sample_parameters
from .serialize import dumps_canonical
from .verify import TARGETS, verify_lipschitz

__all__ = [
    "default_config",
    "run_report",
    "gap_suite",
    "scaling_study_specs",
]


def default_config():
    """The bundled run configuration (drcgnet desk-scale study)."""
    return {
        "seed": 20250810,
        "model": {
            "m": 4,
            "n": 8,
            "sigma": 0.0,
            "matrix": {"generator": "gaussian", "seed": 7, "scale": 0.5},
        },
        "network": {
            "variant": "drcgnet",
            "K": 2,
            "J": 2,
            "p_min": 0.5,
            "p_max": 2.0,
            "Lc": 1,
            "filters": [1, 1],
            "kernels": [3],
            "weight_bounds": [0.9],
            "delta": 0.6,
        },
        "loss": {"name": "mae"},
        "dataset": {
            "Ns": 48,
            "seed": 11,
            "sigma_u": {"structure": "scaled_identity", "lam": 0.4, "n": 8},
        },
        "geb": {"Ns": 1000, "eps_conf": 0.05, "ymax_mode": "dataset"},
        "verify": {"targets": "all", "trials": 2000, "seed": 5150},
        "sweep": {
            "ns_values": [100, 1000, 10000, 100000, 1000000],
            "kj_values": [4, 16, 64, 256, 1024, 4096],
            "n_values": [4, 8, 16, 32, 64],
            "Ns": 10000,
            "eps_conf": 0.05,
        },
        "gap": {"suite_size": 20, "Ns": 48, "test_draws": 2000, "seed": 23},
    }


# ---------------------------------------------------------------------------
# canonical scaling-study configurations
# ---------------------------------------------------------------------------

def scaling_study_specs(sweep_section):
    """Sweep specs plus the canonical network/model/loss used on each axis.

    The signal-dimension study uses the quadratic-update variant whose
    matrix-parameter count grows with n, over a model family with
    polynomially growing operator norms (the regime the scaling laws
    describe); its loss carries a fixed externally supplied Lipschitz
    constant, so the per-n bound is not rescaled by the loss. The
    network-size study uses the learned-regularizer variant on a fixed
    small model; the sample-count study reuses it.
    """
    Ns = int(sweep_section.get("Ns", 10000))
    eps = float(sweep_section.get("eps_conf", 0.05))

    n_values = tuple(sweep_section.get("n_values", (4, 8, 16, 32, 64)))
    kj_values = tuple(sweep_section.get("kj_values", (4, 16, 64, 256, 1024, 4096)))
    ns_values = tuple(sweep_section.get("ns_values", (100, 1000, 10000, 100000, 1000000)))

    n_config = NetworkConfig(
        variant="cgnet",
        n=int(n_values[0]),
        K=4,
        J=4,
        bounds=SignalBounds.default(),
        p_min=1.0,
        p_max=1.0,
        mu_bound=1.0,
    )
    n_spec = SweepSpec(axis="n", values=n_values, Ns=Ns, eps_conf=eps, m=1, norm_power=6.0)
    n_model = MeasurementModel(np.ones((1, n_config.n)))  # rebuilt per point
    n_loss = LossSpec.ssim(tau=1.0)

    kj_model = MeasurementModel(2.0 * np.ones((2, 4)))
    kj_config = NetworkConfig(
        variant="drcgnet",
        n=4,
        K=2,
        J=2,
        bounds=SignalBounds.default(),
        p_min=0.5,
        p_max=2.0,
        Lc=2,
        filters=(1, 2, 1),
        kernels=(5, 5),
        weight_bounds=(1.1, 1.1),
        delta=0.9,
    )
    kj_loss = LossSpec.mae(kj_config.n, kj_config.bounds.c_max)
    kj_spec = SweepSpec(axis="kj", values=kj_values, Ns=Ns, eps_conf=eps)
    ns_spec = SweepSpec(axis="ns", values=ns_values, Ns=Ns, eps_conf=eps)

    return {
        "n": (n_config, n_model, n_spec, n_loss),
        "kj": (kj_config, kj_model, kj_spec, kj_loss),
        "ns": (kj_config, kj_model, ns_spec, kj_loss),
    }


def sweep_csv(config, model, loss, spec):
    """Fixed-column CSV (axis, term2, term3, total) for one sweep."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["axis", "term2", "term3", "total"])
    for v, rep, _ in sweep_bound(config, model, loss, spec):
        writer.writerow([repr(v), repr(rep.term2), repr(rep.term3), repr(rep.total)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# empirical-gap suite
# ---------------------------------------------------------------------------

def gap_suite(suite_size, Ns, test_draws, seed):
    """Desk-scale (config, parameters, data) family for the gap study.

    Alternates both variants over a grid of sizes; every entry is
    deterministic in the master seed.
    """
    bounds = SignalBounds.default()
    entries = []
    for i in range(suite_size):
        rng = np.random.default_rng((seed, i))
        n = (6, 8)[i % 2]
        m = (3, 4)[(i // 2) % 2]
        K = 1 + (i % 2)
        J = 1 + ((i // 2) % 2)
        model = MeasurementModel(0.5 * rng.standard_normal((m, n)), sigma=0.0)
        if i % 2 == 0:
            config = NetworkConfig(
                variant="cgnet", n=n, K=K, J=J, bounds=bounds,
                p_min=0.5, p_max=2.0, mu_bound=1.0,
            )
        else:
            config = NetworkConfig(
                variant="drcgnet", n=n, K=K, J=J, bounds=bounds,
                p_min=0.5, p_max=2.0, Lc=1, filters=(1, 1), kernels=(3,),
                weight_bounds=(0.9,), delta=0.5,
            )
        theta = sample_parameters(config, int(rng.integers(2**31)))
        sigma_u = SpdMatrix(0.4 * np.eye(n))
        train = CgDataSpec(model=model, sigma_u=sigma_u, bounds=bounds, Ns=Ns,
                           seed=int(rng.integers(2**31)))
        entries.append((config, model, theta, train, int(rng.integers(2**31))))
    return entries


def run_gap_suite(suite_size, Ns, test_draws, seed):
    reports = []
    for config, model, theta, train, test_seed in gap_suite(suite_size, Ns, test_draws, seed):
        loss = LossSpec.mae(config.n, config.bounds.c_max)
        reports.append(empirical_gap(theta, config, loss, train, test_draws, test_seed))
    return reports


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def _write(outdir, name, text):
    path = os.path.join(outdir, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def run_report(run_config, outdir):
    """Execute every configured suite; returns the process exit code."""
    os.makedirs(outdir, exist_ok=True)
    failures = []

    # inequality certification
    targets = run_config.verify_targets
    if targets == "all":
        targets = sorted(TARGETS)
    verify_payload = []
    for target in targets:
        rep = verify_lipschitz(target, run_config.verify_trials, seed=run_config.verify_seed)
        verify_payload.append(rep.to_dict())
        if not rep.all_hold:
            failures.append(f"verify:{target}")
    _write(outdir, "verify.json", dumps_canonical(verify_payload))

    # bound on the configured network
    if run_config.ymax_mode == "dataset":
        if run_config.dataset_spec is None:
            raise ValueError("geb.ymax_mode=dataset requires a dataset section")
        data = generate_cg_dataset(run_config.dataset_spec)
        y_max = ymax_estimate(run_config.model, run_config.bounds.c_max, "dataset", dataset=data.Y)
    else:
        y_max = ymax_estimate(run_config.model, run_config.bounds.c_max, run_config.ymax_mode)
    bound = geb_bound(
        run_config.network, run_config.model, run_config.loss,
        run_config.geb_Ns, run_config.eps_conf, y_max,
    )
    _write(outdir, "bound.json", dumps_canonical(bound.to_dict()))

    # scaling studies
    if run_config.sweep:
        studies = scaling_study_specs(run_config.sweep)
        fits = {}
        for axis, (cfg, mdl, spec, loss) in studies.items():
            _write(outdir, f"sweep_{axis}.csv", sweep_csv(cfg, mdl, loss, spec))
            fit = scaling_fit(cfg, mdl, loss, spec)
            fits[axis] = {
                "exponent": fit.exponent,
                "r_squared": fit.r_squared,
                "values": list(fit.values),
                "fitted": list(fit.fitted),
                "r_diagnostic": list(fit.r_diagnostic),
            }
        _write(outdir, "scaling.json", dumps_canonical(fits))

    # empirical-gap suite
    gaps = run_gap_suite(
        run_config.gap_suite_size, run_config.gap_Ns,
        run_config.gap_test_draws, run_config.gap_seed,
    )
    gap_payload = [g.to_dict() for g in gaps]
    _write(outdir, "gaps.json", dumps_canonical(gap_payload))
    for i, g in enumerate(gaps):
        if not g.holds:
            failures.append(f"gap:{i}")

    summary = {
        "failures": failures,
        "sections": {
            "verify": {"targets": len(targets), "failed": sum(1 for f in failures if f.startswith("verify"))},
            "gaps": {"configs": len(gaps), "failed": sum(1 for f in failures if f.startswith("gap"))},
        },
        "exit_code": 0 if not failures else 2,
    }
    _write(outdir, "summary.json", dumps_canonical(summary))
    return 0 if not failures else 2
