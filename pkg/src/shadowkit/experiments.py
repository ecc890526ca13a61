"""Experiment harness behind the CLI: dataset generation, prediction and
classification runs, invariant sweeps, and the shadow-size benchmark.

Every routine takes a resolved config dict and an output directory, derives
all randomness hierarchically from the root seed (dataset -> record ->
snapshot), and writes CSV tables plus a JSON sidecar carrying the fully
resolved config, so identical configs reproduce byte-identical outputs.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import accel, classifier, kernels, observables, predictor, shadows, simulator
from .errors import ConfigError

_TAG_PARAMS = 1
_TAG_SHADOW = 2
_TAG_SPLIT = 3
_TAG_COUPLINGS = 4
_TAG_PROJECTION = 5


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------

def resolve_config(config: dict, defaults: dict) -> dict:
    """Fill missing keys (recursively for dicts) so the sidecar is complete."""
    out = dict(defaults)
    for key, value in config.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = resolve_config(value, out[key])
        else:
            out[key] = value
    return out


def apply_override(config: dict, dotted: str, raw_value: str) -> None:
    """Set a dotted-path key from a CLI override, JSON-decoding the value."""
    try:
        value = json.loads(raw_value)
    except json.JSONDecodeError:
        value = raw_value
    node = config
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot descend into non-dict at {part!r}")
    node[parts[-1]] = value


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [f"{v:.12g}" if isinstance(v, float) else v for v in row]
            )


def _write_sidecar(path: Path, config: dict, extra: dict | None = None) -> None:
    doc = {"config": config}
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Family and observable registries
# ---------------------------------------------------------------------------

def build_family_spec(family: dict, physical_params) -> simulator.HamiltonianSpec:
    tag = family["tag"]
    n = int(family["n"])
    box = family.get("box")
    if tag == "TFIM":
        kwargs = {"field_box": tuple(box[0])} if box else {}
        return simulator.tfim_family(n, physical_params[0], **kwargs)
    if tag == "RydbergChain":
        kwargs = {"box": tuple(tuple(b) for b in box)} if box else {}
        return simulator.rydberg_chain(n, physical_params[0], physical_params[1], **kwargs)
    if tag == "XXZBondAlt":
        kwargs = {"box": tuple(tuple(b) for b in box)} if box else {}
        return simulator.xxz_bond_alternating(
            n, physical_params[0], physical_params[1], **kwargs
        )
    if tag == "Heisenberg2D":
        return simulator.heisenberg2d(
            int(family["rows"]), int(family["cols"]), seed=0, couplings=physical_params
        )
    if tag == "AKLT":
        return simulator.aklt_spin1(n)
    raise ConfigError(f"unknown family tag {tag!r}")


def family_box(family: dict) -> tuple:
    tag = family["tag"]
    if family.get("box"):
        return tuple(tuple(b) for b in family["box"])
    if tag == "Heisenberg2D":
        rows, cols = int(family["rows"]), int(family["cols"])
        num_edges = rows * (cols - 1) + cols * (rows - 1)
        return tuple(simulator.HEISENBERG_COUPLING_BOX for _ in range(num_edges))
    if tag in simulator.FAMILY_DEFAULT_BOXES:
        return simulator.FAMILY_DEFAULT_BOXES[tag]
    raise ConfigError(f"family {tag!r} needs an explicit parameter box")


def build_observables(spec_list, n: int) -> list[observables.ObservableSpec]:
    out = []
    for item in spec_list:
        if item == "pauli_x_all":
            out.extend(observables.pauli_site("X", i) for i in range(n))
        elif item == "pauli_z_all":
            out.extend(observables.pauli_site("Z", i) for i in range(n))
        elif item == "nn_correlators":
            out.extend(observables.correlator(i, i + 1) for i in range(n - 1))
        elif isinstance(item, dict) and item.get("type") == "pauli":
            out.append(observables.pauli_site(item["pauli"], int(item["site"])))
        elif isinstance(item, dict) and item.get("type") == "correlator":
            out.append(observables.correlator(int(item["i"]), int(item["j"])))
        elif isinstance(item, dict) and item.get("type") == "order_param_z2":
            out.append(observables.order_param_z2(n))
        elif isinstance(item, dict) and item.get("type") == "order_param_z3":
            out.append(observables.order_param_z3(n))
        else:
            raise ConfigError(f"unknown observable spec {item!r}")
    return out


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------

GENERATE_DEFAULTS = {
    "family": {"tag": "TFIM", "n": 6},
    "num_records": 10,
    "num_snapshots": 1,
    "seed": 0,
    "observables": ["pauli_x_all", "pauli_z_all"],
    "degeneracy_tol": 1e-8,
}


def sample_parameter_points(family: dict, count: int, seed: int) -> np.ndarray:
    """x ~ Unif[-1, 1]^m, one row per record."""
    box = family_box(family)
    m = len(box)
    rng = np.random.Generator(
        np.random.Philox(key=accel.derive_seed(seed, _TAG_PARAMS))
    )
    return rng.uniform(-1.0, 1.0, size=(count, m))


def generate_records(family: dict, xs: np.ndarray, num_snapshots: int, seed: int,
                     degeneracy_tol: float = 1e-8):
    """Specs, ground states, and shadows for each parameter point."""
    box = family_box(family)
    specs, states, shadow_list = [], [], []
    for idx, x in enumerate(xs):
        physical = simulator.denormalize_params(x, box)
        spec = build_family_spec(family, physical)
        result = simulator.ground_state(spec, degeneracy_tol=degeneracy_tol)
        record_seed = accel.derive_seed(seed, _TAG_SHADOW, idx)
        shadow = simulator.sample_shadow(result.state, num_snapshots, record_seed)
        specs.append(spec)
        states.append(result.state)
        shadow_list.append(shadow)
    return specs, states, shadow_list


def cmd_generate(config: dict, out_dir: Path) -> dict:
    config = resolve_config(config, GENERATE_DEFAULTS)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    family = config["family"]
    xs = sample_parameter_points(family, int(config["num_records"]), config["seed"])
    specs, states, shadow_list = generate_records(
        family, xs, int(config["num_snapshots"]), config["seed"],
        float(config["degeneracy_tol"]),
    )
    obs_list = build_observables(config["observables"], int(family["n"]))
    rows = []
    for idx, (spec, state, shadow) in enumerate(zip(specs, states, shadow_list)):
        simulator.save_spec(out_dir / f"spec_{idx:04d}.json", spec)
        shadows.save_shadow(out_dir / f"shadow_{idx:04d}.shdw", shadow)
        for obs in obs_list:
            rows.append(
                [idx]
                + [float(v) for v in xs[idx]]
                + [obs.observable_id, obs.name, float(obs.exact(state))]
            )
    m = xs.shape[1]
    header = (
        ["record"] + [f"x{i}" for i in range(m)]
        + ["observable_id", "observable_name", "exact"]
    )
    _write_csv(out_dir / "truth.csv", header, rows)
    _write_sidecar(
        out_dir / "dataset.json",
        config,
        {"num_records": len(specs), "m": m},
    )
    return {"out_dir": str(out_dir), "num_records": len(specs)}


# ---------------------------------------------------------------------------
# Ground-state property prediction
# ---------------------------------------------------------------------------

PREDICT_DEFAULTS = {
    "family": {"tag": "TFIM", "n": 6},
    "num_train": 100,
    "num_validation": 30,
    "num_test": 20,
    "num_snapshots": 1,
    "seed": 0,
    "observables": ["pauli_x_all", "pauli_z_all"],
    "degeneracy_tol": 1e-8,
    "predictor": {
        "mode": "dirichlet",            # dirichlet | ridge
        "cutoff": 3.0,                  # dirichlet wavevector radius
        "lambda_grid": list(predictor.PAPER_LAMBDA_GRID),
        "kernels": ["gaussian", "dirichlet:3"],
    },
}


def _parse_kernel_candidates(names, xs: np.ndarray) -> list[kernels.KernelSpec]:
    out = []
    for name in names:
        if name == "gaussian":
            out.append(
                kernels.KernelSpec(kind="gaussian", gamma=kernels.default_gamma(xs))
            )
        elif name.startswith("dirichlet:"):
            out.append(
                kernels.KernelSpec(kind="dirichlet", cutoff=float(name.split(":")[1]))
            )
        elif name.startswith("pairwise_dirichlet:"):
            out.append(
                kernels.KernelSpec(
                    kind="pairwise_dirichlet", cutoff=float(name.split(":")[1])
                )
            )
        else:
            raise ConfigError(f"unknown kernel candidate {name!r}")
    return out


def cmd_predict(config: dict, out_dir: Path) -> dict:
    config = resolve_config(config, PREDICT_DEFAULTS)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    family = config["family"]
    n = int(family["n"])
    num_train = int(config["num_train"])
    num_val = int(config["num_validation"])
    num_test = int(config["num_test"])
    total = num_train + num_val + num_test
    xs = sample_parameter_points(family, total, config["seed"])
    specs, states, shadow_list = generate_records(
        family, xs, int(config["num_snapshots"]), config["seed"],
        float(config["degeneracy_tol"]),
    )
    obs_list = build_observables(config["observables"], n)
    m = xs.shape[1]

    train_idx = np.arange(0, num_train)
    val_idx = np.arange(num_train, num_train + num_val)
    test_idx = np.arange(num_train + num_val, total)
    train_set = predictor.TrainingSet(
        m=m, xs=xs[train_idx], shadows=[shadow_list[i] for i in train_idx]
    )

    mode = config["predictor"]["mode"]
    report_rows = []
    if mode == "dirichlet":
        model = predictor.train_dirichlet(
            train_set, float(config["predictor"]["cutoff"])
        )
        models = {obs.observable_id: model for obs in obs_list}
    elif mode == "ridge":
        val_set = predictor.TrainingSet(
            m=m, xs=xs[val_idx], shadows=[shadow_list[i] for i in val_idx]
        )
        val_truths = {
            obs.observable_id: np.array(
                [obs.exact(states[i]) for i in val_idx]
            )
            for obs in obs_list
        }
        candidates = _parse_kernel_candidates(
            config["predictor"]["kernels"], xs[train_idx]
        )
        models, reports = predictor.model_select(
            train_set,
            val_set,
            obs_list,
            val_truths,
            lambda_grid=config["predictor"]["lambda_grid"],
            kernel_candidates=candidates,
        )
        report_rows = [
            [r.observable_id, r.observable_name, r.kernel_label,
             float(r.regularization), float(r.validation_rmse)]
            for r in reports
        ]
    else:
        raise ConfigError(f"unknown predictor mode {mode!r}")

    rows = []
    sq_model, sq_base = {}, {}
    for obs in obs_list:
        model = models[obs.observable_id]
        baseline = float(np.mean(train_set.estimates(obs)))
        for i in test_idx:
            pred = predictor.predict_property(model, xs[i], obs)
            exact = float(obs.exact(states[i]))
            rows.append(
                [obs.observable_id]
                + [float(v) for v in xs[i]]
                + [float(pred), exact, abs(pred - exact)]
            )
            sq_model.setdefault(obs.observable_id, []).append((pred - exact) ** 2)
            sq_base.setdefault(obs.observable_id, []).append((baseline - exact) ** 2)
    header = (
        ["observable_id"] + [f"x{i}" for i in range(m)]
        + ["prediction", "exact", "abs_error"]
    )
    _write_csv(out_dir / "predictions.csv", header, rows)
    if report_rows:
        _write_csv(
            out_dir / "model_selection.csv",
            ["observable_id", "observable_name", "kernel", "lambda", "validation_rmse"],
            report_rows,
        )
    overall_model = math.sqrt(np.mean([v for s in sq_model.values() for v in s]))
    overall_base = math.sqrt(np.mean([v for s in sq_base.values() for v in s]))
    summary = {
        "rmse_model": overall_model,
        "rmse_training_mean_baseline": overall_base,
        "per_observable_rmse": {
            k: math.sqrt(np.mean(v)) for k, v in sorted(sq_model.items())
        },
        # operator-norm budgets sum ||O_i||: recorded, never consumed
        "observable_norm_budgets": {
            obs.observable_id: obs.norm_budget() for obs in obs_list
        },
    }
    _write_sidecar(out_dir / "predict_summary.json", config, {"results": summary})
    return summary


# ---------------------------------------------------------------------------
# Phase classification
# ---------------------------------------------------------------------------

CLASSIFY_DEFAULTS = {
    "family": {"tag": "XXZBondAlt", "n": 12},
    "anisotropy": 0.5,
    "sides": [[0.1, 0.5], [2.0, 3.0]],    # J'/J ranges for the two phases
    "per_side": 20,
    "num_snapshots": 500,
    "seed": 0,
    "tau": 1.0,
    "gamma": 1.0,
    "reflection_half_width": 3,
    "pca_components": 2,
    "svm": {"norm_bound_sq": 100.0, "tol": 1e-6, "max_iter": 4000,
            "test_fraction": 0.5},
    "unsupervised": {"trials": 500, "components": 6},
    "degeneracy_tol": 1e-8,
}


def _xxz_two_phase_records(config: dict):
    """States from both sides of the phase diagram with Z_R-derived labels."""
    family = config["family"]
    n = int(family["n"])
    delta = float(config["anisotropy"])
    per_side = int(config["per_side"])
    seed = config["seed"]
    rng = np.random.Generator(
        np.random.Philox(key=accel.derive_seed(seed, _TAG_PARAMS))
    )
    ratios, states, shadow_list, invariants = [], [], [], []
    for side in config["sides"]:
        lo, hi = float(side[0]), float(side[1])
        ratios.extend(rng.uniform(lo, hi, size=per_side).tolist())
    half = int(config["reflection_half_width"])
    center = n // 2
    interval_a = list(range(center - half, center))
    interval_b = list(range(center, center + half))
    for idx, ratio in enumerate(ratios):
        spec = simulator.xxz_bond_alternating(n, ratio, delta)
        result = simulator.ground_state(
            spec, degeneracy_tol=float(config["degeneracy_tol"])
        )
        shadow = simulator.sample_shadow(
            result.state,
            int(config["num_snapshots"]),
            accel.derive_seed(seed, _TAG_SHADOW, idx),
        )
        inv = observables.partial_reflection_invariant(
            result.state, interval_a, interval_b
        )
        states.append(result.state)
        shadow_list.append(shadow)
        invariants.append(inv)
    labels = np.where(np.asarray(invariants) >= 0, 1, -1)
    return np.asarray(ratios), states, shadow_list, np.asarray(invariants), labels


def _agreement(a: np.ndarray, b: np.ndarray) -> float:
    """Label agreement up to a global flip."""
    frac = float(np.mean(a == b))
    return max(frac, 1.0 - frac)


def cmd_classify(config: dict, out_dir: Path, embeddings_only: bool = False) -> dict:
    config = resolve_config(config, CLASSIFY_DEFAULTS)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ratios, states, shadow_list, invariants, labels = _xxz_two_phase_records(config)
    total = len(ratios)

    spec = kernels.KernelSpec(
        kind="shadow", tau=float(config["tau"]), gamma=float(config["gamma"])
    )
    gram = kernels.standardize(kernels.gram_matrix(shadow_list, spec))
    k_components = int(config["pca_components"])
    split_components = int(config["unsupervised"]["components"])
    embedding = classifier.kernel_pca(
        gram, min(max(k_components, split_components), total)
    )
    pc1_labels = classifier.median_split(embedding.coordinates[:, 0])
    unsup_labels = classifier.unsupervised_split(
        embedding,
        trials=int(config["unsupervised"]["trials"]),
        seed=accel.derive_seed(config["seed"], _TAG_PROJECTION),
        num_components=split_components,
    )

    emb_rows = [
        [idx, float(ratios[idx])]
        + [float(c) for c in embedding.coordinates[idx, :k_components]]
        + [int(labels[idx]), int(pc1_labels[idx])]
        for idx in range(total)
    ]
    _write_csv(
        out_dir / "embeddings.csv",
        ["record", "coupling_ratio"]
        + [f"pc{i + 1}" for i in range(k_components)]
        + ["label_true", "label_pred"],
        emb_rows,
    )
    if embeddings_only:
        summary = {
            "pc1_median_agreement": _agreement(pc1_labels, labels),
            "unsupervised_agreement": _agreement(unsup_labels, labels),
        }
        _write_sidecar(out_dir / "pca_summary.json", config, {"results": summary})
        return summary

    # stratified train/test split for the supervised SVM
    rng = np.random.Generator(
        np.random.Philox(key=accel.derive_seed(config["seed"], _TAG_SPLIT))
    )
    test_fraction = float(config["svm"]["test_fraction"])
    train_mask = np.zeros(total, dtype=bool)
    for side in (1, -1):
        side_idx = np.flatnonzero(labels == side)
        perm = rng.permutation(side_idx)
        keep = int(round(len(side_idx) * (1.0 - test_fraction)))
        train_mask[perm[:keep]] = True
    train_idx = np.flatnonzero(train_mask)
    test_idx = np.flatnonzero(~train_mask)

    sub_gram = kernels.GramMatrix(
        N=len(train_idx),
        entries=gram.entries[np.ix_(train_idx, train_idx)],
        standardized=True,
    )
    model = classifier.svm_train(
        sub_gram,
        labels[train_idx],
        norm_bound_sq=float(config["svm"]["norm_bound_sq"]),
        tol=float(config["svm"]["tol"]),
        max_iter=int(config["svm"]["max_iter"]),
    )
    svm_labels = np.zeros(total, dtype=int)
    for idx in range(total):
        row = gram.entries[idx, train_idx]
        svm_labels[idx], _ = classifier.svm_predict(model, row)
    test_true = labels[test_idx]
    test_pred = svm_labels[test_idx]
    accuracy = float(np.mean(test_pred == test_true))
    confusion = [
        [int(np.sum((test_true == a) & (test_pred == b))) for b in (1, -1)]
        for a in (1, -1)
    ]

    label_rows = [
        [idx, float(ratios[idx]), float(invariants[idx]), int(labels[idx]),
         int(pc1_labels[idx]), int(unsup_labels[idx]), int(svm_labels[idx]),
         "train" if train_mask[idx] else "test"]
        for idx in range(total)
    ]
    _write_csv(
        out_dir / "labels.csv",
        ["record", "coupling_ratio", "reflection_invariant", "label_true",
         "label_pc1_split", "label_unsupervised", "label_svm", "role"],
        label_rows,
    )
    summary = {
        "svm_test_accuracy": accuracy,
        "svm_training_error": float(model.training_error),
        "confusion": confusion,
        "num_test": int(len(test_idx)),
        "pc1_median_agreement": _agreement(pc1_labels, labels),
        "unsupervised_agreement": _agreement(unsup_labels, labels),
    }
    _write_sidecar(out_dir / "classify_summary.json", config, {"results": summary})
    return summary


def cmd_pca(config: dict, out_dir: Path) -> dict:
    return cmd_classify(config, out_dir, embeddings_only=True)


# ---------------------------------------------------------------------------
# Invariant sweeps
# ---------------------------------------------------------------------------

INVARIANT_DEFAULTS = {
    "kind": "partial_reflection",        # partial_reflection | twist
    "family": {"tag": "XXZBondAlt", "n": 12},
    "anisotropy": 0.5,
    "ratio_grid": [0.1, 0.3, 0.5, 1.5, 2.0, 3.0],
    "reflection_half_width": 3,
    "twist_half_widths": [2, 3],
    "degeneracy_tol": 1e-8,
    "seed": 0,
}


def cmd_invariant(config: dict, out_dir: Path) -> dict:
    config = resolve_config(config, INVARIANT_DEFAULTS)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    if config["kind"] == "partial_reflection":
        n = int(config["family"]["n"])
        half = int(config["reflection_half_width"])
        center = n // 2
        interval_a = list(range(center - half, center))
        interval_b = list(range(center, center + half))
        for ratio in config["ratio_grid"]:
            spec = simulator.xxz_bond_alternating(
                n, float(ratio), float(config["anisotropy"])
            )
            result = simulator.ground_state(
                spec, degeneracy_tol=float(config["degeneracy_tol"])
            )
            value = observables.partial_reflection_invariant(
                result.state, interval_a, interval_b
            )
            rows.append([float(ratio), float(config["anisotropy"]), float(value)])
        _write_csv(
            out_dir / "invariant.csv",
            ["coupling_ratio", "anisotropy", "reflection_invariant"],
            rows,
        )
    elif config["kind"] == "twist":
        n = int(config["family"]["n"])
        spec = simulator.aklt_spin1(n)
        result = simulator.ground_state(
            spec, degeneracy_tol=float(config["degeneracy_tol"])
        )
        for half_width in config["twist_half_widths"]:
            value = observables.twist_expectation(result.state, float(half_width))
            rows.append([n, float(half_width), float(value.real), float(value.imag)])
        _write_csv(
            out_dir / "invariant.csv",
            ["n", "half_width", "twist_real", "twist_imag"],
            rows,
        )
    else:
        raise ConfigError(f"unknown invariant kind {config['kind']!r}")
    _write_sidecar(out_dir / "invariant_summary.json", config, {"rows": len(rows)})
    return {"rows": len(rows)}


# ---------------------------------------------------------------------------
# Shadow-size benchmark (subsystem tomography scaling)
# ---------------------------------------------------------------------------

SHADOW_BENCH_DEFAULTS = {
    "n": 8,
    "states": ["ghz", "random_product"],
    "subsystem_size": 2,
    "snapshot_ladder": [250, 500, 1000, 2000, 4000],
    "num_seeds": 10,
    "seed": 0,
}


def ghz_state(n: int) -> simulator.StateVector:
    amps = np.zeros(2 ** n, dtype=np.complex128)
    amps[0] = amps[-1] = np.sqrt(0.5)
    return simulator.StateVector(n=n, local_dim=2, amplitudes=amps)


def random_product_state(n: int, seed: int) -> simulator.StateVector:
    rng = np.random.Generator(np.random.Philox(key=seed))
    amps = np.array([1.0], dtype=np.complex128)
    for _ in range(n):
        vec = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        vec /= np.linalg.norm(vec)
        amps = np.kron(amps, vec)
    return simulator.StateVector(n=n, local_dim=2, amplitudes=amps)


def trace_norm_distance(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b||_1, the norm used by the subsystem-approximation guarantee."""
    return float(np.abs(np.linalg.eigvalsh(a - b)).sum())


def max_subsystem_error(
    state: simulator.StateVector, shadow: shadows.ClassicalShadow, size: int
) -> float:
    """max over all ``size``-site subsystems of the RDM trace-norm error."""
    from itertools import combinations

    worst = 0.0
    for subsystem in combinations(range(state.n), size):
        est = shadows.shadow_rdm(shadow, list(subsystem))
        exact = simulator.exact_rdm(state, list(subsystem))
        worst = max(worst, trace_norm_distance(est.matrix, exact.matrix))
    return worst


def lemma_shadow_size(r: int, n: int, epsilon: float, delta: float) -> int:
    """Snapshot count sufficient for all r-body marginals to epsilon accuracy."""
    return math.ceil(
        (8.0 / 3.0)
        * 12.0 ** r
        * (r * (math.log(n) + math.log(12.0)) + math.log(1.0 / delta))
        / epsilon ** 2
    )


def cmd_shadow_bench(config: dict, out_dir: Path) -> dict:
    config = resolve_config(config, SHADOW_BENCH_DEFAULTS)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = int(config["n"])
    size = int(config["subsystem_size"])
    rows = []
    medians: dict[tuple[str, int], float] = {}
    for state_name in config["states"]:
        for num_snapshots in config["snapshot_ladder"]:
            errors = []
            for seed_idx in range(int(config["num_seeds"])):
                record_seed = accel.derive_seed(
                    config["seed"], _TAG_SHADOW, seed_idx
                )
                if state_name == "ghz":
                    state = ghz_state(n)
                elif state_name == "random_product":
                    state = random_product_state(
                        n, accel.derive_seed(config["seed"], _TAG_COUPLINGS, seed_idx)
                    )
                else:
                    raise ConfigError(f"unknown benchmark state {state_name!r}")
                shadow = simulator.sample_shadow(
                    state, int(num_snapshots), record_seed
                )
                err = max_subsystem_error(state, shadow, size)
                errors.append(err)
                rows.append([state_name, int(num_snapshots), seed_idx, float(err)])
            medians[(state_name, int(num_snapshots))] = float(np.median(errors))
    _write_csv(
        out_dir / "shadow_bench.csv",
        ["state", "num_snapshots", "seed_index", "max_trace_distance"],
        rows,
    )
    summary_rows = [
        [state, t, float(med)] for (state, t), med in sorted(medians.items())
    ]
    _write_csv(
        out_dir / "shadow_bench_summary.csv",
        ["state", "num_snapshots", "median_max_trace_distance"],
        summary_rows,
    )
    flat_medians = {f"{k[0]}:{k[1]}": v for k, v in sorted(medians.items())}
    _write_sidecar(
        out_dir / "shadow_bench_summary.json", config, {"medians": flat_medians}
    )
    return {"medians": flat_medians}
