"""End-to-end acceptance suite.

One test per criterion, each printing a PASS/FAIL line with its measured
quantities (run ``pytest tests/test_acceptance.py -v -s`` to see them).
Statistical checks use fixed seeds, so every run is reproducible.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from shadowkit import accel, classifier, experiments, kernels, observables, simulator
from shadowkit.experiments import (
    cmd_classify,
    cmd_predict,
    ghz_state,
    lemma_shadow_size,
    max_subsystem_error,
    random_product_state,
)
from shadowkit.kernels import (
    finite_shadow_kernel,
    shadow_kernel,
    shadow_kernel_upper_bound,
    shadow_trace,
    shadow_trace_from_states,
    taylor_truncation_degrees,
)
from shadowkit.shadows import ClassicalShadow, SNAPSHOT_MATRICES, SYMBOL_STATES


def report(criterion: int, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {criterion}: {status} - {detail}")
    assert passed, f"criterion {criterion} failed: {detail}"


TFIM_PREDICT_CONFIG = {
    "family": {"tag": "TFIM", "n": 6},
    "num_train": 800,
    "num_validation": 0,
    "num_test": 50,
    "num_snapshots": 1,
    "seed": 7,
    "observables": ["pauli_x_all", "pauli_z_all"],
    "predictor": {"mode": "dirichlet", "cutoff": 3.0},
}

XXZ_PREDICT_CONFIG = {
    "family": {"tag": "XXZBondAlt", "n": 8},
    "num_train": 100,
    "num_validation": 30,
    "num_test": 20,
    "num_snapshots": 500,
    "seed": 11,
    "observables": ["nn_correlators"],
    "predictor": {"mode": "ridge", "kernels": ["gaussian", "dirichlet:3"]},
}

CLASSIFY_CONFIG = {"seed": 3}  # defaults: XXZ n=12, 20/side, T=500, delta=0.5


@pytest.fixture(scope="module")
def tfim_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tfim")
    summary = cmd_predict(dict(TFIM_PREDICT_CONFIG), out)
    return out, summary


@pytest.fixture(scope="module")
def xxz_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("xxz")
    summary = cmd_predict(dict(XXZ_PREDICT_CONFIG), out)
    return out, summary


@pytest.fixture(scope="module")
def classify_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("classify")
    summary = cmd_classify(dict(CLASSIFY_CONFIG), out)
    return out, summary


def test_criterion_1_snapshot_algebra():
    start = time.time()
    eig_ok = True
    for s in range(6):
        evals = np.sort(np.linalg.eigvalsh(SNAPSHOT_MATRICES[s]))
        eig_ok &= abs(evals[0] + 1.0) <= 1e-12 and abs(evals[1] - 2.0) <= 1e-12
        eig_ok &= abs(np.trace(SNAPSHOT_MATRICES[s]).real - 1.0) <= 1e-12
    trace_ok = True
    for s in range(6):
        for t in range(6):
            val = shadow_trace(s, t)
            trace_ok &= val in (-4.0, 0.5, 5.0)
            trace_ok &= abs(val - shadow_trace_from_states(s, t)) <= 1e-12
    elapsed = time.time() - start
    report(
        1,
        eig_ok and trace_ok and elapsed < 1.0,
        f"eigenvalues {{2,-1}} and 36 trace values exact in {elapsed:.3f}s",
    )


def test_criterion_2_unbiasedness_by_enumeration():
    start = time.time()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        acc = np.zeros((2, 2), dtype=complex)
        for s in range(6):
            v = SYMBOL_STATES[s]
            prob = (v.conj() @ rho @ v).real / 3.0
            acc += prob * SNAPSHOT_MATRICES[s]
        worst = max(worst, np.abs(acc - rho).max())
    elapsed = time.time() - start
    report(
        2,
        worst <= 1e-12 and elapsed < 1.0,
        f"Born-weighted snapshot average reproduces 20 random states, "
        f"max deviation {worst:.2e} in {elapsed:.3f}s",
    )


def test_criterion_3_lemma_scaling():
    start = time.time()
    n, r, eps, delta = 8, 2, 0.25, 0.1
    t_full = lemma_shadow_size(r, n, eps, delta)
    results = {}
    for name in ("ghz", "random_product"):
        errs_full, errs_quarter = [], []
        for seed_idx in range(20):
            if name == "ghz":
                state = ghz_state(n)
            else:
                state = random_product_state(n, 9000 + seed_idx)
            sh = simulator.sample_shadow(
                state, t_full, accel.derive_seed(42, 1, seed_idx)
            )
            errs_full.append(max_subsystem_error(state, sh, r))
            sh_q = simulator.sample_shadow(
                state, t_full // 4, accel.derive_seed(43, 1, seed_idx)
            )
            errs_quarter.append(max_subsystem_error(state, sh_q, r))
        results[name] = (np.array(errs_full), np.array(errs_quarter))
    elapsed = time.time() - start
    ok = elapsed < 300
    details = [f"T={t_full}"]
    for name, (errs_full, errs_quarter) in results.items():
        hits = int(np.sum(errs_full <= eps))
        ratio = float(np.median(errs_full) / np.median(errs_quarter))
        ok &= hits >= 18
        ok &= 0.35 <= ratio <= 0.65  # halves +-30% when T quadruples
        details.append(f"{name}: {hits}/20 within {eps}, quadruple-ratio {ratio:.3f}")
    report(3, ok, "; ".join(details) + f", {elapsed:.1f}s")


def test_criterion_4_ground_state_prediction(tfim_run, xxz_run):
    start = time.time()
    _, tfim_summary = tfim_run
    _, xxz_summary = xxz_run
    tfim_rmse = tfim_summary["rmse_model"]
    improvement = (
        xxz_summary["rmse_training_mean_baseline"] / xxz_summary["rmse_model"]
    )
    ok = tfim_rmse <= 0.2 and improvement >= 2.0
    elapsed = time.time() - start
    report(
        4,
        ok,
        f"TFIM dirichlet RMSE {tfim_rmse:.3f} <= 0.2; XXZ ridge beats "
        f"training-mean baseline by {improvement:.1f}x (needs >= 2x)",
    )


def test_criterion_5_shadow_kernel_truncation():
    start = time.time()
    eta = 1e-3
    tau = gamma = 1.0
    outer, inner = taylor_truncation_degrees(tau, gamma, eta)
    bound = shadow_kernel_upper_bound(tau, gamma)
    rng = np.random.default_rng(55)
    worst_diff = 0.0
    bounds_ok = True
    for _ in range(50):
        a = ClassicalShadow(
            n=6, num_snapshots=3,
            symbols=rng.integers(0, 6, size=(6, 3)).astype(np.uint8),
        )
        b = ClassicalShadow(
            n=6, num_snapshots=3,
            symbols=rng.integers(0, 6, size=(6, 3)).astype(np.uint8),
        )
        closed = shadow_kernel(a, b, tau, gamma)
        finite = finite_shadow_kernel(
            a, b, tau, gamma, outer_degree=outer, inner_degree=inner
        )
        worst_diff = max(worst_diff, abs(closed - finite))
        bounds_ok &= 0.0 <= closed <= bound
    elapsed = time.time() - start
    report(
        5,
        worst_diff <= 2 * eta and bounds_ok and elapsed < 60,
        f"|finite(D={outer},R={inner}) - closed| <= {worst_diff:.2e} "
        f"(cap {2 * eta:.0e}); closed form within [0, exp(tau e^(5 gamma))]; "
        f"{elapsed:.1f}s",
    )


def test_criterion_6_phase_classification(classify_run):
    _, summary = classify_run
    ok = (
        summary["pc1_median_agreement"] >= 0.90
        and summary["svm_test_accuracy"] >= 0.95
        and summary["svm_training_error"] == 0.0
    )
    report(
        6,
        ok,
        f"PC1 median-split agreement {summary['pc1_median_agreement']:.2f} "
        f"(needs >= 0.90); SVM held-out accuracy "
        f"{summary['svm_test_accuracy']:.2f} (needs >= 0.95) with training "
        f"error {summary['svm_training_error']}",
    )


def test_criterion_7_svm_machinery():
    start = time.time()
    hand = classifier.svm_train(
        kernels.GramMatrix(N=2, entries=np.eye(2), standardized=True),
        [1, -1],
        norm_bound_sq=4.0,
    )
    hand_ok = hand.training_error <= 1e-3

    def draw(rng, count):
        labels = np.where(rng.standard_normal(count) >= 0, 1.0, -1.0)
        margin_coord = labels * rng.uniform(0.5, 1.0, count)
        return np.column_stack(
            [margin_coord, 0.2 * rng.standard_normal(count)]
        ), labels

    holds = 0
    num_seeds = 50
    for seed in range(num_seeds):
        rng = np.random.default_rng(7000 + seed)
        train_x, train_y = draw(rng, 150)
        test_x, test_y = draw(rng, 300)
        gram = kernels.GramMatrix(N=150, entries=train_x @ train_x.T)
        norm_bound = 4.0  # margin 2/Lambda = 0.5
        model = classifier.svm_train(
            gram, train_y, norm_bound_sq=norm_bound ** 2, max_iter=800
        )
        preds = np.where(test_x @ train_x.T @ model.alpha >= 0, 1, -1)
        err = float(np.mean(preds != test_y))
        radius = float(np.sqrt(np.max(np.sum(train_x ** 2, axis=1))))
        bound = classifier.svm_generalization_bound(
            model.training_error, 150, norm_bound, radius, delta=0.1
        )
        holds += err <= bound
    elapsed = time.time() - start
    report(
        7,
        hand_ok and holds >= 45 and elapsed < 120,
        f"hand-verified N=2 instance error {hand.training_error:.1e} <= 1e-3; "
        f"generalization bound holds in {holds}/{num_seeds} seeds; {elapsed:.1f}s",
    )


def test_criterion_8_twist_operator():
    start = time.time()
    # S_z = 0 product state: every site phase acts trivially
    index = sum(1 * 3 ** k for k in range(8))
    amps = np.zeros(3 ** 8, dtype=complex)
    amps[index] = 1.0
    product = simulator.StateVector(n=8, local_dim=3, amplitudes=amps)
    product_val = observables.twist_expectation(product, 2)
    product_ok = product_val == 1.0 + 0.0j

    aklt = simulator.ground_state(simulator.aklt_spin1(8)).state
    signs = {}
    for half_width in (2, 3):
        signs[half_width] = observables.twist_expectation(aklt, half_width).real
    aklt_ok = all(v < 0 for v in signs.values())
    elapsed = time.time() - start
    report(
        8,
        product_ok and aklt_ok and elapsed < 300,
        f"product state twist exactly 1; AKLT n=8 twist real parts "
        f"{signs[2]:.3f}, {signs[3]:.3f} both negative; {elapsed:.1f}s",
    )


def test_criterion_9_reproducibility(
    tfim_run, xxz_run, classify_run, tmp_path_factory
):
    start = time.time()
    comparisons = []

    rerun = tmp_path_factory.mktemp("tfim_rerun")
    cmd_predict(dict(TFIM_PREDICT_CONFIG), rerun)
    comparisons.append(("tfim predictions", tfim_run[0], rerun, "predictions.csv"))

    rerun = tmp_path_factory.mktemp("xxz_rerun")
    cmd_predict(dict(XXZ_PREDICT_CONFIG), rerun)
    comparisons.append(("xxz predictions", xxz_run[0], rerun, "predictions.csv"))
    comparisons.append(
        ("xxz model selection", xxz_run[0], rerun, "model_selection.csv")
    )

    # classification rerun at a different thread count
    accel.set_num_threads(1)
    rerun = tmp_path_factory.mktemp("classify_rerun")
    cmd_classify(dict(CLASSIFY_CONFIG), rerun)
    accel.set_num_threads(2)
    comparisons.append(("classify embeddings", classify_run[0], rerun, "embeddings.csv"))
    comparisons.append(("classify labels", classify_run[0], rerun, "labels.csv"))

    ok = True
    mismatched = []
    for name, dir_a, dir_b, fname in comparisons:
        same = (Path(dir_a) / fname).read_bytes() == (Path(dir_b) / fname).read_bytes()
        ok &= same
        if not same:
            mismatched.append(name)
    elapsed = time.time() - start
    report(
        9,
        ok,
        "byte-identical CSVs on rerun (incl. thread-count change)"
        + (f"; MISMATCH: {mismatched}" if mismatched else "")
        + f"; {elapsed:.1f}s",
    )
