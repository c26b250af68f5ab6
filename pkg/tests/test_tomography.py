import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from starcluster.channels import (
    apply_chi, channel_fidelity, chi_of_unitary, depolarizing_chi, identity_chi, process_fidelity,
)
from starcluster.cluster import generate_star, get_preset, star_state
from starcluster.mbqc import probe_input_state
from starcluster.qstate import CNOT, H, KET, T, DensityMatrix, PureState, as_density, maximally_mixed
from starcluster.tomography import (
    MeasurementRecord, ProcessTomography, StateTomography, exact_record, fit_chi,
    linear_reconstruct, mle_state, monte_carlo_errors, monte_carlo_samples, outcome_labels,
    pauli_settings, probe_combinations, process_tomography, simulate_counts,
)
from starcluster.tomography.state import _TriangularParam, _state_objective


def random_density(n, rng):
    a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    rho = a @ a.conj().T
    return DensityMatrix(rho / np.trace(rho))


def test_settings_and_outcomes():
    s = pauli_settings(4)
    assert len(s) == 81 and s[0] == "XXXX" and s[-1] == "ZZZZ"
    assert outcome_labels(2) == ("00", "01", "10", "11")


def test_count_simulation_examples():
    rng = np.random.default_rng(0)
    rec = simulate_counts(PureState(KET["H"]), ["Z"], shots=1000, rng=rng)
    assert rec.counts[0, 1] == 0 and 850 < rec.counts[0, 0] < 1150
    rec = exact_record(maximally_mixed(1), ["X"], shots=1e6)
    assert rec.counts[0, 0] == pytest.approx(rec.counts[0, 1])
    with pytest.raises(ValueError):
        simulate_counts(PureState(KET["H"]), shots=0)


def test_y_outcome_convention():
    rec = exact_record(PureState(KET["L"]), ["Y"], shots=1.0)
    np.testing.assert_allclose(rec.counts, [[1.0, 0.0]], atol=1e-12)


def test_record_validation():
    with pytest.raises(ValueError):
        MeasurementRecord(("ZZ",), np.ones((1, 2)))
    with pytest.raises(ValueError):
        MeasurementRecord(("Z",), -np.ones((1, 2)))
    with pytest.raises(ValueError):
        MeasurementRecord(("Z", "ZZ"), np.ones((2, 2)))


def test_counts_csv_round_trip():
    rec = simulate_counts(star_state(), shots=600, rng=np.random.default_rng(1))
    text = rec.to_csv()
    assert len(text.strip().splitlines()) == 1 + 81 * 16
    assert text.splitlines()[0] == "setting,outcome,count"
    back = MeasurementRecord.from_csv(text)
    assert back.settings == rec.settings
    np.testing.assert_array_equal(back.counts, rec.counts)
    with pytest.raises(ValueError):
        MeasurementRecord.from_csv("setting,outcome,count\nZ,2,5\n")


def test_linear_inversion_exact():
    for rho in (maximally_mixed(2), as_density(PureState(KET["+"]))):
        est = linear_reconstruct(exact_record(rho))
        np.testing.assert_allclose(est.rho.data, rho.data, atol=1e-9)


def test_linear_inversion_flags_negative_eigenvalues():
    rec = simulate_counts(star_state(), shots=600, rng=np.random.default_rng(2))
    est = linear_reconstruct(rec)
    assert est.metadata["min_eigenvalue"] < 0 and not est.metadata["psd"]


def test_mle_agrees_with_inversion_on_exact_data():
    rng = np.random.default_rng(3)
    rho = random_density(2, rng)
    rec = exact_record(rho, shots=1000)
    est = mle_state(rec)
    assert np.abs(est.rho.data - linear_reconstruct(rec).rho.data).max() < 1e-6
    assert np.abs(est.rho.data - rho.data).max() < 1e-6


@pytest.mark.parametrize("name", ["star", "mixed", "paper"])
def test_mle_round_trip_high_shots(name):
    truth = {"star": as_density(star_state()), "mixed": maximally_mixed(4),
             "paper": generate_star(get_preset("paper-2013")).density}[name]
    rec = simulate_counts(truth, shots=1e5, rng=np.random.default_rng(4))
    est = mle_state(rec)
    if name == "star":
        f = est.fidelity(star_state())
    else:
        # Uhlmann fidelity for mixed truths
        w, v = np.linalg.eigh(truth.data)
        sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
        f = np.sum(np.sqrt(np.clip(np.linalg.eigvalsh(sq @ est.rho.data @ sq), 0, None))) ** 2
    assert f >= 0.999
    assert est.is_psd and abs(est.rho.trace() - 1) < 1e-9


def test_mle_paper_preset_moderate_shots():
    truth = generate_star(get_preset("paper-2013")).density
    est = mle_state(simulate_counts(truth, shots=1e4, rng=np.random.default_rng(5)))
    assert est.fidelity(star_state()) == pytest.approx(0.66, abs=0.02)


def test_mle_ideal_star_paper_shots():
    rec = simulate_counts(star_state(), shots=600, rng=np.random.default_rng(6))
    assert mle_state(rec).fidelity(star_state()) > 0.98


def test_poisson_cost():
    truth = generate_star(get_preset("paper-2013")).density
    rec = simulate_counts(truth, shots=600, rng=np.random.default_rng(7))
    est = mle_state(rec, cost="poisson")
    assert est.is_psd and est.metadata["cost"] == "poisson"
    assert est.fidelity(star_state()) == pytest.approx(0.66, abs=0.03)
    with pytest.raises(ValueError):
        mle_state(rec, cost="l1")


@pytest.mark.parametrize("cost", ["lsq", "poisson"])
def test_state_gradient_matches_finite_differences(cost):
    rng = np.random.default_rng(8)
    rec = simulate_counts(random_density(2, rng), shots=200, rng=rng)
    P, value_and_dp = _state_objective(rec, cost)
    param = _TriangularParam(4)

    def fun(x):
        L = param.to_matrix(x)
        A = L @ L.conj().T
        rho = A / np.trace(A).real
        p = (P @ rho.T.ravel()).real
        val, dp = value_and_dp(p)
        G = (dp @ P).reshape(4, 4)
        G = (G + G.conj().T) / 2
        Gp = (G - np.trace(G @ rho).real * np.eye(4)) / np.trace(A).real
        return val, param.gradient(Gp, L)

    x = param.from_matrix(_TriangularParam.initial(random_density(2, rng).data))
    _, g = fun(x)
    h = 1e-6
    fd = np.array([(fun(x + h * e)[0] - fun(x - h * e)[0]) / (2 * h) for e in np.eye(len(x))])
    np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-4)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 2), st.sampled_from(["lsq", "poisson"]))
def test_mle_always_physical(seed, n, cost):
    # adversarial counts: arbitrary, incompatible with any state
    rng = np.random.default_rng(seed)
    settings_ = pauli_settings(n)
    counts = rng.integers(0, 50, size=(len(settings_), 2**n)) * rng.integers(0, 2, size=(len(settings_), 1))
    counts[0, 0] += 1
    rec = MeasurementRecord(settings_, counts)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        est = mle_state(rec, cost=cost, max_iter=500)
    assert est.min_eigenvalue >= -1e-9
    assert abs(est.rho.trace() - 1) < 1e-9


def test_unequal_setting_totals():
    rho = as_density(PureState(KET["+"]))
    rec = exact_record(rho, shots=100.0)
    counts = rec.counts.copy()
    counts[0] *= 7  # X setting ran seven times longer
    est = mle_state(MeasurementRecord(rec.settings, counts))
    np.testing.assert_allclose(est.rho.data, rho.data, atol=1e-6)


def chi_outputs(chi, arity):
    return {c: apply_chi(chi, probe_input_state(c)) for c in probe_combinations(arity)}


@pytest.mark.parametrize("name", ["identity", "H", "T", "CNOT", "depolarizing"])
def test_chi_round_trip_exact(name):
    chi = {"identity": identity_chi(), "H": chi_of_unitary(H), "T": chi_of_unitary(T),
           "CNOT": chi_of_unitary(CNOT), "depolarizing": depolarizing_chi(0.8)}[name]
    fit = process_tomography(chi.n_qubits, chi_outputs(chi, chi.n_qubits))
    # the normalized overlap of a mixed chi with itself is its purity, not 1
    assert process_fidelity(chi, fit) == pytest.approx(process_fidelity(chi, chi), abs=1e-5)
    assert channel_fidelity(chi, fit) > 0.999
    assert np.abs(fit.data - chi.data).max() < 1e-4
    assert fit.tp_residual() < 1e-6 and fit.min_eigenvalue() >= -1e-7
    assert not fit.metadata["degenerate"]


def test_chi_identity_is_diag():
    fit = process_tomography(1, chi_outputs(identity_chi(), 1))
    np.testing.assert_allclose(fit.data, np.diag([1, 0, 0, 0]), atol=1e-5)


def test_chi_degeneracy_flag():
    # two probes do not determine a qubit channel
    inputs = [probe_input_state(("H",)), probe_input_state(("+",))]
    outputs = [apply_chi(chi_of_unitary(H), s) for s in inputs]
    fit = fit_chi(inputs, outputs)
    assert fit.metadata["degenerate"]
    assert fit.tp_residual() < 1e-6


def test_chi_fit_from_noisy_estimates_is_physical():
    rng = np.random.default_rng(9)
    chi = depolarizing_chi(0.7, H)
    ests = {c: mle_state(simulate_counts(rho, shots=300, rng=rng))
            for c, rho in chi_outputs(chi, 1).items()}
    fit = process_tomography(1, ests)
    assert fit.tp_residual() < 1e-6 and fit.min_eigenvalue() >= -1e-7
    assert channel_fidelity(chi, fit) > 0.95


def test_process_tomography_missing_probe():
    outs = chi_outputs(identity_chi(), 1)
    outs.pop(("L",))
    with pytest.raises(ValueError):
        process_tomography(1, outs)
    # single-label keys are accepted for one qubit
    fit = process_tomography(1, {k[0]: v for k, v in chi_outputs(identity_chi(), 1).items()})
    assert fit.n_qubits == 1


def test_monte_carlo_trace_is_fixed():
    rec = simulate_counts(random_density(1, np.random.default_rng(10)), shots=100,
                          rng=np.random.default_rng(11))
    mean, std = monte_carlo_errors(rec, lambda r: linear_reconstruct(r).rho.trace(), 20,
                                   np.random.default_rng(12))
    assert mean == pytest.approx(1.0) and std < 1e-12


def test_monte_carlo_independent_of_threads():
    rec = simulate_counts(PureState(KET["+"]), shots=100, rng=np.random.default_rng(13))
    f = lambda r: linear_reconstruct(r).fidelity(PureState(KET["+"]))  # noqa: E731
    a = monte_carlo_samples(rec, f, 16, np.random.default_rng(14), n_jobs=1)
    b = monte_carlo_samples(rec, f, 16, np.random.default_rng(14), n_jobs=4)
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        monte_carlo_samples(rec, f, 1)


def test_monte_carlo_on_record_mapping():
    rng = np.random.default_rng(15)
    recs = {k: simulate_counts(PureState(KET[k]), shots=200, rng=rng) for k in ("H", "+")}
    mean, std = monte_carlo_errors(recs, lambda rs: sum(r.counts.sum() for r in rs.values()),
                                   10, rng)
    assert std > 0 and mean == pytest.approx(2 * 3 * 200, rel=0.1)


def test_state_estimator_api():
    truth = as_density(PureState(KET["L"]))
    rec = simulate_counts(truth, shots=5000, rng=np.random.default_rng(16))
    est = StateTomography().fit(rec)
    assert est.fidelity(PureState(KET["L"])) > 0.99
    assert est.get_params() == {"method": "mle", "cost": "lsq", "max_iter": 5000, "tol": 1e-10}
    lin = clone(est).set_params(method="linear").fit(rec.to_csv())
    assert lin.estimate_.method == "linear"
    like = clone(est).set_params(cost="poisson").fit(rec)
    # among physical states the Poisson fit maximizes the score
    assert like.score(rec) >= est.score(rec) - 1e-6
    with pytest.raises(ValueError):
        StateTomography(method="bayes").fit(rec)


def test_process_estimator_api():
    labels = probe_combinations(1)
    outs = [apply_chi(chi_of_unitary(T), probe_input_state(c)) for c in labels]
    model = ProcessTomography().fit(labels, outs)
    assert process_fidelity(chi_of_unitary(T), model.chi_) > 0.999
    pred = model.predict([probe_input_state(("+",))])
    want = apply_chi(chi_of_unitary(T), probe_input_state(("+",)))
    np.testing.assert_allclose(pred[0].data, want.data, atol=1e-4)
    assert model.score(labels, outs) > -1e-8
    other = ProcessTomography().fit_probes(dict(zip(labels, outs)), 1)
    np.testing.assert_allclose(other.chi_.data, model.chi_.data, atol=1e-6)
