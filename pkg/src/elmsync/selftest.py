"""Fast property checks that do not depend on Monte Carlo outcomes.

Run with ``elmsync selftest``.  Each check raises ``AssertionError`` on
failure; :func:`run_selftest` collects one result line per check.
"""

import math
import tempfile
import traceback

import numpy as np
import scipy.linalg

from .elm import ElmModel, estimate_sto, infer, init_elm, load_model, save_model, train_output_weights
from .frame import SystemParams, add_cyclic_prefix, build_schmidl_preamble, ofdm_modulate
from .impairments import (
    SalehParams,
    calibrate_backoff,
    compute_evm,
    measure_evm,
    propagate,
    saleh_distort,
)
from .labels import make_labels
from .metric import normalize_tm, timing_metric

PARAMS = SystemParams()


def check_parseval_roundtrip():
    rng = np.random.default_rng(11)
    for N in (8, 64):
        d = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        s = ofdm_modulate(d)
        assert math.isclose(np.sum(np.abs(s) ** 2), N * np.sum(np.abs(d) ** 2), rel_tol=1e-9)
        back = np.fft.fft(s) / N
        assert np.linalg.norm(back - d) <= 1e-9 * np.linalg.norm(d)


def check_preamble_symmetry():
    p = PARAMS
    for seed in range(20):
        pre = build_schmidl_preamble(seed, p)
        body = pre[p.Ng:]
        assert np.max(np.abs(body[:p.N // 2] - body[p.N // 2:])) <= 1e-12
        assert np.array_equal(pre[:p.Ng], pre[-p.Ng:])


def check_saleh():
    p = SalehParams()
    rng = np.random.default_rng(3)
    s = 2 * (rng.standard_normal(256) + 1j * rng.standard_normal(256))
    for k in range(4):
        rot = 1j ** k
        assert np.array_equal(saleh_distort(rot * s, p, 0.3), rot * saleh_distort(s, p, 0.3))
    rot = np.exp(0.7j)
    assert np.allclose(saleh_distort(rot * s, p, 0.3), rot * saleh_distort(s, p, 0.3), rtol=0, atol=1e-12)
    out = saleh_distort(np.array([1.0 + 0j]), p, 1.0)[0]
    assert abs(abs(out) - 1.96 / 1.99) <= 1e-12
    assert abs(np.angle(out) - 2.53 / 3.82) <= 1e-12
    assert np.max(np.abs(saleh_distort(s * 50, p, 1.0))) <= p.max_amplitude + 1e-15


def check_evm_identities():
    rng = np.random.default_rng(4)
    ref = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    assert compute_evm(ref, ref) == 0.0
    assert math.isclose(compute_evm(np.zeros_like(ref), ref), 100.0, rel_tol=1e-12)
    assert math.isclose(compute_evm(1.1 * ref, ref), 10.0, rel_tol=1e-9)


def check_calibration():
    p = SalehParams()
    eta = calibrate_backoff(40.0, p, PARAMS, seed=5, trials=100)
    rng = np.random.default_rng(505)
    frames = np.stack([
        add_cyclic_prefix(ofdm_modulate(np.exp(1j * np.pi / 2 * rng.integers(0, 4, PARAMS.N) + 1j * np.pi / 4)), PARAMS.Ng)
        for _ in range(200)
    ])
    assert abs(np.mean(measure_evm(frames, p, eta, axis=-1)) - 40.0) <= 1.0


def check_metric():
    p = PARAMS
    pre = build_schmidl_preamble(9, p)
    rng = np.random.default_rng(9)
    tail = add_cyclic_prefix(ofdm_modulate(np.exp(1j * np.pi / 2 * rng.integers(0, 4, (2, p.N)))), p.Ng).ravel()
    frame = saleh_distort(np.concatenate([pre, tail]), SalehParams(), 0.01)
    theta = 30
    r = propagate(frame[None], [[1.0]], [theta], [0.0], [0.0], p.N, p.observation_length)[0]
    r = r + 1e-3 * (rng.standard_normal(r.size) + 1j * rng.standard_normal(r.size))
    M = timing_metric(r, p)
    assert np.all(M[theta:theta + p.Ng + 1] >= 0.99)
    for k in range(4):
        assert np.array_equal(timing_metric((1j ** k) * 4.0 * r, p), M)
    assert np.allclose(timing_metric(np.exp(0.3j) * 0.37 * r, p), M, rtol=1e-12, atol=0)
    g = normalize_tm(M)
    assert abs(np.linalg.norm(g) - 1.0) <= 1e-9


def check_pseudoinverse():
    rng = np.random.default_rng(6)
    for m, n in [(2, 3), (4, 6), (8, 8), (5, 3)]:
        H = rng.standard_normal((m, n))
        Hp = np.linalg.pinv(H)
        assert np.allclose(H @ Hp @ H, H, atol=1e-8)
        assert np.allclose(Hp @ H @ Hp, Hp, atol=1e-8)
    H = rng.standard_normal((2, 3))
    T = rng.standard_normal((4, 3))
    oracle = T @ H.T @ np.linalg.inv(H @ H.T)
    assert np.allclose(train_output_weights(H, T), oracle, atol=1e-8)
    H = rng.standard_normal((3, 4))
    H[2] = H[0]
    T = rng.standard_normal((2, 4))
    ups = train_output_weights(H, T)
    ref = scipy.linalg.lstsq(H.T, T.T, lapack_driver="gelsy")[0].T
    assert np.allclose(ups, ref, atol=1e-8)


def check_labels():
    p = PARAMS
    thetas = np.arange(p.max_theta + 1)
    for L in range(1, p.Ng + 1):
        isi = make_labels("isi_free", thetas, p, L)
        mid = make_labels("midpoint", thetas, p, L)
        one = make_labels("onehot_end", thetas, p, L)
        assert np.all(isi.sum(axis=1) == p.Ng - L + 2)
        assert np.all(mid.sum(axis=1) == 1) and np.all(one.sum(axis=1) == 1)
        assert np.all(isi[mid.astype(bool)] == 1)
        assert np.all(isi[one.astype(bool)] == 1)
        assert np.array_equal(isi[1:, 1:], isi[:-1, :-1])
        assert np.array_equal(mid[1:, 1:], mid[:-1, :-1])


def check_error_region():
    from .harness.simulate import timing_error

    theta, L, Ng = 20, 8, 16
    assert not timing_error(theta + L, theta, L, Ng)
    assert timing_error(theta + L - 1, theta, L, Ng)
    assert not timing_error(theta + Ng + 1, theta, L, Ng)
    assert timing_error(theta + Ng + 2, theta, L, Ng)


def check_model_roundtrip():
    model = init_elm(12, 10, seed=1)
    model = ElmModel(model.W, model.b, np.random.default_rng(2).standard_normal((10, 12)), seed=1)
    with tempfile.TemporaryDirectory() as tmp:
        path = f"{tmp}/m.elm"
        save_model(model, path)
        back = load_model(path)
    x = normalize_tm(np.random.default_rng(3).random(10))
    assert np.array_equal(back.W, model.W) and np.array_equal(back.upsilon, model.upsilon)
    assert estimate_sto(infer(x, back)) == estimate_sto(infer(x, model))


def check_worker_reproducibility():
    from .harness.config import ExperimentConfig
    from .harness.simulate import Estimator, evaluate

    cfg = ExperimentConfig(eta_train=0.05, eta_test=0.05, n_test_trials=300, chunk_size=64, snr_grid_db=(10.0,))
    one = evaluate(cfg, [Estimator("sc_corr")], n_trials=300)[0]
    two = evaluate(cfg.with_(workers=2), [Estimator("sc_corr")], n_trials=300)[0]
    assert one.rows == two.rows


CHECKS = {
    "parseval and round-trip": check_parseval_roundtrip,
    "preamble half-symmetry and CP": check_preamble_symmetry,
    "Saleh covariance and spot values": check_saleh,
    "EVM identities": check_evm_identities,
    "EVM calibration closed loop (40%)": check_calibration,
    "metric invariances, plateau, normalisation": check_metric,
    "pseudoinverse identities and oracles": check_pseudoinverse,
    "label geometry over the legal grid": check_labels,
    "error-region boundaries": check_error_region,
    "model file round-trip": check_model_roundtrip,
    "reproducibility across worker counts": check_worker_reproducibility,
}


def run_selftest(names=None, verbose=False) -> list[tuple[str, bool, str]]:
    results = []
    for name, fn in CHECKS.items():
        if names and name not in names:
            continue
        try:
            fn()
            results.append((name, True, ""))
        except Exception as exc:  # noqa: BLE001 - report every failure, keep going
            detail = traceback.format_exc() if verbose else f"{type(exc).__name__}: {exc}"
            results.append((name, False, detail))
    return results

