"""End-to-end acceptance checks, one test per shipped guarantee.

`pytest -v tests/test_acceptance.py` prints one pass/fail line per check.
Every test pins its own grid, seeds, and tolerances and runs at full stated
scale, so the module takes a few minutes; the averaging sweep dominates.
"""

import math

import numpy as np

from torusavg import (
    Field,
    FrozenFastConfig,
    LEMMA_IDS,
    LinearSymbol,
    ModelParams,
    StepScheme,
    apply_propagator,
    check_lemma,
    default_checkpoints,
    default_couplings,
    eps_sweep,
    estimate_fbar,
    fbar_provider,
    frac_laplacian,
    gamma_bound,
    holder_study,
    inner_l2,
    khasminskii_study,
    make_grid,
    norm_h1,
    norm_l2,
    random_field,
    rough_initial_slow,
    smooth_initial_slow,
    solve_frozen_fast,
    viscosity_sweep,
)
from torusavg.cli import main as cli_main

TWO_PI = 2.0 * math.pi


def _l2sq_rows(states):
    """Squared L2 norms along the last (coefficient) axis."""
    return TWO_PI * np.sum(np.abs(states) ** 2, axis=-1)


def test_01_fractional_multiplier_exact_and_halfpower_splitting():
    grid = make_grid(64)
    ones = Field(grid, np.ones(grid.n_modes, dtype=np.complex128))
    k = np.abs(grid.wavenumbers).astype(np.float64)
    for alpha in (0.55, 0.75, 0.95):
        got = frac_laplacian(ones, alpha).coeffs
        want = k ** (2.0 * alpha)
        assert np.max(np.abs(got - want)) <= 1e-12

    rng = np.random.default_rng(1)
    for _ in range(100):
        alpha = float(rng.uniform(0.51, 0.999))
        u = random_field(grid, rng)
        v = random_field(grid, rng)
        whole = inner_l2(frac_laplacian(u, alpha), v)
        half = inner_l2(frac_laplacian(u, 0.5 * alpha), frac_laplacian(v, 0.5 * alpha))
        assert abs(whole - half) <= 1e-10 * max(1.0, abs(whole))


def test_02_inequality_oracles_zero_violations():
    failures = []
    for lemma in LEMMA_IDS:
        for beta in (1.5, 2.0, 3.0, 4.0, 7.0):
            bound = gamma_bound(beta)
            for gamma in (0.0, 0.5 * bound, bound):
                report = check_lemma(lemma, beta=beta, gamma=gamma, samples=100_000, seed=5)
                if report.violations:
                    failures.append((lemma, beta, gamma, report.violations, report.worst_margin))
    assert failures == []


def test_03_propagator_contraction_isometry_and_smoothing():
    grid = make_grid(64)
    rng = np.random.default_rng(3)
    cases = 0
    while cases < 1000:
        u = random_field(grid, rng)
        base = norm_l2(u)
        t = float(rng.uniform(0.0, 10.0))
        a = float(rng.uniform(0.51, 0.99))
        symbols = [
            LinearSymbol.slow_free(a),
            LinearSymbol.slow_viscous(a, float(rng.uniform(0.0, 0.2))),
            LinearSymbol.averaged_viscous(a, float(rng.uniform(0.0, 0.2))),
            LinearSymbol.fast_dissipative(
                a, float(rng.uniform(0.5, 10.0)), float(rng.uniform(0.01, 1.0))
            ),
        ]
        for symbol in symbols:
            assert norm_l2(apply_propagator(u, symbol, t)) <= base * (1.0 + 1e-12)
            cases += 1
        free = apply_propagator(u, LinearSymbol.slow_free(a), t)
        assert abs(norm_l2(free) - base) <= 1e-12 * base

    # sqrt(t) ||S_nu(t) u||_H1 / ||u|| stays below the heat-kernel cap
    # sqrt(T + 1/(2 e nu)) even for data with barely-summable coefficients
    nu = 0.1
    cap = math.sqrt(1.0 + 1.0 / (2.0 * math.e * nu))
    symbol = LinearSymbol.slow_viscous(0.75, nu)
    u = random_field(grid, np.random.default_rng(30), decay=0.6)
    base = norm_l2(u)
    sup = max(
        math.sqrt(t) * norm_h1(apply_propagator(u, symbol, t)) / base
        for t in np.logspace(-4.0, 0.0, 60)
    )
    assert sup <= cap + 1e-9


def test_04_frozen_fast_synchronous_contraction():
    grid = make_grid(32)
    params = ModelParams(lam=6.0)
    couplings = default_couplings("norm_based")
    u = smooth_initial_slow(grid)
    va0 = Field.zero(grid)
    vb0 = rough_initial_slow(grid, seed=31, amplitude=0.4)
    d0_sq = norm_l2(va0 - vb0) ** 2
    times = [1.0 / 24.0, 1.0 / 12.0, 1.0 / 6.0]
    kwargs = dict(
        horizon=1.0 / 6.0,
        dt=1.0 / 2400.0,
        n_replicas=200,
        seed=101,
        experiment="acc-sync",
        checkpoints=times,
    )
    actual, states_a = solve_frozen_fast(grid, params, couplings, u, va0, **kwargs)
    _, states_b = solve_frozen_fast(grid, params, couplings, u, vb0, **kwargs)
    dist_sq = _l2sq_rows(states_a - states_b)
    for i, t in enumerate(actual):
        mean = dist_sq[i].mean()
        se = dist_sq[i].std(ddof=1) / math.sqrt(dist_sq.shape[1])
        ratio = mean / d0_sq
        assert ratio <= math.exp(-params.lam * t) * (1.0 + 3.0 * se / mean)


def test_05_averaged_forcing_exact_constant_and_mixing():
    grid = make_grid(32)
    params = ModelParams(lam=6.0)

    # v-independent coupling: the estimator short-circuits and is exact
    constant = default_couplings("constant")
    exact = estimate_fbar(
        grid, params, constant, smooth_initial_slow(grid), FrozenFastConfig(), experiment="acc-fbar"
    )
    assert exact.method == "direct"
    assert exact.value == 0.5
    assert exact.se == 0.0

    # mixing: the instantaneous ensemble forcing agrees with the long-run
    # average once t clears 8 fast relaxation times
    couplings = default_couplings("norm_based")
    u = smooth_initial_slow(grid)
    est = estimate_fbar(
        grid,
        params,
        couplings,
        u,
        FrozenFastConfig(dt=5e-3, horizon=4.0, n_replicas=32, seed=2024),
        experiment="acc-fbar",
    )
    times = [8.0 / params.lam, 10.0 / params.lam, 2.0]
    actual, states = solve_frozen_fast(
        grid,
        params,
        couplings,
        u,
        Field.zero(grid),
        horizon=2.0,
        dt=5e-3,
        n_replicas=200,
        seed=103,
        experiment="acc-mix",
        checkpoints=times,
    )
    u_norm = norm_l2(u)
    v_norms = np.sqrt(_l2sq_rows(states))
    for i in range(len(actual)):
        inst = couplings.F_from_norms(u_norm, v_norms[i])
        mean = inst.mean()
        se = inst.std(ddof=1) / math.sqrt(inst.size)
        combined = math.sqrt(se**2 + est.se**2)
        assert abs(mean - est.value) < 3.0 * combined


def test_06_viscosity_error_slope_near_one():
    # n_modes = 128 keeps the diffusive cutoff 1/sqrt(nu) <= 32 resolved with
    # headroom; on coarser grids the band edge, not the viscosity law, sets
    # the smallest-nu error and the fitted slope leaves the band
    grid = make_grid(128)
    params = ModelParams(eps=0.1, T=1.0)
    result = viscosity_sweep(
        grid,
        params,
        default_couplings("norm_based"),
        StepScheme(dt_slow=1e-3),
        rough_initial_slow(grid),
        Field.zero(grid),
        default_checkpoints(params.T, 9),
        [1e-2, 3e-3, 1e-3],
        100,
        33,
        "acc-visc",
    )
    assert not result.ill_conditioned
    assert 0.7 <= result.slope <= 1.3


def test_07_time_modulus_slope_floor():
    grid = make_grid(32)
    params = ModelParams(eps=0.1, nu=0.1, T=1.0)
    result = holder_study(
        grid,
        params,
        default_couplings("norm_based"),
        StepScheme(dt_slow=1e-3),
        smooth_initial_slow(grid),
        Field.zero(grid),
        0.5,
        [1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
        50,
        44,
        "acc-holder",
    )
    assert not result.ill_conditioned
    assert result.slope >= 0.7


def test_08_block_freezing_errors_grow_with_delta():
    grid = make_grid(32)
    params = ModelParams(eps=1e-2, T=1.0)
    scheme = StepScheme(dt_slow=1e-3)
    u0 = smooth_initial_slow(grid)
    v0 = rough_initial_slow(grid, seed=7, amplitude=0.2)
    deltas = [4e-3, 1.6e-2, 6.4e-2, 1.0]

    res_u, _ = khasminskii_study(
        grid, params, default_couplings("norm_based"), scheme, u0, v0, deltas, 24, 55, "acc-khas"
    )
    assert np.all(np.diff(res_u.error) > 0.0)
    assert res_u.monotone_2se

    # v-independent freezing: the auxiliary fast process is the fast process,
    # so its error is exactly zero at every block length
    _, res_v = khasminskii_study(
        grid, params, default_couplings("constant"), scheme, u0, v0, deltas, 4, 55, "acc-khas-const"
    )
    assert np.all(res_v.error == 0.0)
    assert np.all(res_v.se == 0.0)


def test_09_averaging_error_shrinks_with_eps():
    grid = make_grid(32)
    params = ModelParams(eps=0.01, T=1.0)
    scheme = StepScheme(dt_slow=1e-3, dt_fast=5e-5)
    u0 = smooth_initial_slow(grid)
    v0 = rough_initial_slow(grid, seed=7, amplitude=0.2)
    checkpoints = default_checkpoints(params.T, 9)
    eps_values = [1e-1, 3e-2, 1e-2, 3e-3]
    couplings = default_couplings("norm_based")
    provider = fbar_provider(
        grid, params, couplings, config=FrozenFastConfig(dt=5e-3, horizon=4.0)
    )
    result = eps_sweep(
        grid, params, couplings, scheme, u0, v0, checkpoints, eps_values, 100, 42, "acc-eps",
        fbar=provider,
    )
    # non-increasing toward small eps within two combined standard errors
    assert result.monotone_2se
    # and genuinely decreasing from the loosest separation to the floor
    order = np.argsort(result.x)
    e, s = result.error[order], result.se[order]
    assert e[-1] - e[0] > 2.0 * (s[-1] + s[0])

    # v-independent coupling: coupled and averaged slow paths are the same
    # arrays, so the strong error is exactly zero at every eps
    degenerate = eps_sweep(
        grid,
        params,
        default_couplings("constant"),
        scheme,
        u0,
        v0,
        checkpoints,
        eps_values,
        4,
        42,
        "acc-eps-const",
    )
    assert np.all(degenerate.error == 0.0)
    assert np.all(degenerate.se == 0.0)


def test_10_cli_outputs_byte_deterministic(tmp_path, capsys):
    config = tmp_path / "acc.toml"
    config.write_text(
        "\n".join(
            [
                "[params]",
                "T = 0.02",
                "eps = 0.1",
                "[grid]",
                "n_modes = 16",
                "[couplings]",
                'kind = "norm_based"',
                "[ensemble]",
                "n_paths = 2",
                "n_checkpoints = 3",
            ]
        )
    )

    def tree(root):
        return {
            p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*"))
            if p.is_file()
        }

    commands = {
        "lemmas": ["verify-lemmas", "--config", str(config), "--samples", "2000"],
        "simulate": ["simulate", "--config", str(config)],
        "fbar": ["fbar", "--config", str(config)],
        "sweep": [
            "sweep", "--kind", "khasminskii", "--config", str(config),
            "--values", "0.002", "0.004", "0.01",
        ],
    }
    for label, argv in commands.items():
        first = tmp_path / (label + "-1")
        second = tmp_path / (label + "-2")
        assert cli_main(argv + ["--out", str(first)]) == 0
        assert cli_main(argv + ["--out", str(second)]) == 0
        assert tree(first) == tree(second)

    # thread count changes scheduling only, never bytes
    base = tree(tmp_path / "simulate-1")
    threaded = tmp_path / "simulate-t3"
    assert cli_main(commands["simulate"] + ["--threads", "3", "--out", str(threaded)]) == 0
    assert tree(threaded) == base

    swept = tree(tmp_path / "sweep-1")
    threaded = tmp_path / "sweep-t2"
    assert cli_main(commands["sweep"] + ["--threads", "2", "--out", str(threaded)]) == 0
    assert tree(threaded) == swept
