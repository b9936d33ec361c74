"""Exit criteria, each at its stated tolerance and runtime budget."""

import csv
import io
import math
import time

import numpy as np
import pytest

from miso_lab import cli
from miso_lab import montecarlo as mc
from miso_lab.bounds import equal_power_rate, ideal_asymptote, ideal_bracket, waterfill
from miso_lab.channel import ChannelConfig
from miso_lab.encoders import BUILTIN_ENCODERS
from miso_lab.estimator import reset, update
from miso_lab.numerics import chi2_log_lower_bound_bits, chi2_log_mean_bits
from miso_lab.scheme import pilot, scalar_mmse

pytestmark = pytest.mark.acceptance

SEED = mc.DEFAULT_SEED


class Clock:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_criterion_01_formula_fidelity(criterion, capsys):
    with Clock() as clock:
        code = cli.main(["bounds", "--m", "64", "--tc", "8", "--p", "10", "--kappa", "1"])
    out = capsys.readouterr().out
    row = next(csv.DictReader(io.StringIO(out)))
    vals = {k: float(row[k]) for k in ("upper_second", "upper_fourth", "lower_second")}
    ok = (code == 0 and row["T_tau"] == "3"
          and abs(vals["upper_second"] - 14.9722) <= 1e-3
          and abs(vals["upper_fourth"] - 7.0032) <= 1e-3
          and abs(vals["lower_second"] - 2.0933) <= 1e-3
          and clock.seconds < 1.0)
    criterion(1, ok, f"{vals} in {clock.seconds:.2f}s")
    assert ok


def test_criterion_02_pilot_consistency(criterion):
    worst = 0.0
    gen = np.random.default_rng(2)
    with Clock() as clock:
        for p in (0.1, 1.0, 10.0, 1e3):
            for m in (1, 3, 8):
                for t in range(1, m + 1):
                    y = complex(gen.normal(), gen.normal())
                    state = update(reset(m), pilot(t, p, m), y)
                    ref = scalar_mmse(y, p)
                    worst = max(worst, abs(state.h_hat[t - 1] - ref) / abs(ref))
    ok = worst <= 1e-12 and clock.seconds < 1.0
    criterion(2, ok, f"max relative error {worst:.2e} in {clock.seconds:.2f}s")
    assert ok


def test_criterion_03_sequential_vs_batch(criterion):
    with Clock() as clock:
        gaps = [mc.sequential_vs_batch_gap(c, SEED) for c in range(1000)]
    mean_gap = max(g[0] for g in gaps)
    cov_gap = max(g[1] for g in gaps)
    ok = mean_gap <= 1e-8 and cov_gap <= 1e-8 and clock.seconds < 10
    criterion(3, ok, f"mean gap {mean_gap:.1e}, cov gap {cov_gap:.1e} over 1000 cases "
                     f"in {clock.seconds:.1f}s")
    assert ok


def test_criterion_04_omega_spectrum(criterion):
    with Clock() as clock:
        hi, lo = mc.omega_spectrum_check(10_000, SEED)
    ok = hi.passed and lo.passed and clock.seconds < 30
    criterion(4, ok, f"eigenvalues in [{-lo.observed:.2e}, {hi.observed:.15f}] over "
                     f"{hi.trials} runs in {clock.seconds:.1f}s")
    assert ok


def test_criterion_05_moment_suite(criterion):
    results = []
    with Clock() as clock:
        for m in (4, 8, 16):
            for tc in (4, 8):
                for p in (1.0, 10.0):
                    cfg = ChannelConfig(m, tc, p)
                    for enc in BUILTIN_ENCODERS.values():
                        results.extend(mc.encoder_checks(enc, cfg, 100_000, SEED))
    failed = [r for r in results if not r.passed]
    slack = min(r.slack_sigmas for r in results)
    ok = not failed and clock.seconds < 120
    criterion(5, ok, f"{len(results) - len(failed)}/{len(results)} checks pass, "
                     f"min slack {slack:.2f} stderr, {clock.seconds:.0f}s")
    assert ok, failed[:5]


def _lemma5_pairs():
    gen = np.random.default_rng(6)
    for _ in range(20):
        n = int(gen.integers(1, 7))
        b = gen.normal(size=(n, n)) + 1j * gen.normal(size=(n, n))
        c = gen.normal(size=(n, n)) + 1j * gen.normal(size=(n, n))
        omega = c @ c.conj().T / n
        yield 0.5 * (b + b.conj().T), 0.5 * (omega + omega.conj().T)


def test_criterion_06_identity_value():
    for m in (1, 2, 4, 16, 64):
        eye = np.eye(m)
        assert mc.quadratic_fourth_moment(eye, eye) == m * m + 2 * m


def test_criterion_06_proper_form_matches_mc():
    # the value the Monte Carlo actually converges to for proper complex Gaussians
    for i, (a, omega) in enumerate(_lemma5_pairs()):
        est = mc.quadratic_fourth_moment_mc(a, omega, 100_000, SEED, stream_offset=i * 100_000)
        assert abs(est.mean - mc.quadratic_fourth_moment_proper(a, omega)) <= 3 * est.stderr


@pytest.mark.xfail(strict=True, reason="the stated closed form is the real-Gaussian value; "
                   "proper complex vectors give tr(A Omega A Omega) less")
def test_criterion_06_stated_form_matches_mc(criterion):
    hits = 0
    worst = 0.0
    with Clock() as clock:
        for i, (a, omega) in enumerate(_lemma5_pairs()):
            est = mc.quadratic_fourth_moment_mc(a, omega, 100_000, SEED,
                                                stream_offset=i * 100_000)
            z = abs(est.mean - mc.quadratic_fourth_moment(a, omega)) / est.stderr
            worst = max(worst, z)
            hits += z <= 3
    ok = hits == 20 and clock.seconds < 30
    criterion(6, ok, f"{hits}/20 pairs within 3 stderr (worst {worst:.0f} stderr); "
                     f"A=I, Omega=I gives M^2+2M exactly; {clock.seconds:.1f}s")
    assert ok


def test_criterion_07_chi2_log_mean(criterion):
    with Clock() as clock:
        res = mc.lemma9_checks(1_000_000, SEED)
    dominance = all(chi2_log_mean_bits(k) >= chi2_log_lower_bound_bits(k)
                    for k in range(2, 201, 2))
    ok = all(r.passed for r in res) and dominance and clock.seconds < 30
    criterion(7, ok, f"{sum(r.passed for r in res)}/{len(res)} checks, dominance up to k=200: "
                     f"{dominance}, {clock.seconds:.1f}s")
    assert ok


def test_criterion_08_scheme_dominance(criterion):
    with Clock() as clock:
        low, high = mc.theorem5_checks(100_000, SEED)
    ok = (low.passed and high.passed and abs(low.observed - 2.0933) <= 1e-3
          and clock.seconds < 60)
    criterion(8, ok, f"rate {high.observed:.4f} +/- {high.stderr:.4f} in "
                     f"[{low.observed:.4f}, {high.bound:.4f}], {clock.seconds:.1f}s")
    assert ok


def test_criterion_09_waterfilling(criterion):
    worst_res, bad = 0.0, []
    margin = math.inf
    with Clock() as clock:
        for m in range(1, 257):
            for p in (0.1, 1.0, 10.0, 100.0):
                wf = waterfill(m, p)
                lo, hi = ideal_bracket(m, p)
                worst_res = max(worst_res, wf.power_residual)
                gain = wf.rate_bits - equal_power_rate(m, p)
                margin = min(margin, gain)
                if not (lo <= wf.rate_bits <= hi and gain > 0):
                    bad.append((m, p))
    ok = worst_res < 1e-9 and not bad and clock.seconds < 60
    criterion(9, ok, f"max power residual {worst_res:.1e}, {1024 - len(bad)}/1024 in bracket "
                     f"and above equal power (min margin {margin:.1e}), {clock.seconds:.1f}s")
    assert ok


def test_criterion_10_ideal_trend(criterion):
    with Clock() as clock:
        ratios = [waterfill(m, 10.0).rate_bits / ideal_asymptote(m, 10.0) for m in (8, 64, 512)]
    ok = ratios[0] < ratios[1] < ratios[2] and ratios[2] > 0.9 and clock.seconds < 10
    criterion(10, ok, f"ratios {[round(r, 5) for r in ratios]}, {clock.seconds:.2f}s")
    assert ok


def test_criterion_11_gain_trend(criterion):
    ms = [16, 64, 256]
    with Clock() as clock:
        grow = mc.sweep_gain(1.0, 1.0, ms, 10_000, SEED)
        flat = mc.sweep_gain(0.0, 1.0, ms, 10_000, SEED)
    g = [r.rate_over_log2m for r in grow]
    f = [r.rate_over_log2m for r in flat]
    ok = (len(g) == len(f) == 3 and g[0] < g[1] < g[2] and f[0] > f[1] > f[2]
          and clock.seconds < 180)
    criterion(11, ok, f"alpha=1: {[round(x, 4) for x in g]}, alpha=0: "
                      f"{[round(x, 4) for x in f]} (P=1), {clock.seconds:.1f}s")
    assert ok


COMMANDS = [
    ["bounds", "--m", "64", "--tc", "8", "--p", "10", "--kappa", "1", "--format", "json"],
    ["simulate", "--m", "64", "--tc", "8", "--p", "10", "--trials", "10000"],
    ["sweep-alpha", "--alpha", "1", "--p", "1", "--m-list", "16,64", "--trials", "2000"],
    ["verify-lemmas", "--trials", "10000"],
]


def test_criterion_12_determinism(criterion, tmp_path):
    same = []
    for i, argv in enumerate(COMMANDS):
        blobs = []
        for rep in range(2):
            path = tmp_path / f"{i}-{rep}"
            cli.main(argv + ["--out", str(path)])
            blobs.append(path.read_bytes())
        same.append(bool(blobs[0]) and blobs[0] == blobs[1])
    ok = all(same)
    criterion(12, ok, f"byte-identical reruns for {sum(same)}/{len(same)} commands")
    assert ok
