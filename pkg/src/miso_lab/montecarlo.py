"""Monte Carlo orchestration: scheme rates, gain sweeps and the lemma checks.

Every trial owns the random stream ``(seed, trial_index)``, so results do not
depend on chunk sizes or on how many worker threads run (see
``MISO_LAB_THREADS``). One-sided checks pass when
``observed <= bound + 3 * stderr``.
"""

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bounds import lower_second, upper_second
from .channel import ChannelConfig
from .encoders import BUILTIN_ENCODERS, EncoderInput, RandomFeedbackEncoder
from .errors import DegenerateConfigError, InvalidInputError
from .estimator import (GaussPrior, batch_condition, reset, run_feedback_block, update)
from .numerics import (StreamBatch, chi2_log_lower_bound_bits, chi2_log_mean_bits,
                       psd_sqrt, sample_cn)
from .scheme import SchemeConfig, simulate_blocks

__all__ = [
    "DEFAULT_SEED",
    "SIGMAS",
    "McEstimate",
    "LemmaCheckResult",
    "SweepRow",
    "one_sided_check",
    "estimate_scheme_rate",
    "feedback_moments",
    "verify_hhat_power",
    "verify_increment_moments",
    "verify_genie_power",
    "quadratic_fourth_moment",
    "quadratic_fourth_moment_proper",
    "quadratic_fourth_moment_mc",
    "omega_spectrum_check",
    "sequential_vs_batch_gap",
    "sweep_gain",
    "lemma_suite",
]

DEFAULT_SEED = 0xC0FFEE
SIGMAS = 3.0
CHUNK = 4096
# Counter offset for the genie noise, far beyond anything a block consumes.
_GENIE_POSITION = 1 << 40


def worker_count():
    env = os.environ.get("MISO_LAB_THREADS")
    cpus = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cpus))
        except ValueError:
            warnings.warn(f"ignoring MISO_LAB_THREADS={env!r}")
    return cpus


def _map_chunks(fn, trials, chunk=CHUNK):
    starts = range(0, trials, chunk)
    spans = [(s, min(s + chunk, trials)) for s in starts]
    workers = worker_count()
    if workers == 1 or len(spans) == 1:
        return [fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), spans))


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    trials: int
    master_seed: int

    @classmethod
    def from_samples(cls, samples, master_seed):
        samples = np.asarray(samples, dtype=float)
        n = samples.size
        if n < 2:
            raise InvalidInputError("need at least two trials for a standard error")
        return cls(float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(n)),
                   n, int(master_seed))


@dataclass(frozen=True)
class LemmaCheckResult:
    """Outcome of one check ``observed <= bound`` at ``SIGMAS`` standard errors."""

    lemma_id: str
    observed: float
    bound: float
    stderr: float
    slack_sigmas: float
    passed: bool
    trials: int
    seed: int
    context: dict = field(default_factory=dict)

    def to_json_dict(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        if not math.isfinite(d["slack_sigmas"]):
            d["slack_sigmas"] = None
        return d


def one_sided_check(lemma_id, observed, bound, stderr, trials, seed, **context):
    observed, bound, stderr = float(observed), float(bound), float(stderr)
    if stderr > 0:
        slack = (bound - observed) / stderr
    else:
        slack = math.inf if observed <= bound else -math.inf
    passed = observed <= bound + SIGMAS * stderr
    return LemmaCheckResult(lemma_id, observed, bound, stderr, slack, bool(passed),
                            int(trials), int(seed), context)


# ---------------------------------------------------------------------------
# scheme rate

def _rate_samples(cfg, g):
    p = cfg.effective_power
    frac = cfg.t_data / cfg.channel.coherence_tc
    return frac * np.log2(1.0 + p * g / (p * cfg.sigma_sq + 1.0))


def estimate_scheme_rate(cfg, trials, seed):
    """Average over blocks of ``(T_c - T_tau)/T_c log2(1 + P g/(P sigma^2 + 1))``,
    ``g = ||h_hat_tau||^2``; the quantity the closed-form scheme bound
    lower-bounds."""
    if not isinstance(cfg, SchemeConfig):
        raise InvalidInputError("cfg must be a SchemeConfig")
    trials = int(trials)

    def run(a, b):
        return _rate_samples(cfg, simulate_blocks(cfg, b - a, seed, first_trial=a).g)

    return McEstimate.from_samples(np.concatenate(_map_chunks(run, trials)), seed)


# ---------------------------------------------------------------------------
# moments of the MMSE estimate under adaptive encoders

@dataclass(frozen=True)
class FeedbackMoments:
    """Per-trial samples from one coherence block per trial.

    Column ``t-1`` of ``hhat2``/``genie2`` refers to in-block time ``t``;
    column ``t-1`` of ``incr2`` refers to the increment ``h_hat_{t+1} - h_hat_t``.
    """

    hhat2: np.ndarray
    incr2: np.ndarray
    genie2: np.ndarray
    trace_omega: np.ndarray
    seed: int


def feedback_moments(encoder, cfg, trials, seed, steps=None):
    steps = cfg.coherence_tc if steps is None else int(steps)

    def run(a, b):
        n = b - a
        hhat2 = np.zeros((n, steps))
        incr2 = np.zeros((n, max(steps - 1, 0)))
        trace = np.zeros((n, steps))

        def observe(step):
            hhat2[:, step.t - 1] = np.einsum("ni,ni->n", step.est.h_hat.conj(), step.est.h_hat).real
            trace[:, step.t - 1] = np.einsum("nii->n", step.est.omega).real
            if step.increment is not None:
                incr2[:, step.t - 2] = np.einsum("ni,ni->n", step.increment.conj(), step.increment).real

        ids = np.arange(a, b)
        run_feedback_block(encoder, cfg, seed, ids, observe, steps=steps)
        genie_noise = StreamBatch(seed, ids, position=_GENIE_POSITION).standard_cn(steps)
        genie2 = np.abs(np.sqrt(hhat2) + genie_noise) ** 2
        return hhat2, incr2, genie2, trace

    parts = _map_chunks(run, int(trials))
    cols = [np.concatenate(c, axis=0) for c in zip(*parts)]
    return FeedbackMoments(*cols, seed=int(seed))


def _context(encoder, cfg, t):
    return {"encoder": getattr(encoder, "name", type(encoder).__name__),
            "M": cfg.antennas_m, "T_c": cfg.coherence_tc, "P": cfg.power_p, "t": t}


def _check_t(cfg, t, upper=None):
    upper = cfg.coherence_tc if upper is None else upper
    if int(t) != t or not 1 <= t <= upper:
        raise InvalidInputError(f"t must be an integer in [1, {upper}], got {t!r}")


def _hhat_checks(mom, cfg, t, ctx):
    k = (t - 1) % cfg.coherence_tc
    m = cfg.antennas_m
    s2, s4 = mom.hhat2[:, t - 1], mom.hhat2[:, t - 1] ** 2
    e2 = McEstimate.from_samples(s2, mom.seed)
    e4 = McEstimate.from_samples(s4, mom.seed)
    return (
        one_sided_check("lemma4_second_moment", e2.mean, min(m, k), e2.stderr,
                        e2.trials, mom.seed, **ctx),
        one_sided_check("lemma4_fourth_moment", e4.mean,
                        min(m * m + 2 * m, 2 * k * k + 5 * k), e4.stderr,
                        e4.trials, mom.seed, **ctx),
    )


def _increment_checks(mom, t, ctx):
    s2 = mom.incr2[:, t - 1]
    e2 = McEstimate.from_samples(s2, mom.seed)
    e4 = McEstimate.from_samples(s2 ** 2, mom.seed)
    return (
        one_sided_check("lemma11_increment_second_moment", e2.mean, 1.0, e2.stderr,
                        e2.trials, mom.seed, **ctx),
        one_sided_check("lemma12_increment_fourth_moment", e4.mean, 3.0, e4.stderr,
                        e4.trials, mom.seed, **ctx),
    )


def _genie_check(mom, cfg, t, ctx):
    e = McEstimate.from_samples(mom.genie2[:, t - 1], mom.seed)
    bound = min(cfg.antennas_m, cfg.coherence_tc) + 1.0
    return one_sided_check("genie_power", e.mean, bound, e.stderr, e.trials, mom.seed, **ctx)


def verify_hhat_power(encoder, cfg, t, trials, seed):
    """Check ``E||h_hat_t||^2 <= min(M, k)`` and
    ``E||h_hat_t||^4 <= min(M^2 + 2M, 2k^2 + 5k)`` with ``k = (t-1) mod T_c``."""
    _check_t(cfg, t)
    mom = feedback_moments(encoder, cfg, trials, seed, steps=t)
    return _hhat_checks(mom, cfg, t, _context(encoder, cfg, t))


def verify_increment_moments(encoder, cfg, t, trials, seed):
    """Check ``E||h_hat_{t+1} - h_hat_t||^2 <= 1`` and ``E||.||^4 <= 3``
    (``1 <= t < T_c``)."""
    _check_t(cfg, t, cfg.coherence_tc - 1)
    mom = feedback_moments(encoder, cfg, trials, seed, steps=t + 1)
    return _increment_checks(mom, t, _context(encoder, cfg, t))


def verify_genie_power(encoder, cfg, t, trials, seed):
    """Check ``E|(||h_hat_t|| + z~)|^2 <= min(M, T_c) + 1``."""
    _check_t(cfg, t)
    mom = feedback_moments(encoder, cfg, trials, seed, steps=t)
    return _genie_check(mom, cfg, t, _context(encoder, cfg, t))


# ---------------------------------------------------------------------------
# Gaussian quadratic forms

def _check_pair(a, omega):
    a = np.asarray(a, dtype=complex)
    omega = np.asarray(omega, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != omega.shape:
        raise InvalidInputError("A and Omega must be square and of equal size")
    if np.abs(omega - omega.conj().T).max(initial=0.0) > 1e-12:
        raise InvalidInputError("Omega is not Hermitian")
    scale = max(1.0, float(np.abs(omega).max(initial=0.0)))
    if np.linalg.eigvalsh(omega)[0] < -1e-9 * scale:
        raise InvalidInputError("Omega is not positive semidefinite")
    return a, omega


def quadratic_fourth_moment(a, omega):
    """``2 tr(A Omega A Omega) + tr(A Omega)^2`` for Hermitian ``A``.

    This is the second moment of ``u^H A u`` for a *real* Gaussian
    ``u ~ N(0, Omega)``. For a proper complex ``u ~ CN(0, Omega)`` it is an
    upper bound, exceeding the true value (see
    :func:`quadratic_fourth_moment_proper`) by ``tr(A Omega A Omega) >= 0``.
    """
    a, omega = _check_pair(a, omega)
    ao = a @ omega
    return float((2.0 * np.trace(ao @ ao) + np.trace(ao) ** 2).real)


def quadratic_fourth_moment_proper(a, omega):
    """``E[(u^H A u)^2] = tr(A Omega A Omega) + tr(A Omega)^2`` for
    ``u ~ CN(0, Omega)`` and Hermitian ``A``."""
    a, omega = _check_pair(a, omega)
    ao = a @ omega
    return float((np.trace(ao @ ao) + np.trace(ao) ** 2).real)


def quadratic_fourth_moment_mc(a, omega, trials, seed, stream_offset=0):
    """Monte Carlo estimate of ``E[(u^H A u)^2]``."""
    a, omega = _check_pair(a, omega)
    root = psd_sqrt(omega)

    def run(lo, hi):
        w = sample_cn(omega.shape[0], StreamBatch(seed, np.arange(lo, hi) + stream_offset))
        u = w @ root.T
        q = np.einsum("ni,ij,nj->n", u.conj(), a, u).real
        return q * q

    return McEstimate.from_samples(np.concatenate(_map_chunks(run, int(trials))), seed)


# ---------------------------------------------------------------------------
# error-covariance spectrum and sequential-vs-batch oracle

def omega_spectrum_check(runs, seed, m_max=16, tc=8, powers=(0.1, 1.0, 10.0, 1000.0)):
    """Extreme eigenvalues of ``Omega_t`` (no clipping) over adaptive-encoder runs.

    Runs are spread over ``M = 2 .. m_max``, the built-in encoders and
    ``powers``. Returns ``(max_eig_check, min_eig_check)``.
    """
    configs = [(m, name, p) for m in range(2, m_max + 1)
               for name in BUILTIN_ENCODERS for p in powers]
    per = max(1, math.ceil(runs / len(configs)))
    hi, lo = -math.inf, math.inf
    first = 0
    for m, name, p in configs:
        cfg = ChannelConfig(m, tc, p)
        box = []

        def observe(step):
            w = step.est.spectrum()
            box.append((w[:, 0].min(), w[:, -1].max()))

        run_feedback_block(BUILTIN_ENCODERS[name], cfg, seed, np.arange(first, first + per), observe)
        first += per
        lo = min(lo, min(b[0] for b in box))
        hi = max(hi, max(b[1] for b in box))
    total = per * len(configs)
    ctx = {"runs": total, "M_max": m_max, "T_c": tc}
    return (one_sided_check("lemma2_omega_max_eig", hi, 1.0 + 1e-9, 0.0, total, seed, **ctx),
            one_sided_check("lemma2_omega_min_eig", -lo, 1e-9, 0.0, total, seed, **ctx))


def sequential_vs_batch_gap(case, seed, m_max=5, t_max=6):
    """Drive the scalar recursion with the random feedback encoder and compare
    it with one-shot joint conditioning.

    The case's own stream picks ``M`` in ``[2, m_max]``, the number of
    observations in ``[1, t_max]`` and the power. Returns
    ``(mean_gap, cov_gap)`` as max absolute entrywise differences.
    """
    rng = StreamBatch(seed, [case])
    u = rng.uniform(3)[0]
    m = 2 + int(u[0] * (m_max - 1))
    steps = 1 + int(u[1] * t_max)
    power = 10.0 ** (-1.0 + 4.0 * u[2])
    encoder = RandomFeedbackEncoder()
    h = rng.standard_cn(m)[0]
    state = reset(m)
    obs, ys = [], []
    for t in range(1, steps + 1):
        inp = EncoderInput(t, np.array(ys, dtype=complex)[None, :], state.h_hat[None],
                           state.omega[None], rng, power)
        x = encoder(inp)[0]
        y = complex(h @ x + rng.standard_cn()[0])
        obs.append((x, y))
        ys.append(y)
        state = update(state, x, y)
    ref = batch_condition(GaussPrior(np.zeros(m, complex), np.eye(m, dtype=complex)), obs)
    return (float(np.abs(state.h_hat - ref.mean).max()),
            float(np.abs(state.omega - ref.cov).max()))


# ---------------------------------------------------------------------------
# beamforming-gain sweep

@dataclass(frozen=True)
class SweepRow:
    m: int
    tc: int
    t_train: int
    rate_bits: float
    stderr: float
    rate_over_log2m: float


def sweep_tc(m, alpha):
    """Coherence length used for a sweep point: ``max(2, round(M^alpha))``."""
    return max(2, int(round(m ** alpha)))


def sweep_gain(alpha, p, m_list, trials, seed):
    """Scheme rate and ``rate / log2 M`` along ``T_c = max(2, round(M^alpha))``."""
    if alpha < 0:
        raise InvalidInputError("alpha must be non-negative")
    rows = []
    for m in m_list:
        tc = sweep_tc(m, alpha)
        try:
            cfg = SchemeConfig.for_channel(ChannelConfig(int(m), tc, p))
        except (DegenerateConfigError, InvalidInputError) as exc:
            warnings.warn(f"skipping M={m}, T_c={tc}: {exc}")
            continue
        est = estimate_scheme_rate(cfg, trials, seed)
        rows.append(SweepRow(int(m), tc, cfg.t_train, est.mean, est.stderr,
                             est.mean / math.log2(m)))
    return rows


# ---------------------------------------------------------------------------
# the full lemma suite

SUITE_GRID = {"M": (4, 8, 16), "T_c": (4, 8), "P": (1.0, 10.0)}
CHI2_DOFS = (2, 4, 6, 10, 20, 50, 100, 200)


def lemma9_checks(samples, seed, dofs=CHI2_DOFS, k_max=200):
    """Closed-form ``E[log2 chi^2(k)]`` against Monte Carlo, and domination of
    ``log2 max(k-2, 1)`` for every even ``k <= k_max``.

    The Monte Carlo oracle uses numpy's own chi-square sampler so it shares
    nothing with the closed form.
    """
    out = []
    gen = np.random.Generator(np.random.Philox(int(seed)))
    for k in dofs:
        logs = np.log2(gen.chisquare(k, int(samples)))
        e = McEstimate.from_samples(logs, seed)
        out.append(one_sided_check("lemma9_log_mean_vs_mc", abs(e.mean - chi2_log_mean_bits(k)),
                                   0.0, e.stderr, e.trials, seed, k=k))
    worst = min(chi2_log_mean_bits(k) - chi2_log_lower_bound_bits(k)
                for k in range(2, k_max + 1, 2))
    out.append(one_sided_check("lemma9_lower_bound", -worst, 0.0, 0.0, 0, seed, k_max=k_max))
    return out


def lemma5_checks(pairs, trials, seed, dim_max=6):
    """Quadratic-form fourth moment on random Hermitian ``A`` and PSD
    ``Omega``: Monte Carlo against the proper-Gaussian identity (two-sided)
    and against the factor-2 form as an upper bound, plus the
    ``A = Omega = I`` value ``M^2 + 2M`` of the factor-2 form."""
    out = []
    gen = np.random.Generator(np.random.Philox(int(seed) ^ 0x5A5A))
    for i in range(pairs):
        n = int(gen.integers(1, dim_max + 1))
        b = gen.normal(size=(n, n)) + 1j * gen.normal(size=(n, n))
        a = 0.5 * (b + b.conj().T)
        c = gen.normal(size=(n, n)) + 1j * gen.normal(size=(n, n))
        omega = c @ c.conj().T / n
        omega = 0.5 * (omega + omega.conj().T)
        exact = quadratic_fourth_moment_proper(a, omega)
        stated = quadratic_fourth_moment(a, omega)
        mc = quadratic_fourth_moment_mc(a, omega, trials, seed, stream_offset=i * int(trials))
        out.append(one_sided_check("lemma5_proper_identity_vs_mc", abs(mc.mean - exact), 0.0,
                                   mc.stderr, mc.trials, seed, pair=i, dim=n, exact=exact))
        out.append(one_sided_check("lemma5_stated_form_upper_bound", mc.mean, stated,
                                   mc.stderr, mc.trials, seed, pair=i, dim=n))
    for m in (1, 4, 16):
        eye = np.eye(m)
        val = quadratic_fourth_moment(eye, eye)
        out.append(one_sided_check("lemma5_identity", abs(val - (m * m + 2 * m)), 0.0, 0.0,
                                   0, seed, M=m))
    return out


def encoder_checks(encoder, cfg, trials, seed):
    """Estimate-power, increment and genie-power checks at every in-block time."""
    mom = feedback_moments(encoder, cfg, trials, seed)
    out = []
    for t in range(1, cfg.coherence_tc + 1):
        ctx = _context(encoder, cfg, t)
        out.extend(_hhat_checks(mom, cfg, t, ctx))
        out.append(_genie_check(mom, cfg, t, ctx))
        if t < cfg.coherence_tc:
            out.extend(_increment_checks(mom, t, ctx))
    return out


def lemma_suite(trials, seed, grid=SUITE_GRID, encoders=BUILTIN_ENCODERS,
                oracle_cases=1000, spectrum_runs=10_000):
    """Run every Monte Carlo and oracle check; yields LemmaCheckResult."""
    yield from omega_spectrum_check(spectrum_runs, seed)
    gaps = [sequential_vs_batch_gap(c, seed) for c in range(oracle_cases)]
    yield one_sided_check("sequential_vs_batch_mean", max(g[0] for g in gaps), 1e-8, 0.0,
                          oracle_cases, seed)
    yield one_sided_check("sequential_vs_batch_cov", max(g[1] for g in gaps), 1e-8, 0.0,
                          oracle_cases, seed)
    for m in grid["M"]:
        for tc in grid["T_c"]:
            for p in grid["P"]:
                cfg = ChannelConfig(m, tc, p)
                for enc in encoders.values():
                    yield from encoder_checks(enc, cfg, trials, seed)
    yield from lemma5_checks(20, trials, seed)
    yield from lemma9_checks(trials, seed)


def theorem5_checks(trials, seed, m=64, tc=8, p=10.0):
    """Monte Carlo scheme rate sandwiched by the closed-form lower and upper
    bounds."""
    cfg = SchemeConfig.for_channel(ChannelConfig(m, tc, p))
    est = estimate_scheme_rate(cfg, trials, seed)
    ctx = {"M": m, "T_c": tc, "P": p}
    low = lower_second(m, tc, p)
    return (one_sided_check("theorem5_rate_above_lower_bound", low, est.mean, est.stderr,
                            est.trials, seed, **ctx),
            one_sided_check("theorem3_rate_below_upper_bound", est.mean, upper_second(m, tc, p),
                            est.stderr, est.trials, seed, **ctx))
