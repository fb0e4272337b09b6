"""Acceptance and validation checks.

Every check pins its replicate count and tolerance; the same functions back
both the test suite and the ``simulate validate`` command. Checks are
deterministic (fixed seeds). ``scale`` multiplies replicate counts; runs with
scale < 1 are reported as informational (widened confidence intervals), not
hard failures.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy import linalg, stats

from .cannings import OffspringLaw, moment_diagnostics, pair_coalescence_prob, trace_genealogy
from .experiments import (
    ExperimentConfig,
    REFERENCE_THETA,
    cmd_qq,
    cmd_spectrum,
    run_qq,
    run_spectrum,
    summary_without_timing,
)
from .kingman import KingmanConfig, ewens_expected_spectrum, hybrid_run, qq_data, sample_kingman_spectrum, simulate_kingman
from .mutation import Spectrum, default_mutation_rate, mean_spectrum, total_tree_length
from .partitions import LabeledPartition
from .spatial import CoalescentState, next_event, run_until
from .torus import TorusSpec


@dataclass
class CheckResult:
    criterion: str
    name: str
    passed: bool
    observed: str
    requirement: str
    informational: bool = False

    def line(self) -> str:
        tag = "INFO" if self.informational else ("PASS" if self.passed else "FAIL")
        return f"[{tag}] {self.criterion} {self.name}: {self.observed} (requires {self.requirement})"


def _scaled(n: int, scale: float) -> int:
    return max(10, int(round(n * scale)))


# ---------------------------------------------------------------------------
# 1. Exact oracle equivalence on T^1
# ---------------------------------------------------------------------------

def _pair_ctmc_generator(torus: TorusSpec) -> np.ndarray:
    """Generator of the labeled 2-block Kingman chain on the unmerged states.

    States are ordered site pairs (i, j); each block jumps to each neighbour
    at rate 1/4 and co-located pairs additionally exit (merge) at rate 1.
    """
    m = torus.n_sites
    q = np.zeros((m * m, m * m))
    for i in range(m):
        ni = [torus.site_index(s) for s in torus.neighbors(torus.site_from_index(i))]
        for j in range(m):
            nj = [torus.site_index(s) for s in torus.neighbors(torus.site_from_index(j))]
            s = i * m + j
            for t in ni:
                q[s, t * m + j] += 0.25
            for t in nj:
                q[s, i * m + t] += 0.25
            q[s, s] -= 2.0
            if i == j:
                q[s, s] -= 1.0  # merge exits the unmerged class
    return q


def check_exact_ctmc(scale: float = 1.0) -> List[CheckResult]:
    t0 = time.perf_counter()
    reps = _scaled(100_000, scale)
    torus = TorusSpec(1)
    start = [(0, 0), (1, 0)]
    rng = np.random.default_rng(101)
    taus = np.empty(reps)
    init = LabeledPartition.singletons(2, start)
    for r in range(reps):
        state = CoalescentState(init, "kingman", torus, rng=rng)
        run_until(state, nblocks=1, log=False)
        taus[r] = state.clock

    q = _pair_ctmc_generator(torus)
    ones = np.ones(q.shape[0])
    h = np.linalg.solve(-q, ones)
    s0 = torus.site_index(start[0]) * torus.n_sites + torus.site_index(start[1])
    exact_mean = h[s0]

    out = []
    se = taus.std(ddof=1) / math.sqrt(reps)
    dev = abs(taus.mean() - exact_mean)
    out.append(CheckResult(
        "criterion 1", "E[tau_c] vs CTMC", dev <= 3 * se,
        f"mc {taus.mean():.4f} exact {exact_mean:.4f} |dev| {dev:.4f}",
        f"<= 3 se = {3 * se:.4f}",
    ))
    for t in (1.0, 5.0, 10.0):
        exact_p = 1.0 - (linalg.expm(q * t) @ ones)[s0]
        p_hat = float((taus <= t).mean())
        se_p = math.sqrt(max(exact_p * (1 - exact_p), 1e-12) / reps)
        dev = abs(p_hat - exact_p)
        out.append(CheckResult(
            "criterion 1", f"P(absorbed by {t:g})", dev <= 3 * se_p,
            f"mc {p_hat:.4f} exact {exact_p:.4f} |dev| {dev:.4f}",
            f"<= 3 se = {3 * se_p:.4f}",
        ))
    elapsed = time.perf_counter() - t0
    out.append(CheckResult(
        "criterion 1", "runtime", elapsed < 60.0, f"{elapsed:.1f} s", "< 60 s",
        informational=scale != 1.0,
    ))
    if scale != 1.0:
        for r in out:
            r.informational = True
    return out


# ---------------------------------------------------------------------------
# 2. Lemma 6.1 exact law: coalesce before part
# ---------------------------------------------------------------------------

def check_coalesce_before_part(scale: float = 1.0) -> List[CheckResult]:
    t0 = time.perf_counter()
    episodes = _scaled(100_000, scale)
    torus = TorusSpec(5)
    init = LabeledPartition.singletons(2, [(0, 0), (0, 0)])
    rng = np.random.default_rng(202)
    merges = 0
    for _ in range(episodes):
        state = CoalescentState(init, "kingman", torus, rng=rng)
        ev, _dwell = next_event(state)
        merges += ev.kind == "merge"
    p_hat = merges / episodes
    p = 1.0 / 3.0
    se = math.sqrt(p * (1 - p) / episodes)
    elapsed = time.perf_counter() - t0
    out = [
        CheckResult(
            "criterion 2", "coalesce-before-part frequency", abs(p_hat - p) <= 4 * se,
            f"{p_hat:.5f} vs 1/3, |dev| {abs(p_hat - p):.5f}", f"<= 4 sigma = {4 * se:.5f}",
            informational=scale != 1.0,
        ),
        CheckResult("criterion 2", "runtime", elapsed < 30.0, f"{elapsed:.1f} s", "< 30 s",
                    informational=scale != 1.0),
    ]
    return out


# ---------------------------------------------------------------------------
# 3. Corollary 6.5: pair meeting time law
# ---------------------------------------------------------------------------

def check_pair_meeting_law(scale: float = 1.0) -> List[CheckResult]:
    reps = _scaled(10_000, scale)
    torus = TorusSpec(49)
    s_l = torus.time_scale()
    init = LabeledPartition.singletons(2, [(0, 0), (33, 0)])
    rng = np.random.default_rng(303)
    taus = np.empty(reps)
    for r in range(reps):
        state = CoalescentState(init, "crw", torus, rng=rng)
        run_until(state, meeting=True, log=False)
        taus[r] = state.clock / s_l
    ks = stats.kstest(taus, "expon", args=(0, 1 / math.pi)).statistic
    return [CheckResult(
        "criterion 3", "KS(tau/s_L, Exp(pi)) at distance 33", ks <= 0.08,
        f"KS {ks:.4f}, mean {taus.mean():.4f} (limit {1 / math.pi:.4f})", "KS <= 0.08",
        informational=scale != 1.0,
    )]


# ---------------------------------------------------------------------------
# 4. Proposition 6.6: first-meeting rate scaling for 9 blocks
# ---------------------------------------------------------------------------

def _first_meeting_mean(torus, sites_fn, reps, seed):
    rng = np.random.default_rng(seed)
    s_l = torus.time_scale()
    taus = np.empty(reps)
    for r in range(reps):
        init = LabeledPartition.singletons(9, sites_fn(rng))
        state = CoalescentState(init, "crw", torus, rng=rng)
        run_until(state, meeting=True, log=False)
        taus[r] = state.clock / s_l
    return taus


def check_many_block_meeting_rate(scale: float = 1.0) -> List[CheckResult]:
    reps = _scaled(10_000, scale)
    torus = TorusSpec(49)
    target = 1.0 / (36.0 * math.pi)

    def mixed(rng):
        return [tuple(rng.integers(-49, 50, 2)) for _ in range(9)]

    taus = _first_meeting_mean(torus, mixed, reps, 404)
    rel = abs(taus.mean() - target) / target
    out = [CheckResult(
        "criterion 4", "mean tau_1/s_L, 9 well-mixed blocks", rel <= 0.15,
        f"{taus.mean():.6f} vs 1/(36 pi) = {target:.6f}, rel dev {rel:.3f}", "within 15%",
        informational=scale != 1.0,
    )]

    step = 33
    grid = [torus.wrap((step * i, step * j)) for i in range(3) for j in range(3)]
    taus_grid = _first_meeting_mean(torus, lambda rng: grid, max(500, reps // 4), 405)
    rel_grid = abs(taus_grid.mean() - target) / target
    out.append(CheckResult(
        "criterion 4", "far 3x3 grid variant (finite-size transient, informational)",
        rel_grid <= 0.15,
        f"{taus_grid.mean():.6f}, rel dev {rel_grid:.3f}", "n/a (see ledger)",
        informational=True,
    ))
    return out


# ---------------------------------------------------------------------------
# 5. Figures 1/2: mean frequency spectra
# ---------------------------------------------------------------------------

def check_spectrum_figures(scale: float = 1.0) -> List[CheckResult]:
    reps = _scaled(100, scale)
    out = []
    for side in (99, 197):
        cfg = ExperimentConfig(
            side_length=side, mechanisms=("bs", "kingman", "crw"),
            layout="grid3x3-far", replicates=reps, seed=505 + side,
        )
        result = run_spectrum(cfg)
        ewens = result.ewens_reference
        stats_by_mech = {}
        for mech in cfg.mechanisms:
            spectra = [Spectrum(row) for row in result.spectra[mech]]
            stats_by_mech[mech] = mean_spectrum(spectra)
        bs_mean, bs_se = stats_by_mech["bs"]
        sc_mean, sc_se = stats_by_mech["kingman"]
        crw_mean, _ = stats_by_mech["crw"]

        out.append(CheckResult(
            "criterion 5", f"(a) L'={side} singleton excess",
            bs_mean[0] > ewens[0] and sc_mean[0] > ewens[0],
            f"a1: bs {bs_mean[0]:.2f}, structured {sc_mean[0]:.2f}, reference {ewens[0]:.2f}",
            "bs and structured strictly above reference",
            informational=scale != 1.0,
        ))
        l1_crw = float(np.abs(crw_mean - ewens).sum())
        l1_bs = float(np.abs(bs_mean - ewens).sum())
        out.append(CheckResult(
            "criterion 5", f"(b) L'={side} CRW closer to reference",
            l1_crw < l1_bs,
            f"l1: crw {l1_crw:.3f} vs bs {l1_bs:.3f}", "l1(crw) < l1(bs)",
            informational=scale != 1.0,
        ))
        l1_pair = float(np.abs(bs_mean - sc_mean).sum())
        noise = float(np.sqrt(bs_se**2 + sc_se**2).sum())
        out.append(CheckResult(
            "criterion 5", f"(c) L'={side} bs vs structured similarity",
            l1_pair <= 2 * noise,
            f"l1 {l1_pair:.3f} vs noise scale {noise:.3f}", "l1 <= 2x Monte Carlo noise",
            informational=scale != 1.0,
        ))
    return out


# ---------------------------------------------------------------------------
# 6. Figures 3/4: q-q of rescaled total tree lengths
# ---------------------------------------------------------------------------

def check_qq_figures(scale: float = 1.0) -> List[CheckResult]:
    reps = _scaled(100, scale)
    out = []
    cfg_bs = ExperimentConfig(side_length=197, mechanisms=("bs", "kingman-reference"),
                              layout="grid3x3-far", replicates=reps, seed=606)
    lengths = run_qq(cfg_bs)["lengths"]
    qa, qb = qq_data(lengths["bs"], lengths["kingman-reference"])
    frac_above = float((qa > qb).mean())
    out.append(CheckResult(
        "criterion 6", "BS lengths dominate Kingman", frac_above >= 0.9,
        f"{100 * frac_above:.0f}% of quantile pairs above the diagonal", ">= 90%",
        informational=scale != 1.0,
    ))
    cfg_crw = ExperimentConfig(side_length=197, mechanisms=("crw", "kingman-reference"),
                               layout="grid3x3-far", replicates=reps, seed=607)
    lengths = run_qq(cfg_crw)["lengths"]
    qa, qb = qq_data(lengths["crw"], lengths["kingman-reference"])
    med = float(np.median(np.abs(qa - qb) / qb))
    out.append(CheckResult(
        "criterion 6", "CRW hugs the diagonal", med < 0.10,
        f"median relative deviation {med:.3f}", "< 0.10",
        informational=scale != 1.0,
    ))
    return out


# ---------------------------------------------------------------------------
# 7. Hybrid handoff statistics
# ---------------------------------------------------------------------------

def _handoff_means(layout: str, reps: int, seed: int):
    cfg = ExperimentConfig(
        side_length=99, mechanisms=("bs",), layout=layout,
        replicates=reps, seed=seed, threshold=8.33,
    )
    result = run_spectrum(cfg)
    counts = np.array([h["n_blocks"] for h in result.handoffs["bs"]], float)
    return float(counts.mean())


def handoff_means(scale: float = 1.0) -> tuple[float, float]:
    """Mean handoff block counts for the close and same-site layouts."""
    reps = _scaled(500, scale)
    close = _handoff_means("grid3x3-close", reps, 707)
    same = _handoff_means("same-site", reps, 708)
    return close, same


def check_handoff_statistics(scale: float = 1.0) -> List[CheckResult]:
    """Criterion 7, reported twice: the spec's bands as stated (hard checks,
    known to fail) and the corrected layout mapping (informational). The
    paper's prose transposed the two values relative to its own Figures 5/6
    discussion; see the decisions ledger for the full analysis.
    """
    close, same = handoff_means(scale)
    out = []
    for name, value, lo, hi in (("close", close, 2.1, 3.1), ("same-site", same, 3.5, 4.5)):
        out.append(CheckResult(
            "criterion 7", f"{name} layout mean handoff blocks (as stated; see ledger)",
            lo <= value <= hi, f"{value:.2f}", f"in [{lo}, {hi}]",
            informational=scale != 1.0,
        ))
    for name, value, lo, hi in (("close", close, 3.5, 4.5), ("same-site", same, 2.1, 3.1)):
        out.append(CheckResult(
            "criterion 7", f"{name} layout mean handoff blocks (corrected mapping)",
            lo <= value <= hi, f"{value:.2f}", f"in [{lo}, {hi}]",
            informational=True,
        ))
    return out


# ---------------------------------------------------------------------------
# 8. Hybrid speedup
# ---------------------------------------------------------------------------

def check_hybrid_speedup(scale: float = 1.0) -> List[CheckResult]:
    reps = _scaled(100, scale)
    torus = TorusSpec(49)
    theta = default_mutation_rate(torus)
    init = LabeledPartition.singletons(9, [(0, 0)] * 9)

    # warm the JIT so compile time is not billed to either arm
    warm = np.random.default_rng(0)
    hybrid_run(init, "bs", 8.33, torus, theta, warm)
    state = CoalescentState(init, "bs", torus, mutation_rate=theta, rng=warm)
    run_until(state, nblocks=0, log=False)

    rng = np.random.default_rng(808)
    t0 = time.perf_counter()
    for _ in range(reps):
        hybrid_run(init, "bs", 8.33, torus, theta, rng)
    hybrid_s = (time.perf_counter() - t0) / reps

    rng = np.random.default_rng(809)
    t0 = time.perf_counter()
    for _ in range(reps):
        state = CoalescentState(init, "bs", torus, mutation_rate=theta, rng=rng)
        run_until(state, nblocks=0, log=False)
    full_s = (time.perf_counter() - t0) / reps

    ratio = full_s / hybrid_s
    return [CheckResult(
        "criterion 8", "hybrid wall-clock advantage (same-site, L'=99)", ratio >= 10.0,
        f"full {1e3 * full_s:.2f} ms vs hybrid {1e3 * hybrid_s:.2f} ms per replicate, "
        f"ratio {ratio:.1f}x", ">= 10x",
        informational=scale != 1.0,
    )]


# ---------------------------------------------------------------------------
# 9. Kingman reference exactness
# ---------------------------------------------------------------------------

def check_kingman_reference(scale: float = 1.0) -> List[CheckResult]:
    out = []
    reps = _scaled(10_000, scale)
    rng = np.random.default_rng(909)
    n = 9
    waits = np.empty((reps, n - 1))
    for r in range(reps):
        log = simulate_kingman(n, KingmanConfig(pair_rate=1.0), rng)
        waits[r] = np.diff(log.times, prepend=0.0)
    worst = 0.0
    for k in range(n - 1):
        b = n - k
        rate = b * (b - 1) / 2.0
        ks = stats.kstest(waits[:, k], "expon", args=(0, 1 / rate)).statistic
        worst = max(worst, ks)
    out.append(CheckResult(
        "criterion 9", "U_k exponential laws", worst < 0.02,
        f"worst KS {worst:.4f} over k=1..8", "KS < 0.02",
        informational=scale != 1.0,
    ))
    corr = np.corrcoef(waits, rowvar=False)
    off = np.abs(corr[np.triu_indices(n - 1, 1)]).max()
    out.append(CheckResult(
        "criterion 9", "U_k independence", off < 0.03,
        f"max |corr| {off:.4f}", "< 0.03",
        informational=scale != 1.0,
    ))

    reps_len = _scaled(100_000, scale)
    rng = np.random.default_rng(910)
    total = 0.0
    for _ in range(reps_len):
        log = simulate_kingman(n, KingmanConfig(pair_rate=1.0), rng)
        total += total_tree_length(log)
    mean_len = total / reps_len
    target = 2.0 * sum(1.0 / j for j in range(1, n))
    rel = abs(mean_len - target) / target
    out.append(CheckResult(
        "criterion 9", "E[total tree length], n=9", rel <= 0.02,
        f"{mean_len:.4f} vs 2 H_8 = {target:.4f}, rel dev {rel:.4f}", "within 2%",
        informational=scale != 1.0,
    ))

    for n_e, theta in ((5, 1.0), (9, 2.0)):
        formula = ewens_expected_spectrum(n_e, theta)
        reps_mc = _scaled(100_000, scale)
        rng = np.random.default_rng(911 + n_e)
        acc = np.zeros((reps_mc, n_e))
        for r in range(reps_mc):
            acc[r] = sample_kingman_spectrum(n_e, theta, rng).counts
        mc = acc.mean(axis=0)
        se = acc.std(axis=0, ddof=1) / math.sqrt(reps_mc)
        ok = bool(np.all(np.abs(mc - formula) <= 3 * np.maximum(se, 1e-12)))
        worst = float(np.max(np.abs(mc - formula) / np.maximum(se, 1e-12)))
        out.append(CheckResult(
            "criterion 9", f"Ewens formula vs Monte Carlo (n={n_e}, theta={theta:g})", ok,
            f"worst deviation {worst:.2f} se", "<= 3 se componentwise",
            informational=scale != 1.0,
        ))
    exact = ewens_expected_spectrum(2, 2.0)[1]
    out.append(CheckResult(
        "criterion 9", "analytic point E[a_2] (n=2, theta=2)", abs(exact - 1 / 3) < 1e-12,
        f"{exact:.12f}", "= 1/3",
    ))
    return out


# ---------------------------------------------------------------------------
# 10. Cannings suite
# ---------------------------------------------------------------------------

def _mc_parent_share(law: OffspringLaw, big_n: int, trials: int, rng) -> float:
    hits = 0
    done = 0
    chunk = max(1, 10_000_000 // big_n)
    while done < trials:
        b = min(chunk, trials - done)
        nu = law.sample_batch(big_n, b, rng)
        cums = np.cumsum(nu, axis=1)
        i = rng.integers(0, big_n, b)
        j = rng.integers(0, big_n - 1, b)
        j = j + (j >= i)
        pi = (cums <= i[:, None]).sum(axis=1)
        pj = (cums <= j[:, None]).sum(axis=1)
        hits += int((pi == pj).sum())
        done += b
    return hits / trials


def _first_coalescence_is_triple(law: OffspringLaw, big_n: int, reps: int, rng) -> float:
    """Fraction of first coalescing generations merging all 3 of 3 lineages."""
    triples = 0
    events = 0
    for _ in range(reps):
        while True:
            nu = law.sample(big_n, rng)
            cums = np.cumsum(nu)
            slots = rng.choice(big_n, size=3, replace=False)
            parents = np.searchsorted(cums, slots, side="right")
            k = len(set(parents.tolist()))
            if k < 3:
                events += 1
                triples += k == 1
                break
    return triples / events


def check_cannings(scale: float = 1.0) -> List[CheckResult]:
    out = []
    trials = _scaled(1_000_000, scale)
    for family in ("wright-fisher", "moran"):
        law = OffspringLaw(family)
        for big_n in (10, 100):
            rng = np.random.default_rng(1000 + big_n)
            p_hat = _mc_parent_share(law, big_n, trials, rng)
            c, _ = pair_coalescence_prob(law, big_n, "analytic")
            se = math.sqrt(c * (1 - c) / trials)
            out.append(CheckResult(
                "criterion 10", f"c^N {family} N={big_n}", abs(p_hat - c) <= 4 * se,
                f"mc {p_hat:.6f} vs {c:.6f}", f"within 4 sigma = {4 * se:.6f}",
                informational=scale != 1.0,
            ))

    rows = moment_diagnostics(OffspringLaw("moran"), [10, 50], k_max=3,
                              trials=_scaled(20_000, scale),
                              rng=np.random.default_rng(1010))
    phi3 = [r for r in rows if r.stat == "phi1(3)"]
    exact_zero = all(r.estimate == 0.0 for r in phi3)
    out.append(CheckResult(
        "criterion 10", "moran phi1(3) vanishes identically", exact_zero,
        f"estimates {[float(r.estimate) for r in phi3]}", "exactly 0",
    ))

    reps = _scaled(4_000, scale)
    skew = OffspringLaw("skewed", psi=0.5, eps=0.1)
    wf = OffspringLaw("wright-fisher")
    rng = np.random.default_rng(1020)
    sk = {N: _first_coalescence_is_triple(skew, N, reps, rng) for N in (100, 200)}
    wf_frac = {N: _first_coalescence_is_triple(wf, N, reps, rng) for N in (100, 200)}
    se_sk = math.sqrt(max(sk[200] * (1 - sk[200]), 1e-9) / reps)
    out.append(CheckResult(
        "criterion 10", "skewed triple-merger persistence",
        sk[100] >= 0.05 and sk[200] >= 0.05 and abs(sk[100] - sk[200]) <= 5 * se_sk * math.sqrt(2),
        f"P(triple | first coalescence) = {sk[100]:.3f} (N=100), {sk[200]:.3f} (N=200)",
        ">= 0.05 and stable in N",
        informational=scale != 1.0,
    ))
    out.append(CheckResult(
        "criterion 10", "wright-fisher triple mergers vanish",
        wf_frac[200] < 0.02 and wf_frac[200] <= sk[200] / 4,
        f"{wf_frac[100]:.4f} (N=100), {wf_frac[200]:.4f} (N=200) vs skewed {sk[200]:.3f}",
        "< 0.02 and well below the skewed law",
        informational=scale != 1.0,
    ))

    reps_t = _scaled(1_500, scale)
    rng = np.random.default_rng(1030)
    from .cannings import CanningsModel
    model = CanningsModel.single_site(200, wf)
    sample = LabeledPartition.singletons(5, [(0, 0)] * 5)
    gens = np.empty(reps_t)
    for r in range(reps_t):
        g = trace_genealogy(model, sample, max_generations=20_000, rng=rng)
        if not g.reached_mrca:
            raise AssertionError("genealogy did not coalesce within the generation cap")
        gens[r] = g.generations_to_mrca
    scaled_mean = gens.mean() / 200
    target = 2 * (1 - 1 / 5)
    rel = abs(scaled_mean - target) / target
    out.append(CheckResult(
        "criterion 10", "wright-fisher T_MRCA/N, n=5", rel <= 0.10,
        f"{scaled_mean:.3f} vs Kingman value {target}", "within 10%",
        informational=scale != 1.0,
    ))
    return out


# ---------------------------------------------------------------------------
# 11. Conservation and determinism
# ---------------------------------------------------------------------------

def check_determinism(scale: float = 1.0, tmp_root: Optional[str] = None) -> List[CheckResult]:
    import tempfile
    from pathlib import Path

    out = []
    root = Path(tmp_root) if tmp_root else Path(tempfile.mkdtemp(prefix="toruscoal-det-"))
    base = dict(side_length=9, mechanisms=("bs", "crw"), layout="grid3x3-close",
                replicates=4, seed=123)
    csv_bytes = []
    summaries = []
    for tag, workers in (("a", 1), ("b", 2), ("c", 1)):
        cfg = ExperimentConfig(**base, workers=workers, out_dir=str(root / f"spec_{tag}"))
        path = cmd_spectrum(cfg)
        csv_bytes.append(path.read_bytes())
        summaries.append(summary_without_timing(path.parent / "summary.json"))
    out.append(CheckResult(
        "criterion 11", "spectrum.csv byte-identical across reruns and worker counts",
        csv_bytes[0] == csv_bytes[1] == csv_bytes[2],
        f"{len(csv_bytes[0])} bytes", "identical bytes (workers 1, 2, 1)",
    ))
    out.append(CheckResult(
        "criterion 11", "summary.json deterministic (timing section excluded)",
        summaries[0] == summaries[1] == summaries[2],
        "results sections equal", "equal",
    ))
    qq_bytes = []
    for tag, workers in (("a", 1), ("b", 2)):
        cfg = ExperimentConfig(side_length=9, mechanisms=("bs", "kingman-reference"),
                               layout="grid3x3-close", replicates=4, seed=321,
                               workers=workers, out_dir=str(root / f"qq_{tag}"))
        path = cmd_qq(cfg)
        qq_bytes.append(path.read_bytes())
    out.append(CheckResult(
        "criterion 11", "qq.csv byte-identical across worker counts",
        qq_bytes[0] == qq_bytes[1], f"{len(qq_bytes[0])} bytes", "identical bytes",
    ))
    out.append(CheckResult(
        "criterion 11", "spectrum conservation",
        True, "sum k a_k = n enforced by construction on every spectrum",
        "zero violations (Spectrum raises otherwise)",
    ))
    return out


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

SUITES: dict[str, list[Callable[[float], List[CheckResult]]]] = {
    "exact": [check_exact_ctmc, check_coalesce_before_part, check_kingman_reference,
              check_determinism],
    "statistical": [check_pair_meeting_law, check_many_block_meeting_rate,
                    check_spectrum_figures, check_qq_figures,
                    check_handoff_statistics, check_hybrid_speedup],
    "cannings": [check_cannings],
}


def run_suite(name: str, scale: float = 1.0, printer=print) -> bool:
    """Run one suite (or 'all'); returns True when no hard check failed."""
    if name == "all":
        names = ["exact", "statistical", "cannings"]
    elif name in SUITES:
        names = [name]
    else:
        raise ValueError(f"unknown suite {name!r}; choose exact, statistical, cannings or all")
    ok = True
    for suite in names:
        printer(f"== suite: {suite} (scale {scale:g}) ==")
        for fn in SUITES[suite]:
            t0 = time.perf_counter()
            results = fn(scale)
            dt = time.perf_counter() - t0
            for res in results:
                printer(res.line())
                if not res.passed and not res.informational:
                    ok = False
            printer(f"   ... {fn.__name__} took {dt:.1f} s")
    return ok
