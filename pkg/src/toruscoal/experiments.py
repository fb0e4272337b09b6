"""Batch experiment runner reproducing the simulation study.

Runs replicated spectrum and tree-length experiments over several
coalescence mechanisms with deterministic, worker-count-independent output:
every replicate owns a generator seeded by (master seed, mechanism index,
replicate index) and results are aggregated by replicate index.

Outputs: spectrum.csv / qq.csv (byte-deterministic given config and seed),
summary.json (deterministic except for the explicit "timing" section) and
optional events.jsonl / SVG plots.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .kingman import KingmanConfig, ewens_expected_spectrum, hybrid_run, qq_data, simulate_kingman
from .mutation import Spectrum, default_mutation_rate, mean_spectrum, run_infinite_alleles
from .partitions import LabeledPartition
from .rates import parse_mechanism
from .spatial import CoalescentState, run_until
from .torus import TorusSpec

LAYOUTS = ("grid3x3-far", "grid3x3-close", "same-site", "explicit")

#: Scaled mutation parameter of the matched non-spatial reference: mutation
#: pi/s_L per line against pair rate pi/s_L gives theta = 2.
REFERENCE_THETA = 2.0


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass
class ExperimentConfig:
    side_length: int
    mechanisms: tuple[str, ...]
    layout: str = "grid3x3-far"
    sites: Optional[tuple] = None          # for layout="explicit"
    replicates: int = 100
    seed: int = 0
    mutation_rate: Optional[float] = None  # None -> pi / s_L
    threshold: Optional[float] = None      # hybrid handoff distance
    workers: int = 1
    out_dir: str = "."
    events: bool = False                   # dump replicate 0 event logs

    def __post_init__(self):
        if self.side_length < 3 or self.side_length % 2 == 0:
            raise ConfigError(f"side-length must be odd and >= 3, got {self.side_length}")
        if isinstance(self.mechanisms, str):
            self.mechanisms = tuple(m.strip() for m in self.mechanisms.split(",") if m.strip())
        else:
            self.mechanisms = tuple(self.mechanisms)
        if not self.mechanisms:
            raise ConfigError("mechanism list must not be empty")
        for m in self.mechanisms:
            if m == "kingman-reference":
                continue
            try:
                parse_mechanism(m)
            except ValueError as exc:
                raise ConfigError(f"mechanism: {exc}") from exc
        if self.layout not in LAYOUTS:
            raise ConfigError(f"layout must be one of {LAYOUTS}, got {self.layout!r}")
        if self.layout == "explicit":
            if not self.sites:
                raise ConfigError("sites are required for layout='explicit'")
            self.sites = tuple((int(x), int(y)) for x, y in self.sites)
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        torus = self.torus
        if self.mutation_rate is not None and self.mutation_rate <= 0:
            raise ConfigError("mutation-rate must be > 0")
        if self.threshold is not None:
            if not 0 <= self.threshold <= math.sqrt(2) * torus.L:
                raise ConfigError(
                    f"threshold must be in [0, {math.sqrt(2) * torus.L:.4g}], got {self.threshold}"
                )
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        for site in self.layout_sites():
            if torus.wrap(site) != site:
                raise ConfigError(f"sites: {site} is not a valid site on T^{torus.L}")

    @property
    def torus(self) -> TorusSpec:
        return TorusSpec((self.side_length - 1) // 2)

    def effective_mutation_rate(self) -> float:
        if self.mutation_rate is not None:
            return self.mutation_rate
        return default_mutation_rate(self.torus)

    def layout_sites(self) -> tuple:
        """Initial sample sites (n = 9 for the grid layouts)."""
        torus = self.torus
        if self.layout == "grid3x3-far":
            step = self.side_length // 3
            return tuple(torus.wrap((step * i, step * j)) for i in range(3) for j in range(3))
        if self.layout == "grid3x3-close":
            return tuple(torus.wrap((i, j)) for i in range(3) for j in range(3))
        if self.layout == "same-site":
            return tuple((0, 0) for _ in range(9))
        return self.sites

    def as_dict(self) -> dict:
        d = asdict(self)
        d["mechanisms"] = list(self.mechanisms)
        d["sites"] = [list(s) for s in self.sites] if self.sites else None
        return d

    def identity_dict(self) -> dict:
        """The experiment identity; execution fields (out_dir, workers,
        events) do not affect results and are excluded."""
        ident = self.as_dict()
        for key in ("out_dir", "workers", "events"):
            ident.pop(key)
        return ident

    def hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.identity_dict(), sort_keys=True).encode()
        ).hexdigest()[:16]


def _replicate_rng(seed: int, mech_idx: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(mech_idx, r)))


def _spectrum_replicate(cfg_dict: dict, mech_idx: int, r: int) -> dict:
    """One spectrum replicate; top-level so worker processes can run it."""
    cfg = ExperimentConfig(**cfg_dict)
    mech = cfg.mechanisms[mech_idx]
    rng = _replicate_rng(cfg.seed, mech_idx, r)
    torus = cfg.torus
    theta = cfg.effective_mutation_rate()
    n = len(cfg.layout_sites())
    t0 = time.perf_counter()
    handoff = None
    if mech == "kingman-reference":
        log = simulate_kingman(
            n, KingmanConfig(pair_rate=1.0, mutation_rate=REFERENCE_THETA / 2.0), rng
        )
        spectrum = Spectrum.from_kill_tallies(log.spectrum, n)
    else:
        initial = LabeledPartition.singletons(n, cfg.layout_sites())
        if cfg.threshold is not None:
            spectrum, info = hybrid_run(initial, mech, cfg.threshold, torus, theta, rng)
            handoff = {"n_blocks": info.n_blocks, "used": info.used}
        else:
            if cfg.events and r == 0:
                state = CoalescentState(initial, mech, torus, mutation_rate=theta, rng=rng)
                log = run_until(state, nblocks=0, log=True)
                path = Path(cfg.out_dir) / f"events_{mech.replace(':', '_')}.jsonl"
                log.to_jsonl(path)
                spectrum = Spectrum.from_kill_tallies(state.spectrum_counts, n)
            else:
                spectrum = run_infinite_alleles(initial, mech, torus, theta, rng)
    return {
        "mech_idx": mech_idx,
        "r": r,
        "spectrum": spectrum.counts.tolist(),
        "handoff": handoff,
        "elapsed": time.perf_counter() - t0,
    }


def _qq_replicate(cfg_dict: dict, mech_idx: int, r: int) -> dict:
    """One total-tree-length replicate (no mutation, run to the MRCA)."""
    cfg = ExperimentConfig(**cfg_dict)
    mech = cfg.mechanisms[mech_idx]
    rng = _replicate_rng(cfg.seed, mech_idx, r)
    torus = cfg.torus
    n = len(cfg.layout_sites())
    t0 = time.perf_counter()
    if mech == "kingman-reference":
        log = simulate_kingman(n, KingmanConfig(pair_rate=math.pi), rng)
        length = 0.0
        blocks = n
        prev = 0.0
        for i in range(len(log)):
            length += blocks * (log.times[i] - prev)
            prev = log.times[i]
            blocks -= 1
    else:
        initial = LabeledPartition.singletons(n, cfg.layout_sites())
        state = CoalescentState(initial, mech, torus, rng=rng)
        run_until(state, nblocks=1, log=False)
        length = state.block_time_integral / torus.time_scale()
    return {"mech_idx": mech_idx, "r": r, "length": length,
            "elapsed": time.perf_counter() - t0}


def _run_tasks(cfg: ExperimentConfig, fn, tasks):
    cfg_dict = cfg.as_dict()
    if cfg.workers == 1:
        return [fn(cfg_dict, m, r) for m, r in tasks]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        futures = [pool.submit(fn, cfg_dict, m, r) for m, r in tasks]
        return [f.result() for f in futures]


@dataclass
class SpectrumResult:
    config: ExperimentConfig
    spectra: dict            # mechanism -> (replicates, n) int array
    handoffs: dict           # mechanism -> list of handoff dicts (hybrid only)
    elapsed: dict            # mechanism -> list of seconds
    ewens_reference: np.ndarray = field(default=None)


def run_spectrum(cfg: ExperimentConfig) -> SpectrumResult:
    tasks = [(m, r) for m in range(len(cfg.mechanisms)) for r in range(cfg.replicates)]
    rows = _run_tasks(cfg, _spectrum_replicate, tasks)
    n = len(cfg.layout_sites())
    spectra = {m: np.zeros((cfg.replicates, n), np.int64) for m in cfg.mechanisms}
    handoffs = {m: [None] * cfg.replicates for m in cfg.mechanisms}
    elapsed = {m: [0.0] * cfg.replicates for m in cfg.mechanisms}
    for row in rows:
        mech = cfg.mechanisms[row["mech_idx"]]
        spectra[mech][row["r"]] = row["spectrum"]
        handoffs[mech][row["r"]] = row["handoff"]
        elapsed[mech][row["r"]] = row["elapsed"]
    handoffs = {m: h for m, h in handoffs.items() if any(x is not None for x in h)}
    return SpectrumResult(cfg, spectra, handoffs, elapsed,
                          ewens_reference=ewens_expected_spectrum(n, REFERENCE_THETA))


def run_qq(cfg: ExperimentConfig) -> dict:
    if len(cfg.mechanisms) != 2:
        raise ConfigError("mechanism: the q-q command needs exactly two mechanisms")
    tasks = [(m, r) for m in range(len(cfg.mechanisms)) for r in range(cfg.replicates)]
    rows = _run_tasks(cfg, _qq_replicate, tasks)
    lengths = {m: np.zeros(cfg.replicates) for m in cfg.mechanisms}
    elapsed = {m: [0.0] * cfg.replicates for m in cfg.mechanisms}
    for row in rows:
        mech = cfg.mechanisms[row["mech_idx"]]
        lengths[mech][row["r"]] = row["length"]
        elapsed[mech][row["r"]] = row["elapsed"]
    return {"lengths": lengths, "elapsed": elapsed}


# -- output files -----------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_spectrum_csv(result: SpectrumResult, path) -> None:
    cfg = result.config
    n = len(cfg.layout_sites())
    with open(path, "w", newline="") as fh:
        fh.write(f"# config {cfg.hash()}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["mechanism", "k", "mean_a_k", "stderr_a_k", "replicates"])
        for mech in cfg.mechanisms:
            spectra = [Spectrum(row) for row in result.spectra[mech]]
            mean, se = mean_spectrum(spectra)
            for k in range(1, n + 1):
                writer.writerow([mech, k, _fmt(mean[k - 1]), _fmt(se[k - 1]), cfg.replicates])
        for k in range(1, n + 1):
            writer.writerow(["ewens", k, _fmt(result.ewens_reference[k - 1]), _fmt(0.0), 0])


def write_qq_csv(cfg: ExperimentConfig, lengths: dict, path) -> None:
    mech_a, mech_b = cfg.mechanisms
    qa, qb = qq_data(lengths[mech_a], lengths[mech_b])
    with open(path, "w", newline="") as fh:
        fh.write(f"# config {cfg.hash()}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["quantile_index", "sample_a", "sample_b"])
        for i, (a, b) in enumerate(zip(qa, qb)):
            writer.writerow([i, _fmt(a), _fmt(b)])


def write_summary(cfg: ExperimentConfig, path, *, spectrum: SpectrumResult = None,
                  qq_lengths: dict = None, elapsed: dict = None) -> None:
    summary = {
        "config": cfg.identity_dict(),
        "config_hash": cfg.hash(),
        "execution": {"out_dir": cfg.out_dir, "workers": cfg.workers,
                      "events": cfg.events},
    }
    if spectrum is not None:
        block = {}
        for mech in cfg.mechanisms:
            spectra = [Spectrum(row) for row in spectrum.spectra[mech]]
            mean, se = mean_spectrum(spectra)
            entry = {"mean_spectrum": mean.tolist(), "stderr_spectrum": se.tolist()}
            if mech in spectrum.handoffs:
                counts = np.array([h["n_blocks"] for h in spectrum.handoffs[mech]], float)
                used = np.array([h["used"] for h in spectrum.handoffs[mech]], bool)
                entry["handoff"] = {
                    "mean_blocks": float(counts.mean()),
                    "std_blocks": float(counts.std(ddof=1)) if counts.size > 1 else 0.0,
                    "mean_blocks_when_used": float(counts[used].mean()) if used.any() else None,
                    "fraction_used": float(used.mean()),
                }
            block[mech] = entry
        summary["spectrum"] = block
        summary["ewens_reference"] = spectrum.ewens_reference.tolist()
        elapsed = spectrum.elapsed
    if qq_lengths is not None:
        summary["qq"] = {m: {"mean_length": float(v.mean()), "std_length": float(v.std(ddof=1))}
                         for m, v in qq_lengths.items()}
    if elapsed is not None:
        summary["timing"] = {
            m: {"mean_s": float(np.mean(v)), "total_s": float(np.sum(v)),
                "per_replicate_s": [float(x) for x in v]}
            for m, v in elapsed.items()
        }
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def summary_without_timing(path) -> dict:
    """summary.json minus the wall-clock and execution sections, i.e. the
    part that is byte-deterministic given (config identity, seed)."""
    with open(path) as fh:
        data = json.load(fh)
    data.pop("timing", None)
    data.pop("execution", None)
    return data


# -- commands ---------------------------------------------------------------


def cmd_spectrum(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = run_spectrum(cfg)
    write_spectrum_csv(result, out / "spectrum.csv")
    write_summary(cfg, out / "summary.json", spectrum=result)
    return out / "spectrum.csv"


def cmd_qq(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = run_qq(cfg)
    write_qq_csv(cfg, data["lengths"], out / "qq.csv")
    write_summary(cfg, out / "summary.json", qq_lengths=data["lengths"],
                  elapsed=data["elapsed"])
    return out / "qq.csv"


# -- plotting ---------------------------------------------------------------


def _read_csv(path):
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.startswith("#") or not line.strip():
                continue
            rows.append((lineno, line.rstrip("\n").split(",")))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def emit_plots(csv_paths: Sequence, out_dir) -> list:
    """Render spectrum bar charts and q-q scatters to SVG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for path in csv_paths:
        path = Path(path)
        rows = _read_csv(path)
        header = rows[0][1]
        if header[:2] == ["mechanism", "k"]:
            data = {}
            for lineno, row in rows[1:]:
                try:
                    mech, k, mean, se = row[0], int(row[1]), float(row[2]), float(row[3])
                except (ValueError, IndexError) as exc:
                    raise ValueError(f"{path}: malformed row at line {lineno}: {exc}") from exc
                data.setdefault(mech, {})[k] = (mean, se)
            if not data:
                raise ValueError(f"{path}: no spectrum rows")
            ks = sorted(next(iter(data.values())))
            fig, ax = plt.subplots(figsize=(7, 4))
            width = 0.8 / len(data)
            for i, (mech, vals) in enumerate(data.items()):
                xs = [k + (i - len(data) / 2 + 0.5) * width for k in ks]
                ax.bar(xs, [vals[k][0] for k in ks], width=width,
                       yerr=[vals[k][1] for k in ks], label=mech, capsize=2)
            ax.set_xlabel("allele multiplicity k")
            ax.set_ylabel("mean number of alleles")
            ax.set_xticks(ks)
            ax.legend()
            target = out_dir / (path.stem + ".svg")
        elif header[:3] == ["quantile_index", "sample_a", "sample_b"]:
            xs, ys = [], []
            for lineno, row in rows[1:]:
                try:
                    xs.append(float(row[1]))
                    ys.append(float(row[2]))
                except (ValueError, IndexError) as exc:
                    raise ValueError(f"{path}: malformed row at line {lineno}: {exc}") from exc
            if not xs:
                raise ValueError(f"{path}: no q-q rows")
            fig, ax = plt.subplots(figsize=(5, 5))
            ax.scatter(ys, xs, s=12)
            lim = [0, max(max(xs), max(ys)) * 1.05]
            ax.plot(lim, lim, "k--", linewidth=1)
            ax.set_xlabel("sample_b quantiles")
            ax.set_ylabel("sample_a quantiles")
            target = out_dir / (path.stem + ".svg")
        else:
            raise ValueError(f"{path}: unrecognized header {header}")
        fig.tight_layout()
        fig.savefig(target)
        plt.close(fig)
        written.append(target)
    return written
