"""Experiment configuration, seeded sweep execution, persistence, verification.

A run executes quantize -> perturb -> spectra / potential / diagnostics for
every (size, seed) cell of a validated configuration and persists plot-ready
CSV tables plus a JSON manifest with per-artifact checksums.  Identical
configurations byte-reproduce every CSV; the manifest additionally records
wall-clock and tool version (and is therefore not byte-stable itself).

Per-cell randomness: the Ginibre stream of cell ``(N, seed)`` is keyed by
``derive_seed(seed, "cell", N)``, so cells are independent and reproducible
in any execution order.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .geometry import (
    estimate_kappa,
    evaluate_symbol_grid,
    liouville_quadrature,
    make_phase_space,
    scottish_flag_symbol,
    sphere_symbol,
    symbol_from_record,
    symbol_to_record,
)
from .grushin import DIAGNOSTICS_CSV_HEADER, b_diagnostics
from .potential import PROBE_EXCLUSION_RADIUS, limit_potential_many
from .quantize import bergman_dimension, quantize_symbol
from .randmat import DeltaRule, PerturbationSchedule, ScheduleError, delta_window, derive_seed, sample_ginibre
from .spectra import DiskFamily, SpectrumResult, empirical_cdf_disks, spectrum_csv_rows, weyl_predict


class ConfigError(ValueError):
    """An experiment configuration failed validation."""


_CONFIG_KEYS = {
    "space", "symbol", "n_values", "unperturbed_sizes", "delta", "epsilon", "rho",
    "gamma", "c_exponent", "seeds", "probe_grid", "radii", "grushin_probes",
    "resolution", "kappa_hat", "kappa_samples", "out_dir", "workers",
}


@dataclass
class ExperimentConfig:
    """A validated experiment description (see README for the JSON schema)."""

    space: str
    symbol: str                      # symbol record text
    n_values: list
    delta: dict                      # {"preset": "default"|"weyl"} or {"power": p}
    epsilon: float = 0.25
    rho: float = 0.2
    gamma: float = 0.04
    c_exponent: float = 0.5
    seeds: list = field(default_factory=lambda: [0])
    probe_grid: dict = field(default_factory=lambda: {"nx": 12, "ny": 12})
    radii: dict = field(default_factory=lambda: {"count": 50, "max": 1.0})
    grushin_probes: list = field(default_factory=lambda: [[0.3, 0.2]])
    unperturbed_sizes: list = field(default_factory=list)
    resolution: int = 200
    kappa_hat: float | None = None
    kappa_samples: int = 10**5
    out_dir: str | None = None
    workers: int = 1

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        missing = {"space", "symbol", "n_values", "delta"} - set(data)
        if missing:
            raise ConfigError(f"missing configuration keys: {sorted(missing)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_mapping(json.load(fh))

    def to_mapping(self) -> dict:
        return {
            "space": self.space, "symbol": self.symbol,
            "n_values": [int(n) for n in self.n_values],
            "unperturbed_sizes": [int(n) for n in self.unperturbed_sizes],
            "delta": self.delta, "epsilon": self.epsilon, "rho": self.rho,
            "gamma": self.gamma, "c_exponent": self.c_exponent,
            "seeds": [int(s) for s in self.seeds],
            "probe_grid": self.probe_grid, "radii": self.radii,
            "grushin_probes": self.grushin_probes, "resolution": int(self.resolution),
            "kappa_hat": self.kappa_hat, "kappa_samples": int(self.kappa_samples),
            "out_dir": self.out_dir, "workers": int(self.workers),
        }

    def canonical_json(self) -> str:
        payload = self.to_mapping()
        payload.pop("out_dir")          # location and parallelism do not
        payload.pop("workers")          # affect the data products
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def schedule(self) -> PerturbationSchedule:
        d = 1
        if "preset" in self.delta:
            name = self.delta["preset"]
            if name == "default":
                return PerturbationSchedule.default(d, self.epsilon, self.c_exponent)
            if name == "weyl":
                return PerturbationSchedule.weyl(d, self.epsilon, self.c_exponent)
            raise ConfigError(f"unknown delta preset {name!r}")
        if "power" in self.delta:
            return PerturbationSchedule(self.epsilon, self.c_exponent, d,
                                        DeltaRule(float(self.delta["power"])))
        raise ConfigError(f"delta rule must give a preset or a power, got {self.delta}")

    def symbol_spec(self):
        f = symbol_from_record(self.symbol)
        if f.kind != self.space:
            raise ConfigError(f"symbol kind {f.kind!r} does not match space {self.space!r}")
        return f

    def radii_grid(self) -> np.ndarray:
        return np.linspace(0.0, float(self.radii.get("max", 1.0)), int(self.radii.get("count", 50)))

    def probe_points(self, f, space) -> np.ndarray:
        if "points" in self.probe_grid:
            return np.asarray([complex(re, im) for re, im in self.probe_grid["points"]])
        from .potential import default_probe_grid
        return default_probe_grid(f, space, int(self.probe_grid.get("nx", 41)),
                                  int(self.probe_grid.get("ny", 41)))

    def validate(self) -> dict:
        """Hard-check the parameter schedule; returns {kappa_hat, warnings}."""
        if not self.n_values:
            raise ConfigError("n_values must be a nonempty list")
        if not self.seeds:
            raise ConfigError("seeds must be a nonempty list")
        if not (0.0 < self.rho < min(0.5, self.epsilon)):
            raise ConfigError(
                f"rho={self.rho} outside (0, min(1/2, epsilon)) = (0, {min(0.5, self.epsilon)})")
        f = self.symbol_spec()
        kappa = self.kappa_hat
        if kappa is None:
            probes = _kappa_probes(f, self.space)
            est = estimate_kappa(f, probes, max(self.kappa_samples, 10**4),
                                 np.logspace(-3, -1, 7), seed=derive_seed("kappa", self.config_hash()))
            kappa = est.kappa
        gamma_cap = min(self.epsilon - self.rho, 2.0 * self.rho * kappa, 1.0 - 2.0 * self.rho)
        if not (0.0 < self.gamma < gamma_cap):
            raise ConfigError(
                f"gamma={self.gamma} outside (0, min(eps-rho, 2 rho kappa, 1-2 rho)) = (0, {gamma_cap:g})")
        schedule = self.schedule()
        warnings = []
        for N in self.n_values:
            try:
                delta_window(int(N), schedule)
            except ScheduleError as exc:
                raise ConfigError(str(exc)) from exc
            # the kappa-dependent window can be empty at finite N; flag it
            c_paper = min(2.0 * self.rho * kappa, 1.0 - 2.0 * self.rho) - self.gamma
            if schedule.rule(int(N)) <= float(np.exp(-float(N) ** c_paper)):
                warnings.append(
                    f"N={N}: delta {schedule.rule(int(N)):.3e} is below exp(-N^{c_paper:.3f}); "
                    "the kappa-derived window is empty at this size")
        return {"kappa_hat": float(kappa), "warnings": warnings}


def _kappa_probes(f, space_kind: str):
    # box probes for coverage plus image-value probes, which land where the
    # push-forward density concentrates (uniformity in z is the point)
    space = make_phase_space(space_kind)
    grid = liouville_quadrature(space, 64)
    vals = evaluate_symbol_grid(f.principal(), grid.points)
    re = np.linspace(vals.real.min(), vals.real.max(), 4)
    im = np.linspace(vals.imag.min(), vals.imag.max(), 4)
    probes = [complex(a, b) for a in re for b in im]
    from .geometry import sample_points
    probes += list(evaluate_symbol_grid(f.principal(), sample_points(space, 8, seed=1)))
    return probes


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def preset_config(name: str, full_scale: bool = False) -> ExperimentConfig:
    """Figure-reproduction presets (desk-scale sizes by default)."""
    if name == "scottish-flag-figure1":
        return ExperimentConfig(
            space="torus",
            symbol=symbol_to_record(scottish_flag_symbol()),
            n_values=[1000 if full_scale else 300],
            unperturbed_sizes=[50],
            delta={"preset": "weyl"},
            seeds=[0],
            radii={"count": 50, "max": 2.0},
            grushin_probes=[[0.3, 0.2]],
        )
    if name == "sphere-figure3":
        return ExperimentConfig(
            space="sphere",
            symbol=symbol_to_record(sphere_symbol({(1, 0, 0): 1j, (0, 1, 0): 1.0})),
            n_values=[2000 if full_scale else 300],
            delta={"preset": "weyl"},
            seeds=[0, 1, 2, 3, 4],
            radii={"count": 50, "max": 1.0},
            grushin_probes=[[0.3, 0.2]],
        )
    raise ConfigError(f"unknown preset {name!r}")


def acceptance_config() -> ExperimentConfig:
    """The configuration shared by the Weyl-law / potential / sign criteria."""
    cfg = preset_config("sphere-figure3")
    cfg.n_values = [100, 300]
    cfg.probe_grid = {"nx": 12, "ny": 12}
    return cfg


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunRecord:
    """Paths and checksums of one executed configuration."""

    out_dir: str
    config_hash: str
    manifest: dict
    manifest_path: str


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def run(config: ExperimentConfig, out_dir=None, workers: int | None = None) -> RunRecord:
    """Execute every (size, seed) cell and persist artifacts atomically.

    A failing cell records its error in the manifest and never disturbs
    sibling cells.
    """
    t_start = time.time()
    out = Path(out_dir or config.out_dir or "runs")
    out.mkdir(parents=True, exist_ok=True)
    workers = int(workers or config.workers or 1)

    validation = config.validate()
    f = config.symbol_spec()
    space = make_phase_space(config.space)
    schedule = config.schedule()
    radii = config.radii_grid()
    probes = config.probe_points(f, space)
    grushin_probes = [complex(re, im) for re, im in config.grushin_probes]
    grid = liouville_quadrature(space, config.resolution)

    prepared = {}
    for N in sorted({int(n) for n in list(config.n_values) + list(config.unperturbed_sizes)}):
        T = quantize_symbol(f, N)
        prediction = weyl_predict(f, space, DiskFamily(0.0, tuple(radii)),
                                  resolution=config.resolution)
        prepared[N] = (T, prediction)
    u_lim = limit_potential_many(f, space, probes, grid)

    cells = [("unperturbed", int(N), None) for N in config.unperturbed_sizes]
    cells += [("perturbed", int(N), int(seed)) for N in config.n_values for seed in config.seeds]

    def run_cell(cell):
        kind, N, seed = cell
        T, prediction = prepared[N]
        dim = bergman_dimension(space, N)
        name = f"N{N}_unperturbed" if kind == "unperturbed" else f"N{N}_s{seed}"
        files = {}

        if kind == "unperturbed":
            M = T.entries
            delta = 0.0
        else:
            delta = schedule.rule(N)
            G = sample_ginibre(dim, derive_seed(seed, "cell", N))
            M = T.entries + delta * G.entries

        lam = np.linalg.eigvals(M)
        spec = SpectrumResult(lam, source=name)
        files["spectrum"] = _emit(out, f"eig_{name}.csv", spectrum_csv_rows(spec))

        emp = empirical_cdf_disks(spec, 0.0, radii)
        rows = ["r,empirical,predicted"]
        rows += [f"{float(r)!r},{float(e)!r},{float(p)!r}"
                 for r, e, p in zip(radii, emp, prediction.fractions)]
        files["cdf"] = _emit(out, f"cdf_{name}.csv", rows)

        rows = ["z_re,z_im,N,seed,U_emp,U_lim,deviation"]
        seed_label = -1 if seed is None else seed
        eye = np.eye(dim)
        for z, ul in zip(probes, u_lim):
            if np.min(np.abs(lam - z)) < PROBE_EXCLUSION_RADIUS:
                continue
            sign, value = np.linalg.slogdet(M - z * eye)
            ue = value / dim if sign != 0 else float("-inf")
            dev = abs(ue - float(ul)) if np.isfinite(ue) else float("nan")
            rows.append(f"{float(z.real)!r},{float(z.imag)!r},{N},{seed_label},"
                        f"{float(ue)!r},{float(ul)!r},{float(dev)!r}")
        files["potential"] = _emit(out, f"pot_{name}.csv", rows)

        if kind == "perturbed":
            rows = [DIAGNOSTICS_CSV_HEADER]
            for z in grushin_probes:
                diag = b_diagnostics(T, z, config.rho, delta, G, grid, seed=seed)
                rows.append(diag.csv_row(N))
            files["diagnostics"] = _emit(out, f"diag_{name}.csv", rows)
        return name, files

    results = {}
    errors = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(run_cell, c): c for c in cells}
            for fut, cell in futures.items():
                try:
                    name, files = fut.result()
                    results[name] = files
                except Exception as exc:  # crash isolation per cell
                    errors[_cell_name(cell)] = f"{type(exc).__name__}: {exc}"
    else:
        for cell in cells:
            try:
                name, files = run_cell(cell)
                results[name] = files
            except Exception as exc:
                errors[_cell_name(cell)] = f"{type(exc).__name__}: {exc}"

    manifest = {
        "tool": "toeplab",
        "version": __version__,
        "config": config.to_mapping(),
        "config_hash": config.config_hash(),
        "kappa_hat": validation["kappa_hat"],
        "warnings": validation["warnings"],
        "wall_clock_s": time.time() - t_start,
        "cells": {
            name: {"files": {k: {"path": str(p.name), "sha256": _sha256_file(p)}
                             for k, p in files.items()}}
            for name, files in sorted(results.items())
        },
        "errors": errors,
    }
    manifest_path = out / "manifest.json"
    _atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True))
    return RunRecord(str(out), manifest["config_hash"], manifest, str(manifest_path))


def _cell_name(cell) -> str:
    kind, N, seed = cell
    return f"N{N}_unperturbed" if kind == "unperturbed" else f"N{N}_s{seed}"


def _emit(out: Path, name: str, rows) -> Path:
    path = out / name
    _atomic_write_text(path, "\n".join(rows) + "\n")
    return path


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerifyReport:
    passed: bool
    criteria: dict

    def to_json(self) -> str:
        return json.dumps({"passed": self.passed, "criteria": self.criteria},
                          indent=2, sort_keys=True)


def verify(run_dir, suite: str = "acceptance") -> VerifyReport:
    """Check artifact integrity and the named criteria suite of a run."""
    out = Path(run_dir)
    manifest_path = out / "manifest.json"
    if not manifest_path.exists():
        return VerifyReport(False, {"integrity": {"status": "fail", "detail": "missing manifest"}})
    manifest = json.loads(manifest_path.read_text())
    criteria: dict = {}

    mismatched, missing = [], []
    for name, cell in manifest["cells"].items():
        for kind, info in cell["files"].items():
            path = out / info["path"]
            if not path.exists():
                missing.append(info["path"])
            elif _sha256_file(path) != info["sha256"]:
                mismatched.append(info["path"])
    if mismatched:
        criteria["integrity"] = {"status": "fail", "detail": f"checksum mismatch: {mismatched}"}
    elif missing:
        criteria["integrity"] = {"status": "fail", "detail": f"missing artifacts: {missing}"}
    else:
        criteria["integrity"] = {"status": "pass", "detail": f"{len(manifest['cells'])} cells intact"}

    if suite == "acceptance":
        _verify_acceptance(out, manifest, criteria)
    elif suite != "integrity":
        raise ValueError(f"unknown verification suite {suite!r}")

    passed = all(c["status"] == "pass" for c in criteria.values() if c["status"] != "skipped")
    return VerifyReport(passed, criteria)


def _read_csv(path: Path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return header, rows


def _verify_acceptance(out: Path, manifest: dict, criteria: dict) -> None:
    n_values = sorted(int(n) for n in manifest["config"]["n_values"])
    n_top = n_values[-1]
    seeds = manifest["config"]["seeds"]

    devs = []
    skipped = []
    for seed in seeds:
        path = out / f"cdf_N{n_top}_s{seed}.csv"
        if not path.exists():
            skipped.append(path.name)
            continue
        _, rows = _read_csv(path)
        devs.append(max(abs(float(r[1]) - float(r[2])) for r in rows))
    if not devs:
        criteria["weyl_deviation"] = {"status": "skipped", "detail": f"missing: {skipped}"}
    else:
        worst = max(devs)
        criteria["weyl_deviation"] = {
            "status": "pass" if worst <= 0.05 else "fail",
            "detail": f"sup deviation {worst:.4f} (tolerance 0.05) over {len(devs)} seeds",
        }

    medians = {}
    for N in n_values:
        vals = []
        for seed in seeds:
            path = out / f"pot_N{N}_s{seed}.csv"
            if not path.exists():
                continue
            _, rows = _read_csv(path)
            vals += [float(r[6]) for r in rows if np.isfinite(float(r[6]))]
        if vals:
            medians[N] = float(np.median(vals))
    if len(medians) < 1:
        criteria["potential_median"] = {"status": "skipped", "detail": "no potential artifacts"}
    else:
        ok = medians[n_top] <= 0.05 and (len(medians) < 2 or medians[n_top] < medians[n_values[0]])
        criteria["potential_median"] = {
            "status": "pass" if ok else "fail",
            "detail": f"medians by size: { {k: round(v, 6) for k, v in medians.items()} }",
        }

    b3_rows = 0
    b3_bad = 0
    schur_worst = 0.0
    found = False
    for seed in seeds:
        for N in n_values:
            path = out / f"diag_N{N}_s{seed}.csv"
            if not path.exists():
                continue
            found = True
            _, rows = _read_csv(path)
            for r in rows:
                A, b3, schur = int(r[6]), float(r[9]), float(r[10])
                if A >= 1:
                    b3_rows += 1
                    if not (b3 < 0.0):
                        b3_bad += 1
                if np.isfinite(schur):
                    schur_worst = max(schur_worst, schur)
    if not found:
        criteria["b3_negative"] = {"status": "skipped", "detail": "no diagnostics artifacts"}
        criteria["schur_residual"] = {"status": "skipped", "detail": "no diagnostics artifacts"}
    else:
        criteria["b3_negative"] = {
            "status": "pass" if b3_bad == 0 else "fail",
            "detail": f"{b3_rows - b3_bad}/{b3_rows} realizations with A >= 1 have B3 < 0",
        }
        criteria["schur_residual"] = {
            "status": "pass" if schur_worst <= 1e-6 else "fail",
            "detail": f"worst residual {schur_worst:.3e} (tolerance 1e-6)",
        }
