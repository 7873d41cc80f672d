"""Batch experiment harness: validated configs in, CSV artifacts out.

Each subcommand computes one figure-ready table.  Files land atomically
(temp file, then rename) and a manifest with content hashes is written
last, so a failed run never leaves a partial artifact set behind: every
file the run had already produced is removed again on the way out.

All randomness is derived from the config seed; artifact bytes do not
depend on the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, replace
from datetime import datetime, timezone

import numpy as np

from . import __version__, channel, detection, mobility, particlesim
from .channel import PhysicalParams
from .config import ExperimentConfig, MobilityCase
from .errors import InvalidConfigError

__all__ = ["ArtifactRecord", "RunManifest", "run_command", "run_selftest",
           "MANIFEST_NAME"]

MANIFEST_NAME = "manifest.json"

# stream tag separating the distance-walk draws from the simulator domains
_WALK_STREAM = 0x57414C4B


@dataclass(frozen=True)
class ArtifactRecord:
    name: str
    rows: int
    sha256: str


@dataclass(frozen=True)
class RunManifest:
    """Provenance record for one subcommand invocation.

    config_sha256 is the hash of the raw config file bytes, so a manifest
    plus the config file pins every artifact byte (workers and timestamps
    are recorded for bookkeeping; they do not influence artifact content).
    """

    command: str
    library_version: str
    config_sha256: str
    seed: int
    workers: int
    created_utc: str
    duration_s: float
    artifacts: tuple[ArtifactRecord, ...]


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    # repr of a Python float is the shortest round-trip form
    return repr(float(value))


class ArtifactWriter:
    """Writes one run's artifacts; tracks them so a failure can clean up."""

    def __init__(self, output_dir: str):
        self.output_dir = output_dir
        self.records: list[ArtifactRecord] = []
        os.makedirs(output_dir, exist_ok=True)

    def _put(self, name: str, data: bytes) -> str:
        path = os.path.join(self.output_dir, name)
        tmp = f"{path}.tmp.{os.getpid()}"
        with open(tmp, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
        return path

    def write_csv(self, name: str, header: tuple[str, ...], rows) -> str:
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([_format_cell(cell) for cell in row])
            count += 1
        data = buf.getvalue().encode("utf-8")
        path = self._put(name, data)
        self.records.append(
            ArtifactRecord(name, count, hashlib.sha256(data).hexdigest())
        )
        return path

    def write_manifest(self, command: str, config_blob: bytes, seed: int,
                       workers: int, duration_s: float) -> str:
        manifest = RunManifest(
            command=command,
            library_version=__version__,
            config_sha256=hashlib.sha256(config_blob).hexdigest(),
            seed=seed,
            workers=workers,
            created_utc=datetime.now(timezone.utc).isoformat(),
            duration_s=duration_s,
            artifacts=tuple(self.records),
        )
        data = (json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n").encode("utf-8")
        return self._put(MANIFEST_NAME, data)

    def discard(self):
        for record in self.records:
            try:
                os.remove(os.path.join(self.output_dir, record.name))
            except OSError:
                pass
        self.records.clear()


def _case_setup(cfg: ExperimentConfig, case: MobilityCase):
    params = case.resolve_params(cfg.physical)
    derived = channel.derive(params, case.mode,
                             k_f_mod_override=cfg.k_f_mod_override)
    return params, derived


def _sim_config(cfg: ExperimentConfig, record_grid=()) -> particlesim.SimConfig:
    return particlesim.SimConfig(
        dt=cfg.dt,
        num_realizations=cfg.num_realizations,
        seed=cfg.seed,
        record_grid=tuple(record_grid),
        unbind_offset=cfg.unbind_offset,
    )


def _time_grid(total: float, points: int, scale: str) -> np.ndarray:
    if scale == "log":
        return np.geomspace(total * 1e-3, total, points)
    return np.linspace(total / points, total, points)


def _analytical_frame_signal(times, pattern, params, derived) -> np.ndarray:
    """Expected bound-receptor count over a frame of timed releases.

    Each release contributes the single-release response averaged over the
    transmitter-receiver separation law at its release instant; with
    immobile nodes that law collapses to the nominal distance and the sum
    is a plain superposition.  Expectation is linear, so marginalizing
    each release independently is exact for the mean.
    """
    times = np.asarray(times, dtype=float)
    interval = params.bit_interval
    sigma = params.radius_rx + params.radius_tx
    total = np.zeros(times.shape, dtype=float)
    for j, bit in enumerate(pattern):
        if not bit:
            continue
        lag = times - j * interval
        live = lag > 0.0
        if not np.any(live):
            continue
        elapsed = j * interval
        if elapsed == 0.0 or derived.d_eff2 == 0.0:
            resp = channel._cir_array(
                lag[live], np.asarray(params.r0), derived, params
            )
        else:
            law = mobility.build_distance_law(
                params.r0, elapsed, derived.d_eff2, sigma
            )
            weights = law.grid_pdf
            mass = np.trapezoid(weights, law.grid_r)
            table = channel._cir_array(
                lag[live][:, None], law.grid_r[None, :], derived, params
            )
            resp = np.trapezoid(table * weights[None, :], law.grid_r, axis=1) / mass
        total[live] += params.num_molecules * resp
    return total


def _preflight(command: str, cfg: ExperimentConfig):
    """Check every case's derived constants and simulator settings before
    any artifact work starts, so late cases cannot fail a half-done run."""
    needs_sim = command in ("received-signal", "ber")
    for case in cfg.cases:
        params, derived = _case_setup(cfg, case)
        if needs_sim:
            _sim_config(cfg).validate_against(params, derived)


def _cmd_cir(cfg: ExperimentConfig, writer: ArtifactWriter,
             workers: int) -> list[str]:
    grid = _time_grid(cfg.physical.bit_interval, cfg.time_points,
                      cfg.time_scale)
    rows = []
    for case in cfg.cases:
        params, derived = _case_setup(cfg, case)
        values = channel._cir_array(grid, np.asarray(params.r0), derived, params)
        for t, p in zip(grid, values):
            rows.append((t, case.label, p, params.num_molecules * p))
    path = writer.write_csv(
        "cir.csv", ("time_s", "case", "p_ac", "n_c_expected"), rows
    )
    return [path]


def _cmd_received_signal(cfg: ExperimentConfig, writer: ArtifactWriter,
                         workers: int) -> list[str]:
    pattern = cfg.frame_pattern()
    frame = cfg.physical.seq_length * cfg.physical.bit_interval
    grid = _time_grid(frame, cfg.time_points, cfg.time_scale)
    analytical_rows = []
    sim_rows = []
    for case in cfg.cases:
        params, derived = _case_setup(cfg, case)
        series = particlesim.estimate_received_signal(
            pattern, params, derived, _sim_config(cfg, record_grid=grid),
            workers=workers,
        )
        # evaluate the analytical mean on the realized (step-snapped) grid
        # so the two files stay time-aligned row for row
        analytical = _analytical_frame_signal(series.times, pattern, params,
                                              derived)
        stderr = series.std_error
        for i, t in enumerate(series.times):
            analytical_rows.append((t, case.label, analytical[i]))
            sim_rows.append((
                t, case.label, series.mean_bound[i],
                None if stderr is None else stderr[i],
            ))
    paths = [
        writer.write_csv(
            "received_signal_analytical.csv",
            ("time_s", "case", "n_c_analytical"), analytical_rows,
        ),
        writer.write_csv(
            "received_signal_sim.csv",
            ("time_s", "case", "n_c_sim", "n_c_sim_stderr"), sim_rows,
        ),
    ]
    return paths


def _cmd_distance_pdf(cfg: ExperimentConfig, writer: ArtifactWriter,
                      workers: int) -> list[str]:
    rows = []
    for index, case in enumerate(cfg.cases):
        params, derived = _case_setup(cfg, case)
        if derived.d_eff2 == 0.0:
            # immobile pair: the separation never changes, nothing to plot
            continue
        elapsed = (cfg.distance_time if cfg.distance_time is not None
                   else params.bit_interval)
        sigma = params.radius_rx + params.radius_tx
        law = mobility.build_distance_law(params.r0, elapsed, derived.d_eff2,
                                          sigma)
        total_mass = float(law.grid_cdf[-1])
        rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence((cfg.seed, _WALK_STREAM, index))
        ))
        finals = particlesim.relative_distance_walk(
            params.r0, derived.d_eff2, sigma, elapsed,
            cfg.walk_steps, cfg.walks, rng,
        )
        width = math.sqrt(2.0 * derived.d_eff2 * elapsed)
        edges = np.linspace(sigma, params.r0 + 6.0 * width, cfg.pdf_points + 1)
        centers = 0.5 * (edges[:-1] + edges[1:])
        delta = edges[1] - edges[0]
        counts, _ = np.histogram(finals, bins=edges)
        frac = counts / cfg.walks
        empirical = frac / delta
        stderr = np.sqrt(frac * (1.0 - frac) / cfg.walks) / delta
        analytical = law.pdf_at(centers)
        for i, r in enumerate(centers):
            rows.append((r, case.label, analytical[i], empirical[i],
                         stderr[i], total_mass))
    if not rows:
        raise InvalidConfigError(
            "distance-pdf needs at least one case with diff_TX + diff_RX > 0; "
            "every configured case is immobile"
        )
    path = writer.write_csv(
        "distance_pdf.csv",
        ("r_m", "case", "pdf_analytical", "pdf_empirical", "stderr",
         "total_mass"),
        rows,
    )
    return [path]


def _cmd_ber(cfg: ExperimentConfig, writer: ArtifactWriter,
             workers: int) -> list[str]:
    rows = []
    for case in cfg.cases:
        params, derived = _case_setup(cfg, case)
        mc = detection.McConfig(
            num_trajectories=cfg.num_trajectories,
            seed=cfg.seed,
            bit_treatment=cfg.bit_treatment,
        )
        analytical = [
            detection.expected_ber(params, derived, xi, mc)
            for xi in cfg.thresholds
        ]
        curve = particlesim.estimate_ber(
            params, derived, _sim_config(cfg), cfg.thresholds, params.p1,
            workers=workers,
        )
        for i, xi in enumerate(cfg.thresholds):
            rows.append((
                xi, case.label,
                analytical[i].value, analytical[i].std_error,
                float(curve.p_error[i]), float(curve.std_error[i]),
            ))
    path = writer.write_csv(
        "ber.csv",
        ("xi", "case", "p_e_analytical", "p_e_analytical_stderr",
         "p_e_sim", "p_e_sim_stderr"),
        rows,
    )
    return [path]


_COMMANDS = {
    "cir": _cmd_cir,
    "received-signal": _cmd_received_signal,
    "distance-pdf": _cmd_distance_pdf,
    "ber": _cmd_ber,
}


def run_command(command: str, cfg: ExperimentConfig, config_blob: bytes,
                workers: int) -> list[str]:
    """Run one subcommand end to end and return the artifact paths.

    The manifest is written only after every CSV is in place; any failure
    removes the files this run had produced so far.
    """
    if command not in _COMMANDS:
        raise InvalidConfigError(f"unknown command {command!r}")
    _preflight(command, cfg)
    writer = ArtifactWriter(cfg.output_dir)
    start = time.monotonic()
    try:
        paths = _COMMANDS[command](cfg, writer, workers)
        manifest = writer.write_manifest(
            command, config_blob, cfg.seed, workers,
            time.monotonic() - start,
        )
    except BaseException:
        writer.discard()
        raise
    paths.append(manifest)
    return paths


# ---------------------------------------------------------------------------
# selftest: internal consistency checks that need no config file and no
# external data, meant as a quick smoke test of an installation

_REFERENCE = PhysicalParams(
    num_molecules=1000,
    diff_A=5.0e-10,
    diff_TX=5.0e-13,
    diff_RX=5.0e-13,
    r0=1.0e-6,
    radius_rx=5.0e-7,
    radius_tx=0.0,
    k_f=1.25e-14,
    k_b=2.0e5,
    k_d=2.0e4,
    num_receptors=1000,
    receptor_radius=1.395e-8,
    bit_interval=3.0e-4,
    sample_offset=6.0e-5,
    seq_length=10,
    p1=0.5,
)


def _check_kernel_roots(seed: int):
    worst = 0.0
    for mode in ("fixed", "mobile"):
        derived = channel.derive(_REFERENCE, mode)
        worst = max(worst, derived.roots.residual)
    return worst <= 1e-8, f"max symmetric-function defect {worst:.3e}"


def _check_response_range(seed: int):
    grid = np.geomspace(1e-6, 1e-2, 200)
    lo, hi = math.inf, -math.inf
    for mode in ("fixed", "mobile"):
        derived = channel.derive(_REFERENCE, mode)
        values = channel._cir_array(grid, np.asarray(_REFERENCE.r0),
                                    derived, _REFERENCE)
        if not np.all(np.isfinite(values)):
            return False, "non-finite response value"
        lo = min(lo, float(values.min()))
        hi = max(hi, float(values.max()))
    ok = 0.0 <= lo and hi <= 1.0 and hi > 0.0
    return ok, f"response range [{lo:.3e}, {hi:.3e}]"


def _check_distance_law_closure(seed: int):
    derived = channel.derive(replace(_REFERENCE, diff_TX=1.0e-9), "mobile")
    law = mobility.build_distance_law(
        _REFERENCE.r0, _REFERENCE.bit_interval, derived.d_eff2,
        _REFERENCE.radius_rx + _REFERENCE.radius_tx,
    )
    mass_gap = abs(float(law.grid_cdf[-1]) - 1.0)
    quad_gap = abs(
        float(np.trapezoid(law.grid_pdf, law.grid_r)) - float(law.grid_cdf[-1])
    )
    median = float(law.quantile(0.5))
    round_trip = abs(float(law.cdf_at(median)) - 0.5)
    ok = mass_gap <= 1e-6 and quad_gap <= 1e-4 and round_trip <= 1e-9
    return ok, (f"mass defect {mass_gap:.2e}, pdf/cdf gap {quad_gap:.2e}, "
                f"quantile round trip {round_trip:.2e}")


def _check_detector_closed_form(seed: int):
    params = replace(_REFERENCE, seq_length=1, diff_TX=0.0, diff_RX=0.0)
    derived = channel.derive(params, "fixed")
    mean = channel.expected_received_signal(params.sample_offset, derived,
                                            params)
    mc = detection.McConfig(num_trajectories=8, seed=seed)
    at_zero = detection.expected_ber(params, derived, 0, mc)
    at_one = detection.expected_ber(params, derived, 1, mc)
    # one release, no memory: threshold 0 always decides 1, threshold 1
    # errs only when every molecule misses
    want_zero = 1.0 - params.p1
    want_one = params.p1 * math.exp(-mean)
    gap_zero = abs(at_zero.value - want_zero)
    gap_one = abs(at_one.value - want_one)
    ok = (gap_zero <= 1e-12 and gap_one <= 1e-9 * want_one
          and at_zero.std_error == 0.0)
    return ok, f"threshold gaps {gap_zero:.2e}, {gap_one:.2e}"


def _check_simulator_determinism(seed: int):
    params = replace(_REFERENCE, num_molecules=1500, r0=0.6e-6, seq_length=1)
    derived = channel.derive(params, "fixed")
    sim = particlesim.SimConfig(
        dt=2.0e-6, num_realizations=4, seed=seed,
        record_grid=(5.0e-5, 1.0e-4, 1.5e-4, 2.0e-4, 2.5e-4, 3.0e-4),
        debug_checks=True,
    )
    first = particlesim.estimate_received_signal((1,), params, derived, sim)
    again = particlesim.estimate_received_signal((1,), params, derived, sim)
    other = particlesim.estimate_received_signal(
        (1,), params, derived, replace(sim, seed=seed + 1)
    )
    repeat_ok = (np.array_equal(first.mean_bound, again.mean_bound)
                 and np.array_equal(first.sample_counts, again.sample_counts))
    differs = (not np.array_equal(first.mean_bound, other.mean_bound)
               or not np.array_equal(first.sample_counts, other.sample_counts))
    finite = np.all(np.isfinite(first.mean_bound))
    ok = bool(repeat_ok and differs and finite)
    return ok, (f"seed repeat {'identical' if repeat_ok else 'MISMATCH'}, "
                f"peak mean {float(first.mean_bound.max()):.2f}")


_SELFTEST_CHECKS = (
    ("kernel-roots", _check_kernel_roots),
    ("response-range", _check_response_range),
    ("distance-law-closure", _check_distance_law_closure),
    ("detector-closed-form", _check_detector_closed_form),
    ("simulator-determinism", _check_simulator_determinism),
)


def run_selftest(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Run the built-in consistency checks; returns (name, ok, detail)."""
    results = []
    for name, fn in _SELFTEST_CHECKS:
        try:
            ok, detail = fn(seed)
        except Exception as exc:  # a crash is a failed check, not a crash
            ok, detail = False, f"raised {exc!r}"
        results.append((name, bool(ok), detail))
    return results
