"""
End-to-end theta sweeps in three modes.

``analytic``
    weak values straight from the polarization algebra;
``exact``
    exact pointer evolution, closed-form moments, inversion;
``sampled``
    exact field, simulated detector frames, estimated moments,
    inversion with first-order error propagation.

Experiment files are JSON.  Lengths (``g_x``, ``g_y``, ``pixel_pitch``,
``origin_offset``) are given in units of ``sigma``.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .detector import DetectorConfig, estimate_moments, pixel_probabilities, sample_frame
from .errors import (
    ConfigurationError,
    DegeneratePostselectionError,
    InvalidArgumentError,
    VanishingPostselectionError,
)
from .pointer import couple_sequence, exact_moments, post_select
from .polarization import PolarizationState, linear_state
from .weakform import CouplingConfig, WeaknessWarning, analytic_refs, invert_moments

MODES = ("analytic", "exact", "sampled")
DEFAULT_THETA_POINTS = 33


@dataclass(frozen=True)
class ExperimentSpec:
    pre: PolarizationState
    post: PolarizationState
    theta_grid: tuple
    g_x: float = 0.15
    g_y: float = 0.15
    sigma: float = 1.0
    detector: DetectorConfig | None = None
    n_signal_photons: int = 1_000_000
    n_frames: int = 50
    mode: str = "exact"

    def __post_init__(self):
        grid = tuple(float(t) for t in np.atleast_1d(self.theta_grid))
        if not grid:
            raise ConfigurationError("theta_grid must not be empty")
        object.__setattr__(self, "theta_grid", grid)
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "sampled" and self.detector is None:
            raise ConfigurationError("sampled mode needs a detector configuration")
        if self.n_frames < 1 or self.n_signal_photons < 0:
            raise ConfigurationError("n_frames must be >= 1 and n_signal_photons >= 0")

    def coupling(self, theta: float) -> CouplingConfig:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", WeaknessWarning)
            return CouplingConfig(self.g_x, self.g_y, self.sigma, theta, self.pre, self.post)


class SweepRow(NamedTuple):
    theta: float
    pi_psi_w: float
    pi_psi_w_se: float
    pi_v_w: float
    pi_v_w_se: float
    seq_w: float
    seq_w_se: float
    analytic_pi_psi_w: float
    analytic_pi_v_w: float
    analytic_seq_w: float
    postselect_prob: float
    degenerate: bool = False


COLUMNS = SweepRow._fields
MEASURED = ("pi_psi_w", "pi_v_w", "seq_w")


@dataclass
class SweepResult:
    rows: list
    mode: str = "exact"

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def summary(self) -> dict:
        """Largest ``|estimate - analytic|`` per quantity over valid rows."""
        out = {}
        for q in MEASURED:
            d = np.abs(self.column(q) - self.column("analytic_" + q))
            d = d[np.isfinite(d)]
            out[q] = float(d.max()) if d.size else math.nan
        return out


# -- spec files -------------------------------------------------------------

HPOST = dict(pre=[0.588, 0.809], post=[1.0, 0.0])
ANOMALOUS = dict(pre=[0.509, 0.861], post=[-0.397, 0.918])
PRESETS = {"hpost": HPOST, "anomalous": ANOMALOUS}


def parse_state(value) -> PolarizationState:
    """``{"theta": t}``, ``[h, v]`` (real) or ``{"h": [re, im], "v": [re, im]}``."""
    if isinstance(value, dict) and "theta" in value:
        return linear_state(float(value["theta"]))
    if isinstance(value, dict) and {"h", "v"} <= value.keys():
        h, v = (complex(*value[k]) if isinstance(value[k], list) else complex(value[k])
                for k in ("h", "v"))
        return PolarizationState.from_amplitudes(h, v)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return PolarizationState.from_amplitudes(*value)
    raise ConfigurationError(f"cannot parse polarization state {value!r}")


def state_to_json(state: PolarizationState) -> dict:
    return {"h": [state.amp_h.real, state.amp_h.imag], "v": [state.amp_v.real, state.amp_v.imag]}


def parse_theta_grid(value) -> tuple:
    if value is None:
        return tuple(np.linspace(0.0, np.pi, DEFAULT_THETA_POINTS))
    if isinstance(value, dict):
        return tuple(np.linspace(float(value.get("start", 0.0)), float(value.get("stop", np.pi)),
                                 int(value.get("num", DEFAULT_THETA_POINTS))))
    return tuple(float(t) for t in np.atleast_1d(value))


def spec_from_dict(data: dict) -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from a decoded spec document.

    A ``"preset"`` key (``hpost`` or ``anomalous``) supplies default pre/post
    states.
    """
    data = dict(data)
    preset = data.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigurationError(f"unknown preset {preset!r}")
        data = {**PRESETS[preset], **data}
    unknown = set(data) - {"pre", "post", "theta_grid", "g_x", "g_y", "sigma", "detector",
                           "n_signal_photons", "n_frames", "mode"}
    if unknown:
        raise ConfigurationError(f"unknown spec fields: {sorted(unknown)}")
    if "pre" not in data or "post" not in data:
        raise ConfigurationError("spec needs 'pre' and 'post' states (or a preset)")
    sigma = float(data.get("sigma", 1.0))
    det = data.get("detector")
    mode = data.get("mode", "exact")
    if det is not None or mode == "sampled":
        det = dict(det or {})
        if "pixel_pitch" in det:
            det["pixel_pitch"] = float(det["pixel_pitch"]) * sigma
        else:
            det["pixel_pitch"] = 0.25 * sigma
        if det.get("origin_offset") is not None:
            det["origin_offset"] = tuple(float(v) * sigma for v in det["origin_offset"])
        det = DetectorConfig(**det)
    return ExperimentSpec(
        pre=parse_state(data["pre"]),
        post=parse_state(data["post"]),
        theta_grid=parse_theta_grid(data.get("theta_grid")),
        g_x=float(data.get("g_x", 0.15)) * sigma,
        g_y=float(data.get("g_y", 0.15)) * sigma,
        sigma=sigma,
        detector=det,
        n_signal_photons=int(data.get("n_signal_photons", 1_000_000)),
        n_frames=int(data.get("n_frames", 50)),
        mode=mode,
    )


def load_spec(path) -> ExperimentSpec:
    return spec_from_dict(json.loads(Path(path).read_text()))


def preset_spec(name: str, **overrides) -> ExperimentSpec:
    return spec_from_dict({"preset": name, **overrides})


# -- running ----------------------------------------------------------------

def _flagged_row(theta, prob=math.nan) -> SweepRow:
    nan = math.nan
    return SweepRow(theta, nan, nan, nan, nan, nan, nan, nan, nan, nan, prob, True)


def split_photons(total: int, n_frames: int) -> list[int]:
    base, extra = divmod(int(total), int(n_frames))
    return [base + (1 if i < extra else 0) for i in range(n_frames)]


def run_point(spec: ExperimentSpec, theta: float, index: int = 0) -> SweepRow:
    """One sweep row at ``theta``.  ``index`` keys the random stream of
    sampled mode so rows are reproducible independently of each other.

    A degenerate post-selection yields a flagged row of NaNs instead of
    an exception.
    """
    cfg = spec.coupling(theta)
    try:
        refs = analytic_refs(cfg)
    except DegeneratePostselectionError:
        return _flagged_row(theta)
    if spec.mode == "analytic":
        prob = abs(spec.post.overlap(spec.pre)) ** 2
        return SweepRow(theta, refs.pi_psi_w, 0.0, refs.pi_v_w, 0.0, refs.seq_w, 0.0,
                        *refs, prob)
    try:
        state = couple_sequence(spec.pre, theta, spec.g_x, spec.g_y, spec.sigma)
        field = post_select(state, spec.post)
        exact = exact_moments(field)
    except VanishingPostselectionError:
        return _flagged_row(theta, 0.0)
    if spec.mode == "exact":
        moments = exact
    else:
        probs = pixel_probabilities(field, spec.detector)
        frames = [sample_frame(field, spec.detector, n, i, (index,), probabilities=probs)
                  for i, n in enumerate(split_photons(spec.n_signal_photons, spec.n_frames))]
        moments = estimate_moments(frames)
    rep = invert_moments(moments, spec.g_x, spec.g_y, states=(spec.pre, spec.post))
    return SweepRow(theta, rep.pi_psi_w, rep.pi_psi_w_se, rep.pi_v_w, rep.pi_v_w_se,
                    rep.seq_w, rep.seq_w_se, *refs, exact.postselect_prob)


def run_sweep(spec: ExperimentSpec, workers: int = 1) -> SweepResult:
    """Evaluate every theta of the grid; rows keep grid order."""
    def task(item):
        i, theta = item
        return run_point(spec, theta, i)

    items = list(enumerate(spec.theta_grid))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(task, items))
    else:
        rows = [task(it) for it in items]
    if all(r.degenerate for r in rows):
        raise ConfigurationError("post-selection is degenerate at every theta of the grid")
    return SweepResult(rows, spec.mode)


def with_seed(spec: ExperimentSpec, seed: int) -> ExperimentSpec:
    det = spec.detector or DetectorConfig(pixel_pitch=0.25 * spec.sigma)
    return replace(spec, detector=replace(det, seed=int(seed)))


# -- output -----------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    return f"{float(v):.9g}"


def emit(result: SweepResult, fmt: str, out_dir, stem: str = "sweep", delimiter: str = ",") -> Path:
    """Write ``result`` as ``table`` (one row per theta) or ``plotdata``
    (long form: series, quantity, theta, value, se)."""
    if not result.rows:
        raise InvalidArgumentError("cannot emit an empty sweep")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "table":
        path = out_dir / f"{stem}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, delimiter=delimiter)
            w.writerow(COLUMNS)
            for r in result.rows:
                w.writerow([_fmt(v) for v in r])
    elif fmt == "plotdata":
        path = out_dir / f"{stem}_plotdata.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, delimiter=delimiter)
            w.writerow(("series", "quantity", "theta", "value", "se"))
            for q in MEASURED:
                for r in result.rows:
                    w.writerow((result.mode, q, _fmt(r.theta), _fmt(getattr(r, q)),
                                _fmt(getattr(r, q + "_se"))))
            for q in MEASURED:
                for r in result.rows:
                    w.writerow(("analytic", q, _fmt(r.theta), _fmt(getattr(r, "analytic_" + q)), ""))
    else:
        raise InvalidArgumentError(f"unknown format {fmt!r}")
    return path


def read_table(path, delimiter: str = ",", mode: str = "exact") -> SweepResult:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = tuple(next(reader))
        if header != COLUMNS:
            raise InvalidArgumentError(f"unexpected table header {header}")
        rows = [SweepRow(*(float(v) for v in rec[:-1]), bool(int(rec[-1]))) for rec in reader]
    return SweepResult(rows, mode)


def read_plotdata(path, delimiter: str = ",") -> dict:
    """``{(series, quantity): (theta, value, se)}`` arrays."""
    series = {}
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        for rec in reader:
            key = (rec["series"], rec["quantity"])
            se = float(rec["se"]) if rec["se"] else math.nan
            series.setdefault(key, []).append((float(rec["theta"]), float(rec["value"]), se))
    return {k: tuple(np.array(c) for c in zip(*v)) for k, v in series.items()}


def scan_table(scan, out_dir, stem: str = "scan") -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("ratio", "dev_pi_psi_w", "dev_pi_v_w", "dev_seq_w"))
        for row in scan.rows():
            w.writerow([_fmt(v) for v in row])
    return path


__all__ = [
    "COLUMNS", "ExperimentSpec", "MODES", "PRESETS", "SweepResult", "SweepRow",
    "emit", "load_spec", "preset_spec", "read_plotdata", "read_table", "run_point",
    "run_sweep", "scan_table", "spec_from_dict", "split_photons", "state_to_json", "with_seed",
]
