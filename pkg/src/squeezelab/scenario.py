"""
Declarative scenarios: JSON config -> sweep -> sensitivity table.

A config names a topology, a preparation, a readout scheme and a one-parameter
sweep.  Parsing produces a canonical form (squeeze factors given in dB are
converted, defaults filled in) that serializes back to itself.
"""
from __future__ import annotations

import copy
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional

import jsonschema
import numpy as np

from . import __version__
from .detection import (
    double_direct_error,
    double_direct_pipeline,
    double_homodyne_error,
    double_homodyne_pipeline,
    single_arm_homodyne_error,
    single_arm_homodyne_pipeline,
    su11_default_theta,
    su11_single_arm_error,
    two_arm_su11_readout_error,
)
from .errors import (
    ConfigError,
    EnvelopeExceededError,
    InvalidArgument,
    PreconditionViolation,
    SingularOperatingPoint,
    SqueezelabError,
    ZeroGainError,
)
from .fock_oracle import build_state, exact_photon_moments, exact_qfi_pure
from .gaussian_core import MomentSet, SqueezeParams, db_to_r, single_arm_program
from .qcrb import (
    FisherMatrix,
    TwoArmPrep,
    closed_form_single_arm,
    closed_form_two_arm,
    fisher_matrix,
    reference_limits,
    single_arm_number_variance,
    to_plusminus_basis,
)

TOPOLOGIES = ("single_arm", "two_arm")
DETECTIONS = {
    "homodyne": ("single_arm",),
    "su11_readout": ("single_arm",),
    "double_homodyne": ("two_arm",),
    "double_direct": ("two_arm",),
    "su11_two_arm_readout": ("two_arm",),
    "bound_only": ("single_arm", "two_arm"),
}
ORACLE_ENVELOPE = {"alpha": 2.0, "r": 0.6, "M": 2}
ORACLE_GAP_THRESHOLD = 1e-5
CR_SLACK = 1e-9
CSV_HEADER = "sweep_value,qcrb_var_minus,qcrb_var_plus,realized_var,snl,sqz,hl,oracle_gap,well_posed"

_num = {"type": "number"}
_squeeze = {
    "type": "object",
    "properties": {"r": _num, "r_db": _num, "theta": {"type": ["number", "null"]}},
    "additionalProperties": False,
}
SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["topology", "preparation", "detection", "sweep"],
    "additionalProperties": False,
    "properties": {
        "topology": {"enum": list(TOPOLOGIES)},
        "preparation": {
            "type": "object",
            "required": ["alpha"],
            "additionalProperties": False,
            "properties": {
                "alpha": {"type": "number", "minimum": 0},
                "zeta": _num,
                "sq1": _squeeze,
                "sq2": _squeeze,
                "su11_prep": _squeeze,
            },
        },
        "detection": {"enum": list(DETECTIONS)},
        "detection_params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alpha_r": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "R": {"type": ["number", "null"], "minimum": 0},
                "vartheta": {"type": ["number", "null"]},
                "phi_offset": {"type": ["number", "null"]},
            },
        },
        "sweep": {
            "type": "object",
            "required": ["parameter", "from", "to", "steps"],
            "additionalProperties": False,
            "properties": {
                "parameter": {"type": "string", "minLength": 1},
                "from": _num,
                "to": _num,
                "steps": {"type": "integer", "minimum": 1},
                "scale": {"enum": ["linear", "log"]},
            },
        },
        "oracle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "enabled": {"type": "boolean"},
                "cutoff": {"type": ["integer", "null"], "minimum": 2},
            },
        },
    },
}
_SWEEPABLE = {
    "preparation": {"alpha", "zeta"},
    "squeezer": {"r", "theta", "r_db"},
    "detection_params": {"alpha_r", "R", "vartheta", "phi_offset"},
}


def _path_str(parts) -> str:
    return "/" + "/".join(str(p) for p in parts)


def _canonical_squeezer(raw: dict, where: str, errors: list) -> dict:
    has_r, has_db = "r" in raw, "r_db" in raw
    if has_r == has_db:
        errors.append((where, "give exactly one of 'r' or 'r_db'"))
        return {"r": 0.0, "theta": raw.get("theta", 0.0)}
    r = float(raw["r"]) if has_r else db_to_r(float(raw["r_db"]))
    theta = raw.get("theta", 0.0)
    return {"r": r, "theta": None if theta is None else float(theta)}


@dataclass(frozen=True)
class ScenarioConfig:
    """Canonical scenario; build with ``parse_config``."""

    topology: str
    preparation: dict
    detection: str
    detection_params: dict
    sweep: dict
    oracle: dict

    def to_dict(self) -> dict:
        return {
            "topology": self.topology,
            "preparation": copy.deepcopy(self.preparation),
            "detection": self.detection,
            "detection_params": dict(self.detection_params),
            "sweep": dict(self.sweep),
            "oracle": dict(self.oracle),
        }

    def serialize(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()

    def sweep_values(self) -> np.ndarray:
        s = self.sweep
        if s["steps"] == 1:
            return np.array([float(s["from"])])
        if s["scale"] == "log":
            return np.geomspace(s["from"], s["to"], s["steps"])
        return np.linspace(s["from"], s["to"], s["steps"])

    def at(self, value: float) -> dict:
        """Canonical dict with the sweep parameter set to ``value``."""
        d = self.to_dict()
        *parents, leaf = self.sweep["parameter"].split(".")
        node = d
        for p in parents:
            node = node[p]
        if leaf == "r_db":
            node["r"] = db_to_r(value)
        else:
            node[leaf] = float(value)
        return d


def parse_config(raw: Any) -> ScenarioConfig:
    """Validate a decoded JSON object (or a JSON string) and return its canonical form.

    Raises ``ConfigError`` listing every violation with its path.
    """
    if isinstance(raw, (str, bytes)):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError([("/", f"invalid JSON: {exc}")]) from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = [
        (_path_str(e.absolute_path), e.message)
        for e in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    ]
    if errors:
        raise ConfigError(errors)

    topology, detection = raw["topology"], raw["detection"]
    if topology not in DETECTIONS[detection]:
        errors.append(("/detection", f"{detection!r} requires topology {' or '.join(DETECTIONS[detection])}"))

    rp = raw["preparation"]
    prep: dict = {"alpha": float(rp["alpha"]), "zeta": float(rp.get("zeta", 0.0))}
    if "su11_prep" in rp:
        if topology != "two_arm":
            errors.append(("/preparation/su11_prep", "parametric preparation needs topology two_arm"))
        for k in ("sq1", "sq2"):
            if k in rp:
                errors.append((f"/preparation/{k}", "not allowed together with su11_prep"))
        prep["su11_prep"] = _canonical_squeezer(rp["su11_prep"], "/preparation/su11_prep", errors)
        if prep["su11_prep"]["r"] < 0:
            errors.append(("/preparation/su11_prep/r", "must be >= 0"))
    else:
        default_theta = None if detection == "su11_readout" else 0.0
        prep["sq1"] = _canonical_squeezer(rp.get("sq1", {"r": 0.0, "theta": default_theta}), "/preparation/sq1", errors)
        if topology == "two_arm":
            prep["sq2"] = _canonical_squeezer(rp.get("sq2", {"r": 0.0}), "/preparation/sq2", errors)
        elif "sq2" in rp:
            errors.append(("/preparation/sq2", "single_arm has no second squeezer"))
    for key, sq in prep.items():
        if isinstance(sq, dict) and sq["theta"] is None and detection != "su11_readout":
            errors.append((f"/preparation/{key}/theta", "null squeeze angle only allowed for su11_readout"))

    dp = {"alpha_r": None, "R": None, "vartheta": None, "phi_offset": None}
    dp.update(raw.get("detection_params", {}))
    if detection == "homodyne" and dp["alpha_r"] is None:
        errors.append(("/detection_params/alpha_r", "required for homodyne"))
    if detection in ("su11_readout", "su11_two_arm_readout") and dp["R"] is None:
        errors.append(("/detection_params/R", f"required for {detection}"))
    if detection == "su11_two_arm_readout" and dp["vartheta"] is None:
        dp["vartheta"] = 0.0
    if detection == "double_direct":
        if dp["phi_offset"] is None:
            dp["phi_offset"] = math.pi / 4
        if abs(math.sin(2 * dp["phi_offset"])) < 1e-12:
            errors.append(("/detection_params/phi_offset", "sin(2 phi_offset) must be nonzero"))
    dp = {k: (None if v is None else float(v)) for k, v in dp.items()}

    rs = raw["sweep"]
    sweep = {
        "parameter": rs["parameter"],
        "from": float(rs["from"]),
        "to": float(rs["to"]),
        "steps": int(rs["steps"]),
        "scale": rs.get("scale", "linear"),
    }
    if sweep["from"] > sweep["to"]:
        errors.append(("/sweep", "'from' must be <= 'to'"))
    if sweep["scale"] == "log" and not sweep["from"] > 0:
        errors.append(("/sweep/from", "log sweep needs 'from' > 0"))
    parts = sweep["parameter"].split(".")
    ok = (
        (len(parts) == 2 and parts[0] == "preparation" and parts[1] in _SWEEPABLE["preparation"])
        or (len(parts) == 3 and parts[0] == "preparation" and parts[1] in prep
            and isinstance(prep[parts[1]], dict) and parts[2] in _SWEEPABLE["squeezer"])
        or (len(parts) == 2 and parts[0] == "detection_params" and parts[1] in _SWEEPABLE["detection_params"])
    )
    if not ok:
        errors.append(("/sweep/parameter", f"{sweep['parameter']!r} is not a sweepable parameter of this scenario"))
    elif parts[-1] == "alpha" and sweep["from"] < 0:
        errors.append(("/sweep/from", "alpha must be >= 0"))

    ro = raw.get("oracle", {})
    oracle = {"enabled": bool(ro.get("enabled", False)), "cutoff": ro.get("cutoff")}

    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(topology, prep, detection, dp, sweep, oracle)


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError([("/", f"cannot read {path}: {exc}")]) from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError([("/", f"not UTF-8: {exc}")]) from None
    return parse_config(text)


# -- evaluation --------------------------------------------------------------


@dataclass(frozen=True)
class SensitivityRow:
    sweep_value: float
    qcrb_var_minus: float
    qcrb_var_plus: Optional[float]
    realized_var: Optional[float]
    snl: float
    sqz: float
    hl: float
    oracle_gap: Optional[float]
    well_posed: bool
    note: str = ""


@dataclass
class SensitivityReport:
    config: ScenarioConfig
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(f"# squeezelab {__version__}\n")
        out.write(f"# config sha256 {self.config.sha256()}\n")
        out.write(CSV_HEADER + "\n")
        for row in self.rows:
            cells = [
                row.sweep_value, row.qcrb_var_minus, row.qcrb_var_plus, row.realized_var,
                row.snl, row.sqz, row.hl, row.oracle_gap,
            ]
            out.write(",".join(_fmt(c) for c in cells) + "," + ("true" if row.well_posed else "false") + "\n")
        for i, row in enumerate(self.rows):
            if row.note:
                out.write(f"# row {i}: {row.note}\n")
        return out.getvalue()


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def _squeezer(d: dict, theta_default: float = 0.0) -> SqueezeParams:
    theta = d["theta"] if d["theta"] is not None else theta_default
    return SqueezeParams(d["r"], theta)


def _probe_theta(point: dict) -> float:
    prep = point["preparation"]
    th = prep["sq1"]["theta"]
    if th is None:
        if prep["alpha"] <= 0:
            raise InvalidArgument("default squeeze angle needs alpha > 0")
        th = su11_default_theta(prep["alpha"], prep["sq1"]["r"])
    return th


def _signed_r(sq: SqueezeParams) -> Optional[float]:
    """``r`` with sign for squeezing along the carrier axes, else ``None``."""
    if sq.r == 0 or sq.theta == 0:
        return sq.r
    if sq.theta == math.pi / 2:
        return -sq.r
    return None


def _two_arm_prep(point: dict) -> TwoArmPrep:
    p = point["preparation"]
    if "su11_prep" in p:
        sq = p["su11_prep"]
        return TwoArmPrep.su11(p["alpha"], sq["r"], sq["theta"], p["zeta"])
    return TwoArmPrep(p["alpha"], p["zeta"], _squeezer(p["sq1"]), _squeezer(p["sq2"]))


def _squeeze_of(point: dict) -> float:
    p = point["preparation"]
    if "su11_prep" in p:
        return abs(p["su11_prep"]["r"])
    if "sq2" in p:
        return abs(p["sq2"]["r"])
    return abs(p["sq1"]["r"])


def _rel_gap(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    diff = np.abs(a - b).max(initial=0.0)
    if diff == 0:
        return 0.0
    return float(diff / max(np.abs(b).max(initial=0.0), 1e-300))


def check_envelope(point: dict) -> None:
    p = point["preparation"]
    if p["alpha"] > ORACLE_ENVELOPE["alpha"]:
        raise EnvelopeExceededError("preparation.alpha", p["alpha"], ORACLE_ENVELOPE["alpha"])
    for key in ("sq1", "sq2", "su11_prep"):
        if key in p and abs(p[key]["r"]) > ORACLE_ENVELOPE["r"]:
            raise EnvelopeExceededError(f"preparation.{key}.r", p[key]["r"], ORACLE_ENVELOPE["r"])


@dataclass(frozen=True)
class OracleComparison:
    sweep_value: float
    mean_gap: float
    cov_gap: float
    qfi_gap: float
    norm_deficit: float

    @property
    def worst(self) -> float:
        return max(self.mean_gap, self.cov_gap, self.qfi_gap)


def _oracle_compare(config: ScenarioConfig, point: dict, value: float) -> OracleComparison:
    check_envelope(point)
    cutoff = config.oracle["cutoff"]
    if config.topology == "single_arm":
        p = point["preparation"]
        theta = _probe_theta(point) if config.detection == "su11_readout" else p["sq1"]["theta"]
        sq = SqueezeParams(p["sq1"]["r"], theta)
        analytic = MomentSet([p["alpha"] ** 2 + math.sinh(sq.r) ** 2], [[single_arm_number_variance(p["alpha"], sq)]])
        state = build_state(single_arm_program(p["alpha"], sq), cutoff=cutoff, M=1)
        exact = exact_photon_moments(state)
        qfi_a, qfi_e = fisher_matrix(analytic, [0]), exact_qfi_pure(state, [0])
    else:
        prep = _two_arm_prep(point)
        analytic, _ = closed_form_two_arm(prep)
        state = build_state(prep.program(), cutoff=cutoff, M=2)
        exact = to_plusminus_basis(exact_photon_moments(state))
        qfi_a = FisherMatrix(4.0 * analytic.cov_n)
        qfi_e = FisherMatrix(4.0 * exact.cov_n)
    return OracleComparison(
        value,
        _rel_gap(analytic.mean_n, exact.mean_n),
        _rel_gap(analytic.cov_n, exact.cov_n),
        _rel_gap(qfi_a.A, qfi_e.A),
        state.norm_deficit,
    )


def _realized(config: ScenarioConfig, point: dict) -> Optional[float]:
    det = config.detection
    p, dp = point["preparation"], point["detection_params"]
    if det == "bound_only":
        return None
    if det == "homodyne":
        sq = _squeezer(p["sq1"])
        if sq.theta == 0:
            return single_arm_homodyne_error(p["alpha"], dp["alpha_r"], sq.r).var_phase
        return single_arm_homodyne_pipeline(p["alpha"], dp["alpha_r"], sq).var_phase
    if det == "su11_readout":
        return su11_single_arm_error(p["alpha"], p["sq1"]["r"], _probe_theta(point), dp["R"]).var_phase
    prep = _two_arm_prep(point)
    r1, r2 = _signed_r(prep.sq1), _signed_r(prep.sq2)
    plain = prep.zeta == 0 and r1 is not None and r2 is not None
    if det == "double_homodyne":
        if plain and prep.alpha > 0:
            return double_homodyne_error(prep.alpha, r1, r2)[1]
        return double_homodyne_pipeline(prep, "minus").var_phase
    if det == "double_direct":
        if plain:
            return double_direct_error(prep.alpha, r1, r2, dp["phi_offset"]).var_phase
        return double_direct_pipeline(prep, dp["phi_offset"]).var_phase
    if det == "su11_two_arm_readout":
        return two_arm_su11_readout_error(prep.to_map(), dp["R"], dp["vartheta"], "minus").var_phase
    raise InvalidArgument(f"unknown detection {det!r}")


def evaluate_point(config: ScenarioConfig, value: float) -> SensitivityRow:
    point = config.at(value)
    p = point["preparation"]
    notes = []
    if config.topology == "single_arm":
        theta = _probe_theta(point) if config.detection == "su11_readout" else p["sq1"]["theta"]
        sq = SqueezeParams(p["sq1"]["r"], theta)
        bound = closed_form_single_arm(p["alpha"], sq)
        var_minus, var_plus = float(bound.var_phi[0, 0]), None
        single_param = var_minus
        N = p["alpha"] ** 2 + math.sinh(sq.r) ** 2
    else:
        prep = _two_arm_prep(point)
        moments, bound = closed_form_two_arm(prep)
        var_plus, var_minus = float(bound.var_plus), float(bound.var_minus)
        a_mm = 4.0 * moments.cov_n[1, 1]
        single_param = 1.0 / a_mm if a_mm > 0 else math.inf
        N = prep.mean_photons
    well_posed = bool(bound.well_posed)

    try:
        realized = _realized(config, point)
    except ZeroGainError as exc:
        realized, well_posed = math.inf, False
        notes.append(f"zero gain: {exc}")
    except (SingularOperatingPoint, InvalidArgument, PreconditionViolation) as exc:
        realized, well_posed = math.nan, False
        notes.append(f"{type(exc).__name__}: {exc}")

    # the readouts estimate phi_- with phi_+ known, so the single-parameter
    # bound is the relevant one; it equals var_minus for uncorrelated channels
    if realized is not None and math.isfinite(realized) and realized < single_param - CR_SLACK:
        raise SqueezelabError(
            f"Cramer-Rao ordering violated at {value}: realized {realized!r} < bound {single_param!r}"
        )

    if N > 0:
        snl, sqz, hl = (x ** 2 for x in reference_limits(N, _squeeze_of(point)))
    else:
        snl = sqz = hl = math.inf

    gap = None
    if config.oracle["enabled"]:
        gap = _oracle_compare(config, point, value).worst
    return SensitivityRow(
        float(value), var_minus, var_plus, realized, snl, sqz, hl, gap, well_posed, "; ".join(notes)
    )


def thread_count() -> int:
    raw = os.environ.get("SQUEEZELAB_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError([("SQUEEZELAB_THREADS", f"not an integer: {raw!r}")]) from None
    if n < 1:
        raise ConfigError([("SQUEEZELAB_THREADS", f"must be >= 1, got {n}")])
    return n


def _map_ordered(fn, values):
    n = min(thread_count(), len(values))
    if n <= 1:
        return [fn(v) for v in values]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, values))


def run_scenario(config: ScenarioConfig) -> SensitivityReport:
    """One row per sweep point, in sweep order."""
    values = [float(v) for v in config.sweep_values()]
    rows = _map_ordered(lambda v: evaluate_point(config, v), values)
    return SensitivityReport(config, rows)


def validate_scenario(config: ScenarioConfig) -> list[OracleComparison]:
    """Analytic-vs-oracle gaps at every sweep point.

    Raises ``EnvelopeExceededError`` if any point is outside the oracle envelope.
    """
    if not config.oracle["enabled"]:
        raise ConfigError([("/oracle/enabled", "validation needs the oracle enabled")])
    values = [float(v) for v in config.sweep_values()]
    points = [config.at(v) for v in values]
    for pt in points:
        check_envelope(pt)
    return _map_ordered(lambda v: _oracle_compare(config, config.at(v), v), values)
