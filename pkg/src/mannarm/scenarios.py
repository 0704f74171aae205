"""Scenario presets and the plain-text scenario file format.

Presets 0-6 cover the benchmark settings: 0 is the short three-jump case
study, 1 the long periodic jump sequence, 2-6 its variants (different
command signals, monotone mass growth, different masses/lengths, and a
raised reallocation threshold). A scenario file is an INI-style document;
any field left out falls back to the preset-1 value.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import ArmParams, JointSignal, JumpEvent, NonPositiveMassError, apply_jump
from .neurocontroller import ControllerGains

CONTROLLERS = ("nn", "mann-soft", "mann-hard", "mann-proposed")
KEY_DESIGNS = ("state", "rep")
REALLOC_POLICIES = ("off", "initial", "always")


class ScenarioParseError(ValueError):
    """Scenario file is syntactically malformed (bad key, value, or line)."""


class ScenarioValidationError(ValueError):
    """Scenario fields violate an invariant (nonpositive mass, bad order, ...)."""


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete description of one closed-loop experiment."""

    id: str = "1"
    m1: float = 0.8
    m2: float = 2.3
    l1: float = 1.0
    l2: float = 1.0
    ref1: JointSignal = field(default_factory=lambda: JointSignal(amplitude=1.0, omega=0.5))
    ref2: JointSignal = field(default_factory=JointSignal)
    jumps: tuple[JumpEvent, ...] = ()
    gains: ControllerGains = field(default_factory=ControllerGains)
    write_gain: float = 0.75
    key_rate: float = 1.0
    threshold: float = 0.2
    capacity: int = 5
    n_hidden: int = 10
    n_hidden_equiv: int = 14
    controller: str = "mann-proposed"
    key_design: str = "rep"
    reallocation: str = "initial"
    sharpness: float = 10.0
    duration: float = 330.0
    seed: int = 0
    x0: tuple[float, float] | None = None
    xdot0: tuple[float, float] | None = None

    @property
    def reference(self) -> tuple[JointSignal, JointSignal]:
        return (self.ref1, self.ref2)

    def arm_params(self) -> ArmParams:
        return ArmParams(m1=self.m1, m2=self.m2, l1=self.l1, l2=self.l2)


_SC1_JUMPS = (
    (5.0, math.sqrt(2.0)), (25.0, math.sqrt(2.0)),
    (50.0, math.sqrt(2.5)), (75.0, 0.63),
    (90.0, math.sqrt(0.5)), (110.0, math.sqrt(0.5)),
    (130.0, math.sqrt(0.1)), (150.0, math.sqrt(10.0)),
    (170.0, math.sqrt(2.0)), (190.0, math.sqrt(5.0)),
    (210.0, math.sqrt(0.2)), (230.0, math.sqrt(0.5)),
    (250.0, math.sqrt(0.1)), (270.0, math.sqrt(10.0)),
    (290.0, math.sqrt(2.0)), (310.0, math.sqrt(5.0)),
)


def _scale_jumps(pairs) -> tuple[JumpEvent, ...]:
    return tuple(JumpEvent(time=t, kind="scale", factor=f) for t, f in pairs)


def _monotone_jumps(m1: float, m2: float, duration: float,
                    period: float = 20.0, fraction: float = 0.2) -> tuple[JumpEvent, ...]:
    """Squared masses grow by fraction*m(0)^2 once per period."""
    inc = (fraction * m1 * m1, fraction * m2 * m2)
    times = np.arange(period, duration, period)
    return tuple(JumpEvent(time=float(t), kind="add_squared", dm_squared=inc)
                 for t in times)


def preset(scenario_id: int | str) -> ScenarioSpec:
    """Return one of the built-in scenarios (0-6)."""
    sid = str(scenario_id)
    base = ScenarioSpec(id="1", jumps=_scale_jumps(_SC1_JUMPS))
    if sid == "0":
        # Case study: regulation about the rest posture, three jumps.
        return replace(
            base, id="0", l2=2.0, duration=60.0,
            ref1=JointSignal(), ref2=JointSignal(),
            jumps=_scale_jumps(((10.0, 2.0), (20.0, math.sqrt(2.0)),
                                (40.0, 1.0 / math.sqrt(2.0)))))
    if sid == "1":
        return base
    if sid == "2":
        return replace(base, id="2", ref2=JointSignal(offset=0.1))
    if sid == "3":
        return replace(base, id="3",
                       jumps=_monotone_jumps(base.m1, base.m2, base.duration))
    if sid == "4":
        return replace(base, id="4", m1=3.0, m2=2.0)
    if sid == "5":
        return replace(base, id="5", l2=2.0, ref1=JointSignal(),
                       ref2=JointSignal(amplitude=1.0, omega=0.5))
    if sid == "6":
        return replace(base, id="6", l2=2.0, ref1=JointSignal(),
                       ref2=JointSignal(offset=0.1), threshold=0.25)
    raise ScenarioValidationError(f"unknown preset {scenario_id!r} (expected 0-6)")


def validate_scenario(spec: ScenarioSpec) -> None:
    """Raise ScenarioValidationError on any invariant violation."""
    try:
        params = spec.arm_params()
    except (NonPositiveMassError, ValueError) as exc:
        raise ScenarioValidationError(str(exc)) from None
    if spec.duration <= 0:
        raise ScenarioValidationError(f"duration must be positive, got {spec.duration}")
    if spec.capacity < 1:
        raise ScenarioValidationError(f"capacity must be >= 1, got {spec.capacity}")
    if spec.n_hidden < 1 or spec.n_hidden_equiv < 1:
        raise ScenarioValidationError("hidden widths must be >= 1")
    if spec.write_gain <= 0 or spec.key_rate <= 0 or spec.threshold <= 0:
        raise ScenarioValidationError(
            "write_gain, key_rate and threshold must be positive")
    if spec.sharpness < 0:
        raise ScenarioValidationError("sharpness must be nonnegative")
    if spec.controller not in CONTROLLERS:
        raise ScenarioValidationError(
            f"controller must be one of {CONTROLLERS}, got {spec.controller!r}")
    if spec.key_design not in KEY_DESIGNS:
        raise ScenarioValidationError(
            f"key design must be one of {KEY_DESIGNS}, got {spec.key_design!r}")
    if spec.reallocation not in REALLOC_POLICIES:
        raise ScenarioValidationError(
            f"reallocation must be one of {REALLOC_POLICIES}, got {spec.reallocation!r}")
    last = 0.0
    for ev in spec.jumps:
        if ev.time <= last:
            raise ScenarioValidationError(
                f"jump times must be strictly increasing and positive, got {ev.time}")
        if ev.time >= spec.duration:
            raise ScenarioValidationError(
                f"jump at t={ev.time} is not before the duration {spec.duration}")
        if ev.kind not in ("scale", "add_squared"):
            raise ScenarioValidationError(f"unknown jump kind {ev.kind!r}")
        last = ev.time
        try:
            params = apply_jump(params, ev)
        except NonPositiveMassError as exc:
            raise ScenarioValidationError(
                f"jump at t={ev.time} produces nonpositive mass: {exc}") from None


# --- plain-text scenario files -------------------------------------------

_KNOWN_KEYS = {
    "scenario": {"id", "duration", "seed"},
    "arm": {"m1", "m2", "l1", "l2"},
    "reference": {"joint1", "joint2"},
    "jumps": {"events"},
    "gains": {"Kv", "Lambda", "k_robust", "kappa", "Cw", "Cv", "Zm"},
    "memory": {"write_gain", "key_rate", "threshold", "capacity"},
    "network": {"n_hidden", "n_hidden_equiv"},
    "controller": {"kind", "key", "realloc", "sharpness"},
    "initial": {"x", "xdot"},
}

_SIN_RE = re.compile(
    r"^\s*(?:(?P<offset>[^\s+]+)\s*\+\s*)?"
    r"(?:(?P<amp>[^\s*]+)\s*\*\s*)?"
    r"sin\(\s*(?P<omega>[^\s*]+)\s*\*\s*t\s*\)\s*$")


def parse_joint_signal(text: str) -> JointSignal:
    """Parse "C", "sin(W*t)", "A*sin(W*t)" or "C + A*sin(W*t)"."""
    text = text.strip()
    m = _SIN_RE.match(text)
    try:
        if m:
            offset = float(m.group("offset")) if m.group("offset") else 0.0
            amp = float(m.group("amp")) if m.group("amp") else 1.0
            omega = float(m.group("omega"))
            return JointSignal(offset=offset, amplitude=amp, omega=omega)
        return JointSignal(offset=float(text))
    except ValueError:
        raise ScenarioParseError(
            f"cannot parse reference signal {text!r} "
            "(expected a constant or [C +] [A*]sin(W*t))") from None


def format_joint_signal(sig: JointSignal) -> str:
    if sig.amplitude == 0.0:
        return repr(sig.offset)
    text = f"{sig.amplitude!r}*sin({sig.omega!r}*t)"
    if sig.offset != 0.0:
        text = f"{sig.offset!r} + {text}"
    return text


def _parse_jump_lines(block: str) -> tuple[JumpEvent, ...]:
    events = []
    for raw in block.splitlines():
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        try:
            if len(parts) == 3 and parts[1] == "scale":
                events.append(JumpEvent(time=float(parts[0]), kind="scale",
                                        factor=float(parts[2])))
            elif len(parts) == 4 and parts[1] == "add_squared":
                events.append(JumpEvent(time=float(parts[0]), kind="add_squared",
                                        dm_squared=(float(parts[2]), float(parts[3]))))
            else:
                raise ValueError
        except ValueError:
            raise ScenarioParseError(
                f"bad jump line {line!r} (expected 'TIME scale FACTOR' or "
                "'TIME add_squared DM1SQ DM2SQ')") from None
    return tuple(events)


def _format_jump_lines(jumps) -> str:
    lines = []
    for ev in jumps:
        if ev.kind == "scale":
            lines.append(f"{ev.time!r} scale {ev.factor!r}")
        else:
            lines.append(f"{ev.time!r} add_squared "
                         f"{ev.dm_squared[0]!r} {ev.dm_squared[1]!r}")
    return "\n" + "\n".join(lines) if lines else ""


def _parse_gain_matrix(text: str, key: str) -> np.ndarray | float:
    parts = text.split()
    try:
        if len(parts) == 1:
            return float(parts[0])
        if len(parts) == 4:
            vals = [float(p) for p in parts]
            return np.array(vals).reshape(2, 2)
    except ValueError:
        pass
    raise ScenarioParseError(
        f"gain {key} must be a scalar or four numbers (row major), got {text!r}")


def _format_gain_matrix(mat: np.ndarray) -> str:
    if mat[0, 1] == 0.0 and mat[1, 0] == 0.0 and mat[0, 0] == mat[1, 1]:
        return repr(float(mat[0, 0]))
    return " ".join(repr(float(v)) for v in mat.ravel())


def _parse_pair(text: str, key: str) -> tuple[float, float]:
    parts = text.split()
    if len(parts) != 2:
        raise ScenarioParseError(f"{key} must be two numbers, got {text!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError:
        raise ScenarioParseError(f"{key} must be two numbers, got {text!r}") from None


def load_scenario_file(path) -> ScenarioSpec:
    """Parse a scenario file; unspecified fields take the preset-1 values.

    A file with no recognized content at all is rejected: at minimum the
    reference signals must be stated (explicitly or via other overrides
    that show the file is intentional).
    """
    parser = configparser.ConfigParser(interpolation=None)
    with open(path) as fh:
        try:
            parser.read_file(fh, source=str(path))
        except configparser.Error as exc:
            raise ScenarioParseError(str(exc)) from None

    if not any(parser.items(sec) for sec in parser.sections()):
        raise ScenarioValidationError(
            f"{path}: scenario file defines nothing; at least a reference "
            "signal (a [reference] section) is required")

    for sec in parser.sections():
        if sec not in _KNOWN_KEYS:
            raise ScenarioParseError(f"{path}: unknown section [{sec}]")
        for key, _ in parser.items(sec):
            if key not in {k.lower() for k in _KNOWN_KEYS[sec]}:
                raise ScenarioParseError(f"{path}: unknown key {key!r} in [{sec}]")

    spec = preset(1)

    def get(sec, key, conv, current):
        if parser.has_option(sec, key):
            raw = parser.get(sec, key)
            try:
                return conv(raw)
            except (ScenarioParseError, ScenarioValidationError):
                raise
            except ValueError:
                raise ScenarioParseError(
                    f"{path}: bad value {raw!r} for {sec}.{key}") from None
        return current

    spec = replace(
        spec,
        id=get("scenario", "id", str.strip, spec.id),
        duration=get("scenario", "duration", float, spec.duration),
        seed=get("scenario", "seed", int, spec.seed),
        m1=get("arm", "m1", float, spec.m1),
        m2=get("arm", "m2", float, spec.m2),
        l1=get("arm", "l1", float, spec.l1),
        l2=get("arm", "l2", float, spec.l2),
        ref1=get("reference", "joint1", parse_joint_signal, spec.ref1),
        ref2=get("reference", "joint2", parse_joint_signal, spec.ref2),
        jumps=get("jumps", "events", _parse_jump_lines, spec.jumps),
        write_gain=get("memory", "write_gain", float, spec.write_gain),
        key_rate=get("memory", "key_rate", float, spec.key_rate),
        threshold=get("memory", "threshold", float, spec.threshold),
        capacity=get("memory", "capacity", int, spec.capacity),
        n_hidden=get("network", "n_hidden", int, spec.n_hidden),
        n_hidden_equiv=get("network", "n_hidden_equiv", int, spec.n_hidden_equiv),
        controller=get("controller", "kind", str.strip, spec.controller),
        key_design=get("controller", "key", str.strip, spec.key_design),
        reallocation=get("controller", "realloc", str.strip, spec.reallocation),
        sharpness=get("controller", "sharpness", float, spec.sharpness),
        x0=get("initial", "x", lambda s: _parse_pair(s, "initial.x"), spec.x0),
        xdot0=get("initial", "xdot", lambda s: _parse_pair(s, "initial.xdot"), spec.xdot0),
    )

    if parser.has_section("gains"):
        g = spec.gains
        kv = get("gains", "Kv", lambda s: _parse_gain_matrix(s, "Kv"), g.Kv)
        lam = get("gains", "Lambda", lambda s: _parse_gain_matrix(s, "Lambda"), g.Lambda)
        try:
            spec = replace(spec, gains=ControllerGains(
                Kv=kv, Lambda=lam,
                k_robust=get("gains", "k_robust", float, g.k_robust),
                kappa=get("gains", "kappa", float, g.kappa),
                Cw=get("gains", "Cw", float, g.Cw),
                Cv=get("gains", "Cv", float, g.Cv),
                Zm=get("gains", "Zm", float, g.Zm)))
        except ValueError as exc:
            raise ScenarioValidationError(f"{path}: {exc}") from None

    validate_scenario(spec)
    return spec


def save_scenario_file(spec: ScenarioSpec, path) -> None:
    """Write a scenario file that loads back to an identical spec."""
    parser = configparser.ConfigParser(interpolation=None)
    parser["scenario"] = {
        "id": spec.id,
        "duration": repr(spec.duration),
        "seed": str(spec.seed),
    }
    parser["arm"] = {k: repr(getattr(spec, k)) for k in ("m1", "m2", "l1", "l2")}
    parser["reference"] = {
        "joint1": format_joint_signal(spec.ref1),
        "joint2": format_joint_signal(spec.ref2),
    }
    if spec.jumps:
        parser["jumps"] = {"events": _format_jump_lines(spec.jumps)}
    parser["gains"] = {
        "Kv": _format_gain_matrix(spec.gains.Kv),
        "Lambda": _format_gain_matrix(spec.gains.Lambda),
        "k_robust": repr(spec.gains.k_robust),
        "kappa": repr(spec.gains.kappa),
        "Cw": repr(spec.gains.Cw),
        "Cv": repr(spec.gains.Cv),
        "Zm": repr(spec.gains.Zm),
    }
    parser["memory"] = {
        "write_gain": repr(spec.write_gain),
        "key_rate": repr(spec.key_rate),
        "threshold": repr(spec.threshold),
        "capacity": str(spec.capacity),
    }
    parser["network"] = {
        "n_hidden": str(spec.n_hidden),
        "n_hidden_equiv": str(spec.n_hidden_equiv),
    }
    parser["controller"] = {
        "kind": spec.controller,
        "key": spec.key_design,
        "realloc": spec.reallocation,
        "sharpness": repr(spec.sharpness),
    }
    if spec.x0 is not None or spec.xdot0 is not None:
        sec = {}
        if spec.x0 is not None:
            sec["x"] = f"{spec.x0[0]!r} {spec.x0[1]!r}"
        if spec.xdot0 is not None:
            sec["xdot"] = f"{spec.xdot0[0]!r} {spec.xdot0[1]!r}"
        parser["initial"] = sec
    with open(path, "w") as fh:
        parser.write(fh)


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    """Plain-JSON echo of a fully-resolved scenario (for run summaries)."""
    return {
        "id": spec.id,
        "m1": spec.m1, "m2": spec.m2, "l1": spec.l1, "l2": spec.l2,
        "ref1": {"offset": spec.ref1.offset, "amplitude": spec.ref1.amplitude,
                 "omega": spec.ref1.omega},
        "ref2": {"offset": spec.ref2.offset, "amplitude": spec.ref2.amplitude,
                 "omega": spec.ref2.omega},
        "jumps": [
            {"time": ev.time, "kind": ev.kind, "factor": ev.factor,
             "dm_squared": list(ev.dm_squared)} for ev in spec.jumps
        ],
        "gains": {
            "Kv": spec.gains.Kv.tolist(),
            "Lambda": spec.gains.Lambda.tolist(),
            "k_robust": spec.gains.k_robust,
            "kappa": spec.gains.kappa,
            "Cw": spec.gains.Cw,
            "Cv": spec.gains.Cv,
            "Zm": spec.gains.Zm,
        },
        "write_gain": spec.write_gain,
        "key_rate": spec.key_rate,
        "threshold": spec.threshold,
        "capacity": spec.capacity,
        "n_hidden": spec.n_hidden,
        "n_hidden_equiv": spec.n_hidden_equiv,
        "controller": spec.controller,
        "key_design": spec.key_design,
        "reallocation": spec.reallocation,
        "sharpness": spec.sharpness,
        "duration": spec.duration,
        "seed": spec.seed,
        "x0": list(spec.x0) if spec.x0 is not None else None,
        "xdot0": list(spec.xdot0) if spec.xdot0 is not None else None,
    }
