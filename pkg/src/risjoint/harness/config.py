"""Experiment configuration and its flat key/value file format.

A config document looks like::

    risjoint-config 1
    # comments and blank lines are ignored
    name = fig3
    K = 32
    snr_grid_db = 0, 5, 10, 15, 20, 25, 30
    methods = proposed, lskrf, genie_ls
    sweep = beta: 0.1, 0.2, 0.3, 0.5

The first meaningful line is the versioned header. Keys are listed in
``KEYS``; anything else is rejected. ``inf`` is accepted in the SNR grid
and means a noiseless grid point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from ..ambiguity import ALIGN_MODES, DEFAULT_FLOOR_DB
from ..bigamp import BigAmpOptions
from ..errors import ConfigError
from ..parafac import AlsOptions
from ..scene import SceneConfig

HEADER = "risjoint-config"
FORMAT_VERSION = 1
METHODS = ("proposed", "lskrf", "genie_ls")
SWEEPABLE = ("K", "M", "N", "T", "P", "beta", "pilot_len")
# Undamped BiG-AMP diverges on a few percent of noisy trials, and each such
# trial dominates a linear-NMSE average. With 0.3 damping runs take 150-500
# iterations.
HARNESS_BIGAMP = BigAmpOptions(i_max=1000, damping=0.3)


@dataclass(frozen=True)
class ExperimentConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    snr_grid_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    trials: int = 500
    methods: tuple = METHODS
    als_opts: AlsOptions = field(default_factory=AlsOptions)
    bigamp_opts: BigAmpOptions = HARNESS_BIGAMP
    alignment_mode: str = "diagonal_ls"
    master_seed: int = 0
    output_path: str | None = None
    name: str = "experiment"
    floor_db: float = DEFAULT_FLOOR_DB
    record_timing: bool = False
    sweep: tuple | None = None  # (scene field, values)

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db must not be empty")
        if any(math.isnan(s) or s == -math.inf for s in self.snr_grid_db):
            raise ConfigError("SNR grid entries must be finite or +inf")
        if not self.methods:
            raise ConfigError("methods must not be empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods: {', '.join(bad)}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods must be distinct")
        if self.alignment_mode not in ALIGN_MODES:
            raise ConfigError(f"alignment must be one of {ALIGN_MODES}")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be non-negative")
        if self.sweep is not None:
            key, values = self.sweep
            if key not in SWEEPABLE:
                raise ConfigError(f"cannot sweep over {key!r}")
            if not values:
                raise ConfigError("sweep needs at least one value")
            object.__setattr__(self, "sweep", (key, tuple(values)))
            for v in values:
                _build_scene(self.scene, key, v)

    def variants(self):
        """``[(label, config)]``: one entry, or one per sweep value."""
        if self.sweep is None:
            return [("", self)]
        key, values = self.sweep
        out = []
        for v in values:
            scene = _build_scene(self.scene, key, v)
            out.append((f"{key}={_fmt(v)}", replace(self, scene=scene, sweep=None)))
        return out


def _build_scene(scene, key, value):
    changes = {key: value}
    if key == "M" and scene.pilot_len == scene.M:
        changes["pilot_len"] = value  # pilots track M
    try:
        return replace(scene, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sweep value {key}={value}: {exc}") from exc


def _fmt(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _ints(text):
    return int(text)


def _float(text):
    return float(text)


def _bool(text):
    t = text.lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(conv):
    def parse(text):
        return tuple(conv(p.strip()) for p in text.split(",") if p.strip())
    return parse


def _str(text):
    return text


# key -> (section, attribute, parser)
KEYS = {
    "name": ("", "name", _str),
    "K": ("scene", "K", _ints),
    "M": ("scene", "M", _ints),
    "N": ("scene", "N", _ints),
    "T": ("scene", "T", _ints),
    "P": ("scene", "P", _ints),
    "beta": ("scene", "beta", _float),
    "pilot_len": ("scene", "pilot_len", _ints),
    "sigma_x2": ("scene", "sigma_x2", _float),
    "sigma_h2": ("scene", "sigma_h2", _float),
    "snr_grid_db": ("", "snr_grid_db", _list(_float)),
    "trials": ("", "trials", _ints),
    "methods": ("", "methods", _list(str)),
    "master_seed": ("", "master_seed", _ints),
    "alignment": ("", "alignment_mode", _str),
    "floor_db": ("", "floor_db", _float),
    "record_timing": ("", "record_timing", _bool),
    "output": ("", "output_path", _str),
    "als_epsilon": ("als", "epsilon", _float),
    "als_i_max": ("als", "i_max", _ints),
    "als_init": ("als", "init_mode", _str),
    "bigamp_i_max": ("bigamp", "i_max", _ints),
    "bigamp_epsilon": ("bigamp", "epsilon", _float),
    "bigamp_damping": ("bigamp", "damping", _float),
    "bigamp_noise_var": ("bigamp", "assumed_noise_var", _float),
    "bigamp_burn_in": ("bigamp", "divergence_burn_in", _ints),
    "sweep": ("", "sweep", None),
}


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse a config document; keys not present keep ``base``'s values."""
    base = base or ExperimentConfig()
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))
    if not lines:
        raise ConfigError("empty config document")
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != HEADER:
        raise ConfigError(f"line {lineno}: expected header '{HEADER} {FORMAT_VERSION}'")
    if parts[1] != str(FORMAT_VERSION):
        raise ConfigError(f"line {lineno}: unsupported config version {parts[1]}")

    sections = {"": {}, "scene": {}, "als": {}, "bigamp": {}}
    seen = set()
    for lineno, line in lines[1:]:
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        section, attr, conv = KEYS[key]
        try:
            parsed = _parse_sweep(value) if key == "sweep" else conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
        sections[section][attr] = parsed

    scene_changes = sections["scene"]
    if "M" in scene_changes and "pilot_len" not in scene_changes \
            and base.scene.pilot_len == base.scene.M:
        scene_changes["pilot_len"] = scene_changes["M"]
    try:
        scene = replace(base.scene, **scene_changes)
        als = replace(base.als_opts, **sections["als"])
        bigamp = replace(base.bigamp_opts, **sections["bigamp"])
        return replace(base, scene=scene, als_opts=als, bigamp_opts=bigamp, **sections[""])
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _parse_sweep(value):
    if ":" not in value:
        raise ValueError("sweep must look like 'key: v1, v2'")
    key, rest = (p.strip() for p in value.split(":", 1))
    conv = _float if key == "beta" else _ints
    return key, _list(conv)(rest)


def load_config(path, base=None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base)


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize ``cfg``; ``parse_config(dump_config(cfg)) == cfg``."""
    lines = [f"{HEADER} {FORMAT_VERSION}"]
    lookup = {"": cfg, "scene": cfg.scene, "als": cfg.als_opts, "bigamp": cfg.bigamp_opts}
    for key, (section, attr, _) in KEYS.items():
        value = getattr(lookup[section], attr)
        if value is None:
            continue
        if key == "sweep":
            text = f"{value[0]}: " + ", ".join(_fmt(v) for v in value[1])
        elif isinstance(value, tuple):
            text = ", ".join(_fmt(v) for v in value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = _fmt(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
