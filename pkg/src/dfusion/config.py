"""Flat key-value experiment configuration.

Format: one ``key = value`` pair per line, ``#`` comments, blank lines
ignored.  List-valued keys take comma-separated entries.  Unknown keys and
out-of-range values are reported with their line number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .protocols import LocalSensor, PowerConstraint, ProtocolKind


class ConfigError(Exception):
    pass


_KNOWN_KEYS = {
    "protocols", "K", "N", "snr_db", "constraint", "engine", "trials",
    "nodes", "p_f", "p_d", "p_0", "seed", "grid_points", "output_dir",
    "workers",
}


@dataclass(frozen=True)
class ScenarioRequest:
    """One cell of the experiment grid, identified by a stable id used in
    file names and CSV rows."""

    kind: ProtocolKind
    K: int
    N: int
    snr_db: float
    constraint: PowerConstraint

    @property
    def scenario_id(self) -> str:
        return (f"{self.kind.value}_K{self.K}_N{self.N}"
                f"_snr{self.snr_db:g}dB_{self.constraint.value}")

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)


@dataclass
class ExperimentConfig:
    protocols: list = field(default_factory=lambda: list(ProtocolKind))
    K_values: list = field(default_factory=lambda: [2])
    N_values: list = field(default_factory=lambda: [2])
    snr_db_values: list = field(default_factory=lambda: [0.0, 10.0])
    constraints: list = field(
        default_factory=lambda: [PowerConstraint.UNIT_POWER])
    engine: str = "both"
    trials: int = 100_000
    nodes: int = 500
    p_f: float = 0.05
    p_d: float = 0.5
    p_0: float = 0.5
    seed: int = 12345
    grid_points: int = 31
    output_dir: str = "out"
    workers: int = 1

    @property
    def sensor(self) -> LocalSensor:
        return LocalSensor(p_f=self.p_f, p_d=self.p_d,
                           p_0=self.p_0, p_1=1.0 - self.p_0)

    def scenarios(self) -> list[ScenarioRequest]:
        return [ScenarioRequest(kind, K, N, snr_db, con)
                for kind in self.protocols
                for K in self.K_values
                for N in self.N_values
                for snr_db in self.snr_db_values
                for con in self.constraints]


def _parse_value(key: str, value: str, lineno: int):
    def bad(msg):
        return ConfigError(f"line {lineno}: {msg}")

    try:
        if key == "protocols":
            return [ProtocolKind(v.strip().upper())
                    for v in value.split(",") if v.strip()]
        if key in ("K", "N"):
            vals = [int(v) for v in value.split(",") if v.strip()]
            if any(v < 1 for v in vals):
                raise bad(f"{key} entries must be >= 1 (got {vals})")
            return vals
        if key == "snr_db":
            return [float(v) for v in value.split(",") if v.strip()]
        if key == "constraint":
            out = []
            for v in value.split(","):
                v = v.strip().lower()
                if v == "both":
                    out.extend([PowerConstraint.UNIT_POWER,
                                PowerConstraint.UNIT_ENERGY])
                else:
                    out.append(PowerConstraint(v))
            return out
        if key == "engine":
            v = value.strip().lower()
            if v not in ("mc", "analytic", "both"):
                raise bad(f"engine must be mc|analytic|both (got {v!r})")
            return v
        if key in ("trials", "nodes", "seed", "grid_points", "workers"):
            n = int(value)
            if key != "seed" and n < 1:
                raise bad(f"{key} must be >= 1 (got {n})")
            return n
        if key in ("p_f", "p_d", "p_0"):
            p = float(value)
            if not 0.0 <= p <= 1.0:
                raise bad(f"{key}={p} outside [0, 1]")
            return p
        if key == "output_dir":
            return value.strip()
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise bad(f"cannot parse {key} from {value!r}: {exc}") from exc
    raise AssertionError(key)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document; missing keys take the
    defaults (trials=100000, nodes=500, p_f=0.05, p_d=0.5, ...)."""
    config = ExperimentConfig()
    field_map = {"protocols": "protocols", "K": "K_values", "N": "N_values",
                 "snr_db": "snr_db_values", "constraint": "constraints",
                 "engine": "engine", "trials": "trials", "nodes": "nodes",
                 "p_f": "p_f", "p_d": "p_d", "p_0": "p_0", "seed": "seed",
                 "grid_points": "grid_points", "output_dir": "output_dir",
                 "workers": "workers"}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {body!r}")
        key, _, value = body.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        setattr(config, field_map[key], _parse_value(key, value.strip(),
                                                     lineno))
    if config.nodes % 2:
        raise ConfigError("nodes must be even")
    if not config.scenarios():
        raise ConfigError("configuration yields no scenarios")
    return config
