"""Scenario configuration and beam history files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .beamstats import BeamHistory, BeamPmf, PmfError, check_partition
from .estimators import STRATEGIES
from .montecarlo import physical_oracle_factory

HISTORY_SCHEMA = 1
ORACLES = ("index", "physical")
FALLBACKS = ("ranked", "ml")


class ConfigError(ValueError):
    """Malformed scenario; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _pmf(value, where: str, prefix: str, base_dir: Path) -> BeamPmf:
    try:
        if isinstance(value, str):
            path = base_dir / value
            value = json.loads(path.read_text())
        if not isinstance(value, dict):
            raise ConfigError(where, "expected an object with 'probs', 'uniform' or a file path")
        if "uniform" in value:
            return BeamPmf.uniform(int(value["uniform"]), prefix)
        if "labels" not in value:
            return BeamPmf.from_probs(value["probs"], prefix)
        return BeamPmf.from_dict(value)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(where, f"cannot read PMF file: {exc}") from exc
    except (PmfError, KeyError, TypeError) as exc:
        raise ConfigError(where, str(exc)) from exc


def _groups(raw, pmf: BeamPmf) -> tuple[tuple[int, ...], ...]:
    try:
        groups = [[pmf.index(b) if isinstance(b, str) else int(b) for b in g] for g in raw]
        return check_partition(groups, len(pmf))
    except (PmfError, TypeError) as exc:
        raise ConfigError("hierarchy.groups", str(exc)) from exc


def _choice(value, allowed, where):
    if value not in allowed:
        raise ConfigError(where, f"must be one of {', '.join(allowed)}; got {value!r}")
    return value


@dataclass
class ScenarioConfig:
    tx_pmf: BeamPmf
    rx_pmf: BeamPmf
    strategy: str = "mars"
    threshold_tx: float = 0.75
    threshold_rx: float = 0.75
    fallback: str = "ranked"
    full_sweep: bool = True
    groups: tuple[tuple[int, ...], ...] | None = None
    num_groups: int | None = None
    oracle: str = "index"
    ntx: int | None = None
    nrx: int | None = None
    spacing: float = 0.5
    detection_threshold: float | None = None
    noise_std: float = 0.0
    n_trials: int = 1_000_000
    seed: int = 42
    compare: tuple[str, ...] = ("exhaustive", "ml", "mars")
    history_enabled: bool = False
    history_path: str = "beam_history.json"
    smoothing: float = 1.0
    name: str = ""
    base_dir: Path = field(default=Path("."), compare=False, repr=False)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | str = ".") -> "ScenarioConfig":
        base_dir = Path(base_dir)
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        for key in ("tx", "rx"):
            if key not in data:
                raise ConfigError(key, "missing")
        tx = _pmf(data["tx"], "tx", "T", base_dir)
        rx = _pmf(data["rx"], "rx", "R", base_dir)
        cfg = cls(tx, rx, base_dir=base_dir, name=str(data.get("name", "")))

        cfg.strategy = _choice(data.get("strategy", "mars"), tuple(STRATEGIES), "strategy")
        th = data.get("thresholds", {})
        try:
            cfg.threshold_tx = float(th.get("tx", 0.75))
            cfg.threshold_rx = float(th.get("rx", 0.75))
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError("thresholds", str(exc)) from exc
        for side, value in (("tx", cfg.threshold_tx), ("rx", cfg.threshold_rx)):
            if not 0.0 < value <= 1.0:
                raise ConfigError(f"thresholds.{side}", f"must lie in (0, 1], got {value}")
        cfg.fallback = _choice(data.get("fallback", "ranked"), FALLBACKS, "fallback")
        cfg.full_sweep = bool(data.get("fullSweep", True))

        hier = data.get("hierarchy")
        if hier is not None:
            if not isinstance(hier, dict):
                raise ConfigError("hierarchy", "expected an object")
            if "groups" in hier:
                cfg.groups = _groups(hier["groups"], tx)
            elif "numGroups" in hier:
                k = hier["numGroups"]
                if not isinstance(k, int) or k < 1 or len(tx) % k:
                    raise ConfigError("hierarchy.numGroups", f"{k!r} does not divide {len(tx)} beams")
                cfg.num_groups = k

        cfg.oracle = _choice(data.get("oracle", "index"), ORACLES, "oracle")
        arrays = data.get("arrays") or {}
        cfg.ntx = arrays.get("ntx")
        cfg.nrx = arrays.get("nrx")
        cfg.spacing = float(arrays.get("spacing", 0.5))
        cfg.detection_threshold = arrays.get("detectionThreshold")
        cfg.noise_std = float(arrays.get("noiseStd", 0.0))
        if cfg.oracle == "physical":
            if cfg.ntx not in (None, len(tx)):
                raise ConfigError("arrays.ntx", f"{cfg.ntx} elements but {len(tx)} Tx beams")
            if cfg.nrx not in (None, len(rx)):
                raise ConfigError("arrays.nrx", f"{cfg.nrx} elements but {len(rx)} Rx beams")

        mc = data.get("mc") or {}
        cfg.n_trials = int(mc.get("nTrials", cfg.n_trials))
        cfg.seed = int(mc.get("seed", cfg.seed))
        if cfg.n_trials < 1:
            raise ConfigError("mc.nTrials", "must be at least 1")
        compare = tuple(data.get("compare", cfg.compare))
        for i, s in enumerate(compare):
            _choice(s, tuple(STRATEGIES), f"compare[{i}]")
        cfg.compare = compare

        hist = data.get("history") or {}
        cfg.history_enabled = bool(hist.get("enabled", False))
        cfg.history_path = str(hist.get("path", cfg.history_path))
        cfg.smoothing = float(hist.get("smoothing", 1.0))
        if cfg.smoothing < 0:
            raise ConfigError("history.smoothing", "must be non-negative")
        return cfg

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "tx": self.tx_pmf.to_dict(),
            "rx": self.rx_pmf.to_dict(),
            "strategy": self.strategy,
            "thresholds": {"tx": self.threshold_tx, "rx": self.threshold_rx},
            "fallback": self.fallback,
            "fullSweep": self.full_sweep,
            "oracle": self.oracle,
            "arrays": {"ntx": self.ntx, "nrx": self.nrx, "spacing": self.spacing,
                       "detectionThreshold": self.detection_threshold, "noiseStd": self.noise_std},
            "mc": {"nTrials": self.n_trials, "seed": self.seed},
            "compare": list(self.compare),
            "history": {"enabled": self.history_enabled, "path": self.history_path,
                        "smoothing": self.smoothing},
        }
        if self.groups is not None:
            d["hierarchy"] = {"groups": [list(g) for g in self.groups]}
        elif self.num_groups is not None:
            d["hierarchy"] = {"numGroups": self.num_groups}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def resolve(self, path: str) -> Path:
        return self.base_dir / path

    def build_strategy(self, name: str | None = None):
        """Estimator for ``name`` (default: the configured strategy), fitted."""
        name = name or self.strategy
        if name == "exhaustive":
            est = STRATEGIES[name](full_sweep=self.full_sweep)
        elif name == "ml":
            est = STRATEGIES[name](tx_groups=self.num_groups or "auto")
        elif name == "mars":
            est = STRATEGIES[name](threshold_tx=self.threshold_tx, threshold_rx=self.threshold_rx,
                                   fallback=self.fallback, fallback_groups=self.num_groups)
        else:
            est = STRATEGIES[name](groups=self.groups, n_groups=self.num_groups or "auto")
        return est.fit(tx_pmf=self.tx_pmf, rx_pmf=self.rx_pmf)

    def oracle_factory(self):
        if self.oracle == "index":
            return None
        return physical_oracle_factory(len(self.tx_pmf), len(self.rx_pmf), self.spacing,
                                       self.detection_threshold, self.noise_std)


def bundled_fixture(name: str) -> Path | None:
    stem = name[:-5] if name.endswith(".json") else name
    path = resources.files("beamtrain") / "fixtures" / f"{stem}.json"
    return Path(str(path)) if path.is_file() else None


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a scenario; a bare fixture name ("table_i_ii") selects a bundled one."""
    path = Path(path)
    if not path.exists():
        fixture = bundled_fixture(str(path))
        if fixture is None:
            raise ConfigError("--config", f"no such file: {path}")
        path = fixture
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    return ScenarioConfig.from_dict(data, base_dir=path.parent)


def save_history(path: str | Path, history: BeamHistory) -> None:
    doc = {
        "schemaVersion": HISTORY_SCHEMA,
        "txCounts": list(history.tx_counts),
        "rxCounts": list(history.rx_counts),
        "total": history.total,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_history(path: str | Path) -> BeamHistory:
    doc = json.loads(Path(path).read_text())
    version = doc.get("schemaVersion")
    if version != HISTORY_SCHEMA:
        raise ConfigError("schemaVersion", f"unsupported history schema {version!r}")
    try:
        return BeamHistory(tuple(doc["txCounts"]), tuple(doc["rxCounts"]), int(doc["total"]))
    except (KeyError, PmfError) as exc:
        raise ConfigError("history", str(exc)) from exc
