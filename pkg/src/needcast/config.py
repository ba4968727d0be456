"""Pipeline configuration: flat `key = value` text files.

CLI flags override file values; the NEEDCAST_CONFIG environment variable
supplies the file path when --config is not given. Relative paths inside
the file resolve against the file's own directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import DataError

_PATH_KEYS = {
    "taxonomy",
    "venues",
    "checkins",
    "suggestions_snapshot",
    "synonyms",
    "temporal_votes",
    "judgments",
    "gazetteer",
    "label_overrides",
    "out_dir",
}


@dataclass
class PipelineConfig:
    # inputs
    taxonomy: str = "taxonomy.tsv"
    venues: str = "venues.tsv"
    checkins: str = "checkins.tsv"
    suggestions_snapshot: str = "suggestions_snapshot.tsv"
    synonyms: str = "synonyms_input.jsonl"
    temporal_votes: str = "temporal_votes.tsv"
    judgments: str = "judgments.tsv"
    gazetteer: str = ""
    label_overrides: str = ""
    suggestions_url: str = ""
    # outputs (under out_dir)
    out_dir: str = "out"
    # knobs
    max_gap_hours: float = 6.0
    dedup_window_minutes: float = 10.0
    train_fraction: float = 0.8
    top_venues: int = 200
    dashboard_k: int = 3
    ndcg_ks: tuple[int, ...] = (3, 5)
    smoothing: str = "off"
    gamma: str = "auto"
    density_min: float = 0.5
    cp_min: float = 0.5
    top_terms: int = 100
    rate_limit: float = 0.0
    fetch_retries: int = 2
    countries: tuple[str, ...] = ()
    eval_transitions: int = 100
    candidate_needs: int = 10
    figures: bool = True
    base_dir: Path = field(default_factory=Path)

    def path(self, key: str) -> Path:
        value = getattr(self, key)
        if not value:
            raise DataError(f"config key {key} is not set")
        return (self.base_dir / value).resolve()

    def out_path(self, name: str) -> Path:
        return (self.base_dir / self.out_dir / name).resolve()

    def gamma_value(self) -> float | None:
        """Fixed gamma, or None when it should be estimated from the votes."""
        if self.gamma == "auto":
            return None
        return float(self.gamma)

    def validate(self) -> None:
        def require(cond: bool, message: str):
            if not cond:
                raise DataError(f"config: {message}")

        require(self.max_gap_hours > 0, "max_gap_hours must be positive")
        require(self.dedup_window_minutes > 0, "dedup_window_minutes must be positive")
        require(0 < self.train_fraction < 1, "train_fraction must be in (0,1)")
        require(self.top_venues >= 1, "top_venues must be >= 1")
        require(self.dashboard_k >= 1, "dashboard_k must be >= 1")
        require(
            bool(self.ndcg_ks) and all(k >= 1 for k in self.ndcg_ks),
            "ndcg_ks must be positive integers",
        )
        require(
            self.smoothing in ("off", "paper", "standard"),
            "smoothing must be off, paper, or standard",
        )
        if self.gamma != "auto":
            try:
                g = float(self.gamma)
            except ValueError:
                raise DataError("config: gamma must be 'auto' or a number") from None
            require(0 <= g <= 1, "gamma must be in [0,1]")
        require(0 < self.density_min <= 1, "density_min must be in (0,1]")
        require(0 < self.cp_min <= 1, "cp_min must be in (0,1]")
        require(self.top_terms >= 1, "top_terms must be >= 1")
        require(self.rate_limit >= 0, "rate_limit must be >= 0")
        require(self.fetch_retries >= 0, "fetch_retries must be >= 0")
        require(self.eval_transitions >= 1, "eval_transitions must be >= 1")
        require(self.candidate_needs >= 1, "candidate_needs must be >= 1")


def _coerce(key: str, raw: str, kind):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.lower()
            if lowered in ("1", "true", "on", "yes"):
                return True
            if lowered in ("0", "false", "off", "no"):
                return False
            raise ValueError(raw)
        if kind == "ints":
            return tuple(int(part) for part in raw.split(",") if part.strip())
        if kind == "strs":
            return tuple(part.strip() for part in raw.split(",") if part.strip())
    except ValueError:
        raise DataError(f"config: bad value for {key}: {raw!r}") from None
    return raw


_KINDS = {
    "max_gap_hours": "float",
    "dedup_window_minutes": "float",
    "train_fraction": "float",
    "top_venues": "int",
    "dashboard_k": "int",
    "ndcg_ks": "ints",
    "density_min": "float",
    "cp_min": "float",
    "top_terms": "int",
    "rate_limit": "float",
    "fetch_retries": "int",
    "countries": "strs",
    "eval_transitions": "int",
    "candidate_needs": "int",
    "figures": "bool",
}


def load_config(path: str | Path | None = None) -> PipelineConfig:
    if path is None:
        path = os.environ.get("NEEDCAST_CONFIG")
    if path is None:
        raise DataError("no config file: pass --config or set NEEDCAST_CONFIG")
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing config file: {path}")
    known = {f.name for f in fields(PipelineConfig)} - {"base_dir"}
    cfg = PipelineConfig(base_dir=path.parent.resolve())
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}:{line_no}: expected key = value")
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in known:
                raise DataError(f"{path}:{line_no}: unknown config key {key!r}")
            setattr(cfg, key, _coerce(key, raw, _KINDS.get(key)))
    cfg.validate()
    return cfg
