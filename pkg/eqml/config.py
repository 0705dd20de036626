"""
Config loader - defaults come from the environment / .env file,
per-run settings come from CLI flags or a key=value config file.
Keeps all the knobs in one place.
"""

import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()

DecoderName = Literal["ms", "spa", "abp-nws", "eqml-ews", "sms"]
StopRule = Literal["lds", "pps"]
MetricName = Literal["correlation", "literal", "euclidean"]
Modulation = Literal["bpsk", "qpsk"]
EncodeMode = Literal["zero", "random"]

# Stop rule used when a run does not name one
DEFAULT_STOP_RULE: Dict[str, StopRule] = {
    "abp-nws": "lds",
    "eqml-ews": "pps",
    "sms": "lds",
    "ms": "lds",
    "spa": "lds",
}


class Settings(BaseSettings):
    """Library-wide defaults, overridable with EQML_* environment variables"""

    model_config = SettingsConfigDict(env_prefix="EQML_", env_file=".env", extra="ignore")

    # Decoder defaults
    alpha: float = 1000.0
    i_max: int = 30
    j_max: int = 4
    # largest j_max a run may ask for; LDS runs 2^(j_max+1) - 2 tests
    j_max_limit: int = 10
    normalization: float = 1.0

    # Monte Carlo stopping
    min_frames: int = 10_000
    max_frame_errors: int = 100
    max_frames: int = 1_000_000
    batch_frames: int = 100

    seed: int = 2024
    workers: int = 1

    # Exhaustive ML is refused above this dimension
    oracle_max_dimension: int = 20

    code_file: str = "codes/ldpc_96_48.alist"
    # the decode API only loads alist files from here
    codes_dir: Path = Path(__file__).resolve().parent.parent / "codes"
    log_level: str = "INFO"

    # Decode service
    api_host: str = "0.0.0.0"
    api_port: int = 8000


settings = Settings()


def parse_ebn0(value: Union[str, float, List[float]]) -> List[float]:
    """
    Turns an Eb/N0 value into a list of points.
    Accepts "a:b:step" (b included), "1,2,3", a single number or a list.
    """
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        return [float(x) for x in value]

    text = value.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"Eb/N0 range must look like a:b:step, got {value!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError(f"Eb/N0 step must be positive, got {step}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(max(count, 0))]

    return [float(x) for x in text.replace(" ", "").split(",") if x]


class RunConfig(BaseModel):
    """Everything one simulate / decode / oracle-compare run needs"""

    model_config = ConfigDict(extra="forbid")

    code: str = Field(default_factory=lambda: settings.code_file)
    puncture: Optional[str] = None
    decoder: DecoderName = "eqml-ews"
    stop_rule: Optional[StopRule] = None
    j_max: int = Field(default_factory=lambda: settings.j_max, ge=1, le=settings.j_max_limit)
    i_max: int = Field(default_factory=lambda: settings.i_max, ge=1)
    i_j: Optional[List[int]] = None
    normalization: float = Field(default_factory=lambda: settings.normalization, gt=0.0, le=1.0)
    alpha: float = Field(default_factory=lambda: settings.alpha, gt=0.0)
    metric: MetricName = "correlation"
    modulation: Modulation = "bpsk"
    ebn0: List[float] = Field(default_factory=lambda: [3.0])
    min_frames: int = Field(default_factory=lambda: settings.min_frames, ge=1)
    max_frame_errors: int = Field(default_factory=lambda: settings.max_frame_errors, ge=1)
    max_frames: int = Field(default_factory=lambda: settings.max_frames, ge=1)
    batch_frames: int = Field(default_factory=lambda: settings.batch_frames, ge=1)
    seed: int = Field(default_factory=lambda: settings.seed, ge=0)
    workers: int = Field(default_factory=lambda: settings.workers, ge=1)
    encode: EncodeMode = "zero"
    budget_fair: bool = False
    out: Optional[str] = None

    @field_validator("ebn0", mode="before")
    @classmethod
    def _expand_ebn0(cls, value: Any) -> List[float]:
        return parse_ebn0(value)

    @field_validator("i_j", mode="before")
    @classmethod
    def _split_i_j(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [int(x) for x in value.replace(" ", "").split(",") if x]
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> "RunConfig":
        if self.stop_rule is None:
            self.stop_rule = DEFAULT_STOP_RULE[self.decoder]
        if self.i_j is not None:
            if len(self.i_j) != self.j_max:
                raise ValueError(f"i_j needs {self.j_max} entries (one per stage), got {len(self.i_j)}")
            if any(budget < 1 for budget in self.i_j):
                raise ValueError("every i_j entry must be >= 1")
        if self.max_frames < self.min_frames:
            raise ValueError("max_frames must be >= min_frames")
        return self

    @property
    def is_baseline(self) -> bool:
        return self.decoder in ("ms", "spa")

    @property
    def baseline_max_iters(self) -> int:
        """Iteration cap for plain BP: the whole reprocessing budget when budget-fair"""
        if self.budget_fair:
            return (2 ** (self.j_max + 1) - 1) * self.i_max
        return self.i_max

    @property
    def stage_budgets(self) -> List[int]:
        return list(self.i_j) if self.i_j is not None else [self.i_max] * self.j_max


# CLI flag spellings of RunConfig fields
FLAG_ALIASES = {"jmax": "j_max", "imax": "i_max", "ij": "i_j"}


def load_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """
    Reads a flat key=value file. '#' starts a comment, dashes in keys
    become underscores so the keys can mirror the CLI flags.
    """
    values: Dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def build_run_config(file_values: Optional[Dict[str, Any]] = None, **overrides: Any) -> RunConfig:
    """Config file first, then explicit overrides (CLI flags win). None means 'not given'."""
    merged: Dict[str, Any] = dict(file_values or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    for alias, name in FLAG_ALIASES.items():
        if merged.get(alias) is not None:
            merged[name] = merged.pop(alias)
    return RunConfig(**merged)


def setup_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
