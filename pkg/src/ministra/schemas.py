# In src/ministra/schemas.py

from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

FORMAT_VERSION = "1.0"

# --- Run options (built from CLI arguments) ---


class SteinerOptions(BaseModel):
    positions: Path
    unit_res_x: float = Field(0.0, ge=0.0)
    unit_res_y: float = Field(0.0, ge=0.0)
    unit_cap_x: float = Field(0.0, ge=0.0)
    unit_cap_y: float = Field(0.0, ge=0.0)


class ReportOptions(BaseModel):
    k: int = Field(1, ge=1)
    nworst: int = Field(1, ge=1)
    slack_lt: float | None = None
    mode: Literal["setup", "hold"] = "setup"


class RunConfig(BaseModel):
    """
    Pydantic model for one engine run. Validation enforces that exactly one
    netlist source and at most one parasitics source are given.
    """

    model_config = ConfigDict(frozen=True)

    libs: list[Path] = Field(..., min_length=1)
    verilog: Path | None = None
    top: str | None = None
    netlist_bundle: Path | None = None
    spef: Path | None = None
    rc_bundle: Path | None = None
    steiner: SteinerOptions | None = None
    sdc: Path | None = None
    sdf_in: Path | None = None
    model: Literal["elmore", "arnoldi"] = "elmore"
    arnoldi_order: int | None = Field(None, ge=1)
    threads: int = Field(1, ge=1)

    write_sdf: Path | None = None
    report_timing: ReportOptions | None = None
    slack_csv: Path | None = None
    export_arrays: Path | None = None
    write_netlist_bundle: Path | None = None
    write_rc_bundle: Path | None = None

    @field_validator("top")
    @classmethod
    def _top_not_blank(cls, value: str | None) -> str | None:
        if value is not None and not value.strip():
            raise ValueError("--top must not be empty")
        return value

    @model_validator(mode="after")
    def _check_sources(self) -> "RunConfig":
        netlist_sources = [s for s in (self.verilog, self.netlist_bundle) if s is not None]
        if len(netlist_sources) != 1:
            raise ValueError("exactly one of --verilog or --netlist-bundle is required")
        if self.top is not None and self.verilog is None:
            raise ValueError("--top is only meaningful with --verilog")
        rc_sources = [s for s in (self.spef, self.rc_bundle, self.steiner) if s is not None]
        if len(rc_sources) > 1:
            raise ValueError("at most one of --spef, --rc-bundle or --steiner may be given")
        if self.arnoldi_order is not None and self.model != "arnoldi":
            raise ValueError("an Arnoldi order is only valid with --model arnoldi")
        return self


# --- Flat bundle manifest ---


class ArrayEntry(BaseModel):
    file: str = Field(..., min_length=1)
    dtype: Literal["<u4", "<f8", "u1"]
    length: int = Field(..., ge=0)

    @field_validator("file")
    @classmethod
    def _plain_file_name(cls, value: str) -> str:
        # Bundle members live next to the manifest; no path components.
        if "/" in value or "\\" in value or value in (".", ".."):
            raise ValueError(f"bundle file name must be a bare name, got {value!r}")
        return value


class ArrayManifest(BaseModel):
    """Describes one on-disk flat bundle (``manifest.json`` + ``.bin`` files)."""

    format_version: str
    kind: Literal["netlist", "rc", "timing"]
    units: dict[str, str] = Field(default_factory=dict)
    counts: dict[str, int] = Field(default_factory=dict)
    arrays: dict[str, ArrayEntry] = Field(default_factory=dict)
    names: list[str] | None = None
