"""Scenario files: a strict, versioned JSON description of one simulation run."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SCENARIO_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ObstacleConfig(_Strict):
    a: tuple[float, float]
    b: tuple[float, float]
    reflectivity: float = Field(1.0, ge=0.0, le=1.0)


class SendConfig(_Strict):
    """A message the robot starts with."""

    data: int = Field(ge=0, le=255)
    mode: Literal["confirm", "repeat"] = "confirm"
    repeats: int = Field(100, ge=1)
    deadline_ms: Optional[float] = Field(None, gt=0.0)


class RobotConfig(_Strict):
    id: int = Field(ge=0)
    x: float
    y: float
    heading: float = 0.0
    board: Literal["ideal", "v1", "v2", "v3"] = "ideal"
    wobble_deg: float = Field(0.0, ge=0.0, le=180.0)
    resend_ms: tuple[float, float] = (10.0, 100.0)
    listen_mode: Literal["window", "sweep"] = "window"
    relay: Optional[Literal["repeat", "confirm"]] = None
    relay_repeats: int = Field(100, ge=1)
    proximity: bool = False
    send: Optional[SendConfig] = None

    @field_validator("resend_ms")
    @classmethod
    def _resend(cls, v):
        lo, hi = v
        if not 10.0 <= lo <= hi <= 150.0:
            raise ValueError("resend interval must satisfy 10 <= lo <= hi <= 150 ms")
        return v


class CalibrationConfig(_Strict):
    v_ref: float = Field(0.75, gt=0.0)
    decay_exponent: float = Field(4.0, gt=0.0)
    detect_threshold: Optional[float] = Field(None, gt=0.0)
    tolerance_ms: float = Field(0.2, gt=0.0, lt=0.25)


class ScenarioConfig(_Strict):
    version: Literal[1] = SCENARIO_VERSION
    seed: int
    duration_ms: float = Field(gt=0.0, le=3.6e6)
    arena: tuple[float, float, float, float] = (-1000.0, -1000.0, 1000.0, 1000.0)
    obstacles: list[ObstacleConfig] = []
    robots: list[RobotConfig] = []
    robot_count: Optional[int] = Field(None, ge=0)
    trace: Literal["full", "events", "none"] = "full"
    calibration: CalibrationConfig = CalibrationConfig()
    stop_when: Optional[Literal["all_received", "contact"]] = None

    @model_validator(mode="after")
    def _consistent(self):
        xmin, ymin, xmax, ymax = self.arena
        if not (xmin < xmax and ymin < ymax):
            raise ValueError("arena: bounds must describe a non-empty rectangle")
        ids = [r.id for r in self.robots]
        if len(set(ids)) != len(ids):
            raise ValueError("robots: ids must be unique")
        if self.robot_count is not None and self.robot_count != len(self.robots):
            raise ValueError(f"robot_count: {self.robot_count} does not match {len(self.robots)} robots")
        for r in self.robots:
            if not (xmin <= r.x <= xmax and ymin <= r.y <= ymax):
                raise ValueError(f"robots[{r.id}]: position lies outside the arena")
        return self


def load_scenario(path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text())


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and validate; errors carry the offending field path."""
    return ScenarioConfig.model_validate(json.loads(text))
