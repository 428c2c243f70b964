"""Rayleigh-fading connection function."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


class UnsupportedExponent(ValueError):
    """Raised when a closed-form predictor is asked for a path-loss exponent other than 2."""


@dataclass(frozen=True)
class ChannelModel:
    beta: float
    eta: float = 2.0

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")

    @property
    def r0(self) -> float:
        """Separation at which the fading exponent equals one."""
        return self.beta ** (-1.0 / self.eta)

    def require_eta2(self) -> None:
        if self.eta != 2.0:
            raise UnsupportedExponent(f"closed forms assume eta = 2, got eta = {self.eta}")

    def to_dict(self) -> dict:
        return {"beta": self.beta, "eta": self.eta}

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelModel":
        extra = set(d) - {"beta", "eta"}
        if extra:
            raise ValueError(f"unknown channel keys: {sorted(extra)}")
        return cls(float(d["beta"]), float(d.get("eta", 2.0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ChannelModel":
        return cls.from_dict(json.loads(text))


def connect_prob(channel: ChannelModel, separation):
    """H(r) = exp(-beta r**eta); accepts scalars or arrays."""
    s = np.asarray(separation, dtype=float)
    if np.any(s < 0):
        raise ValueError("separation must be non-negative")
    out = np.exp(-channel.beta * s**channel.eta)
    return float(out) if out.ndim == 0 else out


def beta_from_link_budget(noise: float, rate_threshold: float, power_constant: float) -> float:
    """beta = N0 (2**rate - 1) / c."""
    if min(noise, rate_threshold, power_constant) <= 0:
        raise ValueError("link budget quantities must be positive")
    return noise * math.expm1(rate_threshold * math.log(2.0)) / power_constant
