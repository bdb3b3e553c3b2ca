"""Flat ``key = value`` run configuration shared by the command-line tools."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from .lattice import (ConstantPotential, LatticeSpec, LinearPotential, Potentials, SpinorField, ZeroPotential,
                      gaussian_packet, load_snapshot, make_lattice, normalize, random_field)
from .splitting import SplittingScheme, scheme_second_order, scheme_third_order


class ConfigError(ValueError):
    pass


def _floats(text: str, n: int) -> tuple[float, ...]:
    vals = tuple(float(v) for v in text.replace(";", ",").split(","))
    if len(vals) != n:
        raise ConfigError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _complexes(text: str, n: int) -> tuple[complex, ...]:
    vals = tuple(complex(v.strip().replace(" ", "")) for v in text.split(","))
    if len(vals) != n:
        raise ConfigError(f"expected {n} comma-separated amplitudes, got {text!r}")
    return vals


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


POTENTIAL_KINDS = ("zero", "constant", "linear")
INITIAL_KINDS = ("gaussian", "uniform", "random", "snapshot")


@dataclass
class RunConfig:
    n_x: int = 5
    n_y: int = 0
    n_z: int = 0
    ell: float = 0.1
    n_star: Fraction = Fraction(1)
    c: float = 1.0
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mass: float = 0.0
    charge: float = -1.0
    order: int = 2
    potential: str = "zero"
    potential_value: float = 0.0
    efield: tuple[float, float, float] = (0.0, 0.0, 0.0)
    vector_potential: tuple[float, float, float] = (0.0, 0.0, 0.0)
    initial: str = "gaussian"
    spinor: tuple[complex, ...] = (1, 0, 0, 0)
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    width: float = 0.3
    momentum: tuple[float, float, float] = (0.0, 0.0, 0.0)
    snapshot: str = ""
    seed: int = 0
    reduced_1d: bool = False
    source: list[tuple[str, str]] = field(default_factory=list, repr=False)

    # ---------------------------------------------------------------- parsing

    @classmethod
    def from_text(cls, text: str) -> RunConfig:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        parser.optionxform = str
        try:
            parser.read_string("[run]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        cfg = cls()
        known = {f.name for f in fields(cls)} - {"source"}
        for key, raw in parser.items("run"):
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            cfg._set(key, raw.strip())
            cfg.source.append((key, raw.strip()))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> RunConfig:
        return cls.from_text(Path(path).read_text())

    def _set(self, key: str, raw: str) -> None:
        try:
            if key in ("n_x", "n_y", "n_z", "order", "seed"):
                value = int(raw)
            elif key == "n_star":
                value = Fraction(raw)
            elif key in ("origin", "efield", "vector_potential", "center", "momentum"):
                value = _floats(raw, 3)
            elif key == "spinor":
                value = _complexes(raw, 4)
            elif key == "reduced_1d":
                value = _bool(raw)
            elif key in ("potential", "initial", "snapshot"):
                value = raw.lower() if key != "snapshot" else raw
            else:
                value = float(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
        setattr(self, key, value)

    def validate(self) -> None:
        if self.potential not in POTENTIAL_KINDS:
            raise ConfigError(f"unsupported potential kind {self.potential!r}; choose from {POTENTIAL_KINDS}")
        if self.initial not in INITIAL_KINDS:
            raise ConfigError(f"unsupported initial state {self.initial!r}; choose from {INITIAL_KINDS}")
        if self.order not in (2, 3):
            raise ConfigError(f"order must be 2 or 3, got {self.order}")
        if self.initial == "snapshot" and not self.snapshot:
            raise ConfigError("initial = snapshot needs a snapshot path")
        # raises LatticeError with a CFL diagnostic for a bad n_star
        self.lattice()

    # ---------------------------------------------------------------- builders

    def lattice(self) -> LatticeSpec:
        return make_lattice(self.n_x, self.n_y, self.n_z, ell=self.ell, n_star=self.n_star,
                            origin=self.origin, c=self.c)

    def potentials(self) -> Potentials:
        scalar = {
            "zero": ZeroPotential,
            "constant": lambda: ConstantPotential(self.potential_value),
            "linear": lambda: LinearPotential(self.efield),
        }[self.potential]()
        a = self.vector_potential if any(self.vector_potential) else None
        return Potentials(mass=self.mass, charge=self.charge, scalar_potential=scalar, vector_potential=a)

    def scheme(self) -> SplittingScheme:
        return scheme_second_order() if self.order == 2 else scheme_third_order()

    def initial_field(self, spec: LatticeSpec | None = None) -> SpinorField:
        spec = spec or self.lattice()
        if self.initial == "snapshot":
            return normalize(load_snapshot(self.snapshot))
        if self.initial == "random":
            comps = [i for i, s in enumerate(self.spinor) if s] or [0, 1, 2, 3]
            return random_field(spec, np.random.default_rng(self.seed), comps)
        if self.initial == "uniform":
            amps = np.broadcast_to(np.asarray(self.spinor, dtype=complex)[:, None, None, None],
                                   (4, *spec.shape)).copy()
            return normalize(SpinorField(spec, amps))
        return gaussian_packet(spec, self.spinor, self.center, self.width, self.momentum)

    def echo(self) -> list[str]:
        """Header lines recording the settings that were read, in file order."""
        return [f"{k}={v}" for k, v in self.source]
