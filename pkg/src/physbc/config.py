"""Run configuration: JSON schema, validation, and case-study presets.

A :class:`RunConfig` pins everything a pipeline run needs: the nominal
physics, the ground-truth deviation used to synthesise data, regions,
sampling, filtering, solver and estimator knobs, and the guarantee mode.
Configs round-trip through JSON so a report can embed its exact inputs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from math import sqrt
from typing import Optional, Union

import numpy as np

from .models import (
    KIND_AFFINE,
    KIND_QUADRATIC,
    PRESET_MODELS,
    PerturbationField,
    RegionBox,
    SystemModel,
)
from .sampling import SCHEME_GRID, SCHEME_IID

MODE_DETERMINISTIC = "deterministic"
MODE_PROBABILISTIC = "probabilistic"


@dataclass(frozen=True)
class SamplingSpec:
    scheme: str = SCHEME_GRID
    count: int = 10_000
    seed: int = 0


@dataclass(frozen=True)
class FilterSpec:
    enabled: bool = True
    threshold: float = 0.005


@dataclass(frozen=True)
class PerturbationSpec:
    """Ground-truth deviation overlaid on the physics when synthesising data.

    ``amplitude = None`` derives sqrt(2) times the filter threshold, which
    makes the sub-threshold fraction of a uniform sample exactly one half
    whenever the sinusoid completes an integer number of cycles over the
    domain.  ``frequency`` is in cycles per unit of state.
    """

    amplitude: Optional[float] = None
    frequency: float = 1250.0
    phase: float = 0.0


@dataclass(frozen=True)
class SolverSpec:
    coeff_bound: Optional[float] = 100.0
    level_gap_row: bool = True
    initial_level: float = 1e-4
    cross_check: bool = False


@dataclass(frozen=True)
class LipschitzSpec:
    method: str = "pairwise-max"
    pair_budget: int = 1_000_000
    multiplier: float = 1.1
    seed: int = 7
    batches: int = 50
    shape: float = 1.0


@dataclass(frozen=True)
class GuaranteeSpec:
    mode: str = MODE_DETERMINISTIC
    risk: float = 0.05  # probabilistic mode only
    decision_count: Optional[int] = None  # None: unsafe level + coefficients + slack


@dataclass(frozen=True)
class ValidationSpec:
    trajectories: int = 1000
    horizon: int = 500
    seed: int = 99


@dataclass(frozen=True)
class RunConfig:
    name: str
    system: Union[str, dict]
    domain: RegionBox
    initial: RegionBox
    unsafe: RegionBox
    template_degree: int = 2
    decay: float = 0.83
    sampling: SamplingSpec = field(default_factory=SamplingSpec)
    filter: FilterSpec = field(default_factory=FilterSpec)
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    lipschitz: LipschitzSpec = field(default_factory=LipschitzSpec)
    guarantee: GuaranteeSpec = field(default_factory=GuaranteeSpec)
    validation: ValidationSpec = field(default_factory=ValidationSpec)
    save_data: bool = True

    def validate(self) -> None:
        if not self.domain.contains_box(self.initial):
            raise ValueError("initial region must be nested in the domain")
        if not self.domain.contains_box(self.unsafe):
            raise ValueError("unsafe region must be nested in the domain")
        if self.sampling.scheme not in (SCHEME_GRID, SCHEME_IID):
            raise ValueError(f"unknown sampling scheme {self.sampling.scheme!r}")
        if self.sampling.count < 2:
            raise ValueError("sample count must be at least 2")
        if not (0.0 < self.decay <= 1.0):
            raise ValueError("decay must lie in (0, 1]")
        if self.filter.enabled and not self.filter.threshold > 0:
            raise ValueError("filter threshold must be positive")
        if self.guarantee.mode not in (MODE_DETERMINISTIC, MODE_PROBABILISTIC):
            raise ValueError(f"unknown guarantee mode {self.guarantee.mode!r}")
        if self.guarantee.mode == MODE_PROBABILISTIC and not (0.0 < self.guarantee.risk < 1.0):
            raise ValueError("risk must lie strictly between 0 and 1")
        if self.template_degree < 0:
            raise ValueError("template degree must be non-negative")
        if not self.solver.initial_level > 0:
            raise ValueError("pinned initial level must be positive")
        self.physics_model()  # raises on malformed custom systems

    # ---- model construction -------------------------------------------------

    def physics_model(self) -> SystemModel:
        """The nominal physics used for filtering and constraint assembly."""
        if isinstance(self.system, str):
            try:
                return PRESET_MODELS[self.system]()
            except KeyError:
                raise ValueError(
                    f"unknown system preset {self.system!r}; "
                    f"available: {sorted(PRESET_MODELS)}"
                ) from None
        spec = self.system
        kind = spec.get("kind")
        if kind == KIND_AFFINE:
            return SystemModel.affine(np.asarray(spec["linear"]), np.asarray(spec["offset"]))
        if kind == KIND_QUADRATIC:
            return SystemModel.quadratic_polynomial(
                np.asarray(spec["quadratic"]),
                np.asarray(spec["linear"]),
                np.asarray(spec["offset"]),
            )
        raise ValueError(f"unknown custom system kind {kind!r}")

    def perturbation_amplitude(self) -> float:
        if self.perturbation.amplitude is not None:
            return self.perturbation.amplitude
        return sqrt(2.0) * self.filter.threshold

    def true_model(self) -> SystemModel:
        """Ground truth: the physics plus the configured deviation field."""
        amplitude = self.perturbation_amplitude()
        if amplitude == 0.0:
            return self.physics_model()
        return SystemModel.perturbed(
            self.physics_model(),
            PerturbationField(amplitude, self.perturbation.frequency, self.perturbation.phase),
        )

    # ---- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        data = asdict(self)
        data["domain"] = self.domain.to_dict()
        data["initial"] = self.initial.to_dict()
        data["unsafe"] = self.unsafe.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        def sub(name, spec_cls):
            return spec_cls(**data[name]) if name in data else spec_cls()

        config = cls(
            name=data.get("name", "custom"),
            system=data["system"],
            domain=RegionBox.from_dict(data["domain"]),
            initial=RegionBox.from_dict(data["initial"]),
            unsafe=RegionBox.from_dict(data["unsafe"]),
            template_degree=data.get("template_degree", 2),
            decay=data.get("decay", 0.83),
            sampling=sub("sampling", SamplingSpec),
            filter=sub("filter", FilterSpec),
            perturbation=sub("perturbation", PerturbationSpec),
            solver=sub("solver", SolverSpec),
            lipschitz=sub("lipschitz", LipschitzSpec),
            guarantee=sub("guarantee", GuaranteeSpec),
            validation=sub("validation", ValidationSpec),
            save_data=data.get("save_data", True),
        )
        config.validate()
        return config

    @classmethod
    def from_json(cls, path: str) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def preset(name: str, mode: str = MODE_DETERMINISTIC) -> RunConfig:
    """Full config for a builtin case study in the requested guarantee mode.

    Deterministic presets sample on a grid; probabilistic ones i.i.d., with
    the sample counts the reference experiments used.
    """
    if mode not in (MODE_DETERMINISTIC, MODE_PROBABILISTIC):
        raise ValueError(f"unknown guarantee mode {mode!r}")
    if name == "supply-demand":
        regions = (
            RegionBox.interval(0.5, 2.7),
            RegionBox.interval(0.5, 0.6),
            RegionBox.interval(2.6, 2.7),
        )
        det_count, prob_count = 220_000, 300_000
    elif name == "logistic-growth":
        regions = (
            RegionBox.interval(0.1, 1.0),
            RegionBox.interval(0.1, 0.3),
            RegionBox.interval(0.7, 1.0),
        )
        det_count, prob_count = 90_000, 260_000
    else:
        raise ValueError(f"unknown preset {name!r}; available: supply-demand, logistic-growth")

    deterministic = mode == MODE_DETERMINISTIC
    sampling = SamplingSpec(
        scheme=SCHEME_GRID if deterministic else SCHEME_IID,
        count=det_count if deterministic else prob_count,
        seed=2024,
    )
    config = RunConfig(
        name=name,
        system=name,
        domain=regions[0],
        initial=regions[1],
        unsafe=regions[2],
        sampling=sampling,
        guarantee=GuaranteeSpec(mode=mode),
    )
    config.validate()
    return config


def apply_overrides(
    config: RunConfig,
    seed: Optional[int] = None,
    mode: Optional[str] = None,
    no_filter: bool = False,
) -> RunConfig:
    """CLI-level tweaks on top of a loaded config."""
    if seed is not None:
        config = replace(config, sampling=replace(config.sampling, seed=seed))
    if mode is not None:
        config = replace(config, guarantee=replace(config.guarantee, mode=mode))
    if no_filter:
        config = replace(config, filter=replace(config.filter, enabled=False))
    config.validate()
    return config
