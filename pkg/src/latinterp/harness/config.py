"""Instance-file schema.

The file is YAML; every section is validated by a pydantic model that rejects
unknown keys. Space fields take descriptor strings (see ``specs``). The
shipped ``default.yaml`` is the reference instance grid.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path
from typing import Annotated, Optional

import yaml
from pydantic import AfterValidator, BaseModel, ConfigDict, Field, field_validator, model_validator

from ..interp import EstimateBudget, SolverParams
from ..lattice import SearchBudget
from ..registry import KINDS, ConstantsRegistry
from .specs import parse_exponent, parse_lattice, parse_space

Theta = Annotated[float, Field(gt=0.0, lt=1.0)]
Count = Annotated[int, Field(ge=0)]
Positive = Annotated[int, Field(ge=1)]


class ConfigError(ValueError):
    """Unreadable or invalid instance file."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _lattice(v: str) -> str:
    parse_lattice(v)
    return v


def _space(v: str) -> str:
    parse_space(v)
    return v


LatticeDesc = Annotated[str, AfterValidator(_lattice)]
SpaceDesc = Annotated[str, AfterValidator(_space)]


class Solver(_Strict):
    degree: Positive = 2
    grid: Annotated[int, Field(ge=4)] = 24
    restarts: Positive = 1
    temperatures: list[Annotated[float, Field(gt=0)]] = [1e-2, 1e-3]
    smoothing: list[Annotated[float, Field(ge=0)]] = [0.0, 0.0]
    maxiter: Positive = 30
    eval_refine: Positive = 4
    width_tol: Annotated[float, Field(gt=0)] = 0.5
    sweep: bool = True

    @model_validator(mode="after")
    def _schedule(self):
        if len(self.temperatures) != len(self.smoothing):
            raise ValueError("temperatures and smoothing need the same length")
        return self

    def params(self, seed: int) -> SolverParams:
        return SolverParams(degree=self.degree, grid=self.grid, restarts=self.restarts,
                            temperatures=tuple(self.temperatures), smoothing=tuple(self.smoothing),
                            maxiter=self.maxiter, eval_refine=self.eval_refine, sweep=self.sweep,
                            seed=seed, width_tol=self.width_tol)


class Estimate(_Strict):
    samples: Count = 2
    rank_one: Count = 2
    improve_steps: Count = 1

    @model_validator(mode="after")
    def _nonempty(self):
        if self.samples + self.rank_one == 0:
            raise ValueError("an estimate needs at least one sampled tensor")
        return self

    def budget(self, seed: int, params: SolverParams) -> EstimateBudget:
        return EstimateBudget(samples=self.samples, rank_one=self.rank_one,
                              improve_steps=self.improve_steps, seed=seed, params=params)


class Search(_Strict):
    k_max: Positive = 4
    starts: Count = 4
    iters: Count = 20

    def budget(self) -> SearchBudget:
        return SearchBudget(self.k_max, self.starts, self.iters)


class ConstantOverride(_Strict):
    space: str
    kind: str
    value: Annotated[float, Field(ge=1.0)]
    provenance: Annotated[str, Field(min_length=1)]
    heuristic: bool = False

    @field_validator("kind")
    @classmethod
    def _kind(cls, v):
        if v not in KINDS:
            raise ValueError(f"kind must be one of {sorted(KINDS)}")
        return v


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


class DiagAnchor(_Strict):
    X: LatticeDesc
    lam: list[Annotated[float, Field(ge=0)]]

    @model_validator(mode="after")
    def _dims(self):
        if len(self.lam) != parse_lattice(self.X).dim:
            raise ValueError("lam needs one entry per coordinate of X")
        return self


class LatticeIdentities(_Strict):
    exponents: list[str | float] = ["1", "4/3", "2"]
    dims: list[Positive] = [2, 3, 4]
    thetas: list[Theta] = [0.25, 0.5, 0.75]
    samples: Positive = 20
    anchors: list[DiagAnchor] = []
    concavity_search: Search = Search(k_max=3, starts=2, iters=5)

    @field_validator("exponents")
    @classmethod
    def _exps(cls, v):
        for p in v:
            parse_exponent(p)
        return v


class VectorValuedInstance(_Strict):
    X0: LatticeDesc
    X1: LatticeDesc
    E0: Optional[SpaceDesc] = None
    E1: Optional[SpaceDesc] = None

    @model_validator(mode="after")
    def _dims(self):
        if parse_lattice(self.X0).dim != parse_lattice(self.X1).dim:
            raise ValueError("X0 and X1 need the same dimension")
        if (self.E0 is None) != (self.E1 is None):
            raise ValueError("give both fibers E0, E1 or neither")
        if self.E0 is not None and parse_space(self.E0).dim != parse_space(self.E1).dim:
            raise ValueError("E0 and E1 need the same dimension")
        return self

    def spaces(self):
        if self.E0 is None:
            return parse_space(self.X0), parse_space(self.X1)
        return (parse_space(f"{self.X0}({self.E0})"), parse_space(f"{self.X1}({self.E1})"))

    @property
    def key(self) -> str:
        if self.E0 is None:
            return f"{self.X0}~{self.X1}"
        return f"{self.X0}({self.E0})~{self.X1}({self.E1})"


class VectorValuedEmbedding(_Strict):
    thetas: list[Theta] = [0.5]
    k: list[Positive] = [2]
    estimate: Estimate = Estimate()
    instances: list[VectorValuedInstance] = []


class TensorInstance(_Strict):
    X: VectorValuedInstance
    Y: VectorValuedInstance

    @property
    def key(self) -> str:
        return f"[{self.X.key}]x[{self.Y.key}]"


class LatticeEmbedding(_Strict):
    thetas: list[Theta] = [0.25, 0.5, 0.75]
    k: list[Positive] = [2]
    estimate: Estimate = Estimate()
    instances: list[VectorValuedInstance] = []


class TensorEmbedding(_Strict):
    thetas: list[Theta] = [0.5]
    estimate: Estimate = Estimate()
    instances: list[TensorInstance] = []


class TheoremInstance(TensorInstance):
    samples: Positive = 50
    rank_one: Count = 5


class ContractionInstance(_Strict):
    M0: SpaceDesc
    M1: SpaceDesc
    N0: SpaceDesc
    N1: SpaceDesc
    operators: Positive = 40

    @model_validator(mode="after")
    def _dims(self):
        if parse_space(self.M0).dim != parse_space(self.M1).dim or parse_space(self.N0).dim != parse_space(self.N1).dim:
            raise ValueError("each couple needs equal dimensions")
        return self

    @property
    def key(self) -> str:
        return f"{self.M0}~{self.M1}->{self.N0}~{self.N1}"


class CalderonInstance(VectorValuedInstance):
    samples: Positive = 10


class Theorem(_Strict):
    thetas: list[Theta] = [0.5]
    instances: list[TheoremInstance] = []
    contraction: list[ContractionInstance] = []
    calderon: list[CalderonInstance] = []


class MRInstance(_Strict):
    X: LatticeDesc
    E: SpaceDesc
    k: Positive = 2
    samples: Positive = 30

    @property
    def key(self) -> str:
        return f"{self.X}({self.E})<-l2^{self.k}"


class Gamma2Instance(_Strict):
    E0: SpaceDesc
    E1: SpaceDesc
    F0: SpaceDesc
    F1: SpaceDesc
    operators: Positive = 10

    @property
    def key(self) -> str:
        return f"{self.E0}~{self.E1}->{self.F0}~{self.F1}"


class CotypeInstance(_Strict):
    X: LatticeDesc
    E: SpaceDesc

    @property
    def key(self) -> str:
        return f"{self.X}({self.E})"


class MomentCorpus(_Strict):
    spaces: list[SpaceDesc] = []
    k: list[Annotated[int, Field(ge=1, le=14)]] = [2, 4, 6, 10, 14]
    families: Positive = 5



class Factorization(_Strict):
    thetas: list[Theta] = [0.5]
    budget_restarts: Positive = 4
    budget_iters: Positive = 40
    search: Search = Search()
    mr: list[MRInstance] = []
    gamma2: list[Gamma2Instance] = []
    cotype: list[CotypeInstance] = []
    moments: MomentCorpus = MomentCorpus()


class Suites(_Strict):
    lemma4: LatticeIdentities = LatticeIdentities()
    prop3: VectorValuedEmbedding = VectorValuedEmbedding()
    cor6_7: LatticeEmbedding = LatticeEmbedding()
    prop8: TensorEmbedding = TensorEmbedding()
    theorem: Theorem = Theorem()
    factorization: Factorization = Factorization()


class Config(_Strict):
    seed: Annotated[int, Field(ge=0, lt=2 ** 64)] = 0
    tolerance: Annotated[float, Field(gt=0)] = 1e-3
    solver: Solver = Solver()
    constants: list[ConstantOverride] = []
    suites: Suites = Suites()

    @model_validator(mode="after")
    def _constants(self):
        for c in self.constants:
            parse_space(c.space) if "(" in c.space else parse_lattice(c.space)
        return self

    def registry(self) -> ConstantsRegistry:
        reg = ConstantsRegistry()
        for c in self.constants:
            reg.add(c.space, c.kind, c.value, c.provenance, c.heuristic)
        return reg


def default_config_path() -> Path:
    return Path(str(resources.files("latinterp.harness").joinpath("default.yaml")))


def load_config(path: str | Path | None = None) -> Config:
    """Read and validate an instance file; raises ConfigError with a diagnostic."""
    path = default_config_path() if path is None else Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(raw if raw is not None else {}, source=str(path))


def parse_config(raw, source: str = "<config>") -> Config:
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        return Config.model_validate(raw)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
