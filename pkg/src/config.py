# src/config.py
"""
Experiment configuration: JSON documents with nested `psi`, `optimizer` and
`solver` sections. Missing keys take the defaults below; unknown keys and
out-of-range values raise ConfigError naming the field.
"""
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

from dotenv import load_dotenv

from src.constraint import DEFAULT_ALPHA, DEFAULT_MU_MAX, ExpPsi, PsiSpec, SquarePsi
from src.errors import ConfigError, InvalidArgumentError
from src.grid_fields import CellField, make_grid
from src.helpers import read_field_csv
from src.optimizer import STRATEGIES, OptimizerConfig
from src.pde import DEFAULT_TOL, SOLVER_METHODS, default_method
from src.physics import DEFAULT_EPSILON, eval_g, sample_nodal
from src.run_sources import available_tags, get_source

load_dotenv()

DEFAULT_SEED = 7
DEFAULT_NU_SQUARE = 1e-6
TOP_LEVEL_KEYS = {"M", "n", "psi", "source", "eps", "mu_max", "nu", "optimizer", "solver", "output_dir", "seed"}
PSI_KEYS = {"variant", "m", "alpha", "budget", "cap_as_infinity"}
OPTIMIZER_KEYS = {
    "max_iters", "step0", "backtrack", "armijo_c1", "max_backtracks",
    "tol_step", "tol_cost", "strategy",
}
SOLVER_KEYS = {"tol", "method"}


def default_output_dir():
    return os.getenv("POTENTIAL_OUTPUT_DIR", "output")


@dataclass(frozen=True)
class PsiConfig:
    variant: str
    m: Optional[float] = None
    alpha: float = DEFAULT_ALPHA
    budget: Optional[float] = None
    cap_as_infinity: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    M: float
    n: int
    psi: PsiConfig
    source: str = "F1"
    eps: float = DEFAULT_EPSILON
    mu_max: float = DEFAULT_MU_MAX
    nu: Optional[Union[float, str]] = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    output_dir: str = field(default_factory=default_output_dir)
    seed: int = DEFAULT_SEED

    def build_grid(self):
        return make_grid(self.M, self.n)

    def nu_field(self, grid) -> CellField:
        nu = self.nu
        if nu is None:
            nu = DEFAULT_NU_SQUARE if self.psi.variant == "square" else 0.0
        if isinstance(nu, str):
            return read_field_csv(grid, nu, kind="cell")
        return CellField.constant(grid, nu)

    def build_spec(self, grid) -> PsiSpec:
        if self.psi.variant == "exp":
            variant = ExpPsi(m=self.psi.m, alpha=self.psi.alpha, cap_as_infinity=self.psi.cap_as_infinity)
        else:
            variant = SquarePsi(budget=self.psi.budget)
        return PsiSpec(variant=variant, nu=self.nu_field(grid), mu_max=self.mu_max)

    def build_source(self, grid):
        mod = get_source(self.source)
        if mod is not None:
            return mod.generate_source(grid, self.eps)
        return read_field_csv(grid, self.source, kind="node")

    def build_weight(self, grid):
        return sample_nodal(grid, lambda x, y: eval_g(x, y, self.eps))

    def build_problem(self, grid):
        """(spec, f, g) on `grid`; sweep_M calls this once per half-width."""
        return self.build_spec(grid), self.build_source(grid), self.build_weight(grid)

    def resolved(self) -> dict:
        """Every setting after defaults, as recorded in the run manifest."""
        out = asdict(self)
        out["optimizer"]["solver_method"] = self.optimizer.solver_method or default_method()
        return out


def _section(doc, key, allowed, prefix=""):
    sub = doc.get(key, {})
    if not isinstance(sub, dict):
        raise ConfigError(f"'{prefix}{key}' must be an object", field=prefix + key)
    for k in sub:
        if k not in allowed:
            raise ConfigError(f"unknown key '{prefix}{key}.{k}'", field=f"{prefix}{key}.{k}")
    return sub


def _number(doc, key, default=None, name=None, positive=True, integer=False, required=False):
    name = name or key
    if key not in doc:
        if required:
            raise ConfigError(f"missing required field '{name}'", field=name)
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"'{name}' must be a finite number, got {value!r}", field=name)
    if integer and int(value) != value:
        raise ConfigError(f"'{name}' must be an integer, got {value!r}", field=name)
    if positive and value <= 0:
        raise ConfigError(f"'{name}' must be positive, got {value!r}", field=name)
    return int(value) if integer else float(value)


def _psi(doc) -> PsiConfig:
    if "psi" not in doc:
        raise ConfigError("missing required field 'psi'", field="psi")
    sub = _section(doc, "psi", PSI_KEYS)
    variant = str(sub.get("variant", "")).lower()
    if variant == "exp":
        cap = sub.get("cap_as_infinity", True)
        if not isinstance(cap, bool):
            raise ConfigError("'psi.cap_as_infinity' must be true or false", field="psi.cap_as_infinity")
        return PsiConfig(
            variant="exp",
            m=_number(sub, "m", name="psi.m", required=True),
            alpha=_number(sub, "alpha", DEFAULT_ALPHA, name="psi.alpha"),
            cap_as_infinity=cap,
        )
    if variant == "square":
        return PsiConfig(variant="square", budget=_number(sub, "budget", name="psi.budget", required=True))
    raise ConfigError(f"'psi.variant' must be 'exp' or 'square', got {sub.get('variant')!r}", field="psi.variant")


def _optimizer(doc) -> OptimizerConfig:
    opt = _section(doc, "optimizer", OPTIMIZER_KEYS)
    sol = _section(doc, "solver", SOLVER_KEYS)
    base = OptimizerConfig()
    strategy = opt.get("strategy", base.strategy)
    if strategy not in STRATEGIES:
        raise ConfigError(f"'optimizer.strategy' must be one of {STRATEGIES}", field="optimizer.strategy")
    method = sol.get("method")
    if method is not None and method not in SOLVER_METHODS:
        raise ConfigError(f"'solver.method' must be one of {SOLVER_METHODS}", field="solver.method")
    backtrack = _number(opt, "backtrack", base.backtrack, name="optimizer.backtrack")
    if not backtrack < 1:
        raise ConfigError("'optimizer.backtrack' must lie in (0, 1)", field="optimizer.backtrack")
    return OptimizerConfig(
        max_iters=_number(opt, "max_iters", base.max_iters, name="optimizer.max_iters", integer=True),
        step0=_number(opt, "step0", base.step0, name="optimizer.step0"),
        backtrack=backtrack,
        armijo_c1=_number(opt, "armijo_c1", base.armijo_c1, name="optimizer.armijo_c1"),
        max_backtracks=_number(opt, "max_backtracks", base.max_backtracks, name="optimizer.max_backtracks", integer=True),
        tol_step=_number(opt, "tol_step", base.tol_step, name="optimizer.tol_step"),
        tol_cost=_number(opt, "tol_cost", base.tol_cost, name="optimizer.tol_cost"),
        strategy=strategy,
        solver_tol=_number(sol, "tol", DEFAULT_TOL, name="solver.tol"),
        solver_method=method,
    )


def _relative_to(base_dir, path):
    if os.path.isabs(path) or os.path.exists(path):
        return path
    return os.path.join(base_dir, path)


def parse_config(doc, base_dir=".") -> ExperimentConfig:
    """Validate a decoded JSON document; relative file paths resolve against base_dir."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    for k in doc:
        if k not in TOP_LEVEL_KEYS:
            raise ConfigError(f"unknown key '{k}'", field=k)

    M = _number(doc, "M", required=True)
    n = _number(doc, "n", integer=True, required=True)
    if n < 2 or n % 2:
        raise ConfigError(f"'n' must be an even integer >= 2, got {n}", field="n")
    psi = _psi(doc)

    source = doc.get("source", "F1")
    if not isinstance(source, str) or not source:
        raise ConfigError("'source' must be a preset tag or a CSV path", field="source")
    if get_source(source) is None:
        source = _relative_to(base_dir, source)
        if not os.path.exists(source):
            raise ConfigError(
                f"'source' is neither a preset {available_tags()} nor an existing file: {source}",
                field="source",
            )

    mu_max = _number(doc, "mu_max", DEFAULT_MU_MAX)
    nu = doc.get("nu")
    if isinstance(nu, str):
        nu = _relative_to(base_dir, nu)
        if not os.path.exists(nu):
            raise ConfigError(f"'nu' file not found: {nu}", field="nu")
    elif nu is not None:
        nu = _number(doc, "nu", positive=False)
        if not 0 <= nu <= mu_max:
            raise ConfigError(f"'nu' must satisfy 0 <= nu <= mu_max, got {nu}", field="nu")
    if psi.variant == "square" and nu == 0:
        raise ConfigError("square psi needs a lower bound nu that is not identically zero", field="nu")

    eps = _number(doc, "eps", DEFAULT_EPSILON, positive=False)
    if eps < 0:
        raise ConfigError(f"'eps' must be >= 0, got {eps}", field="eps")
    seed = _number(doc, "seed", DEFAULT_SEED, positive=False, integer=True)
    if seed < 0:
        raise ConfigError(f"'seed' must be >= 0, got {seed}", field="seed")

    output_dir = doc.get("output_dir", default_output_dir())
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("'output_dir' must be a non-empty string", field="output_dir")

    try:
        return ExperimentConfig(
            M=M,
            n=n,
            psi=psi,
            source=source,
            eps=eps,
            mu_max=mu_max,
            nu=nu,
            optimizer=_optimizer(doc),
            output_dir=output_dir,
            seed=seed,
        )
    except ConfigError:
        raise
    except InvalidArgumentError as e:
        raise ConfigError(str(e)) from e


def load_config(path) -> ExperimentConfig:
    if not os.path.exists(path):
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}", line=e.lineno) from e
    return parse_config(doc, base_dir=os.path.dirname(os.path.abspath(path)))
