"""Experiment configuration: TOML documents with flat ``section.key`` names.

A config names a target, a sampler, optionally a kernel, diagnostic settings
and run settings::

    preset = "bimodal/ckam"     # optional base, expanded first

    [sampler]
    beta = 0.5                  # overrides the preset value

    [run]
    seed = 3
    budget_iters = 20000

Unknown keys are rejected. Presets are the TOML files shipped in
``ckam/harness/presets/<experiment>/<sampler>.toml``.
"""
from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

from ..kernels import RBF, Linear, Matern
from ..samplers import SAMPLERS, SamplerConfig
from ..targets import TARGETS, Mesh, make_target

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "list_presets",
    "preset_text",
    "KNOWN_KEYS",
]


class ConfigError(ValueError):
    """Invalid configuration; `key` names the offending entry when there is one."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


# key -> expected type; "list" means a list of numbers
KNOWN_KEYS: dict[str, type | str] = {
    "preset": str,
    "target.name": str,
    "target.dimension": int,
    "sampler.name": str,
    "sampler.nu": float,
    "sampler.nu_per_sqrt_dim": float,
    "sampler.eta": float,
    "sampler.epsilon": float,
    "sampler.alpha_star": float,
    "sampler.subsample_size": int,
    "sampler.adapt_prob": float,
    "sampler.noise_a": float,
    "sampler.noise_b": float,
    "sampler.noise_decay": float,
    "sampler.burnin": int,
    "sampler.cov0": float,
    "sampler.cycle_length": int,
    "sampler.beta": float,
    "sampler.nu_floor": float,
    "kernel.name": str,
    "kernel.lengthscale": float,
    "kernel.order": float,
    "diag.checkpoint_every": int,
    "diag.smoothing_eps": float,
    "diag.bins": int,
    "diag.mesh_lo": float,
    "diag.mesh_hi": float,
    "diag.mesh_bins": int,
    "run.seed": int,
    "run.budget_iters": int,
    "run.budget_seconds": float,
    "run.theta0": "list",
    "run.out": str,
}

_SAMPLER_FIELDS = (
    "eta", "epsilon", "alpha_star", "subsample_size", "adapt_prob", "noise_a",
    "noise_b", "noise_decay", "burnin", "cov0", "cycle_length", "beta", "nu_floor",
)

# KL meshes for the 2-d targets
DEFAULT_MESHES = {
    "bimodal2d": (-14.0, 14.0, 100),
    "mixture5_2d": (-6.0, 16.0, 100),
}

_KERNELS = {"matern": Matern, "rbf": RBF, "linear": Linear}
_SEED_MAX = 2**64
_BUDGET_KEYS = {"run.budget_iters", "run.budget_seconds"}


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment.

    Attributes
    ----------
    target, sampler : str
        Registered target and sampler names.
    dimension : int
        Target dimension.
    sampler_config : SamplerConfig
        Hyperparameters, kernel included.
    theta0 : tuple of float
        Initial position.
    seed : int
        Seed of the run's random stream.
    budget_iters, budget_seconds : int or float or None
        Exactly one is set.
    checkpoint_every : int
        Iterations between diagnostic checkpoints.
    """

    target: str
    sampler: str
    dimension: int
    sampler_config: SamplerConfig
    theta0: tuple
    seed: int = 0
    budget_iters: int | None = None
    budget_seconds: float | None = None
    checkpoint_every: int = 1000
    smoothing_eps: float = 1e-10
    bins: int = 100
    mesh: Mesh | None = None
    out: str | None = None
    preset: str | None = None
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    def make_target(self):
        return make_target(self.target, self.dimension if self.target == "grid5_highd" else None)

    def echo(self) -> dict:
        """Flat, JSON-friendly view of the effective configuration."""
        sc = asdict(self.sampler_config)
        kernel = self.sampler_config.kernel
        sc["kernel"] = {"name": type(kernel).__name__.lower(), **asdict(kernel)}
        out = {
            "target": self.target,
            "dimension": self.dimension,
            "sampler": self.sampler,
            "sampler_config": sc,
            "theta0": list(self.theta0),
            "seed": self.seed,
            "budget_iters": self.budget_iters,
            "budget_seconds": self.budget_seconds,
            "checkpoint_every": self.checkpoint_every,
            "smoothing_eps": self.smoothing_eps,
            "bins": self.bins,
            "preset": self.preset,
        }
        if self.mesh is not None:
            out["mesh"] = {"lo": list(self.mesh.lo), "hi": list(self.mesh.hi), "bins": list(self.mesh.bins)}
        return out

    def with_overrides(self, **kwargs) -> "ExperimentConfig":
        """Re-validate with replaced run-level settings (seed, budget, out)."""
        flat = dict(self.raw)
        for k, v in kwargs.items():
            if v is None:
                continue
            if k == "budget_iters":
                flat.pop("run.budget_seconds", None)
            if k == "budget_seconds":
                flat.pop("run.budget_iters", None)
            flat[f"run.{k}"] = v
        return _build(flat)


def _presets_root():
    return resources.files("ckam.harness") / "presets"


def list_presets() -> list[str]:
    """Names ``experiment/sampler`` of the shipped presets, sorted."""
    names = []
    for exp in _presets_root().iterdir():
        if exp.is_dir():
            names.extend(f"{exp.name}/{f.name[:-5]}" for f in exp.iterdir() if f.name.endswith(".toml"))
    return sorted(names)


def preset_text(name: str) -> str:
    if name not in list_presets():
        raise ConfigError(f"preset: unknown preset {name!r}; see 'presets list'", "preset")
    exp, sampler = name.split("/")
    return (_presets_root() / exp / f"{sampler}.toml").read_text(encoding="utf-8")


def _parse(text: str, origin: str) -> dict:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"could not parse config {origin}: {exc}") from None
    flat: dict = {}

    def walk(prefix, node):
        for k, v in node.items():
            key = f"{prefix}{k}"
            if isinstance(v, dict):
                walk(key + ".", v)
            else:
                flat[key] = v

    walk("", doc)
    for key in flat:
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}", key)
    return flat


def _expand(flat: dict, seen: tuple = ()) -> dict:
    name = flat.get("preset")
    if name is None:
        return flat
    if not isinstance(name, str):
        raise ConfigError("preset: expected a string", "preset")
    if name in seen:
        raise ConfigError(f"preset: cycle through {name!r}", "preset")
    base = _expand(_parse(preset_text(name), f"preset {name}"), seen + (name,))
    base.pop("preset", None)
    # a budget in the overriding layer replaces the inherited one of either kind
    if _BUDGET_KEYS & flat.keys():
        for k in _BUDGET_KEYS:
            base.pop(k, None)
    return {**base, **flat}


def _typed(flat: dict, key: str, default=None):
    if key not in flat:
        return default
    v = flat[key]
    kind = KNOWN_KEYS[key]
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {v!r}", key)
        v = float(v)
        if not math.isfinite(v):
            raise ConfigError(f"{key}: must be finite, got {v!r}", key)
        return v
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{key}: expected an integer, got {v!r}", key)
        return v
    if kind is str:
        if not isinstance(v, str):
            raise ConfigError(f"{key}: expected a string, got {v!r}", key)
        return v
    if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigError(f"{key}: expected a list of numbers, got {v!r}", key)
    return tuple(float(x) for x in v)


def _require(flat: dict, key: str, why: str):
    if key not in flat:
        raise ConfigError(f"{key}: required {why}", key)


def _kernel(flat: dict):
    name = _typed(flat, "kernel.name", "matern").lower()
    if name not in _KERNELS:
        raise ConfigError(f"kernel.name: unknown kernel {name!r}; choose from {sorted(_KERNELS)}", "kernel.name")
    try:
        if name == "matern":
            return Matern(_typed(flat, "kernel.order", 4.0), _typed(flat, "kernel.lengthscale", 2.0))
        if "kernel.order" in flat:
            raise ConfigError(f"kernel.order: only meaningful for the matern kernel, not {name!r}", "kernel.order")
        if name == "rbf":
            return RBF(_typed(flat, "kernel.lengthscale", 1.0))
        if "kernel.lengthscale" in flat:
            raise ConfigError("kernel.lengthscale: the linear kernel has no lengthscale", "kernel.lengthscale")
        return Linear()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"kernel: {exc}", "kernel.name") from None


def _build(flat: dict) -> ExperimentConfig:
    _require(flat, "target.name", "(one of " + ", ".join(sorted(TARGETS)) + ")")
    _require(flat, "sampler.name", "(one of " + ", ".join(SAMPLERS) + ")")
    target = _typed(flat, "target.name")
    if target not in TARGETS:
        raise ConfigError(f"target.name: unknown target {target!r}; choose from {sorted(TARGETS)}", "target.name")
    sampler = _typed(flat, "sampler.name")
    if sampler not in SAMPLERS:
        raise ConfigError(f"sampler.name: unknown sampler {sampler!r}; choose from {list(SAMPLERS)}", "sampler.name")

    if target == "grid5_highd":
        dimension = _typed(flat, "target.dimension", 32)
        if dimension < 1:
            raise ConfigError(f"target.dimension: must be positive, got {dimension}", "target.dimension")
    else:
        if "target.dimension" in flat:
            raise ConfigError(f"target.dimension: {target} has a fixed dimension", "target.dimension")
        dimension = 2

    if "sampler.nu" in flat and "sampler.nu_per_sqrt_dim" in flat:
        raise ConfigError("sampler.nu: give either sampler.nu or sampler.nu_per_sqrt_dim, not both", "sampler.nu")
    if "sampler.nu_per_sqrt_dim" in flat:
        nu = _typed(flat, "sampler.nu_per_sqrt_dim") / math.sqrt(dimension)
    else:
        nu = _typed(flat, "sampler.nu", 1.0)
    if sampler == "ckam":
        _require(flat, "sampler.cycle_length", "for ckam")
        _require(flat, "sampler.beta", "for ckam")
    kwargs = {f: _typed(flat, f"sampler.{f}") for f in _SAMPLER_FIELDS if f"sampler.{f}" in flat}
    if sampler in ("kam", "ckam"):
        kwargs["kernel"] = _kernel(flat)
    elif any(k.startswith("kernel.") for k in flat):
        key = next(k for k in flat if k.startswith("kernel."))
        raise ConfigError(f"{key}: sampler {sampler!r} takes no kernel", key)
    try:
        sampler_config = SamplerConfig(nu=nu, **kwargs)
    except ValueError as exc:
        # SamplerConfig messages start with the field name
        field_name = str(exc).split()[0].rstrip(":")
        key = f"sampler.{field_name}" if f"sampler.{field_name}" in KNOWN_KEYS else None
        raise ConfigError(f"{key or 'sampler'}: {exc}", key) from None

    theta0 = _typed(flat, "run.theta0", (0.0,) * dimension)
    if len(theta0) != dimension:
        raise ConfigError(f"run.theta0: expected {dimension} coordinates, got {len(theta0)}", "run.theta0")

    seed = _typed(flat, "run.seed", 0)
    if not 0 <= seed < _SEED_MAX:
        raise ConfigError(f"run.seed: must be a 64-bit unsigned integer, got {seed}", "run.seed")
    iters = _typed(flat, "run.budget_iters")
    seconds = _typed(flat, "run.budget_seconds")
    if (iters is None) == (seconds is None):
        raise ConfigError("run.budget_iters: give exactly one of run.budget_iters and run.budget_seconds",
                          "run.budget_iters")
    if iters is not None and iters < 0:
        raise ConfigError(f"run.budget_iters: must be >= 0, got {iters}", "run.budget_iters")
    if seconds is not None and seconds < 0:
        raise ConfigError(f"run.budget_seconds: must be >= 0, got {seconds}", "run.budget_seconds")

    every = _typed(flat, "diag.checkpoint_every", 1000)
    if every < 1:
        raise ConfigError(f"diag.checkpoint_every: must be >= 1, got {every}", "diag.checkpoint_every")
    eps = _typed(flat, "diag.smoothing_eps", 1e-10)
    if eps <= 0:
        raise ConfigError(f"diag.smoothing_eps: must be positive, got {eps}", "diag.smoothing_eps")
    bins = _typed(flat, "diag.bins", 100)
    if bins < 1:
        raise ConfigError(f"diag.bins: must be >= 1, got {bins}", "diag.bins")

    mesh = None
    if dimension == 2:
        lo, hi, mbins = DEFAULT_MESHES.get(target, (-10.0, 10.0, 100))
        lo = _typed(flat, "diag.mesh_lo", lo)
        hi = _typed(flat, "diag.mesh_hi", hi)
        mbins = _typed(flat, "diag.mesh_bins", mbins)
        if not lo < hi:
            raise ConfigError(f"diag.mesh_lo: must be below diag.mesh_hi, got {lo} >= {hi}", "diag.mesh_lo")
        if mbins < 1:
            raise ConfigError(f"diag.mesh_bins: must be >= 1, got {mbins}", "diag.mesh_bins")
        mesh = Mesh.square(lo, hi, mbins)
    elif any(k.startswith("diag.mesh_") for k in flat):
        key = next(k for k in flat if k.startswith("diag.mesh_"))
        raise ConfigError(f"{key}: the grid mesh only applies to 2-d targets", key)

    return ExperimentConfig(
        target=target,
        sampler=sampler,
        dimension=dimension,
        sampler_config=sampler_config,
        theta0=theta0,
        seed=seed,
        budget_iters=iters,
        budget_seconds=seconds,
        checkpoint_every=every,
        smoothing_eps=eps,
        bins=bins,
        mesh=mesh,
        out=_typed(flat, "run.out"),
        preset=flat.get("preset"),
        raw=dict(flat),
    )


def load_config(source) -> ExperimentConfig:
    """Load and validate a config.

    Parameters
    ----------
    source : str or os.PathLike
        A path to a TOML file, a shipped preset name such as ``"bimodal/ckam"``,
        or inline TOML text.

    Raises
    ------
    ConfigError
        On a parse error, an unknown key, an unknown sampler/target/kernel or
        an invalid value. The message names the offending key.
    """
    if isinstance(source, os.PathLike):
        path = Path(source)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        flat = _parse(text, str(path))
    elif isinstance(source, str) and source in list_presets():
        flat = {"preset": source}
    elif isinstance(source, str) and ("=" in source or "\n" in source or source == ""):
        flat = _parse(source, "<inline>")
    elif isinstance(source, str):
        return load_config(Path(source))
    else:
        raise TypeError(f"config source must be a path or a string, not {type(source).__name__}")
    return _build(_expand(flat))
