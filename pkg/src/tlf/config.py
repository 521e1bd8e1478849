"""Experiment configuration: defaults, flat key=value files, CLI overrides."""

from dataclasses import dataclass

from .errors import ConfigError

# Tuned once on the 64x64 synthetic deblur scene and frozen.
DEFAULTS = {
    "task": "deblur",
    "input": "",
    "kernel": "",
    "mask": "",
    "gt": "",
    "out": "out",
    "solver": "tlf",
    "max_iters": 500,
    "rel_tol": 5e-4,
    "seed": 42,
    "step": 0.0,  # 0 -> 0.99 / L
    "alpha0": 0.9,
    "gamma": 0.99,
    "mu0": 1.0,
    "beta": 0.5,
    "bus_c": 1.5,
    "lambda1": 5e-4,
    "lambda2": 2e-3,
    "p": 1.0,
    "q": 1.0,
    "nu1": 1e-3,
    "nu2": 5e-3,
    "rho1": 0.02,
    "rho2": 0.05,
    "recon_weight": 0.1,
    "p1": 1.0,
    "p2": 1.0,
    "levels": 3,
    "hqs_rho": 0.05,
    "hqs_iters": 10,
    "cg_tol": 1e-8,
    "denoiser": "tv-rof:0.002",
    "denoiser_rain": "wavelet-shrink:0.01",
    "external_denoiser": "",
    "denoiser_hint": 1.0,
    "noise_percent": 0.0,
    "jobs": 1,
}

_INT_KEYS = {"max_iters", "seed", "levels", "hqs_iters", "jobs"}
_FLOAT_KEYS = {
    "rel_tol", "step", "alpha0", "gamma", "mu0", "beta", "bus_c",
    "lambda1", "lambda2", "p", "q", "nu1", "nu2", "rho1", "rho2",
    "p1", "p2", "recon_weight", "hqs_rho", "cg_tol", "denoiser_hint", "noise_percent",
}

TASKS = ("deblur", "inpaint", "derain", "bench")
SOLVERS = ("pg", "apg", "mapg", "tlf", "dtlf")


def parse_number(key, raw):
    """Parse ints/floats, accepting fraction strings like '2/3' for exponents."""
    text = str(raw).strip()
    try:
        if key in _INT_KEYS:
            return int(text)
        if "/" in text:
            num, den = text.split("/", 1)
            return float(num) / float(den)
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


@dataclass
class ExperimentConfig:
    task: str
    input: str
    kernel: str
    mask: str
    gt: str
    out: str
    solver: str
    max_iters: int
    rel_tol: float
    seed: int
    step: float
    alpha0: float
    gamma: float
    mu0: float
    beta: float
    bus_c: float
    lambda1: float
    lambda2: float
    p: float
    q: float
    nu1: float
    nu2: float
    rho1: float
    rho2: float
    recon_weight: float
    p1: float
    p2: float
    levels: int
    hqs_rho: float
    hqs_iters: int
    cg_tol: float
    denoiser: str
    denoiser_rain: str
    external_denoiser: str
    denoiser_hint: float
    noise_percent: float
    jobs: int

    @classmethod
    def from_mappings(cls, *layers):
        """Merge defaults with config-file and CLI layers (later wins)."""
        merged = dict(DEFAULTS)
        for layer in layers:
            for key, value in layer.items():
                if value is None:
                    continue
                if key not in DEFAULTS:
                    raise ConfigError(f"unknown config key {key!r}")
                if key in _INT_KEYS or key in _FLOAT_KEYS:
                    merged[key] = parse_number(key, value)
                else:
                    merged[key] = str(value)
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    def validate(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        for name in self.solver.split(","):
            if name.strip() not in SOLVERS:
                raise ConfigError(f"unknown solver {name!r}; expected one of {SOLVERS}")
        if not self.input:
            raise ConfigError("input image path is required")
        if self.task == "inpaint" and not self.mask:
            raise ConfigError("inpaint task requires a mask")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def solver_list(self):
        return [s.strip() for s in self.solver.split(",")]


def read_config_file(path):
    """Flat 'key = value' text file; blank lines and # comments ignored."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = stripped.partition("=")
            values[key.strip()] = value.strip()
    return values


def format_defaults():
    return "\n".join(f"{k} = {v}" for k, v in DEFAULTS.items()) + "\n"
