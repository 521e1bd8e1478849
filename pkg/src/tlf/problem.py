"""Composite objective F(x) = 0.5*||Ax - b||^2 + lambda1 * sum|x_i|^p,
its proximal-gradient map, and the PG / APG / mAPG baseline solvers.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .prox import ProxSpec, lp_penalty, prox_lp_array
from .tensor import ImageTensor, LinearOperator
from .trace import IterateTrace, TraceRecord

BASELINE_METHODS = ("pg", "apg", "mapg")


@dataclass(frozen=True)
class CompositeProblem:
    """Smooth data-fit plus prox-able lp regularizer.

    ``data_op`` maps the optimization variable to observation space; for
    wavelet-coefficient problems it is K o W^T and ``synthesis`` (W^T) maps
    the variable back to an image.
    """

    data_op: LinearOperator
    observation: ImageTensor
    reg_spec: ProxSpec  # tau field carries the weight lambda1
    lipschitz: float
    variable_space: str = "image"
    synthesis: LinearOperator | None = None

    def __post_init__(self):
        if self.lipschitz <= 0:
            raise ConfigError(f"lipschitz must be > 0, got {self.lipschitz}")
        if self.variable_space not in ("image", "wavelet-coefficients"):
            raise ConfigError(f"unknown variable space {self.variable_space!r}")
        if self.variable_space == "wavelet-coefficients" and self.synthesis is None:
            raise ConfigError("wavelet-coefficient problems need a synthesis operator")

    def default_step(self) -> float:
        return 0.99 / self.lipschitz

    def to_image(self, x: ImageTensor) -> ImageTensor:
        return self.synthesis.apply(x) if self.synthesis is not None else x

    def from_image(self, img: ImageTensor) -> ImageTensor:
        return self.synthesis.adjoint(img) if self.synthesis is not None else img

    def default_init(self) -> ImageTensor:
        return self.from_image(self.observation)

    def gradient(self, x: ImageTensor) -> ImageTensor:
        r = self.data_op.apply(x)
        return self.data_op.adjoint(ImageTensor(r.data - self.observation.data))


@dataclass(frozen=True)
class SolverParams:
    """Iteration controls shared by every solver in the package."""

    step: float | None = None  # None -> 0.99 / L
    max_iters: int = 500
    rel_tol: float = 5e-4
    alpha0: float = 0.9
    gamma: float = 0.99
    mu0: float = 1.0
    beta: float = 0.5
    bus_c: float = 1.5

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("max_iters must be >= 1")
        if self.rel_tol < 0:
            raise ConfigError("rel_tol must be >= 0")
        if not 0.0 <= self.alpha0 < 1.0:
            raise ConfigError("alpha0 must lie in [0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("gamma must lie in (0, 1)")
        if self.mu0 <= 0:
            raise ConfigError("mu0 must be > 0")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError("beta must lie in (0, 1)")
        if self.bus_c <= 0:
            raise ConfigError("C must be > 0")

    def resolve_step(self, lipschitz: float) -> float:
        t = 0.99 / lipschitz if self.step is None else self.step
        if not 0.0 < t * lipschitz < 1.0:
            raise ConfigError(
                f"step {t} outside (0, 1/L) for L={lipschitz}"
            )
        return t


def eval_F(prob: CompositeProblem, x: ImageTensor) -> float:
    res = prob.data_op.apply(x).data - prob.observation.data
    value = 0.5 * float(np.vdot(res, res).real)
    if prob.reg_spec.tau > 0:
        value += prob.reg_spec.tau * lp_penalty(x.data, prob.reg_spec.p)
    return value


def pg_step(prob: CompositeProblem, x: ImageTensor, t: float) -> ImageTensor:
    """One proximal-gradient step prox_{t*psi}(x - t*grad f(x))."""
    if not 0.0 < t * prob.lipschitz < 1.0:
        raise ConfigError(f"step {t} outside (0, 1/L) for L={prob.lipschitz}")
    g = prob.gradient(x)
    return ImageTensor(
        prox_lp_array(x.data - t * g.data, prob.reg_spec.scaled(t))
    )


def relative_change(new: np.ndarray, old: np.ndarray) -> float:
    num = float(np.linalg.norm(new - old))
    den = float(np.linalg.norm(new))
    if den == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return num / den


def solve_baseline(
    prob: CompositeProblem,
    method: str,
    params: SolverParams,
    x0: ImageTensor | None = None,
    ground_truth: ImageTensor | None = None,
):
    """Run PG, APG (Nesterov (k-1)/(k+2) momentum) or monotone APG.

    Returns the problem-space solution and its IterateTrace.  All methods
    stop when ||x_{k+1} - x_k|| / ||x_{k+1}|| <= rel_tol or at max_iters.
    """
    method = method.lower()
    if method not in BASELINE_METHODS:
        raise ConfigError(f"unknown baseline {method!r}; expected one of {BASELINE_METHODS}")
    t = params.resolve_step(prob.lipschitz)
    x = prob.default_init() if x0 is None else x0
    x_prev = x
    trace = IterateTrace(method=method, initial_F=eval_F(prob, x))
    for k in range(params.max_iters):
        if method == "pg":
            x_next = pg_step(prob, x, t)
        elif method == "apg":
            w = (k - 1) / (k + 2) if k >= 1 else 0.0
            y = ImageTensor(x.data + w * (x.data - x_prev.data))
            x_next = pg_step(prob, y, t)
        else:  # mapg: momentum candidate kept only if it does not lose to plain PG
            w = (k - 1) / (k + 2) if k >= 1 else 0.0
            y = ImageTensor(x.data + w * (x.data - x_prev.data))
            z = pg_step(prob, y, t)
            u = pg_step(prob, x, t)
            x_next = z if eval_F(prob, z) <= eval_F(prob, u) else u
        rel = relative_change(x_next.data, x.data)
        rec = TraceRecord(
            k=k,
            F_value=eval_F(prob, x_next),
            rel_err=rel,
            norm_xF_x=float(np.linalg.norm(x_next.data - x.data)),
        )
        if ground_truth is not None:
            from .metrics import psnr

            rec.psnr = psnr(prob.to_image(x_next), ground_truth)
        trace.append(rec)
        x_prev, x = x, x_next
        if rel <= params.rel_tol:
            break
    return x, trace
