"""Aggregated proximal solvers with monotone-descent and boundedness guards.

One iteration aggregates the proximal-gradient point x_F with the latent
feasibility solution x_G (or its denoiser-anchored variant x_Gmu) through a
geometrically decaying weight alpha, then lets two guards police the result:

* MDUS keeps the aggregate only if it does not increase F, else falls back
  to x_F; alpha decays by gamma either way.
* BUS (data-driven runs only) keeps the anchored aggregate only while
  ||x_Gmu - x|| <= C * ||x_G - x||, else falls back to the model-based
  aggregate and shrinks the anchor weight mu by beta.

Wavelet-space problems run F and x_F on coefficients while the feasibility
and denoising modules work on images; the orthonormal synthesis operator
maps between the two spaces exactly.
"""

import math
from typing import Callable, NamedTuple

import numpy as np

from . import feasibility as _feas
from .denoise import DenoiserSpec, denoise
from .errors import DenoiserError
from .feasibility import FeasibilityModel
from .metrics import psnr as _psnr
from .problem import CompositeProblem, SolverParams, eval_F, pg_step, relative_change
from .tensor import ImageTensor
from .trace import (
    BUS_ACCEPTED,
    BUS_FALLBACK,
    BUS_NA,
    MDUS_ACCEPTED,
    MDUS_FALLBACK,
    IterateTrace,
    TraceRecord,
)


class MdusResult(NamedTuple):
    x: ImageTensor
    alpha: float
    accepted_v: bool
    F_value: float


class BusResult(NamedTuple):
    u: ImageTensor
    mu: float
    accepted_z: bool


def _objective(prob) -> Callable[[ImageTensor], float]:
    if callable(prob):
        return prob
    return lambda x: eval_F(prob, x)


def mdus(prob, v: ImageTensor, x_F: ImageTensor, alpha: float, gamma: float) -> MdusResult:
    """Monotone descent update: keep v only if F(v) <= F(x_F); decay alpha."""
    fn = _objective(prob)
    f_v = fn(v)
    f_xf = fn(x_F)
    if f_v <= f_xf:
        return MdusResult(v, gamma * alpha, True, f_v)
    return MdusResult(x_F, gamma * alpha, False, f_xf)


def bus(
    x: ImageTensor,
    x_G: ImageTensor,
    x_Gmu: ImageTensor,
    z: ImageTensor,
    x_F: ImageTensor,
    alpha: float,
    mu: float,
    beta: float,
    C: float,
) -> BusResult:
    """Boundedness check on the anchored step, with mu decay on rejection."""
    lhs = float(np.linalg.norm(x_Gmu.data - x.data))
    rhs = float(np.linalg.norm(x_G.data - x.data))
    if lhs <= C * rhs:
        return BusResult(z, mu, True)
    u = ImageTensor(alpha * x_G.data + (1.0 - alpha) * x_F.data)
    return BusResult(u, beta * mu, False)


def _aggregate(alpha: float, a: ImageTensor, b: ImageTensor) -> ImageTensor:
    return ImageTensor(alpha * a.data + (1.0 - alpha) * b.data)


def tlf_solve(
    prob: CompositeProblem,
    feas: FeasibilityModel,
    params: SolverParams,
    x0: ImageTensor | None = None,
    ground_truth: ImageTensor | None = None,
):
    """Task-driven latent feasibility iteration (model-based constraint)."""
    t = params.resolve_step(prob.lipschitz)
    x = prob.default_init() if x0 is None else x0
    alpha = params.alpha0
    trace = IterateTrace(method="tlf", initial_F=eval_F(prob, x))
    for k in range(params.max_iters):
        x_F = pg_step(prob, x, t)
        img_x = prob.to_image(x)
        x_G = prob.from_image(_feas.solve_G(feas, img_x))
        v = _aggregate(alpha, x_G, x_F)
        step = mdus(prob, v, x_F, alpha, params.gamma)
        rel = relative_change(step.x.data, x.data)
        rec = TraceRecord(
            k=k,
            F_value=step.F_value,
            rel_err=rel,
            norm_xF_x=float(np.linalg.norm(x_F.data - x.data)),
            norm_xG_x=float(np.linalg.norm(x_G.data - x.data)),
            alpha=alpha,
            mdus_branch=MDUS_ACCEPTED if step.accepted_v else MDUS_FALLBACK,
            bus_branch=BUS_NA,
        )
        if ground_truth is not None:
            rec.psnr = _psnr(prob.to_image(step.x), ground_truth)
        trace.append(rec)
        x, alpha = step.x, step.alpha
        if rel <= params.rel_tol:
            break
    return x, trace


def dtlf_solve(
    prob: CompositeProblem,
    feas: FeasibilityModel,
    denoiser: DenoiserSpec,
    params: SolverParams,
    x0: ImageTensor | None = None,
    ground_truth: ImageTensor | None = None,
):
    """Data-driven TLF: denoiser-anchored feasibility under the BUS guard.

    A denoiser failure at iteration k is absorbed as a BUS rejection: the
    iteration falls back to the model-based aggregate and mu decays.
    """
    t = params.resolve_step(prob.lipschitz)
    x = prob.default_init() if x0 is None else x0
    alpha = params.alpha0
    mu = params.mu0
    trace = IterateTrace(method="dtlf", initial_F=eval_F(prob, x))
    for k in range(params.max_iters):
        x_F = pg_step(prob, x, t)
        img_x = prob.to_image(x)
        x_G = prob.from_image(_feas.solve_G(feas, img_x))
        norm_xg = float(np.linalg.norm(x_G.data - x.data))
        try:
            x_tilde = denoise(denoiser, img_x, k)
            x_Gmu = prob.from_image(
                _feas.solve_G_mu(feas.with_anchor(x_tilde, mu), img_x)
            )
        except DenoiserError:
            u = _aggregate(alpha, x_G, x_F)
            mu_next = params.beta * mu
            accepted_z = False
            norm_xgmu = math.nan
        else:
            norm_xgmu = float(np.linalg.norm(x_Gmu.data - x.data))
            z = _aggregate(alpha, x_Gmu, x_F)
            if norm_xgmu <= params.bus_c * norm_xg:
                u, mu_next, accepted_z = z, mu, True
            else:
                u = _aggregate(alpha, x_G, x_F)
                mu_next, accepted_z = params.beta * mu, False
        step = mdus(prob, u, x_F, alpha, params.gamma)
        rel = relative_change(step.x.data, x.data)
        rec = TraceRecord(
            k=k,
            F_value=step.F_value,
            rel_err=rel,
            norm_xF_x=float(np.linalg.norm(x_F.data - x.data)),
            norm_xG_x=norm_xg,
            norm_xGmu_x=norm_xgmu,
            alpha=alpha,
            mu=mu,
            mdus_branch=MDUS_ACCEPTED if step.accepted_v else MDUS_FALLBACK,
            bus_branch=BUS_ACCEPTED if accepted_z else BUS_FALLBACK,
        )
        if ground_truth is not None:
            rec.psnr = _psnr(prob.to_image(step.x), ground_truth)
        trace.append(rec)
        x, alpha, mu = step.x, step.alpha, mu_next
        if rel <= params.rel_tol:
            break
    return x, trace
