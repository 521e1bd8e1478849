"""Half-quadratic splitting solver for the TV-regularized feasibility model

    min_x 0.5*||Kx - b||^2 + lambda2 * sum_j ||grad_j x||_q      (j in {h, v})

optionally anchored by a proximal term (mu/2)*||x - x_tilde||^2.  Each
alternation thresholds the gradient surrogates z_j elementwise and then
solves the quadratic x-subproblem

    (K^T K + sum_j 2*rho_j grad_j^T grad_j + mu*I) x
        = K^T b + sum_j 2*rho_j grad_j^T z_j + mu*x_tilde

exactly in the frequency domain when K is circulant, or by warm-started
conjugate gradient otherwise (mask operators for inpainting).
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, NumericalError, ValidationError
from .prox import ProxSpec, lp_penalty, prox_lp_array
from .tensor import (
    CircularConvolution,
    GradientH,
    GradientV,
    Identity,
    ImageTensor,
    LinearOperator,
)

_GH = GradientH()
_GV = GradientV()


def _is_circulant(op: LinearOperator) -> bool:
    return isinstance(op, (Identity, CircularConvolution))


@dataclass(frozen=True)
class FeasibilityModel:
    data_op: LinearOperator
    observation: ImageTensor
    tv_weight: float
    tv_q: float = 1.0
    hqs_rho: tuple = (0.05, 0.05)
    hqs_iters: int = 5
    x_solver: str = "fft"
    cg_tol: float = 1e-8
    cg_max_iters: int = 2000
    anchor: tuple | None = None  # (ImageTensor x_tilde, float mu)

    def __post_init__(self):
        if self.tv_weight < 0:
            raise ConfigError("tv_weight must be >= 0")
        ProxSpec(self.tv_q, 0.0)  # validates the exponent
        rh, rv = self.hqs_rho
        if rh <= 0 or rv <= 0:
            raise ConfigError("hqs_rho entries must be > 0")
        if self.hqs_iters < 1:
            raise ConfigError("hqs_iters must be >= 1")
        if self.x_solver not in ("fft", "cg"):
            raise ConfigError(f"unknown x_solver {self.x_solver!r}")
        if self.x_solver == "fft" and not _is_circulant(self.data_op):
            raise ConfigError("fft x-solver requires a circulant data operator")
        if self.anchor is not None:
            x_tilde, mu = self.anchor
            if mu < 0:
                raise ConfigError("anchor mu must be >= 0")
            if x_tilde.shape != self.observation.shape:
                raise ConfigError("anchor shape differs from observation")

    def with_anchor(self, x_tilde: ImageTensor, mu: float) -> "FeasibilityModel":
        return replace(self, anchor=(x_tilde, mu))

    def without_anchor(self) -> "FeasibilityModel":
        return replace(self, anchor=None)


def _grad_freq_sq(height, width):
    """|FFT response|^2 of the wrap-around forward differences (rfft grid)."""
    gh = 4.0 * np.sin(np.pi * np.fft.rfftfreq(width)) ** 2
    gv = 4.0 * np.sin(np.pi * np.fft.fftfreq(height)) ** 2
    return gv[:, None], gh[None, :]


def _fft_solve(model, rhs, mu):
    h, w = rhs.shape[1], rhs.shape[2]
    rh, rv = model.hqs_rho
    gv2, gh2 = _grad_freq_sq(h, w)
    if isinstance(model.data_op, CircularConvolution):
        k2 = np.abs(model.data_op.frequency_response(h, w)) ** 2
    else:
        k2 = 1.0
    denom = k2 + 2.0 * rh * gh2 + 2.0 * rv * gv2 + mu
    out = np.empty_like(rhs)
    for c in range(rhs.shape[0]):
        out[c] = np.fft.irfft2(np.fft.rfft2(rhs[c]) / denom, s=(h, w))
    return out


def _cg_solve(matvec, rhs, x0, tol, max_iters):
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs)
    x = x0.copy()
    r = rhs - matvec(x)
    p = r.copy()
    rs = float(np.vdot(r, r).real)
    for it in range(max_iters):
        if np.sqrt(rs) <= 0.5 * tol * rhs_norm:
            break
        ap = matvec(p)
        pap = float(np.vdot(p, ap).real)
        if pap <= 0.0:
            break
        a = rs / pap
        x += a * p
        r -= a * ap
        rs_new = float(np.vdot(r, r).real)
        p = r + (rs_new / rs) * p
        rs = rs_new
    true_res = float(np.linalg.norm(rhs - matvec(x))) / rhs_norm
    if true_res > tol:
        raise NumericalError(
            f"CG stalled at relative residual {true_res:.3e} > {tol:.3e}",
            residual=true_res,
        )
    return x


def hqs_energy(model: FeasibilityModel, x, zh, zv) -> float:
    """Splitting objective tracked across alternations (test hook)."""
    rh, rv = model.hqs_rho
    res = model.data_op._apply(x) - model.observation.data
    e = 0.5 * float(np.vdot(res, res).real)
    dh = zh - _GH._apply(x)
    dv = zv - _GV._apply(x)
    e += rh * float(np.vdot(dh, dh).real) + rv * float(np.vdot(dv, dv).real)
    e += model.tv_weight * (lp_penalty(zh, model.tv_q) + lp_penalty(zv, model.tv_q))
    if model.anchor is not None:
        x_tilde, mu = model.anchor
        d = x - x_tilde.data
        e += 0.5 * mu * float(np.vdot(d, d).real)
    return e


def _hqs(model: FeasibilityModel, x_init: ImageTensor, energy_log=None, aux=None):
    k_op = model.data_op
    b = model.observation.data
    if x_init.shape != b.shape:
        raise ConfigError("x_init shape differs from observation")
    rh, rv = model.hqs_rho
    if model.anchor is not None:
        x_tilde, mu = model.anchor
        anchor_arr = x_tilde.data
    else:
        anchor_arr, mu = None, 0.0
    spec_h = ProxSpec(model.tv_q, model.tv_weight / (2.0 * rh))
    spec_v = ProxSpec(model.tv_q, model.tv_weight / (2.0 * rv))
    ktb = k_op._adjoint(b)

    x = x_init.data.copy()
    if energy_log is not None:
        energy_log.append(hqs_energy(model, x, _GH._apply(x), _GV._apply(x)))

    def matvec(v):
        out = k_op._adjoint(k_op._apply(v))
        out += 2.0 * rh * _GH._adjoint(_GH._apply(v))
        out += 2.0 * rv * _GV._adjoint(_GV._apply(v))
        if mu > 0.0:
            out += mu * v
        return out

    for _ in range(model.hqs_iters):
        zh = prox_lp_array(_GH._apply(x), spec_h)
        zv = prox_lp_array(_GV._apply(x), spec_v)
        rhs = ktb + 2.0 * rh * _GH._adjoint(zh) + 2.0 * rv * _GV._adjoint(zv)
        if anchor_arr is not None:
            rhs = rhs + mu * anchor_arr
        if model.x_solver == "fft":
            x = _fft_solve(model, rhs, mu)
        else:
            x = _cg_solve(matvec, rhs, x, model.cg_tol, model.cg_max_iters)
        if energy_log is not None:
            energy_log.append(hqs_energy(model, x, zh, zv))
    if aux is not None:
        aux["zh"], aux["zv"], aux["rhs"] = zh, zv, rhs
    return ImageTensor(x)


def solve_G(model: FeasibilityModel, x_init: ImageTensor, energy_log=None, aux=None) -> ImageTensor:
    """Approximately minimize the TV feasibility model from a warm start."""
    if model.anchor is not None:
        raise ValidationError("solve_G expects no anchor; use solve_G_mu")
    return _hqs(model, x_init, energy_log, aux)


def solve_G_mu(model: FeasibilityModel, x_init: ImageTensor, energy_log=None, aux=None) -> ImageTensor:
    """Anchored variant: same alternation with the +mu*I proximal term."""
    if model.anchor is None:
        raise ValidationError("solve_G_mu requires an anchor (x_tilde, mu)")
    if model.anchor[1] <= 0:
        raise ValidationError("solve_G_mu requires mu > 0; use solve_G for mu = 0")
    return _hqs(model, x_init, energy_log, aux)
