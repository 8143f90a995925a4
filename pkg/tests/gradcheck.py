"""Central finite-difference gradient oracle for the neural tests.

The oracle perturbs one parameter coordinate at a time and compares
(f(theta+h) - f(theta-h)) / 2h against autograd, reporting relative error per
named parameter group. Loss closures must be deterministic pure functions of
the parameters (eval mode, fixed perturbations, no RNG).

For the 32-bit check the finite differences themselves are computed on a
float64 twin of the same parameter values: float32 differences are rounding
dominated, while the float32 autograd result must still agree with the true
gradient to the 32-bit tolerance.
"""

from __future__ import annotations

from typing import Callable

import torch


def finite_difference_gradients(
    loss_fn: Callable[[], torch.Tensor],
    named_params: dict[str, torch.nn.Parameter],
    h: float,
) -> dict[str, torch.Tensor]:
    """Central-difference gradient tensor per named parameter."""
    out: dict[str, torch.Tensor] = {}
    for name, param in named_params.items():
        numeric = torch.zeros_like(param)
        flat = param.data.view(-1)
        numeric_flat = numeric.view(-1)
        for i in range(flat.numel()):
            original = flat[i].item()
            flat[i] = original + h
            with torch.no_grad():
                plus = float(loss_fn())
            flat[i] = original - h
            with torch.no_grad():
                minus = float(loss_fn())
            flat[i] = original
            numeric_flat[i] = (plus - minus) / (2.0 * h)
        out[name] = numeric
    return out


def autograd_gradients(
    loss_fn: Callable[[], torch.Tensor],
    named_params: dict[str, torch.nn.Parameter],
) -> dict[str, torch.Tensor]:
    params = list(named_params.values())
    grads = torch.autograd.grad(loss_fn(), params, allow_unused=True)
    return {
        name: (torch.zeros_like(p) if g is None else g.detach())
        for (name, p), g in zip(named_params.items(), grads)
    }


def relative_errors(
    analytic: dict[str, torch.Tensor], reference: dict[str, torch.Tensor]
) -> dict[str, float]:
    """|g_a - g_ref| / max(|g_a|, |g_ref|) per group, in float64."""
    errors: dict[str, float] = {}
    for name, g in analytic.items():
        a = g.double()
        r = reference[name].double()
        scale = max(float(a.norm()), float(r.norm()), 1e-8)
        errors[name] = float((a - r).norm()) / scale
    return errors


def finite_difference_errors(
    loss_fn: Callable[[], torch.Tensor],
    named_params: dict[str, torch.nn.Parameter],
    h: float,
) -> dict[str, float]:
    analytic = autograd_gradients(loss_fn, named_params)
    numeric = finite_difference_gradients(loss_fn, named_params, h)
    return relative_errors(analytic, numeric)


def max_relative_error(
    loss_fn: Callable[[], torch.Tensor],
    named_params: dict[str, torch.nn.Parameter],
    h: float,
) -> float:
    return max(finite_difference_errors(loss_fn, named_params, h).values())
