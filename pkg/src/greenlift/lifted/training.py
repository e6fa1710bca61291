"""Training loop for the lifted kernel network.

Two phases.  Minibatch Adam first: each epoch draws a subset of the fixed
sample sets, assembles the weighted residual loss on a TapedNet, and takes
one step.  Optionally a deterministic L-BFGS phase follows on a fixed
subsample: the near-resonant kernel modes (|j^2 pi^2 - k^2| small) carry
the weakest gradient signal, and first-order steps leave them orders of
magnitude short of convergence; the quasi-Newton phase is what actually
drives the interior residual down.  Checkpoints are written atomically at
a fixed cadence; a non-finite loss aborts the run and keeps the last good
parameters.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
import scipy.optimize

from .._alloc import tune_for_large_batches
from ..net import (AdamState, MlpParams, NonFiniteLossError, TapedNet,
                   adam_step, flat_to_params, init_params, loss_grad,
                   params_to_flat, save_checkpoint)
from ..problems import ProblemSpec
from .losses import PenaltyWeights, loss_terms
from .sampling import SampleSets, draw_minibatch, sample_training_sets

SMOOTH_TERMS = ["L_interior", "L_boundary", "L_gamma", "L_sym"]
PIECEWISE_TERMS = SMOOTH_TERMS + ["L_sigma", "L_sigma_star", "L_alpha"]


@dataclass
class TrainConfig:
    hidden_widths: list[int] = field(default_factory=lambda: [40, 40, 40, 40])
    epochs: int = 30000
    seed: int = 0
    lr: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    n_x: int = 160
    n_y: int = 160
    n_boundary: int = 2
    n_gamma: int = 500
    n_sigma: int = 0
    n_alpha: int = 0
    betas: PenaltyWeights = field(default_factory=PenaltyWeights)
    # epoch-indexed overrides, applied from the given epoch onward
    boundary_schedule: Optional[dict[int, Union[float, tuple[float, float]]]] = None
    lr_schedule: Optional[dict[int, float]] = None
    minibatch_x: Optional[int] = 32
    minibatch_y: Optional[int] = None
    minibatch_gamma: Optional[int] = None
    minibatch_sigma: Optional[int] = None
    checkpoint_every: int = 5000
    # deterministic quasi-Newton phase after the Adam epochs
    lbfgs_iters: int = 0
    lbfgs_y: Optional[int] = None       # y columns kept in its fixed objective
    lbfgs_history: int = 50

    def config_hash(self) -> str:
        blob = json.dumps(self.__dict__, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class TrainResult:
    params: MlpParams
    history: list[dict]
    checkpoint_path: Optional[str]
    aborted: bool = False
    sets: Optional[SampleSets] = None


def _scheduled(value, schedule, epoch):
    if not schedule:
        return value
    for e in sorted(schedule):
        if epoch >= e:
            value = schedule[e]
    return value


def write_loss_history(path: str, history: list[dict], piecewise: bool):
    cols = ["epoch"] + (PIECEWISE_TERMS if piecewise else SMOOTH_TERMS) + ["total"]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cols)
        for row in history:
            w.writerow([row["epoch"]] + [repr(row[c]) for c in cols[1:]])


def train(spec: ProblemSpec, config: TrainConfig, *,
          out_dir: Optional[str] = None,
          snapshot_hook=None) -> TrainResult:
    """Run Alg.-style minibatch training; returns final parameters.

    ``snapshot_hook(epoch, params)`` is invoked at checkpoint cadence (used
    by the spectral-bias tracker).
    """
    tune_for_large_batches()
    rng = np.random.default_rng(config.seed)
    input_dim = 5 if spec.is_piecewise else 3
    params = init_params(input_dim, config.hidden_widths, rng)
    sets = sample_training_sets(
        spec, rng, n_x=config.n_x, n_y=config.n_y, n_boundary=config.n_boundary,
        n_gamma=config.n_gamma, n_sigma=config.n_sigma, n_alpha=config.n_alpha)

    state = AdamState(lr=config.lr, beta1=config.adam_beta1, beta2=config.adam_beta2)
    history: list[dict] = []
    ckpt_path = os.path.join(out_dir, "kernel.ngf") if out_dir else None
    meta = {
        "problem": spec.name,
        "alpha": spec.alpha,
        "seed": config.seed,
        "config_hash": config.config_hash(),
    }
    last_good = params
    aborted = False

    for epoch in range(config.epochs):
        betas = PenaltyWeights(
            boundary=_scheduled(config.betas.boundary, config.boundary_schedule, epoch),
            gamma=config.betas.gamma, sym=config.betas.sym,
            sigma=config.betas.sigma, alpha=config.betas.alpha)
        state.lr = _scheduled(config.lr, config.lr_schedule, epoch)
        batch = draw_minibatch(sets, rng, mb_x=config.minibatch_x,
                               mb_y=config.minibatch_y,
                               mb_gamma=config.minibatch_gamma,
                               mb_sigma=config.minibatch_sigma)
        net = TapedNet(params)
        try:
            terms = loss_terms(net, batch, spec, betas)
        except NonFiniteLossError:
            aborted = True
            params = last_good
            break
        total = terms["total"]
        row = {"epoch": epoch, "total": float(total.data)}
        for name, t in terms.items():
            if name != "total":
                row[name] = float(t.data)
        history.append(row)
        grad = net.grad(total)
        params, state = adam_step(params, grad, state)

        if (epoch + 1) % config.checkpoint_every == 0 or epoch + 1 == config.epochs:
            last_good = params
            if ckpt_path:
                save_checkpoint(ckpt_path, params, dict(meta, epoch=epoch + 1))
            if snapshot_hook is not None:
                snapshot_hook(epoch + 1, params)

    if config.lbfgs_iters > 0 and not aborted:
        params, lb_history, aborted = _lbfgs_phase(
            params, sets, spec, config, rng, history_offset=len(history),
            ckpt_path=ckpt_path, meta=meta, snapshot_hook=snapshot_hook)
        history.extend(lb_history)

    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        if ckpt_path:
            save_checkpoint(ckpt_path, params, dict(meta, epoch=len(history)))
        write_loss_history(os.path.join(out_dir, "loss_history.csv"),
                           history, spec.is_piecewise)
    return TrainResult(params=params, history=history,
                       checkpoint_path=ckpt_path, aborted=aborted, sets=sets)


def _lbfgs_phase(params: MlpParams, sets: SampleSets, spec: ProblemSpec,
                 config: TrainConfig, rng: np.random.Generator, *,
                 history_offset: int, ckpt_path, meta, snapshot_hook):
    """Deterministic L-BFGS on a fixed (optionally y-thinned) objective."""
    fixed = sets
    if config.lbfgs_y is not None and config.lbfgs_y < sets.y_interior.shape[1]:
        cols = rng.choice(sets.y_interior.shape[1], size=config.lbfgs_y, replace=False)
        fixed = replace(sets, y_interior=sets.y_interior[:, np.sort(cols)])
    betas = PenaltyWeights(
        boundary=_scheduled(config.betas.boundary, config.boundary_schedule,
                            max(config.epochs - 1, 0)),
        gamma=config.betas.gamma, sym=config.betas.sym,
        sigma=config.betas.sigma, alpha=config.betas.alpha)

    template = params
    last_terms: dict = {}

    def objective(net):
        terms = loss_terms(net, fixed, spec, betas)
        last_terms.clear()
        for k, v in terms.items():
            last_terms[k] = float(v.data)
        return terms["total"]

    def fun(x):
        p = flat_to_params(template, x)
        val, grad = loss_grad(p, objective)
        return val, grad.ravel()

    history: list[dict] = []
    it = {"n": 0}

    def callback(xk):
        it["n"] += 1
        row = {"epoch": history_offset + it["n"]}
        row.update(last_terms)
        history.append(row)
        if it["n"] % config.checkpoint_every == 0:
            p = flat_to_params(template, xk)
            if ckpt_path:
                save_checkpoint(ckpt_path, p, dict(meta, epoch=row["epoch"]))
            if snapshot_hook is not None:
                snapshot_hook(row["epoch"], p)

    x0 = params_to_flat(params)
    aborted = False
    try:
        res = scipy.optimize.minimize(
            fun, x0, jac=True, method="L-BFGS-B", callback=callback,
            options={"maxiter": config.lbfgs_iters,
                     "maxcor": config.lbfgs_history,
                     "maxfun": 3 * config.lbfgs_iters,
                     "ftol": 0.0, "gtol": 0.0})
        params = flat_to_params(template, res.x)
    except NonFiniteLossError:
        aborted = True
    return params, history, aborted
