"""Versioned JSON serialization of fitted models.

A model file bundles the per-(arm, outcome) marginal fits, the per-arm
copula fits, and the trained policy network (layer dimensions plus flat
weight arrays). Floats round-trip exactly through the JSON text, so a
loaded model reproduces in-memory decisions bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .copula import CopulaFamily, CopulaFit, JointModel
from .data import WeightConfig
from .marginal import MarginalFit
from .pipeline import ItrModel
from .policy import PolicyNetwork

__all__ = ["ModelFormatError", "MODEL_FORMAT", "MODEL_VERSION", "save_model", "load_model"]

MODEL_FORMAT = "survitr-model"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    pass


def _model_dict(model: ItrModel) -> dict:
    marginals = []
    copulas = []
    for a in sorted(model.joint.arms):
        m1, m2, cf = model.joint.arms[a]
        for fit in (m1, m2):
            marginals.append(
                {
                    "arm": int(fit.a),
                    "outcome": int(fit.j),
                    "beta": [float(b) for b in fit.beta],
                    "gamma": float(fit.gamma),
                    "c1": float(fit.c.c1),
                    "c2": float(fit.c.c2),
                }
            )
        copulas.append(
            {
                "arm": int(cf.a),
                "family": cf.family.value,
                "theta": float(cf.theta),
                "neg_loglik": float(cf.neg_loglik),
            }
        )
    net = model.net
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "p": int(model.p),
        "K": int(model.K),
        "target_times": [float(t) for t in model.target_times],
        "c": [float(model.c.c1), float(model.c.c2)],
        "marginals": marginals,
        "copulas": copulas,
        "policy": {
            "dims": [int(d) for d in net.dims],
            "weights": [[float(v) for v in w.ravel()] for w in net.weights],
            "biases": [[float(v) for v in b] for b in net.biases],
        },
    }


def save_model(model: ItrModel, path) -> None:
    """Write the fitted model to ``path`` as versioned JSON."""
    with open(path, "w") as fh:
        json.dump(_model_dict(model), fh, indent=1)
        fh.write("\n")


def _require(d: dict, key: str, ctx: str):
    if key not in d:
        raise ModelFormatError(f"model file: missing '{key}' in {ctx}")
    return d[key]


def load_model(path) -> ItrModel:
    """Read a model file written by :func:`save_model`."""
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model file is not valid JSON: {exc}") from None
    if raw.get("format") != MODEL_FORMAT:
        raise ModelFormatError(f"not a {MODEL_FORMAT} file")
    if raw.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {raw.get('version')!r}")
    p = int(_require(raw, "p", "header"))
    K = int(_require(raw, "K", "header"))
    t1, t2 = (float(t) for t in _require(raw, "target_times", "header"))
    c1, c2 = (float(v) for v in _require(raw, "c", "header"))
    c = WeightConfig(c1, c2)

    fits = {}
    for m in _require(raw, "marginals", "body"):
        a = int(_require(m, "arm", "marginal"))
        j = int(_require(m, "outcome", "marginal"))
        fits[(a, j)] = MarginalFit(
            beta=np.array([float(b) for b in _require(m, "beta", "marginal")]),
            gamma=float(_require(m, "gamma", "marginal")),
            j=j,
            a=a,
            c=WeightConfig(float(m.get("c1", c1)), float(m.get("c2", c2))),
        )
    cops = {}
    for cp in _require(raw, "copulas", "body"):
        a = int(_require(cp, "arm", "copula"))
        cops[a] = CopulaFit(
            family=CopulaFamily(_require(cp, "family", "copula")),
            theta=float(_require(cp, "theta", "copula")),
            a=a,
            neg_loglik=float(cp.get("neg_loglik", float("nan"))),
        )
    arms = {}
    for a in range(K + 1):
        if (a, 1) not in fits or (a, 2) not in fits or a not in cops:
            raise ModelFormatError(f"model file: arm {a} fits incomplete")
        arms[a] = (fits[(a, 1)], fits[(a, 2)], cops[a])

    pol = _require(raw, "policy", "body")
    dims = [int(d) for d in _require(pol, "dims", "policy")]
    if len(dims) < 2 or dims[0] != p or dims[-1] != K + 1:
        raise ModelFormatError(f"policy dims {dims} inconsistent with p={p}, K={K}")
    weights = []
    for layer, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:])):
        flat = np.array([float(v) for v in _require(pol, "weights", "policy")[layer]])
        if flat.size != d_in * d_out:
            raise ModelFormatError(f"policy layer {layer}: expected {d_in * d_out} weights")
        weights.append(flat.reshape(d_out, d_in))
    biases = []
    for layer, d_out in enumerate(dims[1:]):
        b = np.array([float(v) for v in _require(pol, "biases", "policy")[layer]])
        if b.size != d_out:
            raise ModelFormatError(f"policy layer {layer}: expected {d_out} biases")
        biases.append(b)
    net = PolicyNetwork(weights=weights, biases=biases)
    return ItrModel(joint=JointModel(arms=arms), net=net, target_times=(t1, t2), c=c, p=p, K=K)
