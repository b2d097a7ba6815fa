"""Command-line front end.

Settings resolve as: built-in defaults < ``--config`` JSON file <
``PHASEBOUND_*`` environment variables < command-line flags.

Exit codes: 0 success, 1 numerical failure, 2 bad input or inapplicable
question.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import IndexOutOfRange, InvalidParams, NumericalError, PreconditionError
from .limits import (
    bohr_sommerfeld_levels,
    delta_limit_energy,
    nonrelativistic_levels,
)
from .phase_ode import IntegratorControl
from .portrait import field_grid, separatrix_in_phase_space
from .potentials import make_potential, monotone_decomposition, parse_potential_spec
from .spectrum import count_levels, edge_branches, find_eigenvalues
from .wavefunction import reconstruct

DEFAULTS = {
    "potential": None,
    "kind": None,
    "U0": None,
    "d": None,
    "G": None,
    "h1": None,
    "h2": None,
    "file": None,
    "py": None,
    "tol_phase": 1e-9,
    "classify_tol": 1e-3,
    "refine_tol": None,
    "eps_edge": 1e-6,
    "out": ".",
    "threads": None,
    "polish": False,
    "index": 0,
    "E": None,
    "seed_perturbation": 0.05,
    "resolution": [64, 128],
}

_FLOATS = {"U0", "d", "G", "h1", "h2", "py", "tol_phase", "classify_tol", "refine_tol", "eps_edge", "E", "seed_perturbation"}
_INTS = {"threads", "index"}
_BOOLS = {"polish"}


def _coerce(key, value):
    if value is None:
        return None
    if key in _FLOATS:
        return float(value)
    if key in _INTS:
        return int(value)
    if key in _BOOLS:
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)
    if key == "resolution" and isinstance(value, str):
        return [int(t) for t in value.replace("x", ",").split(",")]
    return value


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("potential")
    g.add_argument("--potential", help="spec string, e.g. 'kind=sech U0=1 d=1'")
    g.add_argument("--kind", choices=["delta", "sech", "exponential", "lorentzian", "topgate", "tabulated"])
    for name in ("U0", "d", "G", "h1", "h2"):
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--file", help="two-column 'x U' table for kind=tabulated")
    s = common.add_argument_group("solver")
    s.add_argument("--py", type=float, help="transverse momentum p_y > 0")
    s.add_argument("--tol-phase", dest="tol_phase", type=float)
    s.add_argument("--classify-tol", dest="classify_tol", type=float)
    s.add_argument("--refine-tol", dest="refine_tol", type=float)
    s.add_argument("--eps-edge", dest="eps_edge", type=float)
    s.add_argument("--polish", action="store_const", const=True, default=None)
    s.add_argument("--threads", type=int)
    o = common.add_argument_group("output")
    o.add_argument("--out", help="output directory")
    o.add_argument("--config", help="JSON file with any of the settings above")

    p = argparse.ArgumentParser(prog="phasebound", description="Bound states of 2D Dirac-Weyl particles in 1D potentials.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("count", parents=[common], help="number of levels in the gap")
    sub.add_parser("spectrum", parents=[common], help="eigenvalues and staircase")
    w = sub.add_parser("wavefunction", parents=[common], help="spinor samples of one level")
    w.add_argument("--index", type=int, help="0-based level index, ascending in E")
    pp = sub.add_parser("portrait", parents=[common], help="phase-portrait fields and ring trajectory")
    pp.add_argument("--E", type=float, help="energy inside the gap")
    pp.add_argument("--seed-perturbation", dest="seed_perturbation", type=float)
    pp.add_argument("--resolution", help="U x Omega samples, e.g. 64x128")
    sub.add_parser("validate", parents=[common], help="compare against analytic limits")
    return p


def resolve_config(args: argparse.Namespace, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise InvalidParams(f"cannot read config {args.config}: {exc}") from None
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise InvalidParams(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update({k: _coerce(k, v) for k, v in data.items()})
    for key in DEFAULTS:
        env = environ.get("PHASEBOUND_" + key.upper())
        if env is not None:
            try:
                cfg[key] = _coerce(key, env)
            except ValueError:
                raise InvalidParams(f"bad value for PHASEBOUND_{key.upper()}: {env!r}") from None
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = _coerce(key, val)
    return cfg


def _potential(cfg):
    if cfg["potential"]:
        return parse_potential_spec(cfg["potential"])
    if not cfg["kind"]:
        raise InvalidParams("give --kind (with its parameters) or --potential")
    params = {k: cfg[k] for k in ("U0", "d", "G", "h1", "h2", "file") if cfg[k] is not None}
    return make_potential(cfg["kind"], params)


def _control(cfg) -> IntegratorControl:
    return IntegratorControl(
        tol_phase=cfg["tol_phase"],
        classify_tol=cfg["classify_tol"],
        eps_edge=cfg["eps_edge"],
        refine_tol=cfg["refine_tol"],
    )


def _py(cfg) -> float:
    p = cfg["py"]
    if p is None or not (math.isfinite(p) and p > 0):
        raise InvalidParams("--py must be a positive number")
    return p


def _workers(cfg) -> int:
    return cfg["threads"] if cfg["threads"] else (os.cpu_count() or 1)


def _out(cfg) -> Path:
    path = Path(cfg["out"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _spectrum(cfg, pot, p, ctrl):
    return find_eigenvalues(pot, p, ctrl=ctrl, polish=cfg["polish"], workers=_workers(cfg))


def cmd_count(cfg) -> dict:
    pot, p, ctrl = _potential(cfg), _py(cfg), _control(cfg)
    lo, hi = edge_branches(pot, p, ctrl)
    return {"p_y": p, "N_d": lo - hi, "branch_lower_edge": lo, "branch_upper_edge": hi}


def cmd_spectrum(cfg) -> dict:
    pot, p, ctrl = _potential(cfg), _py(cfg), _control(cfg)
    rep = _spectrum(cfg, pot, p, ctrl)
    out = _out(cfg)
    data = rep.to_dict()
    io.write_json(out / "spectrum.json", data)
    io.write_csv(
        out / "staircase.csv",
        ["E", "branch"],
        zip(rep.staircase.energies, rep.staircase.branches),
        {"p_y": p, "N_d": rep.N_d},
    )
    return {"p_y": p, "N_d": rep.N_d, "eigenvalues": data["eigenvalues"]}


def cmd_wavefunction(cfg) -> dict:
    pot, p, ctrl = _potential(cfg), _py(cfg), _control(cfg)
    rep = _spectrum(cfg, pot, p, ctrl)
    idx = cfg["index"]
    if not 0 <= idx < len(rep.eigenvalues):
        raise IndexOutOfRange(f"level index {idx} out of range; N_d = {len(rep.eigenvalues)}")
    E_d = rep.eigenvalues[idx].E
    s = reconstruct(pot, p, E_d, ctrl=ctrl)
    path = io.write_csv(
        _out(cfg) / f"wavefunction_{idx}.csv",
        ["x", "omega", "R", "phi", "rho"],
        zip(s.x, s.omega, s.R, s.phi, s.rho),
        {
            "p_y": p,
            "E_d": E_d,
            "W": s.W,
            "k": s.k,
            "note": "psi = R/sqrt(W) (cos(omega/2), -i sin(omega/2)); factors exp(i p_y y) and exp(i int(E-U)) omitted",
        },
    )
    return {"p_y": p, "index": idx, "E_d": E_d, "W": s.W, "k": s.k, "samples": int(s.x.size), "file": str(path)}


def cmd_portrait(cfg) -> dict:
    pot, p, ctrl = _potential(cfg), _py(cfg), _control(cfg)
    E = cfg["E"]
    if E is None:
        raise InvalidParams("portrait needs --E")
    res = separatrix_in_phase_space(pot, p, E, cfg["seed_perturbation"], ctrl=ctrl)
    out = _out(cfg)
    dec = monotone_decomposition(pot)
    for j in range(dec.n_pieces):
        grid = field_grid(pot, p, E, j, tuple(cfg["resolution"]), ctrl=ctrl)
        io.write_csv(out / f"field_{j}.csv", ["U", "omega", "FU", "Fomega"], grid.rows(), {"E": E, "p_y": p, "interval": j})
        tr = res.traces[j]
        io.write_csv(out / f"trajectory_{j}.csv", ["U", "omega"], zip(tr.U, tr.omega), {"E": E, "p_y": p, "interval": j})
    io.write_csv(out / "ring.csv", ["X", "Y"], zip(res.ring.X, res.ring.Y), {"E": E, "p_y": p, "a": res.ring.a})
    data = {"E": E, "p_y": p, "winding": res.ring.winding, "a": res.ring.a, "intervals": dec.n_pieces}
    io.write_json(out / "portrait.json", data)
    return data


def cmd_validate(cfg) -> dict:
    pot, p, ctrl = _potential(cfg), _py(cfg), _control(cfg)
    rep = _spectrum(cfg, pot, p, ctrl)
    levels = rep.energies
    rows = []

    def row(limit, fn):
        try:
            rows.append({"limit": limit, **fn()})
        except (PreconditionError, NumericalError) as exc:
            rows.append({"limit": limit, "predicted": None, "numeric": None, "discrepancy": None,
                         "validity_metric": None, "skipped": f"{type(exc).__name__}: {exc}"})

    def delta():
        r = delta_limit_energy(pot, p)
        num = float(levels[np.argmin(np.abs(levels - r.E_pred))]) if levels.size else None
        disc = None if num is None else abs(num - r.E_pred) / p
        return {"predicted": r.E_pred, "numeric": num, "discrepancy": disc, "validity_metric": r.validity}

    def nonrel():
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            nr = nonrelativistic_levels(pot, p)
        if not nr.size or not levels.size:
            raise InvalidParams("no bound levels to compare")
        eps_nr = nr[0] - p
        eps_num = float(levels[0]) - p
        return {"predicted": eps_nr, "numeric": eps_num, "discrepancy": abs(eps_num - eps_nr) / abs(eps_nr),
                "validity_metric": pot.sup_abs / p}

    def semi():
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            bs = bohr_sommerfeld_levels(pot, p, ctrl=ctrl)
        val = float(np.median([lv.validity for lv in bs])) if bs else None
        return {"predicted": len(bs), "numeric": rep.N_d, "discrepancy": abs(len(bs) - rep.N_d), "validity_metric": val}

    row("delta", delta)
    row("nonrelativistic", nonrel)
    row("semiclassical", semi)
    data = {"p_y": p, "N_d": rep.N_d, "rows": rows}
    io.write_json(_out(cfg) / "validate.json", data)
    return data


COMMANDS = {
    "count": cmd_count,
    "spectrum": cmd_spectrum,
    "wavefunction": cmd_wavefunction,
    "portrait": cmd_portrait,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        result = COMMANDS[args.command](cfg)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    print(io.dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
