"""Command-line pipeline: ``ewlab <mode> --config file.toml [--out dir]``.

Modes: simulate, classify, spectral, scan, reconstruct, energy, check.
Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 invariant failure.  EWLAB_THREADS caps the scan parallelism.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__, kernels
from . import dirac, elflow, killing, reconstruct, spectral
from .elflow import ELParams, HopfJet, Trajectory
from .seifert import SeifertType

EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_INVARIANT = 3

_NUMERICAL_ERRORS = (OverflowError, ZeroDivisionError,
                     dirac.AperiodicPotentialError, dirac.RefineGridError,
                     reconstruct.ReconstructionDivergedError)


class ConfigError(ValueError):
    pass


_SCHEMA = {
    "initial": {"q", "qp", "xi0"},
    "params": {"lam", "C"},
    "seifert": {"m", "n"},
    "numerics": {"step", "length", "tol", "a_grid"},
    "reconstruct": {"n_x", "h0", "branch"},
    "input": {"trajectory"},
    "output": {"prefix"},
}


@dataclass
class RunConfig:
    mode: str
    q0: complex
    qp0: complex
    xi0: float
    lam: complex
    C: float
    m: int = 1
    n: int = 1
    step: float = 1e-3
    length: float = 10.0
    tol: float = 1e-6
    a_grid: np.ndarray = field(default_factory=lambda: _default_grid())
    a_grid_spec: dict = field(default_factory=dict)
    n_x: int = 64
    h0: float | None = None
    branch: str = "plus"
    input_trajectory: str | None = None
    prefix: str = "run"
    config_sha256: str = ""


def _default_grid() -> np.ndarray:
    re = np.linspace(-3.0, 3.0, 41)
    im = np.linspace(-3.0, 3.0, 41)
    return (re[:, None] + 1j * im[None, :]).ravel()


def _pair(value, where: str) -> complex:
    if (not isinstance(value, list) or len(value) != 2
            or not all(isinstance(v, (int, float)) for v in value)):
        raise ConfigError(f"{where}: expected [re, im] pair")
    return complex(float(value[0]), float(value[1]))


def _num(doc, section, key, default, where):
    v = doc.get(section, {}).get(key, default)
    if not isinstance(v, (int, float)) or isinstance(v, bool) \
            or not math.isfinite(float(v)):
        raise ConfigError(f"{where}: must be a finite number")
    return float(v)


def parse_config(text: str, mode: str) -> RunConfig:
    """TOML document -> RunConfig with validation and defaults."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax error: {exc}") from exc

    for section, table in doc.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(table, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key in table:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")

    needs_jet = mode != "check" or "input" not in doc
    if needs_jet:
        missing = [s for s in ("initial", "params") if s not in doc]
        if missing:
            raise ConfigError(
                "missing required sections: "
                + ", ".join(f"[{s}]" for s in missing)
                + " (required keys: initial.q, initial.qp, params.lam, "
                  "params.C)")

    init = doc.get("initial", {})
    par = doc.get("params", {})
    q0 = _pair(init.get("q", [0.0, 0.0]), "initial.q")
    qp0 = _pair(init.get("qp", [0.0, 0.0]), "initial.qp")
    xi0 = _num(doc, "initial", "xi0", 0.0, "initial.xi0")
    lam = _pair(par.get("lam", [0.0, 0.0]), "params.lam")
    C = _num(doc, "params", "C", 0.0, "params.C")

    m = doc.get("seifert", {}).get("m", 1)
    n = doc.get("seifert", {}).get("n", 1)
    if not isinstance(m, int) or not isinstance(n, int):
        raise ConfigError("seifert.m and seifert.n must be integers")
    if m < 0 or n < 0 or math.gcd(m, n) != 1:
        raise ConfigError("gcd(m,n) must be 1")

    step = _num(doc, "numerics", "step", 1e-3, "numerics.step")
    length = _num(doc, "numerics", "length", 10.0, "numerics.length")
    tol = _num(doc, "numerics", "tol", 1e-6, "numerics.tol")
    if step <= 0:
        raise ConfigError("numerics.step: must be > 0")
    if length <= 0:
        raise ConfigError("numerics.length: must be > 0")

    grid_spec = doc.get("numerics", {}).get("a_grid", {})
    if grid_spec and not isinstance(grid_spec, dict):
        raise ConfigError("numerics.a_grid must be a table")
    if "values" in grid_spec:
        grid = np.array([_pair(v, "a_grid.values") for v in
                         grid_spec["values"]], dtype=complex)
        spec_out = {"values": len(grid)}
    elif grid_spec:
        def axis(key):
            v = grid_spec.get(key, [-3.0, 3.0, 41])
            if (not isinstance(v, list) or len(v) != 3
                    or not isinstance(v[2], int) or v[2] < 1):
                raise ConfigError(f"a_grid.{key}: expected [start, stop, count]")
            return np.linspace(float(v[0]), float(v[1]), v[2]), \
                {"start": float(v[0]), "stop": float(v[1]), "count": v[2]}
        for key in grid_spec:
            if key not in ("re", "im", "values"):
                raise ConfigError(f"unknown key numerics.a_grid.{key}")
        re, re_spec = axis("re")
        im, im_spec = axis("im")
        grid = (re[:, None] + 1j * im[None, :]).ravel()
        spec_out = {"re": re_spec, "im": im_spec}
    else:
        grid = _default_grid()
        spec_out = {"re": {"start": -3.0, "stop": 3.0, "count": 41},
                    "im": {"start": -3.0, "stop": 3.0, "count": 41}}

    rec = doc.get("reconstruct", {})
    n_x = rec.get("n_x", 64)
    if not isinstance(n_x, int) or n_x < 8:
        raise ConfigError("reconstruct.n_x must be an integer >= 8")
    h0 = rec.get("h0")
    if h0 is not None and not isinstance(h0, (int, float)):
        raise ConfigError("reconstruct.h0 must be a number")
    branch = rec.get("branch", "plus")
    if branch not in ("plus", "minus"):
        raise ConfigError("reconstruct.branch must be 'plus' or 'minus'")

    traj_path = doc.get("input", {}).get("trajectory")
    if traj_path is not None and not isinstance(traj_path, str):
        raise ConfigError("input.trajectory must be a path string")
    prefix = doc.get("output", {}).get("prefix", "run")
    if not isinstance(prefix, str):
        raise ConfigError("output.prefix must be a string")

    return RunConfig(mode=mode, q0=q0, qp0=qp0, xi0=xi0, lam=lam, C=C,
                     m=m, n=n, step=step, length=length, tol=tol,
                     a_grid=grid, a_grid_spec=spec_out, n_x=n_x,
                     h0=None if h0 is None else float(h0), branch=branch,
                     input_trajectory=traj_path, prefix=prefix,
                     config_sha256=hashlib.sha256(text.encode()).hexdigest())


# ---------------------------------------------------------------------------
# serialization helpers

def _round17(obj):
    if isinstance(obj, float):
        return float("%.17g" % obj)
    if isinstance(obj, complex):
        return {"re": _round17(obj.real), "im": _round17(obj.imag)}
    if isinstance(obj, dict):
        return {k: _round17(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round17(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_round17(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return _round17(obj.item())
    if isinstance(obj, np.complexfloating):
        return _round17(complex(obj))
    return obj


def _write_json(path: str, cfg: RunConfig, payload: dict):
    report = {"version": __version__, "backend": kernels.BACKEND,
              "config_sha256": cfg.config_sha256, **payload}
    with open(path, "w") as fh:
        json.dump(_round17(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_trajectory_csv(path: str, traj: Trajectory):
    with open(path, "w") as fh:
        fh.write("y,re_q,im_q,re_qp,im_qp,r\n")
        for i in range(len(traj)):
            row = (traj.y[i], traj.q[i].real, traj.q[i].imag,
                   traj.qp[i].real, traj.qp[i].imag, traj.r[i])
            fh.write(",".join("%.17g" % x for x in row) + "\n")


def _read_trajectory_csv(path: str, params: ELParams) -> Trajectory:
    data = np.genfromtxt(path, delimiter=",", names=True)
    y = np.atleast_1d(data["y"])
    q = np.atleast_1d(data["re_q"]) + 1j * np.atleast_1d(data["im_q"])
    qp = np.atleast_1d(data["re_qp"]) + 1j * np.atleast_1d(data["im_qp"])
    r = np.atleast_1d(data["r"])
    qpp = np.empty_like(q)
    qppp = np.empty_like(q)
    for i in range(len(q)):
        qpp[i], qppp[i], _, _, _ = elflow.el_derivatives(
            complex(q[i]), complex(qp[i]), float(r[i]), params)
    return Trajectory(y, q, qp, qpp, qppp, r, float(y[1] - y[0]), params)


# ---------------------------------------------------------------------------
# mode implementations

def _simulate(cfg: RunConfig) -> Trajectory:
    params = ELParams(cfg.lam, cfg.C)
    jet = HopfJet(cfg.q0, cfg.qp0, xi_im=cfg.xi0)
    return elflow.integrate_el(jet, params, cfg.length, cfg.step)


def _periodic_trajectory(cfg: RunConfig) -> Trajectory:
    """One exact period of the EL run, for monodromy-based modes."""
    traj = _simulate(cfg)
    L = elflow.find_period(traj, tol=1e-4)
    params = ELParams(cfg.lam, cfg.C)
    jet = HopfJet(cfg.q0, cfg.qp0, xi_im=cfg.xi0)
    n = max(200, int(round(L / cfg.step)))
    return elflow.integrate_el(jet, params, L, L / n)


def _el_constants(traj: Trajectory) -> killing.GenusConstants:
    params = traj.params
    ctraj, cparams, _ = elflow.canonicalize_lambda(traj, params)
    dtilde = elflow.first_integral(ctraj.jet(0), cparams)
    c, e = killing.constants_from_el(cparams, dtilde)
    return ctraj, cparams, killing.GenusConstants(c, 0.0, e, dtilde)


def mode_simulate(cfg: RunConfig, out: str) -> int:
    traj = _simulate(cfg)
    _write_trajectory_csv(os.path.join(out, f"{cfg.prefix}_trajectory.csv"),
                          traj)
    _write_json(os.path.join(out, f"{cfg.prefix}_simulate.json"), cfg, {
        "mode": "simulate", "samples": len(traj), "length": traj.length,
        "step": traj.step,
        "final_jet": {"q": complex(traj.q[-1]), "qp": complex(traj.qp[-1]),
                      "r": float(traj.r[-1])},
        "el_residual": elflow.el_residual(traj, traj.params),
    })
    return 0


def mode_classify(cfg: RunConfig, out: str) -> int:
    traj = _simulate(cfg)
    label, evidence = killing.genus_classify(traj, cfg.tol)
    try:
        mu = elflow.isothermic_detect(traj)
    except elflow.DegenerateImmersionError:
        mu = None
    _write_json(os.path.join(out, f"{cfg.prefix}_classify.json"), cfg, {
        "mode": "classify", "genus": label,
        "isothermic": mu is not None,
        "isothermic_mu": mu,
        "evidence": {k: (v if not isinstance(v, dict) else
                         {kk: (vv.__dict__ if hasattr(vv, "__dict__")
                               and not isinstance(vv, (int, float, str))
                               else vv) for kk, vv in v.items()})
                     for k, v in evidence.items()},
    })
    return 0


def _classified_field(traj: Trajectory, tol: float):
    """Canonicalize, classify, and build the matching Killing field."""
    ctraj, _, _ = _el_constants(traj)
    label, _ = killing.genus_classify(ctraj, tol)
    genus = label if isinstance(label, int) else 3
    constants, _ = killing.fit_constants(ctraj, genus)
    return ctraj, genus, constants


def mode_spectral(cfg: RunConfig, out: str) -> int:
    traj = _simulate(cfg)
    ctraj, genus, constants = _classified_field(traj, cfg.tol)
    kf = killing.build_killing_field(ctraj.jet(0), constants, genus)
    curve = spectral.curve_from_field(kf)
    drift = spectral.spectral_invariance(ctraj, constants, genus)
    _write_json(os.path.join(out, f"{cfg.prefix}_spectral.json"), cfg, {
        "mode": "spectral",
        "constants": constants.__dict__,
        "coefficients": list(curve.P.coeffs),
        "branch_points": [{"a": z, "multiplicity": m}
                          for z, m in curve.branch_points],
        "field_genus": genus,
        "genus": curve.genus,
        "evenness_residual": curve.evenness_residual,
        "reality_residual": curve.reality_residual,
        "singular": curve.singular, "degenerate": curve.degenerate,
        "coefficient_drift": drift,
    })
    return 0


def _threads() -> int:
    env = os.environ.get("EWLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("EWLAB_THREADS must be an integer")
    return min(4, os.cpu_count() or 1)


def mode_scan(cfg: RunConfig, out: str) -> int:
    traj = _periodic_trajectory(cfg)
    grid = np.asarray(cfg.a_grid, dtype=complex)
    order = np.lexsort((grid.imag, grid.real))
    samples = dirac.discriminant_scan(traj, grid[order], threads=_threads())
    with open(os.path.join(out, f"{cfg.prefix}_scan.csv"), "w") as fh:
        fh.write("re_a,im_a,re_delta,im_delta,det_defect\n")
        for s in samples:
            fh.write(",".join("%.17g" % x for x in
                              (s.a.real, s.a.imag, s.delta.real,
                               s.delta.imag, s.det_defect)) + "\n")

    ctraj, genus, constants = _classified_field(traj, cfg.tol)
    kf = killing.build_killing_field(ctraj.jet(0), constants, genus)
    curve = spectral.curve_from_field(kf)
    box = float(max(np.abs(grid.real).max(), np.abs(grid.imag).max()))
    report = dirac.branch_match(curve, ctraj, box=box, tol=1e-4)
    _write_json(os.path.join(out, f"{cfg.prefix}_scan.json"), cfg, {
        "mode": "scan", "grid": cfg.a_grid_spec, "genus": genus,
        "branch_match": report, "threads": _threads(),
        "max_det_defect": max(s.det_defect for s in samples),
    })
    return 0


def _reconstruct(cfg: RunConfig):
    traj = _periodic_trajectory(cfg)
    st = SeifertType(cfg.m, cfg.n)
    init = reconstruct.init_profile(complex(traj.q[0]), st,
                                    branch=cfg.branch, h0=cfg.h0)
    curve = reconstruct.integrate_profile(traj, st, init)
    return traj, st, curve


def mode_reconstruct(cfg: RunConfig, out: str) -> int:
    traj, st, curve = _reconstruct(cfg)
    theta, residual = reconstruct.profile_monodromy(curve)
    mesh = reconstruct.build_torus_mesh(curve, cfg.n_x)
    reconstruct.export_curve_csv(
        curve, os.path.join(out, f"{cfg.prefix}_curve.csv"))
    reconstruct.export_obj(
        mesh, os.path.join(out, f"{cfg.prefix}_torus.obj"),
        header={"period": "%.17g" % traj.length,
                "monodromy_theta": "%.17g" % theta})
    _write_json(os.path.join(out, f"{cfg.prefix}_reconstruct.json"), cfg, {
        "mode": "reconstruct", "seifert": {"m": st.m, "n": st.n},
        "period": traj.length, "monodromy_theta": theta,
        "monodromy_residual": residual,
        "rotation_convergents": reconstruct.rotation_convergents(theta),
        "invariants": reconstruct.curve_invariants(curve),
    })
    return 0


def mode_energy(cfg: RunConfig, out: str) -> int:
    traj, st, curve = _reconstruct(cfg)
    mesh = reconstruct.build_torus_mesh(curve, cfg.n_x)
    w_curve, w_mesh = reconstruct.willmore_energy(traj, curve, mesh)
    _write_json(os.path.join(out, f"{cfg.prefix}_energy.json"), cfg, {
        "mode": "energy", "W_curve": w_curve, "W_mesh": w_mesh,
        "kappa_fix": 0.5,
        "consistency": abs(w_mesh - 0.5 * w_curve) / w_mesh
        if w_mesh else None,
    })
    return 0


def mode_check(cfg: RunConfig, out: str) -> int:
    params = ELParams(cfg.lam, cfg.C)
    if cfg.input_trajectory:
        traj = _read_trajectory_csv(cfg.input_trajectory, params)
    else:
        traj = _simulate(cfg)
    scale = max(1.0, float(np.abs(traj.q).max()) ** 4)

    checks = {}
    checks["el_residual"] = {
        "value": elflow.el_residual(traj, params),
        "tol": cfg.tol * scale}
    ctraj, cparams, constants = _el_constants(traj)
    d_vals = np.array([elflow.first_integral(ctraj.jet(i), cparams)
                       for i in range(0, len(ctraj), max(1, len(ctraj) // 200))])
    checks["first_integral_drift"] = {
        "value": float(np.abs(d_vals - d_vals[0]).max()),
        "tol": 1e-6 * scale}
    res = killing.trajectory_flow_residuals(ctraj, constants)
    checks["genus3_flow_residual"] = {"value": res["g3"],
                                      "tol": cfg.tol * scale * 10}
    checks["spectral_invariance"] = {
        "value": spectral.spectral_invariance(ctraj, constants, 3),
        "tol": cfg.tol * scale}
    P = spectral.det_killing(
        killing.build_killing_field(ctraj.jet(0), constants, 3))
    even, real = spectral.check_symmetries(P)
    checks["evenness"] = {"value": even, "tol": 1e-6}
    checks["reality"] = {"value": real, "tol": 1e-6}

    results = {k: {**v, "passed": bool(v["value"] <= v["tol"])}
               for k, v in checks.items()}
    ok = all(v["passed"] for v in results.values())
    _write_json(os.path.join(out, f"{cfg.prefix}_check.json"), cfg, {
        "mode": "check", "passed": ok, "checks": results})
    for name, v in results.items():
        status = "PASS" if v["passed"] else "FAIL"
        print(f"{status} {name}: {v['value']:.3g} (tol {v['tol']:.3g})")
    return 0 if ok else EXIT_INVARIANT


_MODES = {
    "simulate": mode_simulate,
    "classify": mode_classify,
    "spectral": mode_spectral,
    "scan": mode_scan,
    "reconstruct": mode_reconstruct,
    "energy": mode_energy,
    "check": mode_check,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ewlab",
        description="Equivariant constrained-Willmore toolkit for S^3")
    parser.add_argument("mode", choices=sorted(_MODES))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=".")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        cfg = parse_config(text, args.mode)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(args.out, exist_ok=True)
    try:
        return _MODES[args.mode](cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (reconstruct.MonodromyError, elflow.DegenerateImmersionError,
            killing.UnidentifiableConstantsError) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
