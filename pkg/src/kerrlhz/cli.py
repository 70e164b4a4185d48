"""Command-line entry point: ``kerrlhz [global flags] <experiment> [options]``.

Every experiment reads an optional JSON config, writes its outputs
atomically under the ``--out`` prefix and prints a JSON run manifest on
standard output. Exit status 2 means a config or usage error, 3 a
resource-guard refusal.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace

import numpy as np
import scipy

from . import __version__
from .analysis import WIGNER_CONVENTION, wigner
from .cat import adiabatic_cat_run
from .circuit import REFERENCE_CIRCUIT, FluxQubitCircuit, calibrate_resonator, flux_sweep
from .dynamics import DissipationSpec, DriveSchedule, REFERENCE_DISSIPATION
from .effective import (
    REFERENCE_QUTRIT,
    QutritResonatorParams,
    ThreeModeParams,
    dispersive_coefficients,
    three_mode_coefficients,
    two_photon_amplitude,
)
from .io import ConfigError, Field, config_hash, csv_text, json_text, load_config, write_atomic
from .lhz import (
    PRNG_ALGORITHM,
    AnnealProblem,
    IsingInstance,
    brute_force_ground_states,
    direct_problem,
    gap_statistics,
    lhz_decompose3,
    lhz_embed4,
    random_instance,
    spectrum_trace,
)
from .operators import StateVector, cat_state, coherent_state, fock_state

EXIT_CONFIG = 2
EXIT_RESOURCE = 3
THREADS_ENV = "KERRLHZ_WORKERS"

NUM = (float,)
NUM_OR_NULL = (float, None)

QUTRIT_SCHEMA = {
    "omega_c": Field(NUM, REFERENCE_QUTRIT.omega_c),
    "eps_e": Field(NUM, REFERENCE_QUTRIT.eps_e),
    "eps_f": Field(NUM, REFERENCE_QUTRIT.eps_f),
    "g_ge": Field(NUM, REFERENCE_QUTRIT.g_ge),
    "g_ef": Field(NUM, REFERENCE_QUTRIT.g_ef),
    "g_gf": Field(NUM, REFERENCE_QUTRIT.g_gf),
    "Omega_p": Field(NUM, REFERENCE_QUTRIT.Omega_p),
    "omega_p": Field(NUM_OR_NULL, None),
    "Omega_ge": Field(NUM, 0.0),
    "Omega_ef": Field(NUM, 0.0),
}

RATES_SCHEMA = {
    "kappa": Field(NUM, REFERENCE_DISSIPATION.kappa),
    "gamma_ge": Field(NUM, REFERENCE_DISSIPATION.gamma_ge),
    "gamma_ef": Field(NUM, REFERENCE_DISSIPATION.gamma_ef),
    "gamma_gf": Field(NUM, REFERENCE_DISSIPATION.gamma_gf),
}

THREE_MODE_SCHEMA = {
    "omega_q": Field(NUM, 5.2),
    "omegas": Field((list,), [6.5, 7.3, 9.1]),
    "E_J": Field(NUM, 21.0),
    "phi_q": Field(NUM, 0.35),
    "phis": Field((list,), [0.03, 0.03, 0.03]),
    "eps_p": Field(NUM, 0.0),
    "omega_d": Field(NUM, 4.7),
    "xi_p": Field(NUM_OR_NULL, 0.5),
}

CIRCUIT_SCHEMA = {
    "C_J": Field(NUM, REFERENCE_CIRCUIT.C_J),
    "E_J": Field(NUM, REFERENCE_CIRCUIT.E_J),
    "alpha": Field(NUM, REFERENCE_CIRCUIT.alpha),
    "C_sh": Field(NUM, REFERENCE_CIRCUIT.C_sh),
    "C_c": Field(NUM, REFERENCE_CIRCUIT.C_c),
    "E_r": Field(NUM, REFERENCE_CIRCUIT.E_r),
    "C_r": Field(NUM_OR_NULL, None),
    "L_r": Field(NUM_OR_NULL, None),
    "f": Field(NUM, REFERENCE_CIRCUIT.f),
    "charge_cutoff": Field((int,), REFERENCE_CIRCUIT.charge_cutoff),
}

INSTANCE_SCHEMA = {
    "N": Field((int,), 3),
    "h": Field((list, None), None),
    "J": Field((list, None), None),
    "J_scale": Field(NUM, 1.0),
}

SCHEMAS = {
    "cat-adiabatic": {
        "params": Field((dict,), nested=QUTRIT_SCHEMA),
        "omega_p_ghz": Field(NUM, 0.035),
        "tau_ns": Field(NUM, 3000.0),
        "T_ns": Field(NUM, 5000.0),
        "dim": Field((int,), 30),
        "n_snapshots": Field((int,), 200),
        "dissipation": Field((bool,), False),
        "rates": Field((dict,), nested=RATES_SCHEMA),
        "rel_tol": Field(NUM, 3e-9),
    },
    "coeffs": {
        "qutrit": Field((dict,), nested=QUTRIT_SCHEMA),
        "three_mode": Field((dict,), nested=THREE_MODE_SCHEMA),
        "order": Field((str,), "full"),
    },
    "circuit-spectrum": {
        "circuit": Field((dict,), nested=CIRCUIT_SCHEMA),
        "fluxes": Field((list, None), None),
        "flux_start": Field(NUM, 0.47),
        "flux_stop": Field(NUM, 0.53),
        "n_flux": Field((int,), 61),
        "g_ge_target": Field(NUM, 0.094),
        "omega_c_target": Field(NUM, 5.25),
        "calibration_flux": Field(NUM, 0.4916),
    },
    "spectrum": {
        "instance": Field((dict,), nested=INSTANCE_SCHEMA),
        "C_over_J": Field(NUM, 3.0),
        "scheme": Field((str,), "lhz3"),
        "protocol": Field((str,), "ramp"),
        "k": Field((int,), 8),
        "n_s": Field((int,), 101),
    },
    "gap-stats": {
        "N": Field((int,), 3),
        "n_instances": Field((int,), 100),
        "C_values": Field((list,), [1.5, 3.0]),
        "combos": Field((list,), [["lhz3", "ramp"], ["lhz4", "ramp"], ["lhz4", "always-on"]]),
        "J_scale": Field(NUM, 1.0),
    },
    "lhz-anneal": {
        "instance": Field((dict,), nested={
            "h": Field((list,), [-0.6, -0.4]),
            "J": Field((list,), [[0.0, -0.5], [-0.5, 0.0]]),
        }),
        "C_over_J": Field(NUM, 3.0),
        "delta": Field(NUM, 4.5),
        "K": Field(NUM, 10.0),
        "eps_p": Field(NUM, -20.0),
        "T": Field(NUM, 50.0),
        "dim": Field((int,), 12),
        "n_snapshots": Field((int,), 101),
        "rel_tol": Field(NUM, 1e-8),
    },
    "wigner": {
        "state": Field((dict,), nested={
            "kind": Field((str,), "even_cat"),
            "alpha": Field(NUM, math.sqrt(2.0)),
            "n": Field((int,), 0),
            "dim": Field((int,), 30),
            "path": Field((str, None), None),
        }),
        "x_range": Field((list,), [-4.0, 4.0]),
        "p_range": Field((list,), [-4.0, 4.0]),
        "n_points": Field((int,), 81),
    },
}


class ResourceError(RuntimeError):
    pass


def _guard(dimension: int, cap: int):
    if dimension > cap:
        raise ResourceError(f"predicted Hilbert dimension {dimension} exceeds the cap {cap} (raise --dim-cap)")


def _write(prefix: str, suffix: str, text: str, outputs: list):
    outputs.append(write_atomic(f"{prefix}{suffix}", text))


# ---------------------------------------------------------------------------
# experiments; each returns a small result record for the manifest


def run_cat_adiabatic(cfg, args, outputs):
    if args.omega_p_ghz is not None:
        cfg["omega_p_ghz"] = args.omega_p_ghz
    if args.dissipation is not None:
        cfg["dissipation"] = args.dissipation == "on"
    _guard(3 * cfg["dim"], args.dim_cap)
    params = QutritResonatorParams(**cfg["params"])
    sched = DriveSchedule(cfg["omega_p_ghz"], cfg["tau_ns"], cfg["T_ns"])
    diss = DissipationSpec(**cfg["rates"]) if cfg["dissipation"] else None
    out = adiabatic_cat_run(params, sched, diss, dim=cfg["dim"], n_snapshots=cfg["n_snapshots"],
                            rel_tol=cfg["rel_tol"])
    res = out.result
    cols = ["n_avg", "P_e", "P_f", "fidelity"]
    rows = [[t] + [res.observables[c][k] for c in cols] for k, t in enumerate(res.times)]
    _write(args.out, "_observables.csv", csv_text(["t_ns"] + cols, rows), outputs)
    final = res.states[-1]
    state = {"dims": [3, cfg["dim"]], "slots": ["qutrit", "resonator"],
             "frame": "rotating at half the drive frequency (resonator photons and qutrit excitations)"}
    if final.ndim == 1:
        state["amplitudes"] = [[float(z.real), float(z.imag)] for z in final]
    else:
        state["density_matrix"] = [[[float(z.real), float(z.imag)] for z in row] for row in final]
    _write(args.out, "_final_state.json", json_text(state), outputs)
    return {"K_GHz": out.K, "P_GHz": out.P, "alpha": out.alpha_final, "final": out.final, "info": res.info}


def run_coeffs(cfg, args, outputs):
    q = QutritResonatorParams(**cfg["qutrit"])
    S, K = dispersive_coefficients(q, cfg["order"])
    P = two_photon_amplitude(q)
    tm = dict(cfg["three_mode"])
    xi = tm.pop("xi_p")
    p3 = ThreeModeParams(**{**tm, "omegas": tuple(tm["omegas"]), "phis": tuple(tm["phis"])})
    c = three_mode_coefficients(p3, xi_p=xi)
    record = {
        "S_GHz": S, "K_GHz": K, "P_GHz": P,
        "alpha": math.sqrt(P / K) if K and P / K >= 0 else None,
        "J123_GHz": c.J_123, "Kj_GHz": list(c.K_j), "Kq_GHz": c.K_q,
        "Kjk_GHz": {f"{j + 1}-{k + 1}": v for (j, k), v in c.K_jk.items()},
        "Kqj_GHz": list(c.K_qj), "xi_p": c.xi_p,
    }
    _write(args.out, "_coeffs.json", json_text(record), outputs)
    return record


def run_circuit_spectrum(cfg, args, outputs):
    cc = dict(cfg["circuit"])
    C_r = cc.pop("C_r")
    circuit = FluxQubitCircuit(**{**cc, "C_r": C_r if C_r is not None else REFERENCE_CIRCUIT.C_r})
    calibrated = False
    if C_r is None:
        circuit = calibrate_resonator(circuit, cfg["g_ge_target"], cfg["omega_c_target"], cfg["calibration_flux"])
        calibrated = True
    _guard((2 * circuit.charge_cutoff + 1) ** 2, args.dim_cap)
    fluxes = cfg["fluxes"] if cfg["fluxes"] is not None else \
        np.linspace(cfg["flux_start"], cfg["flux_stop"], cfg["n_flux"]).tolist()
    sweep = flux_sweep(circuit, fluxes)
    rows = [[f, sweep.energies[i, 1], sweep.energies[i, 2], sweep.couplings[(0, 1)][i],
             sweep.couplings[(1, 2)][i], sweep.couplings[(0, 2)][i]] for i, f in enumerate(sweep.fluxes)]
    _write(args.out, "_circuit_spectrum.csv",
           csv_text(["f", "eps_e_GHz", "eps_f_GHz", "g_ge_GHz", "g_ef_GHz", "g_gf_GHz"], rows), outputs)
    return {"C_r_fF": circuit.C_r, "L_r_nH": circuit.L_r, "calibrated": calibrated}


def _instance(cfg_inst, seed) -> IsingInstance:
    if cfg_inst["h"] is not None or cfg_inst["J"] is not None:
        if cfg_inst["h"] is None or cfg_inst["J"] is None:
            raise ConfigError("instance needs both 'h' and 'J' when either is given", "instance")
        return IsingInstance(cfg_inst["h"], cfg_inst["J"], cfg_inst["J_scale"], None)
    return random_instance(cfg_inst["N"], cfg_inst["J_scale"], seed)


def run_spectrum(cfg, args, outputs):
    inst = _instance(cfg["instance"], args.seed)
    emb4 = lhz_embed4(inst, cfg["C_over_J"] * inst.scale)
    scheme = cfg["scheme"]
    if scheme == "direct":
        prob, emb = direct_problem(inst), None
    elif scheme == "lhz4":
        prob, emb = AnnealProblem.from_embedding(emb4), emb4
    elif scheme == "lhz3":
        emb = lhz_decompose3(emb4)
        prob = AnnealProblem.from_embedding(emb)
    else:
        raise ConfigError(f"scheme must be direct, lhz4 or lhz3, got {scheme!r}", "scheme")
    if cfg["protocol"] not in ("ramp", "always-on"):
        raise ConfigError(f"protocol must be ramp or always-on, got {cfg['protocol']!r}", "protocol")
    _guard(2**prob.n_spins, args.dim_cap)
    s = np.linspace(0.0, 1.0, cfg["n_s"])
    tr = spectrum_trace(prob, s, cfg["k"], cfg["protocol"], driver=inst.scale)
    rows = [[sv] + list(tr.energies[i]) for i, sv in enumerate(tr.s)]
    _write(args.out, "_spectrum.csv", csv_text(["s"] + [f"E_{j}" for j in range(cfg["k"])], rows), outputs)
    mapping = {"scheme": scheme, "N": inst.N, "h": inst.h, "J": inst.J, "constraint_offset": prob.offset,
               "physical_spins": emb.mapping_table() if emb else [],
               "constraints": [list(c) for c in emb.constraints] if emb else []}
    _write(args.out, "_mapping.json", json_text(mapping), outputs)
    return {"gap_min": tr.gap_min, "s_at_gap": tr.s_at_gap}


def _gap_job(job):
    n_inst_seed, N, C_values, combos, J_scale = job
    return gap_statistics(1, N, C_values, combos, seed=n_inst_seed, J_scale=J_scale)


def run_gap_stats(cfg, args, outputs):
    combos = [tuple(c) for c in cfg["combos"]]
    for scheme, protocol in combos:
        if scheme not in ("direct", "lhz4", "lhz3") or protocol not in ("ramp", "always-on"):
            raise ConfigError(f"unsupported scheme/protocol pair {[scheme, protocol]}", "combos")
    _guard(2 ** (cfg["N"] * (cfg["N"] - 1) + 1), args.dim_cap)
    jobs = [(args.seed + i, cfg["N"], cfg["C_values"], combos, cfg["J_scale"]) for i in range(cfg["n_instances"])]
    workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_gap_job, jobs))
    else:
        chunks = [_gap_job(j) for j in jobs]
    records = [r for chunk in chunks for r in chunk]
    records.sort(key=lambda r: (r.seed, cfg["C_values"].index(r.C_over_J), combos.index((r.scheme, r.protocol))))
    rows = [[r.seed, r.C_over_J, r.scheme, r.protocol, r.gap_min] for r in records]
    _write(args.out, "_gap_stats.csv", csv_text(["seed", "C_over_J", "scheme", "protocol", "gap_min"], rows), outputs)
    return {"n_records": len(rows), "prng": PRNG_ALGORITHM}


def run_lhz_anneal(cfg, args, outputs):
    from .resonator_lhz import ResonatorLhzParams, project_to_cat_ising, resonator_lhz_anneal

    inst = IsingInstance(cfg["instance"]["h"], cfg["instance"]["J"])
    p = ResonatorLhzParams.from_ising(inst, cfg["C_over_J"], delta=cfg["delta"], K=cfg["K"], eps_p=cfg["eps_p"],
                                      T=cfg["T"])
    _guard(cfg["dim"] ** p.n_resonators, args.dim_cap)
    out = resonator_lhz_anneal(p, dim=cfg["dim"], n_snapshots=cfg["n_snapshots"], rel_tol=cfg["rel_tol"])
    res = out.result
    n = p.n_resonators
    cols = [f"{q}_{j + 1}" for j in range(n) for q in ("re_a", "im_a", "n_avg")]
    rows = [[t] + [res.observables[c][k] for c in cols] for k, t in enumerate(res.times)]
    _write(args.out, "_observables.csv", csv_text(["t"] + cols, rows), outputs)
    emb = lhz_embed4(inst, cfg["C_over_J"])
    if any(len(c) == 4 for c in emb.constraints):
        emb = lhz_decompose3(emb)
    E0, ground = brute_force_ground_states(inst)
    proj = project_to_cat_ising(p)
    summary = {
        "signs": list(out.readout.signs),
        "decoded_logical": list(emb.decode(out.readout.signs)),
        "brute_force_ground_states": [list(g) for g in ground],
        "brute_force_energy": E0,
        "encoding_fidelity": out.readout.fidelity,
        "ground_state_encoding_fidelity": out.ground_state_fidelity,
        "confidence": list(out.readout.confidence),
        "cat_subspace_weight": list(out.readout.span_weight),
        "low_confidence": out.readout.low_confidence,
        "alpha": out.alpha,
        "projected_h": list(proj.h),
        "projected_C": [[list(c), v] for c, v in proj.C],
        "projection_valid": proj.valid,
        "mapping": emb.mapping_table(),
        "constraints": [list(c) for c in emb.constraints],
    }
    _write(args.out, "_summary.json", json_text(summary), outputs)
    return {"signs": summary["signs"], "encoding_fidelity": summary["encoding_fidelity"],
            "norm_drift": res.info["norm_drift"]}


def _load_state(scfg):
    kind = scfg["kind"]
    dim = scfg["dim"]
    if kind == "coherent":
        return coherent_state(scfg["alpha"], dim).amplitudes
    if kind in ("even_cat", "odd_cat"):
        return cat_state(scfg["alpha"], kind.split("_")[0], dim).amplitudes
    if kind == "fock":
        return fock_state(scfg["n"], dim).amplitudes
    if kind == "file":
        if not scfg["path"]:
            raise ConfigError("state.kind 'file' needs state.path", "state.path")
        with open(scfg["path"], encoding="utf-8") as fh:
            data = json.load(fh)
        dims = data["dims"]
        slot = data["slots"].index("resonator")
        if "amplitudes" in data:
            v = np.array([complex(*z) for z in data["amplitudes"]]).reshape(dims)
            M = np.moveaxis(v, slot, 0).reshape(dims[slot], -1)
            return M @ M.conj().T
        r = np.array([[complex(*z) for z in row] for row in data["density_matrix"]])
        r = r.reshape(dims + dims)
        other = 1 - slot
        return np.trace(r, axis1=other, axis2=other + 2)
    raise ConfigError(f"unknown state kind {kind!r}", "state.kind")


def run_wigner(cfg, args, outputs):
    _guard(cfg["state"]["dim"], args.dim_cap)
    state = _load_state(cfg["state"])
    x = np.linspace(*cfg["x_range"], cfg["n_points"])
    p = np.linspace(*cfg["p_range"], cfg["n_points"])
    W = wigner(state, x, p)
    rows = [[x[j], p[i], W.W[i, j]] for i in range(len(p)) for j in range(len(x))]
    _write(args.out, "_wigner.csv", csv_text(["x", "p", "W"], rows, comments=[WIGNER_CONVENTION]), outputs)
    return {"integral": W.integral(), "min": float(W.W.min()), "max": float(W.W.max())}


RUNNERS = {
    "cat-adiabatic": run_cat_adiabatic,
    "coeffs": run_coeffs,
    "circuit-spectrum": run_circuit_spectrum,
    "spectrum": run_spectrum,
    "gap-stats": run_gap_stats,
    "lhz-anneal": run_lhz_anneal,
    "wigner": run_wigner,
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="PRNG seed (default 0)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output path prefix (default ./kerrlhz)")
    common.add_argument("--dim-cap", type=int, default=argparse.SUPPRESS,
                        help="refuse runs whose Hilbert dimension exceeds this (default 5000)")
    ap = argparse.ArgumentParser(prog="kerrlhz", parents=[common], description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="experiment", required=True)
    for name in RUNNERS:
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--config", help="JSON config file")
        if name == "cat-adiabatic":
            sp.add_argument("--omega-p-ghz", type=float, default=None)
            sp.add_argument("--dissipation", choices=("on", "off"), default=None)
    return ap


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    for key, default in (("seed", 0), ("out", "kerrlhz"), ("dim_cap", 5000)):
        if not hasattr(args, key):
            setattr(args, key, default)
    start = time.perf_counter()
    outputs: list[str] = []
    try:
        cfg, _ = load_config(args.config, SCHEMAS[args.experiment])
        result = RUNNERS[args.experiment](cfg, args, outputs)
    except ConfigError as exc:
        print(f"kerrlhz: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"kerrlhz: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (TypeError, ValueError) as exc:
        print(f"kerrlhz: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = {
        "experiment": args.experiment,
        "config_sha256": config_hash(cfg, {"seed": args.seed, "experiment": args.experiment}),
        "seed": args.seed,
        "versions": {"kerrlhz": __version__, "python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "wall_time_s": time.perf_counter() - start,
        "outputs": outputs,
        "result": result,
    }
    sys.stdout.write(json_text(manifest))
    return 0


if __name__ == "__main__":
    sys.exit(main())
