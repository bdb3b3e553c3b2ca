"""``dirac-qwalk`` command-line entry point."""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .circuits import build_time_step, quantum_step
from .classical import StreamingError, step
from .config import ConfigError, RunConfig
from .lattice import LatticeError, Potentials, load_snapshot, make_lattice, normalize, save_snapshot
from .qcore import CircuitError, dirac_layout, encode_field, run as run_circuit
from .resources import SynthesisError, count_fundamental, lower_to_fundamental, scaling_study
from .spectral import (SpectralError, autocorrelation_classical, autocorrelation_quantum, brillouin_line,
                       dispersion, feit_fleck_filter, spectral_density, success_probability_bound)
from .splitting import SplittingError, scheme_second_order, scheme_third_order, search_rational_splittings
from .stateprep import prepare_state

EXPECTED_ERRORS = (ConfigError, LatticeError, StreamingError, SplittingError, SpectralError, CircuitError,
                   SynthesisError, FileNotFoundError, ValueError)


def parse_range(text: str) -> list[int]:
    """``7`` or ``7..9`` (inclusive)."""
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def _write_csv(path: Path, header: Sequence[str], columns: Sequence[str], rows) -> None:
    lines = [f"# {h}" for h in header]
    lines.append(",".join(columns))
    lines.extend(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _config_for(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    if getattr(args, "order", None) is not None:
        cfg.order = args.order
        cfg.source.append(("order", str(args.order)))
    return cfg


def _series_row(k: int, t: float, f) -> tuple:
    mx, my, mz = f.mean_position()
    return (k, float(t), float(f.norm()), float(mx), float(my), float(mz))


SERIES_COLUMNS = ("step", "t", "norm", "mean_x", "mean_y", "mean_z")


def _evolve(args, quantum: bool) -> int:
    cfg = _config_for(args)
    spec = cfg.lattice()
    pots = cfg.potentials()
    scheme = cfg.scheme()
    layout = dirac_layout(spec, reduced=cfg.reduced_1d) if quantum else None
    f = cfg.initial_field(spec)
    prefix = Path(args.out)
    header = cfg.echo() + [f"steps={args.steps}", f"path={'circuit' if quantum else 'classical'}"]
    rows = [_series_row(0, 0.0, f)]
    save_snapshot(f, f"{prefix}_step{0:06d}.csv", "\n".join(header))
    for k in range(1, args.steps + 1):
        t = (k - 1) * spec.dt
        f = quantum_step(f, scheme, t, pots, layout) if quantum else step(f, scheme, t, pots)
        rows.append(_series_row(k, k * spec.dt, f))
        if args.every and k % args.every == 0 and k != args.steps:
            save_snapshot(f, f"{prefix}_step{k:06d}.csv", "\n".join(header))
    save_snapshot(f, f"{prefix}_step{args.steps:06d}.csv", "\n".join(header))
    _write_csv(Path(f"{prefix}_series.csv"), header, SERIES_COLUMNS, rows)
    if quantum:
        circ = build_time_step(scheme, 0.0, spec, pots, layout)
        Path(f"{prefix}_circuit.txt").write_text(circ.dump() + "\n")
    print(f"final norm {rows[-1][2]!r}")
    return 0


def cmd_evolve(args) -> int:
    return _evolve(args, quantum=False)


def cmd_qevolve(args) -> int:
    return _evolve(args, quantum=True)


def cmd_prepare(args) -> int:
    target = normalize(load_snapshot(args.field))
    layout = dirac_layout(target.spec)
    circ = prepare_state(target, layout)
    out = np.zeros(2**layout.n_wires, dtype=complex)
    out[0] = 1
    out = run_circuit(circ, out, with_global_phase=True)
    fidelity = abs(np.vdot(encode_field(target, layout).amps, out)) ** 2
    Path(args.emit_circuit).write_text(circ.dump() + "\n")
    print(f"gates {circ.metadata['gate_count']} wires {layout.n_wires} fidelity {float(fidelity)!r}")
    return 0


def cmd_feit_fleck(args) -> int:
    cfg = _config_for(args)
    spec = cfg.lattice()
    pots = cfg.potentials()
    scheme = cfg.scheme()
    trial = cfg.initial_field(spec)
    n_t = int(round(args.tf / spec.dt))
    if n_t < 2:
        raise SpectralError(f"final time {args.tf} is shorter than two time steps")
    auto = (autocorrelation_classical if args.classical else autocorrelation_quantum)(trial, scheme, pots, n_t)
    density = spectral_density(auto, spec.dt, args.window)
    peaks = density.peaks(args.threshold)
    energy = args.energy if args.energy is not None else float(peaks[0])
    result = feit_fleck_filter(trial, energy, n_t, scheme, pots, args.window)
    prefix = Path(args.out)
    header = cfg.echo() + [f"tf={args.tf!r}", f"n_t={n_t}", f"window={args.window}", f"energy={energy!r}"]
    _write_csv(Path(f"{prefix}_autocorr.csv"), header, ("k", "t", "re", "im"),
               [(k, float(k * spec.dt), float(c.real), float(c.imag)) for k, c in enumerate(auto)])
    _write_csv(Path(f"{prefix}_spectrum.csv"), header, ("E", "abs_C"),
               zip(map(float, density.energies), map(float, density.magnitude)))
    _write_csv(Path(f"{prefix}_peaks.csv"), header, ("E",), [(float(e),) for e in peaks])
    _write_csv(Path(f"{prefix}_filter.csv"), header,
               ("success_probability", "bound", "branch_probability"),
               [(result.success_probability, success_probability_bound(n_t), result.branch_probability)])
    save_snapshot(result.field, f"{prefix}_filtered.csv", "\n".join(header))
    print(f"peaks {[float(e) for e in peaks[:4]]} success {result.success_probability!r}")
    return 0


def cmd_dispersion(args) -> int:
    axis = "xyz".index(args.axis)
    n_star = Fraction(args.nstar)
    scheme = scheme_second_order() if args.order == 2 else scheme_third_order()
    res = dispersion(scheme, brillouin_line(args.ell, args.points, axis), args.ell, n_star, mass=args.mass)
    energies = res.branch_energies()
    header = [f"nstar={n_star}", f"axis={args.axis}", f"ell={args.ell!r}", f"order={args.order}",
              f"mass={args.mass!r}", f"doubling={len(res.doubling)}"]
    rows = [(float(p[axis]), *map(float, e)) for p, e in zip(res.momenta, energies)]
    columns = ("p", "E1", "E2", "E3", "E4")
    if args.out:
        _write_csv(Path(args.out), header, columns, rows)
    else:
        print(",".join(columns))
        for r in rows:
            print(",".join(map(repr, r)))
    return 0


def cmd_search(args) -> int:
    lines = []
    for r in parse_range(args.r):
        for sol in search_rational_splittings(args.m, r, args.pmax):
            lines.append(",".join(str(v) for v in sol.p_tilde))
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_resources(args) -> int:
    n_values = parse_range(args.n)
    study = scaling_study(n_values, args.epsilon, dims=args.dims)
    header = [f"dims={args.dims}", f"epsilon={args.epsilon!r}", "depth=total fundamental gate count"]
    _write_csv(Path(args.out), header, ("n", "H", "S", "T", "CNOT", "total", "width"),
               [(int(n), *r.row().values()) for n, r in zip(study.n, study.reports)])
    spec = make_lattice(0, 0, 3, ell=1.0, n_star=1)
    circ = build_time_step(scheme_second_order(), 0.0, spec, Potentials(mass=1.0), dirac_layout(spec))
    dump = [f"# 1-D massive step along z, n_z = 3, {circ.n_wires} wires", circ.dump()]
    try:
        lowered, _ = lower_to_fundamental(circ, args.epsilon)
        dump += [f"# lowered at epsilon={args.epsilon!r}", lowered.dump()]
    except SynthesisError:
        rep = count_fundamental(circ, args.epsilon)
        dump.append(f"# rotations not materialized at epsilon={args.epsilon!r}; counts {rep.row()}")
    Path(args.out).with_name(Path(args.out).stem + "_step1d_n3.txt").write_text("\n".join(dump) + "\n")
    if np.isfinite(study.r_squared):
        print(f"quadratic fit R^2 {study.r_squared:.6f} exponent {study.exponent:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dirac-qwalk", description="Dirac split-step solver and its quantum circuits")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, func, text in (("evolve", cmd_evolve, "classical split-operator evolution"),
                             ("qevolve", cmd_qevolve, "evolution through the gate-level circuit")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True)
        p.add_argument("--steps", type=int, required=True)
        p.add_argument("--order", type=int, choices=(2, 3))
        p.add_argument("--out", default="run")
        p.add_argument("--every", type=int, default=0, help="also write a snapshot every K steps")
        p.set_defaults(func=func)

    p = sub.add_parser("prepare", help="state-preparation circuit for a field snapshot")
    p.add_argument("--field", required=True)
    p.add_argument("--emit-circuit", required=True)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("feit-fleck", help="autocorrelation, spectral density and eigenstate filtering")
    p.add_argument("--config", required=True)
    p.add_argument("--energy", type=float, help="filter energy (default: strongest peak)")
    p.add_argument("--tf", type=float, required=True)
    p.add_argument("--window", default="hann", choices=("hann", "rectangular", "blackman"))
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--order", type=int, choices=(2, 3))
    p.add_argument("--classical", action="store_true", help="classical autocorrelation instead of the ancilla circuit")
    p.add_argument("--out", default="ff")
    p.set_defaults(func=cmd_feit_fleck)

    p = sub.add_parser("dispersion", help="lattice dispersion E(p) of the free scheme")
    p.add_argument("--nstar", default="1")
    p.add_argument("--axis", default="x", choices=("x", "y", "z"))
    p.add_argument("--ell", type=float, default=1.0)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--order", type=int, default=2, choices=(2, 3))
    p.add_argument("--mass", type=float, default=0.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("search-splittings", help="rational Suzuki splittings")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--r", required=True, help="number of stages, e.g. 7 or 7..9")
    p.add_argument("--pmax", type=int, default=12)
    p.add_argument("--out")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("resources", help="fundamental gate counts versus qubits per axis")
    p.add_argument("--dims", type=int, default=3, choices=(1, 2, 3))
    p.add_argument("--n", default="2..60")
    p.add_argument("--epsilon", type=float, default=1e-10)
    p.add_argument("--out", default="counts.csv")
    p.set_defaults(func=cmd_resources)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EXPECTED_ERRORS as exc:
        print(f"dirac-qwalk {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
