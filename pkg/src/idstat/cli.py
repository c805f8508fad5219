"""Command-line front end: one subcommand per module, CSV or JSON output.

Exit codes: 0 success, 2 usage or config error, 3 domain error (such as a
Pauli violation or Bose saturation), 4 non-convergence.  Domain errors
print one machine-parsable line ``error: <code>: <message>`` on stderr.
Output is deterministic for identical argv + config + seed; reals are
written with 17 significant digits so they round-trip exactly.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import balance, counting, distributions, spinstat, symmetry, wavepacket
from .errors import (
    ConvergenceError,
    DomainError,
    IdstatError,
    NonConvergence,
    ParseError,
)

__all__ = ["Config", "load_config", "run", "main"]

FMT = "%.17g"


@dataclass(frozen=True)
class Config:
    """Unit constants and output defaults, overridable from a JSON file."""

    hbar: float = 1.0
    k_boltzmann: float = 1.0
    h_planck: float = 1.0
    c_light: float = 1.0
    output_format: str = "csv"
    seed: int = 0


def load_config(path: str) -> Config:
    """Read a JSON config; missing keys fall back to defaults."""
    try:
        with open(path) as fh:
            text = fh.read()
        raw = json.loads(text or "{}")
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"config {path} is not valid JSON (line {exc.lineno}): {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ParseError(f"config {path} must contain a JSON object")
    known = {f: getattr(Config, f) for f in Config.__dataclass_fields__}
    unknown = set(raw) - set(known)
    if unknown:
        raise ParseError(f"unknown config keys: {sorted(unknown)}")
    merged = {**known, **raw}
    for key in ("hbar", "k_boltzmann", "h_planck", "c_light"):
        value = merged[key]
        if not isinstance(value, (int, float)) or value <= 0:
            raise ParseError(f"config key {key} must be a positive number, got {value!r}")
        merged[key] = float(value)
    if merged["output_format"] not in ("csv", "json"):
        raise ParseError("output_format must be 'csv' or 'json'")
    if not isinstance(merged["seed"], int) or isinstance(merged["seed"], bool):
        raise ParseError("seed must be an integer")
    return Config(**merged)


def _fnum(x: float) -> str:
    return FMT % x


def _csv_row(values) -> str:
    return ",".join(_fnum(v) if isinstance(v, float) else str(v) for v in values)


def _emit_table(out, header, rows, fmt: str, name: str):
    if fmt == "csv":
        print(",".join(header), file=out)
        for row in rows:
            print(_csv_row(row), file=out)
    else:
        print(json.dumps({name: [dict(zip(header, r)) for r in rows]},
                         indent=2, sort_keys=True), file=out)


# -- subcommands -----------------------------------------------------------


def _cmd_evolve(args, cfg: Config, out) -> int:
    packet = wavepacket.WavePacket(
        m0=args.m0, sigma=args.sigma, x0=args.x0, t0=args.t0, k0=args.k0,
        hbar=cfg.hbar,
    )
    grid = wavepacket.Grid(args.xmin, args.xmax, args.points)
    times = np.linspace(args.t_start, args.t_stop, args.t_samples)
    xs = grid.points()
    rows = []
    for t in times:
        psi = wavepacket.evaluate(packet, xs, float(t))
        rho = np.abs(psi) ** 2
        for x, value, d in zip(xs, psi, rho):
            rows.append((float(t), float(x), float(value.real),
                         float(value.imag), float(d)))
    _emit_table(out, ["t", "x", "re", "im", "density"], rows, args.format, "evolve")
    return 0


_STATE_SCHEMA = 1


def _state_from_json(raw) -> symmetry.NParticleState:
    try:
        if raw.get("schema", _STATE_SCHEMA) != _STATE_SCHEMA:
            raise ParseError(f"unsupported state schema {raw['schema']!r}")
        n = int(raw["n"])
        terms = [
            (complex(t["coeff"][0], t["coeff"][1]), tuple(int(m) for m in t["modes"]))
            for t in raw["terms"]
        ]
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ParseError(f"malformed state description: {exc}") from exc
    return symmetry._canonical(n, terms)


def _state_to_json(state: symmetry.NParticleState) -> dict:
    return {
        "schema": _STATE_SCHEMA,
        "n": state.n,
        "terms": [
            {"coeff": [t.coeff.real, t.coeff.imag], "modes": list(t.modes)}
            for t in state.terms
        ],
    }


def _cmd_symmetrize(args, cfg: Config, out) -> int:
    if args.input == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(args.input) as fh:
                text = fh.read()
        except OSError as exc:
            raise ParseError(f"cannot read state file {args.input}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"state input is not valid JSON (line {exc.lineno}): {exc.msg}") from exc
    state = _state_from_json(raw)
    projected = (symmetry.antisymmetrize(state) if args.anti
                 else symmetry.symmetrize(state))
    print(json.dumps(_state_to_json(projected), indent=2, sort_keys=True), file=out)
    return 0


def _cmd_exchange_phase(args, cfg: Config, out) -> int:
    m = args.spin
    f = spinstat.exchange_phase(m, args.chi_a, args.chi_b)
    factor_ab = complex(np.exp(-1j * m * spinstat.ccw_distance(args.chi_a, args.chi_b)))
    factor_ba = complex(np.exp(-1j * m * spinstat.ccw_distance(args.chi_b, args.chi_a)))
    payload = {
        "spin": args.spin,
        "F": [f.real, f.imag],
        "factor_a_to_b": [factor_ab.real, factor_ab.imag],
        "factor_b_to_a": [factor_ba.real, factor_ba.imag],
    }
    print(json.dumps(payload, indent=2, sort_keys=True), file=out)
    return 0


def _cmd_count(args, cfg: Config, out) -> int:
    region = counting.OccupancyRegion(n=args.n, g=args.g)
    if args.oracle:
        if args.stat == "boltzmann":
            raise ParseError("--oracle is only defined for bose and fermi counts")
        value = counting.oracle_count(region, args.stat)
    else:
        value = {"bose": counting.bose_w, "fermi": counting.fermi_w,
                 "boltzmann": counting.boltzmann_w}[args.stat](region)
    lines = {"count": str(value)}
    if args.entropy:
        rs = counting.RegionSet((region,), k=cfg.k_boltzmann)
        lines["entropy"] = _fnum(counting.entropy(rs, args.stat))
    if args.format == "json":
        print(json.dumps(lines, indent=2, sort_keys=True), file=out)
    else:
        print(lines["count"], file=out)
        if "entropy" in lines:
            print(lines["entropy"], file=out)
    return 0


def _cmd_distribute(args, cfg: Config, out) -> int:
    spec = distributions.GasSpec(
        volume=args.V, temperature=args.T, mass=args.mass,
        statistics=args.stat, c=cfg.c_light, h=cfg.h_planck, k=cfg.k_boltzmann,
    )
    grid = distributions.MomentumGrid(args.pmin, args.pmax, args.bins)
    ps = grid.centers()
    eps = distributions.grid_energies(spec, grid)
    g = distributions.grid_mode_counts(spec, grid)
    mu = distributions.solve_mu(args.N, spec, grid)
    if args.via == "closed":
        occ = distributions.occupancy(eps, mu, spec, g_p=g)
    else:
        closed = distributions.occupancy(eps, mu, spec, g_p=g)
        e_target = float((closed * eps).sum())
        occ = distributions.max_entropy_occupancies(spec, grid, args.N, e_target).occupancies
    rows = [(float(p), float(e), float(gi), float(o))
            for p, e, gi, o in zip(ps, eps, g, occ)]
    _emit_table(out, ["p", "eps", "g_p", "occupancy"], rows, args.format, "distribute")
    return 0


def _cmd_balance(args, cfg: Config, out) -> int:
    energies = np.arange(1.0, args.bins + 1.0)
    rng = np.random.default_rng(args.seed)
    g_fn = lambda eps: args.g0
    pop1 = balance.stationary_population(
        g_fn, args.beta, args.mu, energies, 1.0, s_max=args.smax, kind=1)
    pop2 = balance.stationary_population(
        g_fn, args.beta, args.mu, energies, 1.0, s_max=args.smax, kind=2)
    channels = balance.standard_channels(energies, args.smax, args.smax)
    pop1, pop2 = balance.scramble(pop1, pop2, channels, rng)
    try:
        result = balance.relax(pop1, pop2, channels, steps=args.steps,
                               seed=args.seed, rate=args.rate, tol=args.tol)
        code = 0
    except NonConvergence as exc:
        result = exc.result
        code = 4
        print(f"error: NonConvergence: {exc}", file=sys.stderr)
    sweep_rows = [
        (i + 1, float(r), float(s), float(q))
        for i, (r, s, q) in enumerate(
            zip(result.max_residuals, result.entropies, result.quanta))
    ]
    _emit_table(out, ["sweep", "max_residual", "entropy", "total_quanta"],
                sweep_rows, args.format, "sweeps")
    if args.format == "csv":
        print("", file=out)
    final_rows = []
    for j, e in enumerate(result.pop1.energies):
        for s in range(result.pop1.s_max + 1):
            final_rows.append((float(e), s, float(result.pop1.table[s, j])))
    _emit_table(out, ["eps", "s", "p"], final_rows, args.format, "population")
    return code


def _cmd_selftest(args, cfg: Config, out) -> int:
    failures = 0

    def check(name: str, ok: bool):
        nonlocal failures
        print(f"{'ok' if ok else 'FAIL'} {name}", file=out)
        if not ok:
            failures += 1

    region_pairs = [(n, g) for n in range(0, 7) for g in range(1, 8)]
    check("bose counts match enumeration", all(
        counting.bose_w(counting.OccupancyRegion(n, g))
        == counting.oracle_count(counting.OccupancyRegion(n, g), "bose")
        for n, g in region_pairs))
    check("fermi counts match enumeration", all(
        counting.fermi_w(counting.OccupancyRegion(n, g))
        == counting.oracle_count(counting.OccupancyRegion(n, g), "fermi")
        for n, g in region_pairs if n <= g))

    rng = np.random.default_rng(cfg.seed)
    ok_perm = True
    for _ in range(5):
        m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        naive = sum(
            np.prod([m[i, pi] for i, pi in enumerate(perm)])
            for perm in itertools.permutations(range(5))
        )
        ok_perm &= abs(symmetry.permanent(m) - naive) <= 1e-10 * max(1.0, abs(naive))
    check("ryser permanent matches naive sum", ok_perm)

    check("exchange phase is (-1)^(2s)", all(
        abs(spinstat.exchange_phase(s, 0.3, 2.1) - (-1.0) ** int(round(2 * s))) < 1e-12
        for s in (0, 0.5, 1, 1.5, 2, 2.5)))

    packet = wavepacket.WavePacket(m0=1.0, sigma=1.0, k0=0.4, hbar=cfg.hbar)
    grid = wavepacket.Grid(-12.0, 12.0, 1025)
    check("wavepacket stays normalized",
          abs(wavepacket.norm(packet, 0.7, grid) - 1.0) < 1e-6)

    spec = distributions.GasSpec(volume=200.0, temperature=1.0, mass=1.0,
                                 statistics="fermi", c=cfg.c_light,
                                 h=cfg.h_planck, k=cfg.k_boltzmann)
    mg = distributions.MomentumGrid(0.0, 3.0, 16)
    mu = distributions.solve_mu(50.0, spec, mg)
    eps = distributions.grid_energies(spec, mg)
    g = distributions.grid_mode_counts(spec, mg)
    n_back = float(np.sum(distributions.occupancy(eps, mu, spec, g_p=g)))
    check("chemical potential round trip", abs(n_back - 50.0) < 1e-8 * 50.0)

    energies = np.arange(1.0, 5.0)
    pop = balance.stationary_population(lambda e: 6.0, 1.0, 0.2, energies, 1.0,
                                        s_max=40)
    channels = balance.standard_channels(energies, 40, 40)
    worst = max(abs(balance.balance_residual(pop, pop, ch)) for ch in channels)
    check("stationary population balances every channel", worst < 1e-12)

    return 1 if failures else 0


# -- driver ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idstat",
        description="Identical-particle statistics toolbox",
    )
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (default from config)")
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed (overrides config and IDSTAT_SEED)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="sample a Gaussian packet over time")
    p.add_argument("--m0", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--k0", type=float, default=0.0)
    p.add_argument("--xmin", type=float, default=-12.0)
    p.add_argument("--xmax", type=float, default=12.0)
    p.add_argument("--points", type=int, default=256)
    p.add_argument("--t-start", type=float, default=0.0)
    p.add_argument("--t-stop", type=float, default=1.0)
    p.add_argument("--t-samples", type=int, default=5)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("symmetrize", help="project a JSON state")
    p.add_argument("--input", default="-", help="state file or - for stdin")
    p.add_argument("--anti", action="store_true", help="antisymmetrize instead")
    p.set_defaults(func=_cmd_symmetrize)

    p = sub.add_parser("exchange-phase", help="one-sense rotation exchange factor")
    p.add_argument("--spin", type=float, required=True)
    p.add_argument("--chi-a", type=float, required=True)
    p.add_argument("--chi-b", type=float, required=True)
    p.set_defaults(func=_cmd_exchange_phase)

    p = sub.add_parser("count", help="exact statistical weights")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--stat", choices=("bose", "fermi", "boltzmann"), required=True)
    p.add_argument("--oracle", action="store_true",
                   help="count by enumeration instead of the formula")
    p.add_argument("--entropy", action="store_true", help="also print k ln w")
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("distribute", help="occupation spectrum of an ideal gas")
    p.add_argument("--stat", choices=("bose", "fermi"), required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--V", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--pmin", type=float, default=0.0)
    p.add_argument("--pmax", type=float, required=True)
    p.add_argument("--via", choices=("closed", "maxent"), default="closed")
    p.set_defaults(func=_cmd_distribute)

    p = sub.add_parser(
        "balance",
        help="scramble the stationary two-species toy and relax it back")
    p.add_argument("--bins", type=int, default=8)
    p.add_argument("--smax", type=int, default=16)
    p.add_argument("--g0", type=float, default=6.0,
                   help="per-bin mode count of the toy")
    p.add_argument("--beta", type=float, default=1.0, help="1/kT of the toy")
    p.add_argument("--mu", type=float, default=0.0,
                   help="chemical potential in units of kT (the exponent offset)")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--rate", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_balance)

    p = sub.add_parser("selftest", help="run the built-in oracle suite")
    p.set_defaults(func=_cmd_selftest)

    return parser


def run(argv=None, out=None) -> int:
    """Parse argv, dispatch, and map errors to the exit-code contract."""
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config) if args.config else Config()
        seed = args.seed
        if seed is None:
            env = os.environ.get("IDSTAT_SEED")
            seed = int(env) if env else cfg.seed
        cfg = Config(
            hbar=cfg.hbar, k_boltzmann=cfg.k_boltzmann, h_planck=cfg.h_planck,
            c_light=cfg.c_light,
            output_format=args.format or cfg.output_format, seed=seed,
        )
        args.format = cfg.output_format
        if getattr(args, "seed", None) is None:
            args.seed = cfg.seed
        return args.func(args, cfg, out)
    except ParseError as exc:
        print(f"error: ParseError: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4
    except IdstatError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: ValueError: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
