"""Batch command line front end.

Every data command writes CSV tables plus ``manifest.json`` into ``--out``.
Exit codes: 0 success, 2 parameter error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from . import analysis, classical, workstats
from .eigensolve import excitation_energies, solve
from .errors import NumericalError, ParameterError
from .records import Emitter, load_manifest
from .spinmodel import ModelParams, Parity

EXIT_PARAMETER = 2
EXIT_NUMERICAL = 3


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:step`` (both ends inclusive) or a comma-separated list."""
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise ParameterError(f"bad grid {text!r}; expected start:stop:step") from None
        if step <= 0 or stop < start:
            raise ParameterError(f"bad grid {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(count), 12)
    try:
        return np.array([float(x) for x in text.split(",") if x.strip()])
    except ValueError:
        raise ParameterError(f"bad list {text!r}") from None


def parse_sizes(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ParameterError(f"bad size list {text!r}") from None


def _which(esqpt: int) -> str:
    return "first" if esqpt == 1 else "second"


def _esqpt_gamma_check(gamma_i: float) -> None:
    if not (classical.GAMMA_C - 1e-12 <= gamma_i <= 1.0):
        raise ParameterError(f"ESQPT-targeted runs need 1/3 <= gamma_i <= 1 (got gamma_i = {gamma_i})")


# -- commands -----------------------------------------------------------------

def cmd_spectrum(args, em_factory):
    gammas = parse_grid(args.gamma_grid) if args.gamma_grid else np.array([args.gamma])
    rows = []
    for g in gammas:
        spec = solve(ModelParams(args.N, g, args.alpha), args.parity, method=args.method)
        eps = excitation_energies(spec)
        for n in range(0, spec.dim, args.stride):
            rows.append((g, n, spec.eigenvalues[n], eps[n]) if args.gamma_grid else (n, spec.eigenvalues[n], eps[n]))
    em = em_factory({"N": args.N, "alpha": args.alpha, "parity": args.parity, "gammas": gammas,
                     "method": args.method, "stride": args.stride})
    if args.gamma_grid:
        em.csv("level_flow.csv", ["gamma", "n", "E_n", "epsilon_n"], rows)
    else:
        em.csv("spectrum.csv", ["n", "E_n", "epsilon_n"], rows)
    return em


def cmd_dos(args, em_factory):
    spec = solve(ModelParams(args.N, args.gamma, args.alpha), args.parity)
    hist = analysis.quantum_dos(spec, bins=args.bins)
    smooth = analysis.counting_dos(spec, hist.edges)
    ce = classical.critical_energies(args.gamma, args.alpha)
    em = em_factory({"N": args.N, "gamma": args.gamma, "alpha": args.alpha, "parity": args.parity,
                     "bins": len(hist.counts), "eps_c1": ce.eps_c1, "eps_c2": ce.eps_c2})
    rows = zip(hist.edges[:-1], hist.edges[1:], hist.centers, hist.counts, hist.rescaled, hist.full_space, smooth)
    em.csv("dos.csv", ["epsilon_lo", "epsilon_hi", "epsilon", "count", "rho_tilde", "rho_tilde_full",
                       "rho_counting"], rows)
    return em


def cmd_dos_sc(args, em_factory):
    sc = classical.semiclassical_dos(args.gamma, args.alpha, samples=args.samples, seed=args.seed,
                                     bins=args.bins, workers=args.workers)
    em = em_factory({"gamma": args.gamma, "alpha": args.alpha, "samples": args.samples, "bins": args.bins,
                     "seed": args.seed}, seed=args.seed)
    em.csv("dos_sc.csv", ["epsilon", "rho", "stderr", "count", "empty"],
           zip(sc.centers, sc.rho, sc.stderr, sc.counts, sc.empty))
    return em


def cmd_dos_slice(args, em_factory):
    gammas = parse_grid(args.gamma_grid)
    rho_q = analysis.dos_gamma_slice(args.N, args.alpha, args.epsilon, gammas, width=args.width,
                                     parity=args.parity)
    rho_sc, err_sc = [], []
    for g in gammas:
        if args.samples:
            edges = [args.epsilon - args.width / 2, args.epsilon + args.width / 2]
            sc = classical.semiclassical_dos(g, args.alpha, eps_grid=edges, samples=args.samples, seed=args.seed,
                                             workers=args.workers)
            rho_sc.append(sc.rho[0])
            err_sc.append(sc.stderr[0])
        else:
            rho_sc.append(None)
            err_sc.append(None)
    crit = analysis.critical_gammas(args.epsilon, args.alpha)
    em = em_factory({"N": args.N, "alpha": args.alpha, "epsilon": args.epsilon, "width": args.width,
                     "gammas": gammas, "samples": args.samples, "seed": args.seed, "critical_gammas": crit},
                    seed=args.seed)
    em.csv("dos_slice.csv", ["gamma", "rho_tilde", "rho_sc", "rho_sc_stderr"], zip(gammas, rho_q, rho_sc, err_sc))
    return em


def _resolve_dgamma(args) -> float:
    if args.dgamma_tilde is not None:
        _esqpt_gamma_check(args.gamma_i)
        return workstats.resolve_delta_gamma(args.gamma_i, args.alpha, _which(args.esqpt), args.dgamma_tilde)
    if args.dgamma is None:
        raise ParameterError("give --dgamma or --dgamma-tilde with --esqpt")
    return args.dgamma


def cmd_quench(args, em_factory):
    dg = _resolve_dgamma(args)
    initial = args.initial
    if initial is None:
        initial = "highest" if args.esqpt == 2 else "ground"
    spec = workstats.QuenchSpec(args.gamma_i, dg, args.alpha, args.N, initial, args.parity)
    dist = workstats.quench_distribution(spec)
    w, p = dist.merged(N=args.N)
    summary = {
        "spec": {"gamma_i": spec.gamma_i, "gamma_f": spec.gamma_f, "delta_gamma": dg,
                 "dgamma_tilde": args.dgamma_tilde, "esqpt": args.esqpt, "alpha": args.alpha, "N": args.N,
                 "initial": str(initial), "initial_index": dist.initial_index, "parity": spec.parity.value},
        "entropy": dist.entropy,
        "entropy_over_lnN": dist.entropy / math.log(args.N),
        "mean_work": dist.mean,
        "variance_work": dist.variance,
        "support": dist.support,
        "dim": len(dist.probs),
    }
    em = em_factory(summary["spec"])
    em.csv("work_distribution.csv", ["W", "P"], zip(w, p))
    em.json("quench.json", summary)
    return em


def cmd_entropy_sweep(args, em_factory):
    _esqpt_gamma_check(args.gamma_i)
    grid = parse_grid(args.grid) if args.grid else analysis.default_tilde_grid()
    sw = analysis.entropy_sweep(_which(args.esqpt), args.gamma_i, args.alpha, args.N, grid, args.parity,
                                workers=args.workers)
    em = em_factory({"esqpt": args.esqpt, "gamma_i": args.gamma_i, "alpha": args.alpha, "N": args.N,
                     "grid": grid, "parity": args.parity})
    lnN = math.log(args.N)
    em.csv(f"fig3{'c' if args.esqpt == 1 else 'd'}_entropy_sweep.csv",
           ["dgamma_tilde", "dgamma", "S_W", "S_W_over_lnN"],
           ((t, t * sw.delta_gamma_c, s, s / lnN) for t, s in zip(sw.grid, sw.entropies)))
    em.json("entropy_sweep.json", {"argmax_dgamma_tilde": sw.argmax, "max_S_W": sw.max,
                                   "delta_gamma_c": sw.delta_gamma_c, "dropped": list(sw.dropped)})
    return em


def cmd_entropy_energy(args, em_factory):
    n, eps, s = workstats.entropy_vs_energy(args.gamma_i, args.alpha, args.N, args.dgamma, args.parity)
    em = em_factory({"gamma_i": args.gamma_i, "alpha": args.alpha, "N": args.N, "dgamma": args.dgamma,
                     "parity": args.parity})
    lnN = math.log(args.N)
    em.csv("fig6c_entropy_energy.csv", ["n", "epsilon_n", "S_W", "S_W_over_lnN"],
           zip(n, eps, s, s / lnN))
    return em


def cmd_entropy_slice(args, em_factory):
    gammas = parse_grid(args.gamma_grid)
    rows = []
    lnN = math.log(args.N)
    for g in gammas:
        n, eps, s = workstats.entropy_vs_energy(g, args.alpha, args.N, args.dgamma, args.parity)
        k = int(np.argmin(np.abs(eps - args.epsilon)))
        rows.append((g, k, eps[k], s[k], s[k] / lnN))
    em = em_factory({"alpha": args.alpha, "N": args.N, "dgamma": args.dgamma, "epsilon": args.epsilon,
                     "gammas": gammas, "parity": args.parity})
    em.csv("fig6b_entropy_slice.csv", ["gamma_i", "n", "epsilon_n", "S_W", "S_W_over_lnN"], rows)
    return em


def cmd_scaling(args, em_factory):
    _esqpt_gamma_check(args.gamma_i)
    sizes = parse_sizes(args.sizes)
    grid = parse_grid(args.grid) if args.grid else None
    fit, sweeps = analysis.scaling_fit(_which(args.esqpt), args.gamma_i, args.alpha, sizes, grid,
                                       workers=args.workers)
    tag = "ab" if args.esqpt == 1 else "cd"
    em = em_factory({"esqpt": args.esqpt, "gamma_i": args.gamma_i, "alpha": args.alpha, "sizes": sizes,
                     "grid": grid if grid is not None else "default"})
    em.csv(f"fig4{tag}_scaling_points.csv", ["N", "argmax_dgamma_tilde", "distance", "S_W_max"],
           ((s.N, s.argmax, d, s.max) for s, d in zip(sweeps, fit.distances)))
    em.json("scaling.json", {
        "esqpt": args.esqpt, "gamma_i": args.gamma_i, "alpha": args.alpha, "sizes": sizes,
        "mu": fit.mu, "mu_stderr": fit.mu_stderr, "mu_r2": fit.mu_r2,
        "nu": fit.nu, "nu_stderr": fit.nu_stderr, "nu_r2": fit.nu_r2,
        "mu_residuals": fit.mu_residuals, "nu_residuals": fit.nu_residuals,
        "low_confidence": fit.low_confidence,
    })
    return em


def cmd_classical(args, em_factory):
    params = {"gamma": args.gamma, "alpha": args.alpha, "action": args.action}
    if args.action == "fixed-points":
        rep = classical.find_fixed_points(args.gamma, args.alpha)
        em = em_factory(params)
        em.csv("fixed_points.csv", ["p", "q", "energy", "stability", "family"],
               ((pt.p, pt.q, pt.energy, pt.stability, pt.family) for pt in rep.points))
    elif args.action == "critical-energies":
        ce = classical.critical_energies(args.gamma, args.alpha)
        em = em_factory(params)
        em.csv("critical_energies.csv", ["gamma", "alpha", "eps_c1", "eps_c2", "second_fixed_points_exist"],
               [(ce.gamma, ce.alpha, ce.eps_c1, ce.eps_c2, ce.second_fixed_points_exist)])
        print(f"eps_c1 = {'absent' if ce.eps_c1 is None else format(ce.eps_c1, '.4f')}  "
              f"eps_c2 = {ce.eps_c2:.4f}")
    else:
        traj = classical.integrate_trajectory(args.gamma, args.alpha, (args.p, args.q), args.dt, args.steps)
        params.update({"p0": args.p, "q0": args.q, "dt": args.dt, "steps": args.steps, "every": args.every})
        em = em_factory(params)
        sl = slice(None, None, args.every)
        em.csv("trajectory.csv", ["t", "p", "q", "H_c"], zip(traj.t[sl], traj.p[sl], traj.q[sl], traj.energy[sl]))
        em.json("trajectory.json", {"exited": traj.exited, "energy_drift": traj.energy_drift,
                                    "steps_done": len(traj.t) - 1})
    return em


def cmd_gs_qpt(args, em_factory):
    m = analysis.gs_qpt_marker(args.alpha, args.N, parse_grid(args.gamma_grid))
    em = em_factory({"alpha": args.alpha, "N": args.N, "gamma_grid": args.gamma_grid})
    em.csv("gs_qpt.csv", ["gamma", "d2_E0_over_N"], zip(m.gammas, m.second_derivative))
    em.json("gs_qpt.json", {"peak_gamma": m.peak_gamma, "peak_value": m.peak_value})
    return em


# -- parser -------------------------------------------------------------------

def _add_common(p, seed=False):
    p.add_argument("--out", required=True, metavar="DIR", help="output directory")
    p.add_argument("--workers", type=int, default=None, help="worker threads (default: $ALMG_WORKERS or 1)")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _add_model(p, gamma=True, N=True, parity=True):
    if N:
        p.add_argument("--N", type=int, required=True)
    if gamma:
        p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    if parity:
        p.add_argument("--parity", choices=[x.value for x in Parity], default="even")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="almg", description="Anharmonic LMG spectra and work statistics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalues of one sector, or level flow over a gamma grid")
    p.add_argument("--N", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--gamma", type=float)
    g.add_argument("--gamma-grid", metavar="START:STOP:STEP")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--parity", choices=[x.value for x in Parity], default="even")
    p.add_argument("--method", choices=["lapack", "ql"], default="lapack")
    p.add_argument("--stride", type=int, default=1, help="keep every k-th level")
    _add_common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("dos", help="quantum density of states histogram")
    _add_model(p)
    p.add_argument("--bins", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_dos)

    p = sub.add_parser("dos-sc", help="Monte Carlo semiclassical density of states")
    _add_model(p, N=False, parity=False)
    p.add_argument("--samples", type=int, default=10**7)
    p.add_argument("--bins", type=int, default=400)
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_dos_sc)

    p = sub.add_parser("dos-slice", help="density at fixed epsilon along a gamma grid")
    _add_model(p, gamma=False)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--gamma-grid", required=True, metavar="START:STOP:STEP")
    p.add_argument("--width", type=float, default=0.005)
    p.add_argument("--samples", type=int, default=0, help="MC samples per gamma for rho_sc (0: skip)")
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_dos_slice)

    p = sub.add_parser("quench", help="work distribution of one sudden quench")
    p.add_argument("--gamma-i", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--dgamma", type=float)
    g.add_argument("--dgamma-tilde", type=float)
    p.add_argument("--esqpt", type=int, choices=[1, 2], default=1)
    p.add_argument("--initial", default=None, help="ground | highest | index (default by --esqpt)")
    p.add_argument("--parity", choices=[x.value for x in Parity], default="even")
    _add_common(p)
    p.set_defaults(func=cmd_quench)

    p = sub.add_parser("entropy-sweep", help="S_W against the rescaled quench strength")
    p.add_argument("--esqpt", type=int, choices=[1, 2], required=True)
    p.add_argument("--gamma-i", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--grid", default=None, metavar="START:STOP:STEP")
    p.add_argument("--parity", choices=[x.value for x in Parity], default="even")
    _add_common(p)
    p.set_defaults(func=cmd_entropy_sweep)

    p = sub.add_parser("entropy-energy", help="S_W of every eigenstate for a small quench")
    p.add_argument("--gamma-i", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--dgamma", type=float, default=1e-3)
    p.add_argument("--parity", choices=[x.value for x in Parity], default="even")
    _add_common(p)
    p.set_defaults(func=cmd_entropy_energy)

    p = sub.add_parser("entropy-slice", help="S_W of the eigenstate nearest epsilon along a gamma_i grid")
    p.add_argument("--gamma-grid", required=True, metavar="START:STOP:STEP")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--dgamma", type=float, default=1e-3)
    p.add_argument("--parity", choices=[x.value for x in Parity], default="even")
    _add_common(p)
    p.set_defaults(func=cmd_entropy_slice)

    p = sub.add_parser("scaling", help="finite-size scaling exponents mu and nu")
    p.add_argument("--esqpt", type=int, choices=[1, 2], required=True)
    p.add_argument("--gamma-i", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--sizes", default=",".join(map(str, analysis.DEFAULT_SIZES)))
    p.add_argument("--grid", default=None, metavar="START:STOP:STEP")
    _add_common(p)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("classical", help="classical-limit analysis")
    p.add_argument("action", choices=["fixed-points", "critical-energies", "evolve"])
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--q", type=float, default=0.1)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--every", type=int, default=10, help="write every k-th step")
    _add_common(p)
    p.set_defaults(func=cmd_classical)

    p = sub.add_parser("gs-qpt", help="second derivative of the ground-state energy density")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--gamma-grid", required=True, metavar="START:STOP:STEP")
    _add_common(p)
    p.set_defaults(func=cmd_gs_qpt)

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=None)
    return parser


def _replay_argv(manifest_path: str, out: str) -> list[str]:
    argv = list(load_manifest(manifest_path)["argv"])
    if "--out" in argv:
        argv[argv.index("--out") + 1] = out
    else:
        argv += ["--out", out]
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            return main(_replay_argv(args.manifest, args.out))
        if getattr(args, "workers", None) is not None and args.workers < 1:
            raise ParameterError("--workers must be >= 1")

        def em_factory(params, seed=None):
            return Emitter(args.out, args.command, argv, params, seed=seed)

        em = args.func(args, em_factory)
        path = em.finish()
        print(f"wrote {path}")
        return 0
    except ParameterError as exc:
        print(f"almg: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except NumericalError as exc:
        print(f"almg: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
