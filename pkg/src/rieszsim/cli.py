"""Command-line front end.

Subcommands: `constants` (certificate tables), `curve` (combined boundary
constant over a damping range, CSV + SVG), `simulate` (trajectory CSV), and
`verify` (seeded ISS campaigns or the weak-solution construction, JSON
report).  Exit codes: 0 success, 1 bound violation, 2 configuration error.
Every numeric emitted is the unmodified result of the corresponding library
call, and every artifact carries the resolved configuration.
"""

import argparse
import dataclasses
import json
import math
import sys

import numpy as np

from . import beam, certificates as certs, simulate, system as sysmod, verify as ver


class ConfigError(Exception):
    pass


DIST_KINDS = {
    "trig": "trig_poly",
    "spline": "spline_C2",
    "pwl": "piecewise_linear_C0",
    "const": "constant",
}


def time_grid(t_final: float, dt: float) -> np.ndarray:
    if t_final <= 0.0 or dt <= 0.0:
        raise ConfigError("t-final and dt must be positive")
    n = int(round(t_final / dt))
    if n < 1:
        raise ConfigError("grid must contain at least one step")
    return np.linspace(0.0, t_final, n + 1)


def _load_target(args):
    """Resolve --alpha/--system into (system, alpha)."""
    if args.system is not None:
        return sysmod.load_system(args.system), None
    if args.alpha is not None:
        if args.alpha == 1.0:
            return None, 1.0
        return beam.beam_system(args.alpha, args.modes), args.alpha
    raise ConfigError("need either --alpha or --system")


def _cert_dict(c) -> dict:
    out = {
        "kappa0": c.kappa0,
        "C0": c.C0,
        "C1": c.C1,
        "C2": c.C2,
        "method": c.method,
    }
    if c.epsilon is not None:
        out["epsilon"] = c.epsilon
    if c.degenerate:
        out["degenerate"] = True
    if c.infinite:
        out["infinite"] = True
    return out


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def cmd_constants(args) -> int:
    system, alpha = _load_target(args)
    table = {}
    notes = {}
    if system is not None:
        for name, fn in (
            ("thm1", certs.certificate_thm1),
            ("thm2", certs.certificate_thm2),
            ("relaxed", certs.certificate_relaxed),
        ):
            try:
                table[name] = _cert_dict(fn(system))
            except certs.CertificateUnavailableError as exc:
                notes[name] = f"unavailable: {exc}"
    if alpha is not None or (args.system is None and args.alpha is not None):
        a = args.alpha
        table["beam_v1"] = _cert_dict(certs.beam_certificates_v1(a))
        table["beam_v2"] = _cert_dict(certs.beam_certificates_v2(a, args.epsilon))
        if a > 1.0:
            tight = certs.beam_c2_tight(a, n_terms=500)
            table["c2_tight"] = {
                "series": tight.series,
                "closed_form": tight.closed_form,
                "n_terms": tight.n_terms,
            }
    if not table:
        raise ConfigError("no certificate family applies to the given input")
    width = max(len(k) for k in table)
    for name in sorted(table):
        entry = table[name]
        if "C1" in entry:
            c2 = "-" if entry["C2"] is None else f"{entry['C2']:.9g}"
            print(
                f"{name:<{width}}  kappa0={entry['kappa0']:.9g}  C0={entry['C0']:.9g}  "
                f"C1={entry['C1']:.9g}  C2={c2}"
            )
        else:
            print(
                f"{name:<{width}}  series={entry['series']:.12g}  "
                f"closed_form={entry['closed_form']:.12g}"
            )
    for name, note in notes.items():
        print(f"{name}: {note}")
    if args.out:
        _write_json(args.out, {"config": _resolved(args), "certificates": table, "notes": notes})
    return 0


def _svg_polyline(xs, ys, mapper, style: str) -> str:
    pts = " ".join(f"{mapper[0](x):.2f},{mapper[1](y):.2f}" for x, y in zip(xs, ys))
    return f'<polyline fill="none" {style} points="{pts}"/>'


def write_curve_svg(points, path, interval, config) -> None:
    """Minimal hand-rolled plot: log-scale combined constant vs damping."""
    w, h = 720, 400
    ml, mr, mt, mb = 60, 15, 15, 45
    alphas = [p.alpha for p in points]
    finite = [p.C1_min for p in points]
    y_lo = math.floor(math.log10(min(finite)))
    y_hi = math.ceil(math.log10(max(max(p.C1_v2 for p in points), max(finite))))
    x0, x1 = min(alphas), max(alphas)

    def sx(a):
        return ml + (a - x0) / (x1 - x0) * (w - ml - mr)

    def sy(v):
        return h - mb - (math.log10(v) - y_lo) / (y_hi - y_lo) * (h - mt - mb)

    rows = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f"<desc>{json.dumps(config)}</desc>",
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    if interval is not None:
        rows.append(
            f'<rect x="{sx(interval[0]):.2f}" y="{mt}" '
            f'width="{sx(interval[1]) - sx(interval[0]):.2f}" height="{h - mt - mb}" '
            f'fill="#ffe9c8"/>'
        )
    for dec in range(y_lo, y_hi + 1):
        y = sy(10.0**dec)
        rows.append(
            f'<line x1="{ml}" y1="{y:.2f}" x2="{w - mr}" y2="{y:.2f}" stroke="#dddddd"/>'
        )
        rows.append(
            f'<text x="{ml - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="12">1e{dec}</text>'
        )
    for a in range(int(math.ceil(x0)), int(math.floor(x1)) + 1):
        x = sx(a)
        rows.append(
            f'<line x1="{x:.2f}" y1="{mt}" x2="{x:.2f}" y2="{h - mb}" stroke="#eeeeee"/>'
        )
        rows.append(
            f'<text x="{x:.2f}" y="{h - mb + 18}" text-anchor="middle" font-size="12">{a}</text>'
        )
    rows.append(
        f'<rect x="{ml}" y="{mt}" width="{w - ml - mr}" height="{h - mt - mb}" '
        f'fill="none" stroke="black"/>'
    )
    v1 = [(p.alpha, p.C1_v1) for p in points if math.isfinite(p.C1_v1)]
    rows.append(
        _svg_polyline(
            [a for a, _ in v1], [v for _, v in v1], (sx, sy),
            'stroke="#888888" stroke-dasharray="5,4"',
        )
    )
    rows.append(
        _svg_polyline(
            alphas, [p.C1_v2 for p in points], (sx, sy),
            'stroke="#bbbbbb" stroke-dasharray="2,3"',
        )
    )
    rows.append(
        _svg_polyline(alphas, finite, (sx, sy), 'stroke="#c0392b" stroke-width="1.8"')
    )
    rows.append(
        f'<text x="{(ml + w - mr) / 2}" y="{h - 8}" text-anchor="middle" '
        f'font-size="13">damping parameter</text>'
    )
    rows.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")


def cmd_curve(args) -> int:
    if args.alpha_min <= 0.0 or args.alpha_max <= args.alpha_min:
        raise ConfigError("need 0 < alpha-min < alpha-max")
    if args.grid_points < 2:
        raise ConfigError("need at least two grid points")
    grid = np.linspace(args.alpha_min, args.alpha_max, args.grid_points)
    points = certs.combined_c1_curve(grid)
    interval = None
    if args.alpha_min < 1.0 < args.alpha_max:
        interval = certs.v2_advantage_interval(args.alpha_min, args.alpha_max)
        print(
            f"block-form constant wins on ({interval[0]:.6f}, {interval[1]:.6f})"
        )
    out = args.out or "curve.csv"
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("alpha,c1_v1,c1_v2,c1_min\n")
        for p in points:
            v1 = repr(p.C1_v1) if math.isfinite(p.C1_v1) else "inf"
            fh.write(f"{p.alpha!r},{v1},{p.C1_v2!r},{p.C1_min!r}\n")
    config = _resolved(args)
    _write_json(out + ".meta.json", {"config": config, "crossover": interval})
    svg = args.svg or (out[:-4] if out.endswith(".csv") else out) + ".svg"
    write_curve_svg(points, svg, interval, config)
    print(f"wrote {out}, {svg}")
    return 0


def _make_signal(args, system):
    kind = DIST_KINDS.get(args.dist)
    if kind is None:
        raise ConfigError(f"unknown disturbance kind {args.dist!r}")
    sig = ver.make_disturbance(kind, args.seed, args.amplitude, system.m)
    if args.distributed:
        sig = ver.with_distributed(
            sig, ver.make_distributed(system, args.seed + 1, args.amplitude)
        )
    return sig


def cmd_simulate(args) -> int:
    system, _ = _load_target(args)
    if system is None:
        raise ConfigError("simulation needs a Riesz-spectral system (alpha != 1)")
    sig = _make_signal(args, system)
    x0 = ver.random_state(system, args.seed + 2, args.amplitude)
    x0c, _ = ver.compatible_initial_state(system, x0, sig)
    times = time_grid(args.t_final, args.dt)
    traj = simulate.integrate_modes(system, x0c, sig, times)
    out = args.out or "trajectory.csv"
    simulate.write_trajectory_csv(traj, out, include_modes=args.modes_csv)
    _write_json(out + ".meta.json", {"config": _resolved(args)})
    print(f"wrote {out}")
    return 0


def _campaign_certificates(args, system, alpha):
    table = {}
    methods = (
        [args.method.replace("-", "_")]
        if args.method
        else (["thm1", "thm2", "beam_v1", "beam_v2"] if alpha is not None else ["thm1", "thm2"])
    )
    for name in methods:
        cert = certs.certificate_for_method(name, system=system, alpha=alpha, epsilon=args.epsilon)
        if cert.infinite:
            raise ConfigError(f"certificate {name!r} is infinite at this damping")
        if args.c1_scale != 1.0:
            cert = dataclasses.replace(cert, C1=cert.C1 * args.c1_scale)
        table[name] = cert
    return table


def cmd_verify(args) -> int:
    system, alpha = _load_target(args)
    if system is None:
        raise ConfigError("verification needs a Riesz-spectral system (alpha != 1)")
    times = time_grid(args.t_final, args.dt)
    out = args.out or "report.json"
    if args.weak:
        sig = ver.make_disturbance(
            DIST_KINDS.get(args.dist, "piecewise_linear_C0") if args.dist != "trig" else "piecewise_linear_C0",
            args.seed,
            args.amplitude,
            system.m,
            flat_start=True,
        )
        cert = certs.certificate_for_method(
            args.method.replace("-", "_") if args.method else "thm1",
            system=system, alpha=alpha, epsilon=args.epsilon,
        )
        if args.c1_scale != 1.0:
            cert = dataclasses.replace(cert, C1=cert.C1 * args.c1_scale)
        x0 = ver.random_state(system, args.seed + 2, args.amplitude)
        result = ver.weak_solution_by_approximation(
            system, x0, sig, times, certificate=cert
        )
        report = ver.verify_trajectory(system, cert, result.trajectory, sig)
        payload = report.to_json_dict()
        payload["config"] = _resolved(args)
        payload["weak_construction"] = {
            "initial_defect": result.initial_defect,
            "levels": [
                {
                    "index": r.index,
                    "h": r.h,
                    "sup_to_prev": r.sup_to_prev,
                    "cauchy_bound_prev": r.cauchy_bound_prev,
                    "sup_to_limit": r.sup_to_limit,
                }
                for r in result.runs
            ],
        }
        _write_json(out, payload)
        ok = report.n_violations == 0
        print(f"weak construction: {'pass' if ok else 'FAIL'} (min margin {report.min_margin:.6g})")
        return 0 if ok else 1

    table = _campaign_certificates(args, system, alpha)
    fading = tuple(n for n in table if n in ("thm1", "thm2", "beam_v1"))
    result = ver.run_campaign(
        system,
        table,
        times,
        n_draws=args.runs,
        seed=args.seed,
        amplitude=args.amplitude,
        fading_methods=fading,
        fading_epsilons=(0.0, args.epsilon),
    )
    worst = result.worst_record()
    payload = {
        "config": _resolved(args),
        "min_margin": min(r.min_margin for r in result.records),
        "n_violations": result.n_violations,
        "worst_relative_margin": result.worst_relative_margin,
        "samples": [
            {
                "draw": r.draw,
                "method": r.method,
                "epsilon": r.epsilon,
                "min_margin": r.min_margin,
                "rhs_scale": r.rhs_scale,
                "n_violations": r.n_violations,
            }
            for r in result.records
        ],
        "worst_case": dataclasses.asdict(worst),
    }
    _write_json(out, payload)
    ok = result.n_violations == 0
    print(
        f"campaign: {'pass' if ok else 'FAIL'} "
        f"({args.runs} draws, worst relative margin {result.worst_relative_margin:.6g})"
    )
    return 0 if ok else 1


def _resolved(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func" and v is not None}
    cfg["command"] = args.command
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rieszsim",
        description="Modal simulation and ISS certification of Riesz-spectral "
        "boundary control systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_time=True):
        p.add_argument("--alpha", type=float, help="beam damping parameter")
        p.add_argument("--system", help="modal system JSON file")
        p.add_argument("--modes", type=int, default=64, help="frequency count N (2N modes)")
        p.add_argument("--epsilon", type=float, default=0.5)
        p.add_argument("--out", help="output path")
        if with_time:
            p.add_argument("--t-final", type=float, default=5.0, dest="t_final")
            p.add_argument("--dt", type=float, default=0.05)
            p.add_argument("--dist", choices=sorted(DIST_KINDS), default="trig")
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--amplitude", type=float, default=1.0)
            p.add_argument("--distributed", action="store_true",
                           help="add a random distributed disturbance")

    p = sub.add_parser("constants", help="print certificate families")
    common(p, with_time=False)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("curve", help="combined boundary constant over a damping range")
    p.add_argument("--alpha-min", type=float, default=0.2)
    p.add_argument("--alpha-max", type=float, default=5.0)
    p.add_argument("--grid-points", type=int, default=961)
    p.add_argument("--out", help="CSV path (SVG written alongside)")
    p.add_argument("--svg", help="explicit SVG path")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("simulate", help="integrate one trajectory to CSV")
    common(p)
    p.add_argument("--modes-csv", action="store_true", help="include per-mode columns")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run a seeded verification campaign")
    common(p)
    p.add_argument("--method", choices=["thm1", "thm2", "relaxed", "beam-v1", "beam-v2", "combined"])
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--weak", action="store_true",
                   help="verify the limit of mollified classical runs instead")
    p.add_argument("--c1-scale", type=float, default=1.0, dest="c1_scale",
                   help="fault-injection scaling of C1 (diagnostic)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, certs.CertificateUnavailableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ver.ConvergenceFailureError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
