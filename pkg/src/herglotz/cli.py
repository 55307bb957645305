"""herglotz command line: profile checks, ray tracing and transform experiments.

Exit status is 0 on success, 1 on a numerical or validation failure and 2 on
a configuration problem.  Every CSV starts with a "# config_sha256=..." line.
"""
import argparse
import csv
import io
import os
import sys

import numpy as np

from . import funk, geodesics, transforms
from ._errors import HerglotzError, JumpTangency
from .config import ConfigError, config_hash, parse_attenuation, parse_field, parse_profile
from .wave_speed import check_herglotz

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2


def _read(path):
    if path is None:
        raise ConfigError("missing required file argument")
    if not os.path.isfile(path):
        raise ConfigError(f"no such file: {path}")
    with open(path) as fh:
        return fh.read()


def _write_csv(out, name, header, rows, tag):
    buf = io.StringIO()
    buf.write(f"# config_sha256={tag}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, name)
    with open(path, "w") as fh:
        fh.write(buf.getvalue())
    return path


def _profile(args):
    text = _read(args.profile)
    return parse_profile(text), text


def _attenuation(args):
    if args.attenuation is None:
        return None, ""
    text = _read(args.attenuation)
    return parse_attenuation(text), text


def _tag(args, *texts):
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "func", "profile", "field", "sinogram", "attenuation")}
    return config_hash(*texts, params)


def cmd_check(args):
    w, text = _profile(args)
    rep = w.herglotz if args.grid is None else check_herglotz(w, args.grid)
    status = "pass" if rep.passed else "fail"
    print(f"herglotz: {status}  min margin {rep.min_herglotz_margin:.6g}")
    for a, d in rep.jump_violations:
        print(f"jump violation at r={a:g}: {d:.6g}")
    if rep.notes:
        print(f"notes: {rep.notes}")
    rows = [("pass", int(rep.passed), ""), ("min_herglotz_margin", rep.min_herglotz_margin, "")]
    rows += [("jump_violation", a, d) for a, d in rep.jump_violations]
    _write_csv(args.out, "herglotz_report.csv", ["item", "value", "extra"], rows, _tag(args, text))
    return EXIT_OK if rep.passed else EXIT_NUMERICAL


def cmd_trace(args):
    w, text = _profile(args)
    w.require_herglotz()
    tag = _tag(args, text)
    for i, r0 in enumerate(args.r0):
        try:
            w.check_tip(r0)
        except JumpTangency:
            print(f"warning: skipping r0={r0:g}, tip on a jump surface", file=sys.stderr)
            continue
        spec = geodesics.GeodesicSpec(r0, args.theta0)
        path = geodesics.broken_ray(w, geodesics.BrokenRaySpec(spec, args.segments), args.samples)
        rows = zip(path.t, path.r, path.theta, path.x, path.y)
        name = _write_csv(args.out, f"ray_{i:03d}.csv", ["t", "r", "theta", "x", "y"], rows, tag)
        print(name)
    return EXIT_OK


def cmd_sinogram(args):
    w, text = _profile(args)
    ftext = _read(args.field)
    field = parse_field(ftext, w.R, args.kmax)
    lam, ltext = _attenuation(args)
    sinos = transforms.sinogram(w, field, args.grid or 512, lam)
    rows = []
    for k in sorted(sinos):
        s = sinos[k]
        for r, v in zip(s.r0[s.valid], s.values[s.valid]):
            rows.append((k, float(r), float(v.real), float(v.imag)))
    print(_write_csv(args.out, "sinogram.csv", ["k", "r0", "re", "im"], rows,
                     _tag(args, text, ftext, ltext)))
    return EXIT_OK


def cmd_invert(args):
    w, text = _profile(args)
    stext = _read(args.sinogram)
    lam, ltext = _attenuation(args)
    try:
        sinos = transforms.sinograms_from_csv(w, stext)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"cannot read sinogram: {exc}") from exc
    if args.kmax is not None:
        sinos = {k: s for k, s in sinos.items() if abs(k) <= args.kmax}
    field = transforms.xray_invert_modes(w, sinos, lam, tol=args.tol or 1e-10)
    rows = []
    for k in sorted(field.modes):
        a = field.modes[k]
        for r, v in zip(a.grid, np.asarray(a.values, dtype=complex)):
            rows.append((k, float(r), float(v.real), float(v.imag)))
    print(_write_csv(args.out, "field.csv", ["k", "r", "re", "im"], rows,
                     _tag(args, text, stext, ltext)))
    return EXIT_OK


def cmd_periodic(args):
    w, text = _profile(args)
    found = geodesics.find_periodic_radii(w, args.qmax)
    print(_write_csv(args.out, "periodic.csv", ["r", "p", "q"], found, _tag(args, text)))
    return EXIT_OK


def cmd_pbrt(args):
    w, text = _profile(args)
    ftext = _read(args.field)
    field = parse_field(ftext, w.R, args.kmax)
    rows = []
    for r, p, q in geodesics.find_periodic_radii(w, args.qmax):
        if r >= 1.0:
            continue
        v = transforms.pbrt_forward(w, field, r, args.theta0, q_max=args.qmax)
        rows.append((float(r), p, q, q, float(v.real), float(v.imag)))
    print(_write_csv(args.out, "pbrt.csv", ["r", "p", "q", "m", "re", "im"], rows,
                     _tag(args, text, ftext)))
    return EXIT_OK


def cmd_funk_demo(args):
    L = args.lmax
    rng = np.random.default_rng(args.seed)
    f = funk.random_field(L, rng)
    F = funk.funk_forward(f)
    back = funk.funk_even_recover(F)
    even = f.degree_part(0)
    err = float(np.max(np.abs(back.coeffs - even.coeffs)))
    odd = f.degree_part(1)
    odd_ratio = funk.funk_forward(odd).norm() / max(odd.norm(), 1e-300)
    mu = funk.funk_eigenvalues(L)
    print(f"even-part recovery error {err:.3e}; odd kernel ratio {odd_ratio:.3e}")
    tag = _tag(args)
    rows = []
    for l in range(L + 1):
        for m in range(-l, l + 1):
            a, b, c = f.coef(l, m), F.coef(l, m), back.coef(l, m)
            rows.append((l, m, float(a.real), float(a.imag), float(b.real), float(b.imag),
                         float(c.real), float(c.imag)))
    _write_csv(args.out, "funk.csv",
               ["l", "m", "field_re", "field_im", "funk_re", "funk_im", "recovered_re", "recovered_im"],
               rows, tag)
    _write_csv(args.out, "funk_eigenvalues.csv", ["l", "mu"], [(l, float(mu[l])) for l in range(L + 1)], tag)
    return EXIT_OK if err <= 1e-8 and odd_ratio <= 1e-9 else EXIT_NUMERICAL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    p = _Parser(prog="herglotz", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, profile=True):
        if profile:
            sp.add_argument("--profile", required=True, help="wave-speed config file")
        sp.add_argument("--out", default=".", help="output directory")
        return sp

    sp = common(sub.add_parser("check", help="validate the Herglotz and jump conditions"))
    sp.add_argument("--grid", type=int, default=None, help="validation points per segment")
    sp.set_defaults(func=cmd_check)

    sp = common(sub.add_parser("trace", help="trace geodesics and broken rays"))
    sp.add_argument("--r0", type=float, nargs="+", required=True)
    sp.add_argument("--theta0", type=float, default=0.0)
    sp.add_argument("--segments", type=int, default=1)
    sp.add_argument("--samples", type=int, default=1001)
    sp.set_defaults(func=cmd_trace)

    sp = common(sub.add_parser("sinogram", help="per-mode X-ray data of a field"))
    sp.add_argument("--field", required=True)
    sp.add_argument("--kmax", type=int, default=None)
    sp.add_argument("--grid", type=int, default=512, help="tip grid size (uniform in rho)")
    sp.add_argument("--attenuation", default=None)
    sp.set_defaults(func=cmd_sinogram)

    sp = common(sub.add_parser("invert", help="recover Fourier modes from a sinogram"))
    sp.add_argument("--sinogram", required=True)
    sp.add_argument("--kmax", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--attenuation", default=None)
    sp.set_defaults(func=cmd_invert)

    sp = common(sub.add_parser("pbrt", help="periodic broken ray transform over periodic radii"))
    sp.add_argument("--field", required=True)
    sp.add_argument("--kmax", type=int, default=None)
    sp.add_argument("--qmax", type=int, default=6)
    sp.add_argument("--theta0", type=float, default=0.0)
    sp.set_defaults(func=cmd_pbrt)

    sp = common(sub.add_parser("periodic", help="list periodic tip radii"))
    sp.add_argument("--qmax", type=int, default=10)
    sp.set_defaults(func=cmd_periodic)

    sp = common(sub.add_parser("funk-demo", help="Funk transform round trip on a random field"), profile=False)
    sp.add_argument("--lmax", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_funk_demo)
    return p


def _check_ranges(args):
    for key, lo in (("grid", 8), ("qmax", 1), ("samples", 3), ("segments", 1), ("lmax", 0)):
        v = getattr(args, key, None)
        if v is not None and v < lo:
            raise ConfigError(f"--{key} must be at least {lo}")
    if getattr(args, "kmax", None) is not None and args.kmax < 0:
        raise ConfigError("--kmax must be non-negative")
    if getattr(args, "tol", None) is not None and not 0 < args.tol < 1:
        raise ConfigError("--tol must lie in (0, 1)")


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        _check_ranges(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HerglotzError, ArithmeticError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
