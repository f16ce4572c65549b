"""Command-line pipeline.

Commands: build (curve -> polynomial + certificate), render (dump -> image +
field), verify (field or dump vs. curves -> report), rational (several curves
-> combined rational map), annulus (curve pair -> annulus map). Every
artifact embeds the run configuration; identical configurations produce
byte-identical outputs.

Exit codes: 0 ok, 2 parse, 3 geometry, 4 certification fail,
5 verification fail, 6 io.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import conformal, curves, dynamics, rational, shapepoly
from .render import (
    load_field,
    render as render_grid,
    save_field,
    verify_hausdorff,
    verify_hausdorff_annulus,
    write_image,
)
from .errors import (
    Aliasing, BadBasepoint, BboxTooSmall, DuplicateRoots, EmptySet,
    GeometryRejected, Indeterminate, JuliafitError, MapDiverged,
    MonochromeField, NoDegreeFound, NoEpsilon, NotSimple, OffsetCollapse,
    ParseError, SamplingFailure, TooFewPoints,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_GEOMETRY = 3
EXIT_CERTIFICATION = 4
EXIT_VERIFICATION = 5
EXIT_IO = 6

_PARSE_ERRORS = (ParseError, TooFewPoints)
_GEOMETRY_ERRORS = (NotSimple, OffsetCollapse, BadBasepoint, NoEpsilon,
                    DuplicateRoots, GeometryRejected, MapDiverged, Aliasing,
                    SamplingFailure, EmptySet, Indeterminate, BboxTooSmall,
                    MonochromeField)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _write_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _outpath(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _config(args, command: str) -> dict:
    skip = {"func", "curve_files", "dump", "input"}
    cfg = {"command": command}
    for k, v in sorted(vars(args).items()):
        if k in skip or callable(v):
            continue
        cfg[k] = v
    return cfg


def _schedule(args) -> list[int]:
    if args.n is not None:
        return [args.n]
    out = []
    n = 8
    while n < args.n_max:
        out.append(n)
        n *= 2
    out.append(args.n_max)
    return out


def _pipeline_bbox(curve_list, delta: float, width: int, height: int):
    los = [c.bbox[0] for c in curve_list]
    his = [c.bbox[1] for c in curve_list]
    x0 = min(p.real for p in los)
    y0 = min(p.imag for p in los)
    x1 = max(p.real for p in his)
    y1 = max(p.imag for p in his)
    pad = max(1.15 * delta, 0.10 * max(x1 - x0, y1 - y0))
    return (complex(x0 - pad, y0 - pad), complex(x1 + pad, y1 + pad))


# ---------------------------------------------------------------------------
# shape building helpers


def _build_one_shape(curve_t: curves.JordanCurve, band_t: curves.AnnulusSpec,
                     args, t_dyn: complex):
    """Exterior map + inflation for one translated curve; returns a builder
    n -> ShapePolynomial in the working frame."""
    p = curve_t.centroid
    m = conformal.build_exterior_map(curve_t, p, resample=args.resample)
    band_local = band_t.translated(-p)
    eps = args.epsilon if args.epsilon else shapepoly.select_epsilon(m, band_local)

    def build(n: int) -> shapepoly.ShapePolynomial:
        return shapepoly.sample_roots(m, eps, n, t=t_dyn, frame_offset=p)

    return m, eps, build


def _render_field(kernel, t_dyn, cert, curve_list, args, cfg):
    bbox = _pipeline_bbox(curve_list, args.delta or 0.0, args.grid, args.grid)
    field = render_grid(
        kernel, bbox, args.grid, args.grid,
        escape_radius=cert.escape_radius, capture_radius=cert.capture_radius,
        max_iter=args.max_iter, workers=args.workers, frame_shift=t_dyn)
    save_field(field, _outpath(args, "field.json"), config=cfg)
    write_image(field, _outpath(args, "image.pgm"))
    return field


# ---------------------------------------------------------------------------
# commands


def cmd_build(args) -> int:
    curve = curves.load_curve(args.input)
    eps_geom = args.eps_geom if args.eps_geom else 0.05 * curve.diameter
    ann = curves.offset_annulus(curve, eps_geom)
    t = curve.centroid
    curve_t = curve.translated(-t)
    ann_t = ann.translated(-t)
    cfg = _config(args, "build")
    cfg["input"] = os.path.basename(str(args.input))
    cfg["eps_geom_used"] = eps_geom

    m, eps, build = _build_one_shape(curve_t, ann_t, args, t)
    cfg["epsilon_used"] = eps
    _say(f"map ready: capacity {abs(m.capacity):.6g}, "
         f"boundary rmse {m.quality.boundary_rmse:.3g}, inflation {eps}")
    shape, cert = dynamics.find_min_degree(build, ann_t, _schedule(args),
                                           args.samples, args.seed)
    _say(f"certified at n = {shape.n} "
         f"(inside {cert.inside_max:.3g} < {cert.r_inner:.3g}, "
         f"expansion {cert.outside_min_ratio:.3g} > {cert.kappa:.3g})")
    shapepoly.save_shape(shape, _outpath(args, "shape.json"))
    dynamics.save_certificate(cert, _outpath(args, "certificate.json"), config=cfg)
    conformal.save_map(m, _outpath(args, "map.json"))
    return EXIT_OK


def _load_dump(path):
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    kind = obj.get("kind")
    if kind == "shape_polynomial":
        shape = shapepoly.load_shape_obj(obj)
        return shapepoly.PolynomialKernel(shape), shape.t, shape.roots
    if kind == "multi_shape_system":
        system = rational.load_system(path)
        pts = np.concatenate([s.roots for s in system.shapes])
        return rational.MultiShapeKernel(system), system.t, pts
    if kind == "annulus_map_system":
        system = rational.load_annulus_system(path)
        pts = np.concatenate([system.outer_shape.roots, system.inner_shape.roots])
        return rational.AnnulusMapKernel(system), system.outer_shape.t, pts
    raise ParseError(f"unrecognized dump kind {kind!r} in {path}")


def _radii(args, pts) -> tuple[float, float]:
    if args.certificate:
        with open(args.certificate, "r", encoding="utf-8") as fh:
            cobj = json.load(fh)
        return float(cobj["escape_radius"]), float(cobj["capture_radius"])
    mags = np.abs(pts)
    return 1.2 * float(mags.max()), 0.5 * float(mags.min())


def cmd_render(args) -> int:
    kernel, t_dyn, pts = _load_dump(args.input)
    escape_radius, capture_radius = _radii(args, pts)
    cfg = _config(args, "render")
    cfg["input"] = os.path.basename(str(args.input))
    if args.bbox:
        x0, y0, x1, y1 = args.bbox
        bbox = (complex(x0, y0), complex(x1, y1))
    else:
        orig = pts + t_dyn
        span = max(np.ptp(orig.real), np.ptp(orig.imag))
        pad = args.margin * span
        bbox = (complex(orig.real.min() - pad, orig.imag.min() - pad),
                complex(orig.real.max() + pad, orig.imag.max() + pad))
    field = render_grid(
        kernel, bbox, args.grid, args.grid, escape_radius=escape_radius,
        capture_radius=capture_radius, max_iter=args.max_iter,
        workers=args.workers, frame_shift=t_dyn)
    save_field(field, _outpath(args, "field.json"), config=cfg)
    write_image(field, _outpath(args, "image.pgm"))
    _say(f"rendered {args.grid}x{args.grid} field")
    return EXIT_OK


def cmd_verify(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("kind") == "escape_field":
        field = load_field(args.input)
    else:
        kernel, t_dyn, pts = _load_dump(args.input)
        escape_radius, capture_radius = _radii(args, pts)
        curve_list = [curves.load_curve(p) for p in args.curve]
        bbox = _pipeline_bbox(curve_list, args.delta, args.grid, args.grid)
        field = render_grid(
            kernel, bbox, args.grid, args.grid, escape_radius=escape_radius,
            capture_radius=capture_radius, max_iter=args.max_iter,
            workers=args.workers, frame_shift=t_dyn)
    curve_list = [curves.load_curve(p) for p in args.curve]
    cfg = _config(args, "verify")
    if args.annulus:
        if len(curve_list) != 2:
            raise ParseError("--annulus needs exactly two curves: outer inner")
        rep = verify_hausdorff_annulus(field, curve_list[0],
                                                  curve_list[1], args.delta)
    else:
        rep = verify_hausdorff(field, curve_list, args.delta)
    robj = rep.to_obj()
    robj["config"] = cfg
    _write_json(robj, _outpath(args, "report.json"))
    _say(f"d_K={rep.d_K:.4g} d_J={rep.d_J:.4g} d_L={rep.d_L:.4g} "
         f"tolerance={rep.delta + rep.pixel_diag:.4g} pass={rep.passed}")
    return EXIT_OK if rep.passed else EXIT_VERIFICATION


def cmd_rational(args) -> int:
    curve_list = [curves.load_curve(p) for p in args.input]
    delta = args.delta if args.delta else 0.2 * max(c.diameter for c in curve_list)
    if len(curve_list) > 1:
        eta = 0.5 * min(rational.curve_gap(a, b)
                        for i, a in enumerate(curve_list)
                        for b in curve_list[i + 1:])
        if eta <= 0:
            raise GeometryRejected("curves touch or intersect")
        delta1 = min(delta / 3.0, eta)
    else:
        delta1 = delta / 3.0
    eps_geom = args.eps_geom if args.eps_geom else delta1 / 2.0
    anns = [curves.offset_annulus(c, eps_geom) for c in curve_list]
    rational.validate_mutually_exterior(anns)

    interiors = [a.inner for a in anns]
    areas = np.array([c.area for c in curve_list])
    union_centroid = complex(np.sum(
        np.array([c.centroid for c in curve_list]) * areas) / areas.sum())
    t = union_centroid
    if not any(i.contains([t])[0] for i in interiors):
        t = curve_list[0].centroid

    cfg = _config(args, "rational")
    cfg.update(inputs=[os.path.basename(str(p)) for p in args.input],
               eps_geom_used=eps_geom, delta_used=delta,
               t_used=[t.real, t.imag])

    anns_t = [a.translated(-t) for a in anns]
    builders = []
    for c, a_t in zip(curve_list, anns_t):
        m, eps, build = _build_one_shape(c.translated(-t), a_t, args, t)
        _say(f"shape map ready: capacity {abs(m.capacity):.6g}, inflation {eps}")
        builders.append(build)

    if args.level_b and args.level_big:
        b, big = args.level_b, args.level_big
    else:
        b, big = rational.auto_bounds(anns_t)
    cfg.update(b_used=b, B_used=big)

    cert = None
    system = None
    for n in _schedule(args):
        system = rational.MultiShapeSystem(shapes=tuple(bd(n) for bd in builders))
        cert = rational.certify_multi(system, anns_t, b, big, args.samples, args.seed)
        if cert.passed:
            break
    if cert is None or not cert.passed:
        raise NoDegreeFound(f"no degree in {_schedule(args)} certified the system")
    _say(f"certified at n = {cert.n_certified} "
         f"(|combined| < {cert.inside_max:.3g} inside, > {cert.outside_min:.3g} outside)")

    rational.save_system(system, _outpath(args, "system.json"))
    rational.save_rational_certificate(cert, _outpath(args, "certificate.json"), cfg)
    field = _render_field(rational.MultiShapeKernel(system), t, cert,
                          curve_list, args, cfg)
    rep = verify_hausdorff(field, curve_list, delta)
    robj = rep.to_obj()
    robj["config"] = cfg
    _write_json(robj, _outpath(args, "report.json"))
    _say(f"d_K={rep.d_K:.4g} d_J={rep.d_J:.4g} d_L={rep.d_L:.4g} pass={rep.passed}")
    return EXIT_OK if rep.passed else EXIT_VERIFICATION


def _default_basepoint(outer: curves.JordanCurve, inner: curves.JordanCurve) -> complex:
    """Midpoint of the gap between the curves along the ray from the inner
    centroid through the inner curve's rightmost vertex."""
    start = complex(inner.points[int(np.lexsort((inner.points.imag,
                                                 inner.points.real))[-1])])
    direction = start - inner.centroid
    direction /= abs(direction)
    s = np.linspace(0.0, outer.diameter, 4096)
    probes = start + direction * s
    outside = curves.winding_numbers(probes, outer.points) == 0
    idx = int(np.argmax(outside)) if outside.any() else len(s) - 1
    return complex(start + direction * (s[idx] / 2.0))


def cmd_annulus(args) -> int:
    outer = curves.load_curve(args.input[0])
    inner = curves.load_curve(args.input[1])
    if not outer.contains([inner.centroid])[0]:
        raise GeometryRejected("second curve must lie inside the first")
    xi = rational.curve_gap(outer, inner)
    if xi <= 0:
        raise GeometryRejected("annulus curves touch")
    delta = args.delta if args.delta else 0.2 * outer.diameter
    delta1 = min(delta, xi) / 3.0
    eps_geom = args.eps_geom if args.eps_geom else delta1 / 2.0
    band_e = curves.offset_annulus(outer, eps_geom)
    band_f = curves.offset_annulus(inner, eps_geom)

    t = complex(*args.basepoint) if args.basepoint else _default_basepoint(outer, inner)
    cfg = _config(args, "annulus")
    cfg.update(inputs=[os.path.basename(str(p)) for p in args.input],
               eps_geom_used=eps_geom, delta_used=delta, xi=xi,
               t_used=[t.real, t.imag])

    e_t = band_e.translated(-t)
    f_t = band_f.translated(-t)
    m_out, eps_out, build_out = _build_one_shape(outer.translated(-t), e_t, args, t)
    m_in, eps_in, build_in = _build_one_shape(inner.translated(-t), f_t, args, t)
    _say(f"maps ready: outer inflation {eps_out}, inner inflation {eps_in}")

    cert = None
    system = None
    for n in _schedule(args):
        system = rational.AnnulusSystem(
            outer_shape=build_out(n), inner_shape=build_in(n),
            outer_band=e_t, inner_band=f_t, xi=xi)
        cert = rational.certify_S(system, args.samples, args.seed)
        if cert.passed:
            break
    if cert is None or not cert.passed:
        raise NoDegreeFound(f"no degree in {_schedule(args)} certified the annulus map")
    _say(f"certified at n = {cert.n_certified} (band max {cert.mid_max:.3g} < "
         f"{cert.r_mid:.3g}, far min {cert.far_min:.3g} > {cert.R_big:.3g})")

    rational.save_annulus_system(system, _outpath(args, "system.json"))
    rational.save_rational_certificate(cert, _outpath(args, "certificate.json"), cfg)
    field = _render_field(rational.AnnulusMapKernel(system), t, cert,
                          [outer, inner], args, cfg)
    rep = verify_hausdorff_annulus(field, outer, inner, delta)
    robj = rep.to_obj()
    robj["config"] = cfg
    _write_json(robj, _outpath(args, "report.json"))
    _say(f"d_K={rep.d_K:.4g} d_J={rep.d_J:.4g} d_L={rep.d_L:.4g} pass={rep.passed}")
    return EXIT_OK if rep.passed else EXIT_VERIFICATION


# ---------------------------------------------------------------------------
# parser


def _add_common(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--out", default=".", help="output directory (default: .)")
    ap.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")
    ap.add_argument("--samples", type=int, default=4096,
                    help="samples per region for certification (default 4096)")


def _add_build(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--n", type=int, default=None,
                    help="exact root count (default: search the doubling schedule)")
    ap.add_argument("--n-max", type=int, default=512, dest="n_max",
                    help="largest root count to try (default 512)")
    ap.add_argument("--epsilon", type=float, default=None,
                    help="override the circle inflation (default: halving search)")
    ap.add_argument("--eps-geom", type=float, default=None, dest="eps_geom",
                    help="offset distance for the annulus (default: 5%% of diameter "
                         "for build, delta/6 for rational/annulus)")
    ap.add_argument("--resample", type=int, default=512,
                    help="boundary resampling count for the map (default 512)")


def _add_render(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--grid", type=int, default=512, help="render grid size (default 512)")
    ap.add_argument("--max-iter", type=int, default=200, dest="max_iter",
                    help="iteration budget per pixel (default 200)")
    ap.add_argument("--workers", type=int, default=None,
                    help="render worker processes (default: up to 4)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="juliafit",
        description="Fit escape-time fractal boundaries to prescribed curves.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="curve file -> shape polynomial + certificate")
    p.add_argument("input", help="curve file ('x y' lines or JSON points)")
    _add_common(p)
    _add_build(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("render", help="dump file -> escape field + image")
    p.add_argument("input", help="shape/system dump (JSON)")
    _add_common(p)
    _add_render(p)
    p.add_argument("--certificate", default=None,
                   help="certificate JSON supplying escape/capture radii")
    p.add_argument("--bbox", type=float, nargs=4, default=None,
                   metavar=("X0", "Y0", "X1", "Y1"), help="render window")
    p.add_argument("--margin", type=float, default=0.3,
                   help="relative margin around the roots when --bbox is absent")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("verify", help="field or dump vs. curves -> report")
    p.add_argument("input", help="field dump or shape/system dump")
    _add_common(p)
    _add_render(p)
    p.add_argument("--curve", action="append", required=True,
                   help="target curve file (repeatable)")
    p.add_argument("--delta", type=float, required=True,
                   help="target Hausdorff tolerance")
    p.add_argument("--annulus", action="store_true",
                   help="treat the two curves as outer/inner annulus boundary")
    p.add_argument("--certificate", default=None,
                   help="certificate JSON supplying escape/capture radii")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rational", help="curve files -> combined rational map")
    p.add_argument("input", nargs="+", help="curve files (mutually exterior)")
    _add_common(p)
    _add_build(p)
    _add_render(p)
    p.add_argument("--delta", type=float, default=None,
                   help="Hausdorff tolerance (default: 20%% of largest diameter)")
    p.add_argument("--b", type=float, default=None, dest="level_b",
                   help="contraction level (default: from geometry)")
    p.add_argument("--B", type=float, default=None, dest="level_big",
                   help="expansion level (default: from geometry)")
    p.set_defaults(func=cmd_rational)

    p = sub.add_parser("annulus", help="outer+inner curves -> annulus map")
    p.add_argument("input", nargs=2, metavar=("OUTER", "INNER"), help="curve files")
    _add_common(p)
    _add_build(p)
    _add_render(p)
    p.add_argument("--delta", type=float, default=None,
                   help="Hausdorff tolerance (default: 20%% of outer diameter)")
    p.add_argument("--basepoint", type=float, nargs=2, default=None,
                   metavar=("X", "Y"), help="basepoint in the middle region")
    p.set_defaults(func=cmd_annulus)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _PARSE_ERRORS as exc:
        _say(f"error [{exc.code}]: {exc}")
        return EXIT_PARSE
    except NoDegreeFound as exc:
        _say(f"error [{exc.code}]: {exc}")
        return EXIT_CERTIFICATION
    except _GEOMETRY_ERRORS as exc:
        _say(f"error [{exc.code}]: {exc}")
        return EXIT_GEOMETRY
    except JuliafitError as exc:
        _say(f"error [{exc.code}]: {exc}")
        return EXIT_GEOMETRY
    except OSError as exc:
        _say(f"io error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
