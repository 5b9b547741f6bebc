"""Command-line front end.

    hadamard --command certify --scene scene.json --out cert.json --svg cert.svg

Exit codes: 0 success / consistent, 2 schema error, 3 domain or numerical
error, 4 violation witness (non-unique projection or failed certification).
"""

import argparse
import json
import sys
from importlib import resources

import jsonschema
import numpy as np

from . import convexity as C
from . import counterexample as X
from . import geodesy, horo, retract
from . import manifold as mf
from . import sets as S
from .errors import HadamardError, NonUniqueProjection, SchemaError
from .svg import PALETTE, Canvas

COMMANDS = ("curvature", "certify", "retract", "counterexample", "project", "geodesic",
            "busemann")

EXIT_OK, EXIT_SCHEMA, EXIT_DOMAIN, EXIT_VIOLATION = 0, 2, 3, 4


def _schema():
    text = resources.files("hadamard").joinpath("data/scene.schema.json").read_text()
    return json.loads(text)


def load_scene(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            scene = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read scene {path}: {exc}") from exc
    try:
        jsonschema.validate(scene, _schema())
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"scene does not match the schema: {exc.message}") from exc
    return scene


def model_from(scene):
    m = scene.get("metric")
    if m is None:
        raise SchemaError("scene needs a 'metric' entry")
    return mf.MetricModel(m["kind"], int(m.get("dimension", 2)), m.get("phi"), m.get("k"))


def _require(scene, key):
    if key not in scene:
        raise SchemaError(f"scene needs a {key!r} entry")
    return scene[key]


def _box(scene, key="region"):
    box = _require(scene, key)
    return tuple(box["min"]), tuple(box["max"])


def _search(scene, model, resolution):
    lo, hi = _box(scene)
    if len(lo) != model.dimension or len(hi) != model.dimension:
        raise SchemaError("region dimension does not match the metric")
    corners = np.array([lo, hi], dtype=float)
    mf.check_point(model, corners)
    return S.Search.box(lo, hi, resolution)


def _boundary_canvas(model, s, search):
    canvas = Canvas(search.lo, search.hi)
    canvas.axes(model.kind)
    try:
        canvas.dots(S.boundary_sample(model, s, search.with_resolution(min(search.resolution, 128))),
                    "#4c72b0", 0.8)
    except HadamardError:
        pass
    return canvas


def cmd_curvature(scene, args):
    model = model_from(scene)
    lo, hi = _box(scene)
    rep = mf.verify_curvature_bounds(model, (lo, hi), int(scene.get("grid", 9)), seed=args.seed)
    report = {"K_min": rep.K_min, "K_max": rep.K_max, "ok": rep.all_in_bounds,
              "samples": rep.samples, "k": model.curvature_bound if rep.all_in_bounds else None}
    return report, EXIT_OK, None


def cmd_certify(scene, args):
    model = model_from(scene)
    s = S.set_from_json(_require(scene, "set"), model)
    resolution = args.resolution or int(scene.get("resolution", 128))
    search = _search(scene, model, resolution)
    probe_region = _box(scene, "probe_region") if "probe_region" in scene else (search.lo, search.hi)
    cert = C.certify_weak_convexity(model, s, probe_region, resolution,
                                    int(scene.get("probe_resolution", 13)), search, args.seed)
    report = cert.to_json()
    svg = None
    if args.svg and model.dimension == 2:
        canvas = _boundary_canvas(model, s, search)
        for w in cert.witnesses:
            canvas.dots([w["probe"]], "#c44e52", 3)
        svg = canvas.render()
    return report, EXIT_VIOLATION if cert.violated else EXIT_OK, svg


def cmd_retract(scene, args):
    model = model_from(scene)
    s = S.set_from_json(_require(scene, "set"), model)
    search = _search(scene, model, args.resolution or int(scene.get("resolution", 128)))
    points = scene.get("points") or [_require(scene, "point")]
    steps = int(scene.get("steps", 5))
    traces = [retract.retract_trace(model, s, np.asarray(p, dtype=float), steps, search)
              for p in points]
    svg = None
    if args.svg and model.dimension == 2:
        canvas = _boundary_canvas(model, s, search)
        for i, tr in enumerate(traces):
            canvas.polyline(tr.points, PALETTE[i % len(PALETTE)])
            canvas.dots([tr.start], "#000", 2.5)
        svg = canvas.render()
    return {"traces": [t.to_json() for t in traces]}, EXIT_OK, svg


def _counterexample_svg(scene, comps, witness):
    search = scene.search
    stride = max(1, search.resolution // 256)
    labels = comps.labels[::stride, ::stride]
    lo, hi = np.asarray(search.lo), np.asarray(search.hi)
    canvas = Canvas(lo, hi)
    canvas.axes(scene.model.kind)
    sub_hi = lo + (np.asarray(labels.shape) - 1) * stride * search.cell
    for k in range(1, comps.count + 1):
        canvas.cells(labels == k, lo, sub_hi, PALETTE[(k - 1) % len(PALETTE)])
    if witness:
        x = np.asarray(witness["x"])
        for m in witness["minimizers"]:
            pts = geodesy.barycenters(scene.model, x, np.asarray(m), np.linspace(0, 1, 33))
            canvas.polyline(pts, "#c44e52")
        canvas.dots([x], "#c44e52", 3)
    return canvas.render()


def _write_labels(path, comps):
    if path:
        # rows follow the second chart axis, bottom row first
        np.savetxt(path, comps.labels.T, fmt="%d", delimiter=",")


def cmd_counterexample(scene, args):
    epsilon = args.epsilon if args.epsilon is not None else float(scene.get("epsilon", 0.3))
    if epsilon < 0:
        raise SchemaError("epsilon must be nonnegative")
    kind = args.model or ("euclidean" if scene.get("metric", {}).get("kind") == "euclidean"
                          else "hyperbolic")
    if kind == "euclidean":
        report = X.euclidean_control(epsilon, seed=args.seed)
        report["model"] = "euclidean"
        svg = None
        if (args.svg or args.csv) and not report["empty"]:
            sc = X.build_theorem_scene(mf.euclidean(), (0.0, 0.0), (0.0, 1.0), epsilon,
                                       ((-2.0, -2.0), (2.0, 2.0)), 129)
            comps = X.connected_components(sc.model, sc.I, sc.search)
            svg = _counterexample_svg(sc, comps, None) if args.svg else None
            _write_labels(args.csv, comps)
        return report, EXIT_OK, svg
    resolution = args.resolution or int(scene.get("resolution", 512))
    report, sc, comps = X.hyperbolic_report(epsilon, resolution)
    report["seed"] = args.seed
    svg = _counterexample_svg(sc, comps, report["witness"]) if args.svg else None
    _write_labels(args.csv, comps)
    return report, EXIT_OK, svg


def cmd_project(scene, args):
    model = model_from(scene)
    s = S.set_from_json(_require(scene, "set"), model)
    search = _search(scene, model, args.resolution or int(scene.get("resolution", 128)))
    res = S.distance_to_set(model, s, np.asarray(_require(scene, "point"), dtype=float), search)
    return res.to_json(), EXIT_OK if res.unique else EXIT_VIOLATION, None


def cmd_geodesic(scene, args):
    model = model_from(scene)
    x = np.asarray(_require(scene, "x"), dtype=float)
    y = np.asarray(_require(scene, "y"), dtype=float)
    path = geodesy.connect_bvp(model, x, y, samples=int(scene.get("samples", 33)))
    svg = None
    if args.svg and model.dimension == 2:
        lo = np.minimum(x, y) - 0.5
        hi = np.maximum(x, y) + 0.5
        if model.kind == mf.HALF_PLANE:
            lo[-1] = 0.0
            hi[-1] = max(hi[-1], path.points[:, -1].max() + 0.2)
        canvas = Canvas(lo, hi)
        canvas.axes(model.kind)
        canvas.polyline(path.points, "#4c72b0")
        canvas.dots([x, y], "#000", 3)
        svg = canvas.render()
    return path.to_json(), EXIT_OK, svg


def cmd_busemann(scene, args):
    model = model_from(scene)
    ray = _require(scene, "ray")
    f = horo.functional(model, ray["base"], ray["dir"])
    points = scene.get("points") or [_require(scene, "point")]
    rows = []
    for p in points:
        p = np.asarray(p, dtype=float)
        num = horo.busemann_numeric(model, f, p)
        row = {"point": p.tolist(), "numeric": num.value, "gap": num.gap, "horizon": num.horizon}
        if model.has_closed_form:
            row["closed_form"] = float(horo.busemann_closed_form(model, f, p))
        rows.append(row)
    return {"values": rows}, EXIT_OK, None


HANDLERS = {
    "curvature": cmd_curvature,
    "certify": cmd_certify,
    "retract": cmd_retract,
    "counterexample": cmd_counterexample,
    "project": cmd_project,
    "geodesic": cmd_geodesic,
    "busemann": cmd_busemann,
}


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(report):
    return json.dumps(report, sort_keys=True, indent=2, default=_jsonable) + "\n"


def build_parser():
    p = argparse.ArgumentParser(prog="hadamard", description=__doc__.splitlines()[0])
    p.add_argument("--command", required=True, choices=COMMANDS)
    p.add_argument("--scene", help="scene JSON file")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--svg", help="optional SVG diagnostic path")
    p.add_argument("--csv", help="component labels grid (counterexample only)")
    p.add_argument("--resolution", type=int, help="grid resolution per axis")
    p.add_argument("--epsilon", type=float, help="flow time for the counterexample")
    p.add_argument("--seed", type=int, help="seed recorded in every report")
    p.add_argument("--model", choices=("hyperbolic", "euclidean"),
                   help="counterexample model when no scene is given")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        scene = load_scene(args.scene)
        if args.command != "counterexample" and not scene:
            raise SchemaError(f"--command {args.command} needs --scene")
        if args.seed is None:
            args.seed = int(scene.get("seed", 0))
        report, code, svg = HANDLERS[args.command](scene, args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NonUniqueProjection as exc:
        report = {"error": "non-unique projection", "point": exc.point.tolist(),
                  "minimizers": [m.tolist() for m in exc.minimizers],
                  "distance": exc.distance}
        code, svg = EXIT_VIOLATION, None
    except (HadamardError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    report = {"command": args.command, "seed": args.seed, **report}
    text = dumps(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.svg and svg is not None:
        with open(args.svg, "w") as fh:
            fh.write(svg)
    return code


if __name__ == "__main__":
    sys.exit(main())
