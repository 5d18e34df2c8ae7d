"""Bifurcation-diagram data model, serialization, and SVG rendering.

A Diagram bundles the traced branches and localized events of one run along
with the potential, the parameter window, the continuation settings and the
tool version, so a stored file identifies the computation that produced it.
JSON is the archival format (lossless round trip), CSV the interchange
format (one row per branch point), and SVG the plot format: stable segments
are drawn in #008000, unstable ones in #c00000, with events marked.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from . import __version__
from .continuation import Branch, BranchPoint, BifurcationEvent, ContinuationSettings

__all__ = [
    "Diagram",
    "ParamVsComponent",
    "Abc3d",
    "export",
    "load_diagram",
    "render_svg",
    "STABLE_COLOR",
    "UNSTABLE_COLOR",
]

STABLE_COLOR = "#008000"
UNSTABLE_COLOR = "#c00000"

_COMPONENTS = {
    "triangle": ("lambda", "a", "b", "c"),
    "tetrahedron": ("lambda", "a", "b", "c", "A", "B", "C"),
}
_PARAM_LABEL = {"triangle": "A", "tetrahedron": "V"}


@dataclass
class Diagram:
    problem: str
    potential: dict
    window: tuple[float, float]
    settings: ContinuationSettings
    branches: list[Branch] = field(default_factory=list)
    events: list[BifurcationEvent] = field(default_factory=list)
    version: str = __version__

    def branch_by_id(self, branch_id: int) -> Branch:
        for br in self.branches:
            if br.id == branch_id:
                return br
        raise KeyError(f"no branch with id {branch_id}")

    def validate(self) -> None:
        ids = {br.id for br in self.branches}
        for ev in self.events:
            if ev.source_branch is not None and ev.source_branch not in ids:
                raise ValueError(f"event {ev.id} references missing branch {ev.source_branch}")
        for br in self.branches:
            s = [pt.arclength for pt in br.points]
            if any(b < a for a, b in zip(s, s[1:])):
                raise ValueError(f"branch {br.id} points are not sorted by arclength")


def _point_obj(pt: BranchPoint) -> dict:
    return {
        "state": list(pt.state),
        "parameter": pt.parameter,
        "s": pt.arclength,
        "stability": pt.stability,
        "shape": pt.shape,
        "det_sign": pt.det_sign,
    }


def _point_from(obj: dict) -> BranchPoint:
    return BranchPoint(
        state=tuple(obj["state"]),
        parameter=obj["parameter"],
        arclength=obj["s"],
        stability=obj["stability"],
        shape=obj["shape"],
        det_sign=obj["det_sign"],
    )


def _event_obj(ev: BifurcationEvent) -> dict:
    return {
        "id": ev.id,
        "kind": ev.kind,
        "parameter": ev.parameter,
        "kernel_dim": ev.kernel_dim,
        "kernel": [list(v) for v in ev.kernel],
        "state": list(ev.state),
        "source_branch": ev.source_branch,
        "refined": ev.refined,
    }


def _event_from(obj: dict) -> BifurcationEvent:
    return BifurcationEvent(
        kind=obj["kind"],
        parameter=obj["parameter"],
        kernel_dim=obj["kernel_dim"],
        kernel=tuple(tuple(v) for v in obj["kernel"]),
        state=tuple(obj["state"]),
        source_branch=obj["source_branch"],
        refined=obj["refined"],
        id=obj["id"],
    )


def diagram_to_json(diagram: Diagram) -> str:
    obj = {
        "problem": diagram.problem,
        "potential": diagram.potential,
        "window": list(diagram.window),
        "settings": {
            "h0": diagram.settings.h0,
            "h_min": diagram.settings.h_min,
            "h_max": diagram.settings.h_max,
            "newton_tol": diagram.settings.newton_tol,
            "newton_max_iters": diagram.settings.newton_max_iters,
            "step_growth": diagram.settings.step_growth,
            "step_shrink": diagram.settings.step_shrink,
            "contraction_target": diagram.settings.contraction_target,
            "detection": diagram.settings.detection,
            "max_points": diagram.settings.max_points,
        },
        "version": diagram.version,
        "branches": [
            {
                "id": br.id,
                "parent_event": br.parent_event,
                "label": br.label,
                "points": [_point_obj(pt) for pt in br.points],
            }
            for br in diagram.branches
        ],
        "events": [_event_obj(ev) for ev in diagram.events],
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def diagram_from_json(text: str) -> Diagram:
    obj = json.loads(text)
    settings = ContinuationSettings(**obj["settings"])
    branches = [
        Branch(
            points=[_point_from(p) for p in b["points"]],
            id=b["id"],
            parent_event=b["parent_event"],
            label=b["label"],
        )
        for b in obj["branches"]
    ]
    events = [_event_from(e) for e in obj["events"]]
    return Diagram(
        problem=obj["problem"],
        potential=obj["potential"],
        window=tuple(obj["window"]),
        settings=settings,
        branches=branches,
        events=events,
        version=obj["version"],
    )


def diagram_to_csv(diagram: Diagram) -> str:
    components = _COMPONENTS[diagram.problem]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["branch_id", "s", "parameter"] + list(components) + ["stable", "shape"])
    for br in diagram.branches:
        for pt in br.points:
            row = [br.id, f"{pt.arclength:.17g}", f"{pt.parameter:.17g}"]
            row += [f"{v:.17g}" for v in pt.state]
            row += ["1" if pt.stability == "stable" else "0", pt.shape]
            writer.writerow(row)
    return buf.getvalue()


def export(diagram: Diagram, format: str) -> bytes:
    """Serialize a diagram; `format` is "json" or "csv"."""
    if format == "json":
        return diagram_to_json(diagram).encode()
    if format == "csv":
        return diagram_to_csv(diagram).encode()
    raise ValueError(f"unknown export format {format!r}")


def load_diagram(data: bytes | str) -> Diagram:
    if isinstance(data, bytes):
        data = data.decode()
    return diagram_from_json(data)


@dataclass(frozen=True)
class ParamVsComponent:
    """Plot a named state component against the continuation parameter."""

    name: str


@dataclass(frozen=True)
class Abc3d:
    """Orthographic projection of the (a, b, c) edge space.

    The rotation is Ry(tilt) @ Rz(azimuth) applied before dropping the
    depth coordinate.  `trivial_axis_view` orients the symmetric diagonal
    (1, 1, 1) straight out of the page.
    """

    azimuth_deg: float = -60.0
    tilt_deg: float = 30.0

    @staticmethod
    def trivial_axis_view() -> "Abc3d":
        return Abc3d(azimuth_deg=-45.0, tilt_deg=math.degrees(math.atan(math.sqrt(2.0))))


def _project_points(diagram: Diagram, projection) -> list[list[tuple[float, float]]]:
    """Per-branch lists of plot coordinates."""
    if isinstance(projection, ParamVsComponent):
        components = _COMPONENTS[diagram.problem]
        if projection.name not in components:
            raise ValueError(f"unknown component {projection.name!r} for {diagram.problem}")
        idx = components.index(projection.name)
        return [[(pt.parameter, pt.state[idx]) for pt in br.points] for br in diagram.branches]
    if isinstance(projection, Abc3d):
        if diagram.problem != "triangle":
            raise ValueError("abc_3d projection applies to triangle diagrams")
        az = math.radians(projection.azimuth_deg)
        tl = math.radians(projection.tilt_deg)
        ca, sa = math.cos(az), math.sin(az)
        ct, st = math.cos(tl), math.sin(tl)

        def proj(state):
            x, y, z = state[1], state[2], state[3]
            xr, yr = ca * x - sa * y, sa * x + ca * y
            return (ct * xr - st * z, yr)

        return [[proj(pt.state) for pt in br.points] for br in diagram.branches]
    raise ValueError(f"unknown projection {projection!r}")


def _event_coords(diagram: Diagram, projection) -> list[tuple[float, float]]:
    fake = Diagram(
        problem=diagram.problem,
        potential=diagram.potential,
        window=diagram.window,
        settings=diagram.settings,
        branches=[Branch(points=[
            BranchPoint(state=ev.state, parameter=ev.parameter, arclength=0.0,
                        stability="marginal", shape="", det_sign=1)
            for ev in diagram.events
        ])],
    )
    coords = _project_points(fake, projection)
    return coords[0] if coords else []


def _segment_color(sa: str, sb: str) -> str:
    if (sa == "stable" and sb != "unstable") or (sb == "stable" and sa != "unstable"):
        return STABLE_COLOR
    return UNSTABLE_COLOR


def render_svg(diagram: Diagram, projection, width: int = 800, height: int = 600) -> str:
    """Render the diagram as standalone SVG text.

    One polyline per maximal same-color run of consecutive points, so the
    green/red partition changes exactly at the recorded stability changes;
    events are drawn as black circles.
    """
    branch_coords = _project_points(diagram, projection)
    if not any(len(c) >= 1 for c in branch_coords):
        raise ValueError("diagram has no points to render for this projection")
    event_coords = _event_coords(diagram, projection)
    xs = [x for coords in branch_coords for (x, _) in coords] + [x for (x, _) in event_coords]
    ys = [y for coords in branch_coords for (_, y) in coords] + [y for (_, y) in event_coords]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_pad = 0.05 * (x_hi - x_lo) or 1.0
    y_pad = 0.05 * (y_hi - y_lo) or 1.0
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad
    margin = 60.0

    def to_screen(x: float, y: float) -> tuple[float, float]:
        sx = margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin)
        sy = height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)
        return sx, sy

    if isinstance(projection, ParamVsComponent):
        x_label = _PARAM_LABEL[diagram.problem]
        y_label = projection.name
    else:
        x_label, y_label = "u", "v"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 15:.1f}" text-anchor="middle" '
        f'font-size="14">{x_label}</text>',
        f'<text x="18" y="{height / 2:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {height / 2:.1f})">{y_label}</text>',
        f'<text x="{margin:.1f}" y="{height - margin + 18:.1f}" text-anchor="middle" '
        f'font-size="11">{x_lo:.4g}</text>',
        f'<text x="{width - margin:.1f}" y="{height - margin + 18:.1f}" text-anchor="middle" '
        f'font-size="11">{x_hi:.4g}</text>',
        f'<text x="{margin - 8:.1f}" y="{height - margin:.1f}" text-anchor="end" '
        f'font-size="11">{y_lo:.4g}</text>',
        f'<text x="{margin - 8:.1f}" y="{margin:.1f}" text-anchor="end" '
        f'font-size="11">{y_hi:.4g}</text>',
    ]
    for br, coords in zip(diagram.branches, branch_coords):
        if len(coords) < 2:
            continue
        run: list[tuple[float, float]] = [coords[0]]
        run_color = None
        for i in range(1, len(coords)):
            color = _segment_color(br.points[i - 1].stability, br.points[i].stability)
            if run_color is None or color == run_color:
                run_color = color
                run.append(coords[i])
            else:
                parts.append(_polyline(run, run_color, to_screen))
                run = [coords[i - 1], coords[i]]
                run_color = color
        if len(run) >= 2:
            parts.append(_polyline(run, run_color or UNSTABLE_COLOR, to_screen))
    for (x, y) in event_coords:
        sx, sy = to_screen(x, y)
        parts.append(f'<circle cx="{sx:.2f}" cy="{sy:.2f}" r="4" fill="black"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def _polyline(coords: list[tuple[float, float]], color: str, to_screen) -> str:
    pts = " ".join(f"{sx:.2f},{sy:.2f}" for sx, sy in (to_screen(x, y) for x, y in coords))
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'
