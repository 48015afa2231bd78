"""Deterministic 2D rigid-body engine.

Sequential-impulse solver over plain Python floats: convex polygon bodies, a
static terrain polyline, Coulomb friction, revolute joints with motors and
limits, and raycasts. Bodies, joints and contacts are always visited in
insertion order, so a step is a pure function of the world state.
"""

import math
from bisect import bisect_left, bisect_right
from collections.abc import Sequence

from shapely.geometry import Polygon
from shapely.geometry.polygon import orient
from shapely.validation import explain_validity

from app.core.exceptions import InvalidShapeError
from app.schemas.experiment import PhysicsConfig

Vec2 = tuple[float, float]

# Relative tolerance preferring the first shape's face as reference
_FACE_TOLERANCE = 0.1


# =============================================================================
# Geometry helpers
# =============================================================================


def _validated_polygon(vertices: Sequence[Vec2]) -> Polygon:
    """Check a body outline and return it counter-clockwise."""
    if len(vertices) < 3:
        raise InvalidShapeError(f"Polygon needs at least 3 vertices, got {len(vertices)}")
    polygon = Polygon(vertices)
    if not polygon.is_valid:
        raise InvalidShapeError(f"Invalid polygon: {explain_validity(polygon)}")
    if polygon.area <= 0.0:
        raise InvalidShapeError("Polygon has zero area")
    if not math.isclose(polygon.convex_hull.area, polygon.area, rel_tol=1e-9):
        raise InvalidShapeError("Polygon is not convex")
    return orient(polygon, sign=1.0)


def _edge_normals(vertices: Sequence[Vec2]) -> tuple[Vec2, ...]:
    normals = []
    count = len(vertices)
    for i in range(count):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % count]
        dx, dy = x2 - x1, y2 - y1
        length = math.hypot(dx, dy)
        if length < 1e-12:
            raise InvalidShapeError("Polygon has a zero-length edge")
        normals.append((dy / length, -dx / length))
    return tuple(normals)


def _polar_moment(vertices: Sequence[Vec2]) -> float:
    """Second moment of area about the origin (unit density)."""
    total = 0.0
    count = len(vertices)
    for i in range(count):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % count]
        d = x1 * y2 - x2 * y1
        total += d * (x1 * x1 + x1 * x2 + x2 * x2 + y1 * y1 + y1 * y2 + y2 * y2)
    return total / 12.0


# =============================================================================
# Bodies and joints
# =============================================================================


class Body:
    """Convex polygon rigid body.

    Vertices are stored relative to the polygon centroid, which is also the
    body origin; ``position`` is the centroid in world coordinates.
    """

    def __init__(
        self,
        vertices: Sequence[Vec2],
        position: Vec2 = (0.0, 0.0),
        angle: float = 0.0,
        *,
        density: float = 1.0,
        friction: float = 0.2,
        is_static: bool = False,
        collision_group: int = 0,
        label: str = "",
    ) -> None:
        polygon = _validated_polygon(vertices)
        centroid = polygon.centroid
        cx, cy = centroid.x, centroid.y
        self.vertices: tuple[Vec2, ...] = tuple(
            (x - cx, y - cy) for x, y in list(polygon.exterior.coords)[:-1]
        )
        self.normals = _edge_normals(self.vertices)

        c, s = math.cos(angle), math.sin(angle)
        self.x = position[0] + c * cx - s * cy
        self.y = position[1] + s * cx + c * cy
        self.angle = angle
        self.vx = 0.0
        self.vy = 0.0
        self.omega = 0.0

        self.density = density
        self.friction = friction
        self.is_static = is_static
        self.collision_group = collision_group
        self.label = label
        self.area = polygon.area

        if is_static:
            self.mass = self.inertia = 0.0
            self.inv_mass = self.inv_inertia = 0.0
        else:
            self.mass = density * self.area
            self.inertia = density * _polar_moment(self.vertices)
            if self.mass <= 0.0 or self.inertia <= 0.0:
                raise InvalidShapeError(f"Body '{label}' needs positive density")
            self.inv_mass = 1.0 / self.mass
            self.inv_inertia = 1.0 / self.inertia

        self._cache_key: tuple[float, float, float] | None = None
        self._world_vertices: tuple[Vec2, ...] = ()
        self._world_normals: tuple[Vec2, ...] = ()

    @property
    def position(self) -> Vec2:
        return (self.x, self.y)

    @property
    def linear_velocity(self) -> Vec2:
        return (self.vx, self.vy)

    @linear_velocity.setter
    def linear_velocity(self, value: Vec2) -> None:
        self.vx, self.vy = float(value[0]), float(value[1])

    @property
    def angular_velocity(self) -> float:
        return self.omega

    @angular_velocity.setter
    def angular_velocity(self, value: float) -> None:
        self.omega = float(value)

    def world_point(self, local: Vec2) -> Vec2:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return (self.x + c * local[0] - s * local[1], self.y + s * local[0] + c * local[1])

    def local_point(self, world: Vec2) -> Vec2:
        c, s = math.cos(self.angle), math.sin(self.angle)
        dx, dy = world[0] - self.x, world[1] - self.y
        return (c * dx + s * dy, -s * dx + c * dy)

    def _refresh(self) -> None:
        key = (self.x, self.y, self.angle)
        if key == self._cache_key:
            return
        c, s = math.cos(self.angle), math.sin(self.angle)
        x, y = self.x, self.y
        self._world_vertices = tuple((x + c * lx - s * ly, y + s * lx + c * ly) for lx, ly in self.vertices)
        self._world_normals = tuple((c * nx - s * ny, s * nx + c * ny) for nx, ny in self.normals)
        self._cache_key = key

    def world_vertices(self) -> tuple[Vec2, ...]:
        self._refresh()
        return self._world_vertices

    def world_normals(self) -> tuple[Vec2, ...]:
        self._refresh()
        return self._world_normals

    def bounds(self) -> tuple[float, float, float, float]:
        verts = self.world_vertices()
        xs = [v[0] for v in verts]
        ys = [v[1] for v in verts]
        return min(xs), min(ys), max(xs), max(ys)


class _GroundFrame:
    """Immovable frame the terrain polyline is expressed in."""

    def __init__(self, friction: float) -> None:
        self.x = self.y = self.angle = 0.0
        self.vx = self.vy = self.omega = 0.0
        self.inv_mass = self.inv_inertia = 0.0
        self.is_static = True
        self.friction = friction
        self.label = "terrain"


class RevoluteJoint:
    """Pin joint between two bodies with an optional motor and angle limits."""

    def __init__(
        self,
        body_a: Body,
        body_b: Body,
        anchor: Vec2,
        *,
        motor_enabled: bool = False,
        motor_speed: float = 0.0,
        max_motor_torque: float = 0.0,
        limits_enabled: bool = False,
        lower_limit: float = 0.0,
        upper_limit: float = 0.0,
    ) -> None:
        if limits_enabled and lower_limit > upper_limit:
            raise ValueError(f"lower_limit {lower_limit} exceeds upper_limit {upper_limit}")
        self.body_a = body_a
        self.body_b = body_b
        self.local_anchor_a = body_a.local_point(anchor)
        self.local_anchor_b = body_b.local_point(anchor)
        self.reference_angle = body_b.angle - body_a.angle
        self.motor_enabled = motor_enabled
        self.motor_speed = motor_speed
        self.max_motor_torque = max_motor_torque
        self.limits_enabled = limits_enabled
        self.lower_limit = lower_limit
        self.upper_limit = upper_limit
        self.last_motor_torque = 0.0

        self._motor_impulse = 0.0
        self._lower_impulse = 0.0
        self._upper_impulse = 0.0
        self._max_motor_impulse = 0.0
        self._axial_mass = 0.0
        self._inv_dt = 0.0
        self._ra = (0.0, 0.0)
        self._rb = (0.0, 0.0)
        self._k = (0.0, 0.0, 0.0)

    @property
    def joint_angle(self) -> float:
        return self.body_b.angle - self.body_a.angle - self.reference_angle

    @property
    def joint_speed(self) -> float:
        return self.body_b.omega - self.body_a.omega

    def anchor_gap(self) -> float:
        """Distance between the two bodies' anchor points."""
        ax, ay = self.body_a.world_point(self.local_anchor_a)
        bx, by = self.body_b.world_point(self.local_anchor_b)
        return math.hypot(bx - ax, by - ay)

    def _rotated_anchors(self) -> tuple[Vec2, Vec2]:
        a, b = self.body_a, self.body_b
        ca, sa = math.cos(a.angle), math.sin(a.angle)
        cb, sb = math.cos(b.angle), math.sin(b.angle)
        lax, lay = self.local_anchor_a
        lbx, lby = self.local_anchor_b
        return (ca * lax - sa * lay, sa * lax + ca * lay), (cb * lbx - sb * lby, sb * lbx + cb * lby)

    def _mass_matrix(self, ra: Vec2, rb: Vec2) -> tuple[float, float, float]:
        ma, mb = self.body_a.inv_mass, self.body_b.inv_mass
        ia, ib = self.body_a.inv_inertia, self.body_b.inv_inertia
        k11 = ma + mb + ra[1] * ra[1] * ia + rb[1] * rb[1] * ib
        k12 = -ra[1] * ra[0] * ia - rb[1] * rb[0] * ib
        k22 = ma + mb + ra[0] * ra[0] * ia + rb[0] * rb[0] * ib
        return k11, k12, k22

    def _prepare(self, dt: float) -> None:
        self._ra, self._rb = self._rotated_anchors()
        self._k = self._mass_matrix(self._ra, self._rb)
        inv_i = self.body_a.inv_inertia + self.body_b.inv_inertia
        self._axial_mass = 1.0 / inv_i if inv_i > 0.0 else 0.0
        self._max_motor_impulse = self.max_motor_torque * dt
        self._inv_dt = 1.0 / dt
        self._motor_impulse = self._lower_impulse = self._upper_impulse = 0.0

    def _solve_velocity(self) -> None:
        a, b = self.body_a, self.body_b
        ma, mb = a.inv_mass, b.inv_mass
        ia, ib = a.inv_inertia, b.inv_inertia
        fixed_rotation = ia + ib == 0.0

        if self.motor_enabled and not fixed_rotation:
            cdot = b.omega - a.omega - self.motor_speed
            old = self._motor_impulse
            self._motor_impulse = min(
                max(old - self._axial_mass * cdot, -self._max_motor_impulse), self._max_motor_impulse
            )
            impulse = self._motor_impulse - old
            a.omega -= ia * impulse
            b.omega += ib * impulse

        if self.limits_enabled and not fixed_rotation:
            c = self.joint_angle - self.lower_limit
            cdot = b.omega - a.omega
            old = self._lower_impulse
            self._lower_impulse = max(old - self._axial_mass * (cdot + max(c, 0.0) * self._inv_dt), 0.0)
            impulse = self._lower_impulse - old
            a.omega -= ia * impulse
            b.omega += ib * impulse

            c = self.upper_limit - self.joint_angle
            cdot = a.omega - b.omega
            old = self._upper_impulse
            self._upper_impulse = max(old - self._axial_mass * (cdot + max(c, 0.0) * self._inv_dt), 0.0)
            impulse = self._upper_impulse - old
            a.omega += ia * impulse
            b.omega -= ib * impulse

        (rax, ray), (rbx, rby) = self._ra, self._rb
        cdx = b.vx - b.omega * rby - a.vx + a.omega * ray
        cdy = b.vy + b.omega * rbx - a.vy - a.omega * rax
        px, py = _solve22(self._k, -cdx, -cdy)
        a.vx -= ma * px
        a.vy -= ma * py
        a.omega -= ia * (rax * py - ray * px)
        b.vx += mb * px
        b.vy += mb * py
        b.omega += ib * (rbx * py - rby * px)

    def _solve_position(self, config: PhysicsConfig) -> None:
        a, b = self.body_a, self.body_b
        ma, mb = a.inv_mass, b.inv_mass
        ia, ib = a.inv_inertia, b.inv_inertia

        if self.limits_enabled and ia + ib > 0.0:
            angle = self.joint_angle
            slop = config.angular_slop
            max_corr = config.max_angular_correction
            c = 0.0
            if abs(self.upper_limit - self.lower_limit) < 2.0 * slop:
                c = min(max(angle - self.lower_limit, -max_corr), max_corr)
            elif angle <= self.lower_limit:
                c = min(max(angle - self.lower_limit + slop, -max_corr), 0.0)
            elif angle >= self.upper_limit:
                c = min(max(angle - self.upper_limit - slop, 0.0), max_corr)
            impulse = -self._axial_mass * c
            a.angle -= ia * impulse
            b.angle += ib * impulse

        ra, rb = self._rotated_anchors()
        cx = b.x + rb[0] - a.x - ra[0]
        cy = b.y + rb[1] - a.y - ra[1]
        px, py = _solve22(self._mass_matrix(ra, rb), -cx, -cy)
        a.x -= ma * px
        a.y -= ma * py
        a.angle -= ia * (ra[0] * py - ra[1] * px)
        b.x += mb * px
        b.y += mb * py
        b.angle += ib * (rb[0] * py - rb[1] * px)


def _solve22(k: tuple[float, float, float], bx: float, by: float) -> Vec2:
    k11, k12, k22 = k
    det = k11 * k22 - k12 * k12
    if det != 0.0:
        det = 1.0 / det
    return det * (k22 * bx - k12 * by), det * (k11 * by - k12 * bx)


# =============================================================================
# Contacts
# =============================================================================


class ContactPoint:
    __slots__ = (
        "local_point",
        "separation",
        "ra",
        "rb",
        "normal_mass",
        "tangent_mass",
        "normal_impulse",
        "tangent_impulse",
        "velocity_bias",
    )

    def __init__(self, local_point: Vec2, separation: float) -> None:
        self.local_point = local_point
        self.separation = separation
        self.ra = (0.0, 0.0)
        self.rb = (0.0, 0.0)
        self.normal_mass = 0.0
        self.tangent_mass = 0.0
        self.normal_impulse = 0.0
        self.tangent_impulse = 0.0
        self.velocity_bias = 0.0


class Contact:
    """Face contact: ``body_a`` owns the reference face, ``body_b`` the clipped points.

    The reference normal and face point are kept in ``body_a``'s frame and the
    points in ``body_b``'s frame so the position solver can re-evaluate them.
    """

    def __init__(
        self,
        body_a: "Body | _GroundFrame",
        body_b: "Body | _GroundFrame",
        local_normal: Vec2,
        local_face_point: Vec2,
        points: list[ContactPoint],
    ) -> None:
        self.body_a = body_a
        self.body_b = body_b
        self.local_normal = local_normal
        self.local_face_point = local_face_point
        self.points = points
        self.friction = math.sqrt(body_a.friction * body_b.friction)
        self.normal = (0.0, 0.0)
        self.touching = False

    def involves(self, body: Body) -> bool:
        return self.body_a is body or self.body_b is body

    def other(self, body: Body) -> "Body | _GroundFrame":
        return self.body_b if self.body_a is body else self.body_a


def _to_local(frame: "Body | _GroundFrame", point: Vec2) -> Vec2:
    c, s = math.cos(frame.angle), math.sin(frame.angle)
    dx, dy = point[0] - frame.x, point[1] - frame.y
    return (c * dx + s * dy, -s * dx + c * dy)


def _max_separation(
    verts: Sequence[Vec2], normals: Sequence[Vec2], others: Sequence[Vec2]
) -> tuple[float, int]:
    best = -math.inf
    best_edge = 0
    for i, (nx, ny) in enumerate(normals):
        vx, vy = verts[i]
        sep = min((px - vx) * nx + (py - vy) * ny for px, py in others)
        if sep > best:
            best, best_edge = sep, i
    return best, best_edge


def _incident_edge(nx: float, ny: float, verts: Sequence[Vec2], normals: Sequence[Vec2]) -> tuple[Vec2, Vec2]:
    index = min(range(len(normals)), key=lambda k: normals[k][0] * nx + normals[k][1] * ny)
    return verts[index], verts[(index + 1) % len(verts)]


def _clip(points: list[Vec2], nx: float, ny: float, offset: float) -> list[Vec2]:
    """Keep the part of a segment (or single point) with ``n . p <= offset``."""
    if len(points) < 2:
        return [p for p in points if nx * p[0] + ny * p[1] - offset <= 0.0]
    p1, p2 = points
    d1 = nx * p1[0] + ny * p1[1] - offset
    d2 = nx * p2[0] + ny * p2[1] - offset
    out = []
    if d1 <= 0.0:
        out.append(p1)
    if d2 <= 0.0:
        out.append(p2)
    if d1 * d2 < 0.0:
        t = d1 / (d1 - d2)
        out.append((p1[0] + t * (p2[0] - p1[0]), p1[1] + t * (p2[1] - p1[1])))
    return out


def _face_contact(
    ref: "Body | _GroundFrame",
    inc: "Body | _GroundFrame",
    v1: Vec2,
    v2: Vec2,
    normal: Vec2,
    incident: tuple[Vec2, Vec2],
    margin: float,
) -> Contact | None:
    tx, ty = v2[0] - v1[0], v2[1] - v1[1]
    length = math.hypot(tx, ty)
    tx, ty = tx / length, ty / length
    points = _clip(list(incident), -tx, -ty, -(tx * v1[0] + ty * v1[1]))
    points = _clip(points, tx, ty, tx * v2[0] + ty * v2[1])
    nx, ny = normal
    plane = nx * v1[0] + ny * v1[1]
    kept = []
    for px, py in points:
        separation = nx * px + ny * py - plane
        if separation <= margin:
            kept.append(ContactPoint(_to_local(inc, (px, py)), separation))
    if not kept:
        return None
    c, s = math.cos(ref.angle), math.sin(ref.angle)
    local_normal = (c * nx + s * ny, -s * nx + c * ny)
    return Contact(ref, inc, local_normal, _to_local(ref, v1), kept)


def _collide_polygons(a: Body, b: Body, margin: float, slop: float) -> Contact | None:
    va, na = a.world_vertices(), a.world_normals()
    vb, nb = b.world_vertices(), b.world_normals()
    sep_a, edge_a = _max_separation(va, na, vb)
    if sep_a > margin:
        return None
    sep_b, edge_b = _max_separation(vb, nb, va)
    if sep_b > margin:
        return None

    if sep_b > sep_a + _FACE_TOLERANCE * slop:
        ref, inc, vr, nr, vi, ni, edge = b, a, vb, nb, va, na, edge_b
    else:
        ref, inc, vr, nr, vi, ni, edge = a, b, va, na, vb, nb, edge_a
    normal = nr[edge]
    incident = _incident_edge(normal[0], normal[1], vi, ni)
    return _face_contact(ref, inc, vr[edge], vr[(edge + 1) % len(vr)], normal, incident, margin)


def _collide_segment(
    ground: _GroundFrame, p0: Vec2, p1: Vec2, body: Body, margin: float, slop: float
) -> Contact | None:
    """One-sided terrain segment against a polygon; solid ground lies right of p0->p1."""
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    length = math.hypot(dx, dy)
    if length < 1e-12:
        return None
    nx, ny = -dy / length, dx / length

    verts, normals = body.world_vertices(), body.world_normals()
    sep_ground = min((vx - p0[0]) * nx + (vy - p0[1]) * ny for vx, vy in verts)
    if sep_ground > margin:
        return None
    segment = (p0, p1)
    sep_body, edge = _max_separation(verts, normals, segment)
    if sep_body > margin:
        return None

    if sep_body > sep_ground + _FACE_TOLERANCE * slop:
        bnx, bny = normals[edge]
        # Body face as reference only when it pushes the body out of the ground
        if -(bnx * nx + bny * ny) <= 0.0:
            return None
        return _face_contact(
            body, ground, verts[edge], verts[(edge + 1) % len(verts)], (bnx, bny), segment, margin
        )
    incident = _incident_edge(nx, ny, verts, normals)
    return _face_contact(ground, body, p0, p1, (nx, ny), incident, margin)


def _prepare_contact(contact: Contact, inv_dt: float) -> None:
    a, b = contact.body_a, contact.body_b
    ma, mb, ia, ib = a.inv_mass, b.inv_mass, a.inv_inertia, b.inv_inertia
    ca, sa = math.cos(a.angle), math.sin(a.angle)
    cb, sb = math.cos(b.angle), math.sin(b.angle)
    lnx, lny = contact.local_normal
    nx, ny = ca * lnx - sa * lny, sa * lnx + ca * lny
    fx, fy = contact.local_face_point
    plane_x, plane_y = a.x + ca * fx - sa * fy, a.y + sa * fx + ca * fy
    contact.normal = (nx, ny)
    tx, ty = ny, -nx

    for point in contact.points:
        qx, qy = point.local_point
        px, py = b.x + cb * qx - sb * qy, b.y + sb * qx + cb * qy
        separation = (px - plane_x) * nx + (py - plane_y) * ny
        # Midpoint between the incident point and its projection on the face
        px -= 0.5 * separation * nx
        py -= 0.5 * separation * ny
        point.separation = separation
        point.ra = (px - a.x, py - a.y)
        point.rb = (px - b.x, py - b.y)
        rax, ray = point.ra
        rbx, rby = point.rb

        rna = rax * ny - ray * nx
        rnb = rbx * ny - rby * nx
        k_normal = ma + mb + ia * rna * rna + ib * rnb * rnb
        point.normal_mass = 1.0 / k_normal if k_normal > 0.0 else 0.0

        rta = rax * ty - ray * tx
        rtb = rbx * ty - rby * tx
        k_tangent = ma + mb + ia * rta * rta + ib * rtb * rtb
        point.tangent_mass = 1.0 / k_tangent if k_tangent > 0.0 else 0.0

        point.velocity_bias = max(separation, 0.0) * inv_dt
        point.normal_impulse = 0.0
        point.tangent_impulse = 0.0


def _apply_impulse(contact: Contact, point: ContactPoint, px: float, py: float) -> None:
    a, b = contact.body_a, contact.body_b
    rax, ray = point.ra
    rbx, rby = point.rb
    a.vx -= a.inv_mass * px
    a.vy -= a.inv_mass * py
    a.omega -= a.inv_inertia * (rax * py - ray * px)
    b.vx += b.inv_mass * px
    b.vy += b.inv_mass * py
    b.omega += b.inv_inertia * (rbx * py - rby * px)


def _relative_velocity(contact: Contact, point: ContactPoint) -> Vec2:
    a, b = contact.body_a, contact.body_b
    rax, ray = point.ra
    rbx, rby = point.rb
    return (
        b.vx - b.omega * rby - a.vx + a.omega * ray,
        b.vy + b.omega * rbx - a.vy - a.omega * rax,
    )


def _solve_contact_velocity(contact: Contact) -> None:
    nx, ny = contact.normal
    tx, ty = ny, -nx

    for point in contact.points:
        dvx, dvy = _relative_velocity(contact, point)
        lam = -point.tangent_mass * (dvx * tx + dvy * ty)
        max_friction = contact.friction * point.normal_impulse
        new_impulse = min(max(point.tangent_impulse + lam, -max_friction), max_friction)
        lam = new_impulse - point.tangent_impulse
        point.tangent_impulse = new_impulse
        _apply_impulse(contact, point, lam * tx, lam * ty)

    for point in contact.points:
        dvx, dvy = _relative_velocity(contact, point)
        lam = -point.normal_mass * (dvx * nx + dvy * ny + point.velocity_bias)
        new_impulse = max(point.normal_impulse + lam, 0.0)
        lam = new_impulse - point.normal_impulse
        point.normal_impulse = new_impulse
        _apply_impulse(contact, point, lam * nx, lam * ny)


def _solve_contact_position(contact: Contact, config: PhysicsConfig) -> None:
    a, b = contact.body_a, contact.body_b
    ma, mb, ia, ib = a.inv_mass, b.inv_mass, a.inv_inertia, b.inv_inertia
    lnx, lny = contact.local_normal
    fx, fy = contact.local_face_point

    for point in contact.points:
        ca, sa = math.cos(a.angle), math.sin(a.angle)
        cb, sb = math.cos(b.angle), math.sin(b.angle)
        nx, ny = ca * lnx - sa * lny, sa * lnx + ca * lny
        plane_x, plane_y = a.x + ca * fx - sa * fy, a.y + sa * fx + ca * fy
        qx, qy = point.local_point
        px, py = b.x + cb * qx - sb * qy, b.y + sb * qx + cb * qy
        separation = (px - plane_x) * nx + (py - plane_y) * ny

        rax, ray = px - a.x, py - a.y
        rbx, rby = px - b.x, py - b.y
        c = min(
            max(config.baumgarte * (separation + config.linear_slop), -config.max_linear_correction),
            0.0,
        )
        rna = rax * ny - ray * nx
        rnb = rbx * ny - rby * nx
        k = ma + mb + ia * rna * rna + ib * rnb * rnb
        impulse = -c / k if k > 0.0 else 0.0
        ix, iy = impulse * nx, impulse * ny

        a.x -= ma * ix
        a.y -= ma * iy
        a.angle -= ia * (rax * iy - ray * ix)
        b.x += mb * ix
        b.y += mb * iy
        b.angle += ib * (rbx * iy - rby * ix)


# =============================================================================
# World
# =============================================================================


class World:
    """Bodies, joints and a static terrain polyline stepped together."""

    def __init__(self, config: PhysicsConfig | None = None) -> None:
        self.config = config or PhysicsConfig()
        self.gravity: Vec2 = self.config.gravity
        self.bodies: list[Body] = []
        self.joints: list[RevoluteJoint] = []
        self.terrain: list[Vec2] = []
        self.step_count = 0
        self.contacts: list[Contact] = []
        self._terrain_xs: list[float] = []
        self._ground = _GroundFrame(self.config.terrain_friction)

    def add_body(self, body: Body) -> Body:
        self.bodies.append(body)
        return body

    def add_joint(self, joint: RevoluteJoint) -> RevoluteJoint:
        self.joints.append(joint)
        return joint

    def set_terrain(self, points: Sequence[Vec2]) -> None:
        """Install the terrain polyline; x must be non-decreasing."""
        polyline = [(float(x), float(y)) for x, y in points]
        for (x0, _), (x1, _) in zip(polyline, polyline[1:], strict=False):
            if x1 < x0:
                raise ValueError("Terrain x coordinates must be non-decreasing")
        self.terrain = polyline
        self._terrain_xs = [p[0] for p in polyline]

    def terrain_segments(self, x_min: float, x_max: float) -> range:
        """Indices ``k`` of segments (terrain[k], terrain[k + 1]) overlapping [x_min, x_max]."""
        if len(self.terrain) < 2:
            return range(0)
        lo = max(bisect_left(self._terrain_xs, x_min) - 1, 0)
        hi = min(bisect_right(self._terrain_xs, x_max), len(self.terrain) - 1)
        return range(lo, hi)

    def contacts_of(self, body: Body) -> list[Contact]:
        """Touching contacts between ``body`` and terrain or static bodies in the last step."""
        return [
            c for c in self.contacts if c.touching and c.involves(body) and c.other(body).is_static
        ]

    def in_contact(self, body: Body) -> bool:
        return bool(self.contacts_of(body))

    def total_energy(self) -> float:
        """Kinetic plus gravitational potential energy of all dynamic bodies."""
        gx, gy = self.gravity
        energy = 0.0
        for body in self.bodies:
            if body.is_static:
                continue
            energy += 0.5 * body.mass * (body.vx * body.vx + body.vy * body.vy)
            energy += 0.5 * body.inertia * body.omega * body.omega
            energy -= body.mass * (gx * body.x + gy * body.y)
        return energy

    def _find_contacts(self) -> list[Contact]:
        config = self.config
        margin = config.speculative_distance
        slop = config.linear_slop
        contacts: list[Contact] = []
        bodies = self.bodies

        for body in bodies:
            if body.is_static or not self.terrain:
                continue
            x_min, _, x_max, _ = body.bounds()
            for k in self.terrain_segments(x_min - margin, x_max + margin):
                contact = _collide_segment(
                    self._ground, self.terrain[k], self.terrain[k + 1], body, margin, slop
                )
                if contact is not None:
                    contacts.append(contact)

        for i, first in enumerate(bodies):
            for second in bodies[i + 1 :]:
                if first.is_static and second.is_static:
                    continue
                if first.collision_group and first.collision_group == second.collision_group:
                    continue
                ax0, ay0, ax1, ay1 = first.bounds()
                bx0, by0, bx1, by1 = second.bounds()
                if ax0 > bx1 + margin or bx0 > ax1 + margin or ay0 > by1 + margin or by0 > ay1 + margin:
                    continue
                contact = _collide_polygons(first, second, margin, slop)
                if contact is not None:
                    contacts.append(contact)
        return contacts


def step_world(world: World, dt: float | None = None) -> World:
    """Advance ``world`` by ``dt`` seconds in place and return it."""
    config = world.config
    dt = config.dt if dt is None else dt
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    inv_dt = 1.0 / dt

    contacts = world._find_contacts()

    gx, gy = world.gravity
    for body in world.bodies:
        if body.is_static:
            continue
        body.vx += dt * gx
        body.vy += dt * gy

    for contact in contacts:
        _prepare_contact(contact, inv_dt)
    for joint in world.joints:
        joint._prepare(dt)

    for _ in range(config.velocity_iterations):
        for joint in world.joints:
            joint._solve_velocity()
        for contact in contacts:
            _solve_contact_velocity(contact)

    for joint in world.joints:
        joint.last_motor_torque = abs(joint._motor_impulse) * inv_dt
    for contact in contacts:
        contact.touching = any(
            p.separation <= config.linear_slop or p.normal_impulse > 0.0 for p in contact.points
        )

    max_translation = config.max_translation
    max_rotation = config.max_rotation
    for body in world.bodies:
        if body.is_static:
            continue
        tx, ty = dt * body.vx, dt * body.vy
        travel = tx * tx + ty * ty
        if travel > max_translation * max_translation:
            ratio = max_translation / math.sqrt(travel)
            body.vx *= ratio
            body.vy *= ratio
        rotation = dt * body.omega
        if abs(rotation) > max_rotation:
            body.omega *= max_rotation / abs(rotation)
        body.x += dt * body.vx
        body.y += dt * body.vy
        body.angle += dt * body.omega

    for _ in range(config.position_iterations):
        for contact in contacts:
            _solve_contact_position(contact, config)
        for joint in world.joints:
            joint._solve_position(config)

    world.contacts = contacts
    world.step_count += 1
    return world


def raycast(
    world: World,
    origin: Vec2,
    direction: Vec2,
    max_length: float,
    collision_group: int = 0,
) -> float:
    """Fraction along the ray of the first hit on terrain or a body, 1.0 if none.

    Bodies sharing the caster's non-zero ``collision_group`` are ignored.
    """
    if max_length <= 0.0:
        raise ValueError(f"max_length must be positive, got {max_length}")
    ox, oy = origin
    rx, ry = direction[0] * max_length, direction[1] * max_length
    best = 1.0

    for k in world.terrain_segments(min(ox, ox + rx), max(ox, ox + rx)):
        hit = _ray_segment(ox, oy, rx, ry, world.terrain[k], world.terrain[k + 1])
        if hit is not None and hit < best:
            best = hit

    for body in world.bodies:
        if collision_group and body.collision_group == collision_group:
            continue
        verts = body.world_vertices()
        for i in range(len(verts)):
            hit = _ray_segment(ox, oy, rx, ry, verts[i], verts[(i + 1) % len(verts)])
            if hit is not None and hit < best:
                best = hit
    return best


def _ray_segment(ox: float, oy: float, rx: float, ry: float, p: Vec2, q: Vec2) -> float | None:
    sx, sy = q[0] - p[0], q[1] - p[1]
    denom = rx * sy - ry * sx
    if denom == 0.0:
        return None
    wx, wy = p[0] - ox, p[1] - oy
    t = (wx * sy - wy * sx) / denom
    u = (wx * ry - wy * rx) / denom
    if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
        return t
    return None
