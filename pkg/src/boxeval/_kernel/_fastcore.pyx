# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled box-intersection kernels.

C twin of ``boxeval._kernel.pure``: same functions, same semantics, same
tolerances.  The hull volume here is an incremental convex hull instead of
Qhull; both are exact up to floating point for the small point sets these
kernels see.
"""

from libc.math cimport fabs, sqrt, sin, cos, M_PI
from libc.stdlib cimport malloc, free

import numpy as np

BACKEND_NAME = "compiled"

cdef double PLANE_EPS_FACTOR = 1e-9
cdef double DEDUP_TOL = 1e-9

# corner signs and quad faces of the unit box (see pure.py for the layout)
cdef double CSIGN[8][3]
cdef int FACES[6][4]

cdef void _init_tables():
    faces = [[0, 1, 3, 2], [4, 6, 7, 5], [0, 4, 5, 1],
             [2, 3, 7, 6], [0, 2, 6, 4], [1, 5, 7, 3]]
    cdef int i, j, k
    for i in range(6):
        for j in range(4):
            FACES[i][j] = faces[i][j]
    for k in range(8):
        CSIGN[k][0] = -0.5 if k < 4 else 0.5
        CSIGN[k][1] = -0.5 if (k & 2) == 0 else 0.5
        CSIGN[k][2] = -0.5 if (k & 1) == 0 else 0.5

_init_tables()


# ---------------------------------------------------------------------------
# small vector helpers
# ---------------------------------------------------------------------------

cdef inline double _dot3(const double* a, const double* b) noexcept:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]

cdef inline void _cross3(const double* a, const double* b, double* out) noexcept:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]

cdef inline void _mat_vec(const double* m, const double* v, double* out) noexcept:
    # out = M v for row-major 3x3 M
    out[0] = m[0] * v[0] + m[1] * v[1] + m[2] * v[2]
    out[1] = m[3] * v[0] + m[4] * v[1] + m[5] * v[2]
    out[2] = m[6] * v[0] + m[7] * v[1] + m[8] * v[2]

cdef inline void _matT_vec(const double* m, const double* v, double* out) noexcept:
    out[0] = m[0] * v[0] + m[3] * v[1] + m[6] * v[2]
    out[1] = m[1] * v[0] + m[4] * v[1] + m[7] * v[2]
    out[2] = m[2] * v[0] + m[5] * v[1] + m[8] * v[2]

cdef void _matT_mat(const double* a, const double* b, double* out) noexcept:
    # out = A^T B
    cdef int i, j, k
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = 0.0
            for k in range(3):
                out[3 * i + j] += a[3 * k + i] * b[3 * k + j]

cdef void _mat_mat(const double* a, const double* b, double* out) noexcept:
    # out = A B
    cdef int i, j
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = (a[3 * i] * b[j] + a[3 * i + 1] * b[3 + j]
                              + a[3 * i + 2] * b[6 + j])


# ---------------------------------------------------------------------------
# corners and clipping
# ---------------------------------------------------------------------------

cdef void _corners_in_frame(const double* rot, const double* tr,
                            const double* scale, double* out) noexcept:
    """out[8*3] = rot @ (scale * CSIGN[k]) + tr."""
    cdef int k
    cdef double u[3]
    for k in range(8):
        u[0] = CSIGN[k][0] * scale[0]
        u[1] = CSIGN[k][1] * scale[1]
        u[2] = CSIGN[k][2] * scale[2]
        _mat_vec(rot, u, out + 3 * k)
        out[3 * k] += tr[0]
        out[3 * k + 1] += tr[1]
        out[3 * k + 2] += tr[2]


cdef int _clip_aabb(double* poly, int n, const double* h, double eps,
                    double* scratch) noexcept:
    """Sutherland-Hodgman clip of poly (n x 3, capacity >= 32) against the
    AABB |p_i| <= h_i.  Returns the new vertex count; result left in poly."""
    cdef double* cur = poly
    cdef double* nxt = scratch
    cdef double* tmp
    cdef int axis, sgn_i, i, j, m, cnt = n
    cdef double sgn, bound, cs, ce, denom, t
    cdef bint s_in, e_in
    for axis in range(3):
        for sgn_i in range(2):
            if cnt == 0:
                break
            sgn = 1.0 if sgn_i == 0 else -1.0
            bound = h[axis]
            m = 0
            for i in range(cnt):
                j = i - 1 if i > 0 else cnt - 1
                cs = sgn * cur[3 * j + axis]
                ce = sgn * cur[3 * i + axis]
                s_in = cs <= bound + eps
                e_in = ce <= bound + eps
                if e_in:
                    if not s_in:
                        denom = ce - cs
                        t = 0.5 if fabs(denom) < 1e-300 else (bound - cs) / denom
                        if t < 0.0:
                            t = 0.0
                        elif t > 1.0:
                            t = 1.0
                        nxt[3 * m] = cur[3 * j] + t * (cur[3 * i] - cur[3 * j])
                        nxt[3 * m + 1] = cur[3 * j + 1] + t * (cur[3 * i + 1] - cur[3 * j + 1])
                        nxt[3 * m + 2] = cur[3 * j + 2] + t * (cur[3 * i + 2] - cur[3 * j + 2])
                        m += 1
                    nxt[3 * m] = cur[3 * i]
                    nxt[3 * m + 1] = cur[3 * i + 1]
                    nxt[3 * m + 2] = cur[3 * i + 2]
                    m += 1
                elif s_in:
                    denom = ce - cs
                    t = 0.5 if fabs(denom) < 1e-300 else (bound - cs) / denom
                    if t < 0.0:
                        t = 0.0
                    elif t > 1.0:
                        t = 1.0
                    nxt[3 * m] = cur[3 * j] + t * (cur[3 * i] - cur[3 * j])
                    nxt[3 * m + 1] = cur[3 * j + 1] + t * (cur[3 * i + 1] - cur[3 * j + 1])
                    nxt[3 * m + 2] = cur[3 * j + 2] + t * (cur[3 * i + 2] - cur[3 * j + 2])
                    m += 1
            tmp = cur
            cur = nxt
            nxt = tmp
            cnt = m
    cdef int c
    if cur != poly:
        for c in range(3 * cnt):
            poly[c] = cur[c]
    return cnt


cdef int _dedup_c(double* pts, int n, double tol) noexcept:
    """In-place greedy input-order dedup (max-norm distance tol)."""
    cdef int kept = 0, i, j
    cdef bint dup
    for i in range(n):
        dup = False
        for j in range(kept):
            if (fabs(pts[3 * i] - pts[3 * j]) <= tol
                    and fabs(pts[3 * i + 1] - pts[3 * j + 1]) <= tol
                    and fabs(pts[3 * i + 2] - pts[3 * j + 2]) <= tol):
                dup = True
                break
        if not dup:
            if kept != i:
                pts[3 * kept] = pts[3 * i]
                pts[3 * kept + 1] = pts[3 * i + 1]
                pts[3 * kept + 2] = pts[3 * i + 2]
            kept += 1
    return kept


cdef int _one_sided(const double* rot_a, const double* t_a, const double* s_a,
                    const double* rot_b, const double* t_b, const double* s_b,
                    double* out) noexcept:
    """Faces of box b clipped against box a plus b's corners inside a,
    in a's canonical frame.  out capacity >= 68 points."""
    cdef double rot_ba[9]
    cdef double diff[3]
    cdef double t_ba[3]
    cdef double corners[24]
    cdef double half[3]
    cdef double poly[96]      # 32 x 3
    cdef double scratch[96]
    cdef double eps
    cdef int count = 0, f, v, m, i
    cdef bint inside

    _matT_mat(rot_a, rot_b, rot_ba)
    diff[0] = t_b[0] - t_a[0]
    diff[1] = t_b[1] - t_a[1]
    diff[2] = t_b[2] - t_a[2]
    _matT_vec(rot_a, diff, t_ba)
    _corners_in_frame(rot_ba, t_ba, s_b, corners)
    half[0] = 0.5 * s_a[0]
    half[1] = 0.5 * s_a[1]
    half[2] = 0.5 * s_a[2]
    eps = PLANE_EPS_FACTOR * sqrt(s_a[0] * s_a[0] + s_a[1] * s_a[1] + s_a[2] * s_a[2])

    for f in range(6):
        for v in range(4):
            i = FACES[f][v]
            poly[3 * v] = corners[3 * i]
            poly[3 * v + 1] = corners[3 * i + 1]
            poly[3 * v + 2] = corners[3 * i + 2]
        m = _clip_aabb(poly, 4, half, eps, scratch)
        for v in range(m):
            out[3 * count] = poly[3 * v]
            out[3 * count + 1] = poly[3 * v + 1]
            out[3 * count + 2] = poly[3 * v + 2]
            count += 1
    for v in range(8):
        inside = (fabs(corners[3 * v]) <= half[0] + eps
                  and fabs(corners[3 * v + 1]) <= half[1] + eps
                  and fabs(corners[3 * v + 2]) <= half[2] + eps)
        if inside:
            out[3 * count] = corners[3 * v]
            out[3 * count + 1] = corners[3 * v + 1]
            out[3 * count + 2] = corners[3 * v + 2]
            count += 1
    return count


cdef int _pair_points(const double* rx, const double* tx, const double* sx,
                      const double* ry, const double* ty, const double* sy,
                      double* out) noexcept:
    """Deduplicated intersection-candidate points in x's canonical frame.
    out capacity >= 136 points."""
    cdef int n_x, n_y, i, total
    cdef double rot_yx[9]
    cdef double diff[3]
    cdef double t_yx[3]
    cdef double p[3]
    cdef double q[3]
    n_x = _one_sided(rx, tx, sx, ry, ty, sy, out)
    n_y = _one_sided(ry, ty, sy, rx, tx, sx, out + 3 * n_x)
    if n_y > 0:
        _matT_mat(rx, ry, rot_yx)
        diff[0] = ty[0] - tx[0]
        diff[1] = ty[1] - tx[1]
        diff[2] = ty[2] - tx[2]
        _matT_vec(rx, diff, t_yx)
        for i in range(n_x, n_x + n_y):
            p[0] = out[3 * i]
            p[1] = out[3 * i + 1]
            p[2] = out[3 * i + 2]
            _mat_vec(rot_yx, p, q)
            out[3 * i] = q[0] + t_yx[0]
            out[3 * i + 1] = q[1] + t_yx[1]
            out[3 * i + 2] = q[2] + t_yx[2]
    total = n_x + n_y
    return _dedup_c(out, total, DEDUP_TOL)


# ---------------------------------------------------------------------------
# incremental convex hull volume
# ---------------------------------------------------------------------------

cdef struct Face:
    int a
    int b
    int c
    double nx
    double ny
    double nz
    double off


cdef int _make_face(const double* pts, int a, int b, int c,
                    const double* interior, Face* f) noexcept:
    """Build an outward-oriented face through points a, b, c.
    Returns 0 if the triangle is degenerate."""
    cdef double e1[3]
    cdef double e2[3]
    cdef double n[3]
    cdef double norm, off
    cdef int t
    e1[0] = pts[3 * b] - pts[3 * a]
    e1[1] = pts[3 * b + 1] - pts[3 * a + 1]
    e1[2] = pts[3 * b + 2] - pts[3 * a + 2]
    e2[0] = pts[3 * c] - pts[3 * a]
    e2[1] = pts[3 * c + 1] - pts[3 * a + 1]
    e2[2] = pts[3 * c + 2] - pts[3 * a + 2]
    _cross3(e1, e2, n)
    norm = sqrt(_dot3(n, n))
    if norm < 1e-300:
        return 0
    n[0] /= norm
    n[1] /= norm
    n[2] /= norm
    off = _dot3(n, pts + 3 * a)
    if _dot3(n, interior) > off:
        # flip so the interior point is behind the face
        t = b
        b = c
        c = t
        n[0] = -n[0]
        n[1] = -n[1]
        n[2] = -n[2]
        off = -off
    f.a = a
    f.b = b
    f.c = c
    f.nx = n[0]
    f.ny = n[1]
    f.nz = n[2]
    f.off = off
    return 1


cdef double _hull_volume_core(const double* pts, int n):
    """Volume of the convex hull of n deduplicated points.

    Incremental construction; returns 0.0 for rank-deficient inputs.
    """
    if n < 4:
        return 0.0

    cdef int i, j, k, i0, i1, i2, i3
    cdef double best, d, dx, dy, dz
    cdef double e1[3]
    cdef double e2[3]
    cdef double nvec[3]
    cdef double interior[3]

    # initial extreme point: lexicographic minimum
    i0 = 0
    for i in range(1, n):
        if (pts[3 * i] < pts[3 * i0]
                or (pts[3 * i] == pts[3 * i0] and pts[3 * i + 1] < pts[3 * i0 + 1])
                or (pts[3 * i] == pts[3 * i0] and pts[3 * i + 1] == pts[3 * i0 + 1]
                    and pts[3 * i + 2] < pts[3 * i0 + 2])):
            i0 = i

    # farthest point from i0
    i1 = -1
    best = 0.0
    for i in range(n):
        dx = pts[3 * i] - pts[3 * i0]
        dy = pts[3 * i + 1] - pts[3 * i0 + 1]
        dz = pts[3 * i + 2] - pts[3 * i0 + 2]
        d = dx * dx + dy * dy + dz * dz
        if d > best:
            best = d
            i1 = i
    if i1 < 0 or best <= DEDUP_TOL * DEDUP_TOL:
        return 0.0
    cdef double d01 = sqrt(best)

    # farthest point from the line i0-i1
    i2 = -1
    best = 0.0
    e1[0] = pts[3 * i1] - pts[3 * i0]
    e1[1] = pts[3 * i1 + 1] - pts[3 * i0 + 1]
    e1[2] = pts[3 * i1 + 2] - pts[3 * i0 + 2]
    for i in range(n):
        e2[0] = pts[3 * i] - pts[3 * i0]
        e2[1] = pts[3 * i + 1] - pts[3 * i0 + 1]
        e2[2] = pts[3 * i + 2] - pts[3 * i0 + 2]
        _cross3(e1, e2, nvec)
        d = _dot3(nvec, nvec)
        if d > best:
            best = d
            i2 = i
    # perpendicular distance = |cross| / d01
    if i2 < 0 or sqrt(best) / d01 <= DEDUP_TOL:
        return 0.0

    # farthest point from the plane i0-i1-i2
    e2[0] = pts[3 * i2] - pts[3 * i0]
    e2[1] = pts[3 * i2 + 1] - pts[3 * i0 + 1]
    e2[2] = pts[3 * i2 + 2] - pts[3 * i0 + 2]
    _cross3(e1, e2, nvec)
    d = sqrt(_dot3(nvec, nvec))
    nvec[0] /= d
    nvec[1] /= d
    nvec[2] /= d
    i3 = -1
    best = 0.0
    for i in range(n):
        dx = (pts[3 * i] - pts[3 * i0]) * nvec[0] \
            + (pts[3 * i + 1] - pts[3 * i0 + 1]) * nvec[1] \
            + (pts[3 * i + 2] - pts[3 * i0 + 2]) * nvec[2]
        if fabs(dx) > best:
            best = fabs(dx)
            i3 = i
    if i3 < 0 or best <= DEDUP_TOL:
        return 0.0

    interior[0] = 0.25 * (pts[3 * i0] + pts[3 * i1] + pts[3 * i2] + pts[3 * i3])
    interior[1] = 0.25 * (pts[3 * i0 + 1] + pts[3 * i1 + 1] + pts[3 * i2 + 1] + pts[3 * i3 + 1])
    interior[2] = 0.25 * (pts[3 * i0 + 2] + pts[3 * i1 + 2] + pts[3 * i2 + 2] + pts[3 * i3 + 2])

    # visibility tolerance scaled to the cloud extent
    cdef double lo, hi, diag2 = 0.0
    for k in range(3):
        lo = pts[k]
        hi = pts[k]
        for i in range(1, n):
            if pts[3 * i + k] < lo:
                lo = pts[3 * i + k]
            if pts[3 * i + k] > hi:
                hi = pts[3 * i + k]
        diag2 += (hi - lo) * (hi - lo)
    cdef double vis_eps = 1e-12 * sqrt(diag2)
    if vis_eps < 1e-30:
        vis_eps = 1e-30

    cdef int cap = 8 * n + 16
    cdef Face* faces = <Face*> malloc(cap * sizeof(Face))
    cdef Face* kept = <Face*> malloc(cap * sizeof(Face))
    cdef int* edge_a = <int*> malloc(3 * cap * sizeof(int))
    cdef int* edge_b = <int*> malloc(3 * cap * sizeof(int))
    cdef char* visible = <char*> malloc(cap * sizeof(char))
    if faces == NULL or kept == NULL or edge_a == NULL or edge_b == NULL or visible == NULL:
        if faces != NULL: free(faces)
        if kept != NULL: free(kept)
        if edge_a != NULL: free(edge_a)
        if edge_b != NULL: free(edge_b)
        if visible != NULL: free(visible)
        raise MemoryError()

    cdef int nfaces = 0
    _make_face(pts, i0, i1, i2, interior, &faces[nfaces]); nfaces += 1
    _make_face(pts, i0, i1, i3, interior, &faces[nfaces]); nfaces += 1
    _make_face(pts, i0, i2, i3, interior, &faces[nfaces]); nfaces += 1
    _make_face(pts, i1, i2, i3, interior, &faces[nfaces]); nfaces += 1

    cdef int nedges, nkept, e, ee
    cdef bint any_vis, has_rev
    cdef int ea, eb
    cdef double dist
    cdef int tri[3]

    try:
        for i in range(n):
            if i == i0 or i == i1 or i == i2 or i == i3:
                continue
            any_vis = False
            for j in range(nfaces):
                dist = (faces[j].nx * pts[3 * i] + faces[j].ny * pts[3 * i + 1]
                        + faces[j].nz * pts[3 * i + 2]) - faces[j].off
                if dist > vis_eps:
                    visible[j] = 1
                    any_vis = True
                else:
                    visible[j] = 0
            if not any_vis:
                continue

            # directed edges of the visible region
            nedges = 0
            for j in range(nfaces):
                if not visible[j]:
                    continue
                tri[0] = faces[j].a
                tri[1] = faces[j].b
                tri[2] = faces[j].c
                for k in range(3):
                    edge_a[nedges] = tri[k]
                    edge_b[nedges] = tri[(k + 1) % 3]
                    nedges += 1

            # keep hidden faces
            nkept = 0
            for j in range(nfaces):
                if not visible[j]:
                    kept[nkept] = faces[j]
                    nkept += 1

            # horizon edges: directed edges whose reverse is not visible
            for e in range(nedges):
                ea = edge_a[e]
                eb = edge_b[e]
                has_rev = False
                for ee in range(nedges):
                    if edge_a[ee] == eb and edge_b[ee] == ea:
                        has_rev = True
                        break
                if not has_rev:
                    if nkept >= cap:
                        break
                    if _make_face(pts, ea, eb, i, interior, &kept[nkept]):
                        nkept += 1
            for j in range(nkept):
                faces[j] = kept[j]
            nfaces = nkept

        # fan volume from the interior point over the oriented boundary
        best = 0.0
        for j in range(nfaces):
            e1[0] = pts[3 * faces[j].a] - interior[0]
            e1[1] = pts[3 * faces[j].a + 1] - interior[1]
            e1[2] = pts[3 * faces[j].a + 2] - interior[2]
            e2[0] = pts[3 * faces[j].b] - interior[0]
            e2[1] = pts[3 * faces[j].b + 1] - interior[1]
            e2[2] = pts[3 * faces[j].b + 2] - interior[2]
            nvec[0] = pts[3 * faces[j].c] - interior[0]
            nvec[1] = pts[3 * faces[j].c + 1] - interior[1]
            nvec[2] = pts[3 * faces[j].c + 2] - interior[2]
            best += (e1[0] * (e2[1] * nvec[2] - e2[2] * nvec[1])
                     + e1[1] * (e2[2] * nvec[0] - e2[0] * nvec[2])
                     + e1[2] * (e2[0] * nvec[1] - e2[1] * nvec[0])) / 6.0
        return best if best > 0.0 else 0.0
    finally:
        free(faces)
        free(kept)
        free(edge_a)
        free(edge_b)
        free(visible)


cdef double _iou_core(const double* rx, const double* tx, const double* sx,
                      const double* ry, const double* ty, const double* sy,
                      double* inter_out, double* union_out):
    cdef double buf[408]      # 136 points x 3
    cdef int m = _pair_points(rx, tx, sx, ry, ty, sy, buf)
    cdef double vol_x = sx[0] * sx[1] * sx[2]
    cdef double vol_y = sy[0] * sy[1] * sy[2]
    cdef double inter = _hull_volume_core(buf, m)
    if inter < 0.0:
        inter = 0.0
    if inter > vol_x:
        inter = vol_x
    if inter > vol_y:
        inter = vol_y
    cdef double union_v = vol_x + vol_y - inter
    cdef double iou = inter / union_v
    if iou < 0.0:
        iou = 0.0
    elif iou > 1.0:
        iou = 1.0
    inter_out[0] = inter
    union_out[0] = union_v
    return iou


# ---------------------------------------------------------------------------
# python-facing wrappers
# ---------------------------------------------------------------------------

cdef _as_mat3(obj):
    a = np.ascontiguousarray(obj, dtype=np.float64)
    if a.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    return a

cdef _as_vec3(obj):
    a = np.ascontiguousarray(obj, dtype=np.float64).reshape(3)
    return a


def box_corners(rotation, translation, scale):
    """World-space corners (8, 3) of an oriented box."""
    cdef const double[:, ::1] r = _as_mat3(rotation)
    cdef const double[::1] t = _as_vec3(translation)
    cdef const double[::1] s = _as_vec3(scale)
    out = np.empty((8, 3), dtype=np.float64)
    cdef double[:, ::1] o = out
    _corners_in_frame(&r[0, 0], &t[0], &s[0], &o[0, 0])
    return out


def pair_intersection_points(rot_x, t_x, s_x, rot_y, t_y, s_y):
    """Deduplicated intersection-candidate points in x's canonical frame."""
    cdef const double[:, ::1] rx = _as_mat3(rot_x)
    cdef const double[::1] tx = _as_vec3(t_x)
    cdef const double[::1] sx = _as_vec3(s_x)
    cdef const double[:, ::1] ry = _as_mat3(rot_y)
    cdef const double[::1] ty = _as_vec3(t_y)
    cdef const double[::1] sy = _as_vec3(s_y)
    cdef double buf[408]
    cdef int m = _pair_points(&rx[0, 0], &tx[0], &sx[0],
                              &ry[0, 0], &ty[0], &sy[0], buf)
    out = np.empty((m, 3), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef int i
    for i in range(m):
        o[i, 0] = buf[3 * i]
        o[i, 1] = buf[3 * i + 1]
        o[i, 2] = buf[3 * i + 2]
    return out


def hull_volume(points):
    """Volume of the 3D convex hull of a point set (0.0 when degenerate)."""
    pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    cdef int n = pts.shape[0]
    if n == 0:
        return 0.0
    cdef const double[:, ::1] view = pts
    cdef double* work = <double*> malloc(3 * n * sizeof(double))
    if work == NULL:
        raise MemoryError()
    cdef int i
    cdef double vol
    try:
        for i in range(n):
            work[3 * i] = view[i, 0]
            work[3 * i + 1] = view[i, 1]
            work[3 * i + 2] = view[i, 2]
        n = _dedup_c(work, n, DEDUP_TOL)
        vol = _hull_volume_core(work, n)
    finally:
        free(work)
    return float(vol)


def iou_pair(rot_x, t_x, s_x, rot_y, t_y, s_y):
    """Exact IoU of two oriented boxes: (iou, intersection, union)."""
    cdef const double[:, ::1] rx = _as_mat3(rot_x)
    cdef const double[::1] tx = _as_vec3(t_x)
    cdef const double[::1] sx = _as_vec3(s_x)
    cdef const double[:, ::1] ry = _as_mat3(rot_y)
    cdef const double[::1] ty = _as_vec3(t_y)
    cdef const double[::1] sy = _as_vec3(s_y)
    cdef double inter = 0.0, union_v = 0.0
    cdef double iou = _iou_core(&rx[0, 0], &tx[0], &sx[0],
                                &ry[0, 0], &ty[0], &sy[0], &inter, &union_v)
    return float(iou), float(inter), float(union_v)


def iou_symmetric(rot_g, t_g, s_g, rot_p, t_p, s_p, sample_count):
    """IoU maximized over rotations of the first box about its local y axis.

    Returns (iou, intersection, union, best_sample_index); angle 0 is always
    sampled first so the result is never below the plain pair IoU.  A later
    angle must beat the incumbent by more than 1e-12, so exact symmetries
    resolve to the earliest sampled angle instead of float noise.
    """
    cdef const double[:, ::1] rg = _as_mat3(rot_g)
    cdef const double[::1] tg = _as_vec3(t_g)
    cdef const double[::1] sg = _as_vec3(s_g)
    cdef const double[:, ::1] rp = _as_mat3(rot_p)
    cdef const double[::1] tp = _as_vec3(t_p)
    cdef const double[::1] sp = _as_vec3(s_p)
    cdef int n = int(sample_count)
    if n < 1:
        raise ValueError("sample_count must be >= 1")
    cdef double best_iou = -1.0, best_inter = 0.0, best_union = 0.0
    cdef int best_k = 0, k
    cdef double angle, c, s
    cdef double ry_mat[9]
    cdef double rk[9]
    cdef double inter = 0.0, union_v = 0.0, iou
    for k in range(n):
        if k == 0:
            iou = _iou_core(&rg[0, 0], &tg[0], &sg[0],
                            &rp[0, 0], &tp[0], &sp[0], &inter, &union_v)
        else:
            angle = 2.0 * M_PI * k / n
            c = cos(angle)
            s = sin(angle)
            ry_mat[0] = c;  ry_mat[1] = 0.0; ry_mat[2] = s
            ry_mat[3] = 0.0; ry_mat[4] = 1.0; ry_mat[5] = 0.0
            ry_mat[6] = -s; ry_mat[7] = 0.0; ry_mat[8] = c
            _mat_mat(&rg[0, 0], ry_mat, rk)
            iou = _iou_core(rk, &tg[0], &sg[0],
                            &rp[0, 0], &tp[0], &sp[0], &inter, &union_v)
        if iou > best_iou + 1e-12:
            best_iou = iou
            best_inter = inter
            best_union = union_v
            best_k = k
    return float(best_iou), float(best_inter), float(best_union), best_k


def points_in_box(rotation, translation, scale, points, eps):
    """Boolean mask of points inside the box (boundary inclusive at eps)."""
    cdef const double[:, ::1] r = _as_mat3(rotation)
    cdef const double[::1] t = _as_vec3(translation)
    cdef const double[::1] s = _as_vec3(scale)
    pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, ::1] p = pts
    cdef int n = p.shape[0]
    out = np.zeros(n, dtype=np.bool_)
    cdef char[::1] o = out.view(np.int8)
    cdef int i
    cdef double e = eps
    cdef double d[3]
    cdef double q[3]
    for i in range(n):
        d[0] = p[i, 0] - t[0]
        d[1] = p[i, 1] - t[1]
        d[2] = p[i, 2] - t[2]
        _matT_vec(&r[0, 0], d, q)
        if (fabs(q[0] / s[0]) <= 0.5 + e
                and fabs(q[1] / s[1]) <= 0.5 + e
                and fabs(q[2] / s[2]) <= 0.5 + e):
            o[i] = 1
    return out
