"""Compiled per-step physics, sensors and the episode loop.

Everything here works on plain floats and float64 arrays so numba can
compile it with ``nogil``; the dataclass-facing wrappers live in ``sim``.
Arena geometry: square centred on the origin, walls at +-side/2, optional
cylinder at the origin.

Layout of the packed parameter arrays (see ``config.arena_params`` and
``config.robot_params``):

    arena: side, cylinder radius (0 = absent), occludes flag, ir range,
           ground sensor radius, signed-rotation flag
    robot: ms, body radius, wheel radius, axle track, x0, y0, heading0
"""
import math

import numpy as np
from numba import njit

from ..neuroctl import step_kernel

N_IR = 8
N_SECTORS = 8
N_SENSORS = 25
HISTORY_LEN = 200
NOMINAL_STEPS = 1000.0
DT = 0.1
RAY_STEP = math.pi / 12.0
SECTOR = math.pi / 4.0
TWO_PI = 2.0 * math.pi
INF = np.inf

# trajectory columns
T_X, T_Y, T_HEADING, T_TV, T_RV, T_RSL, T_RSR, T_TIR, T_CONTACT = range(9)
TRAJ_COLS = 9


@njit(cache=True, nogil=True)
def ground_brightness(x, y, half):
    d = math.sqrt(x * x + y * y)
    return 1.0 - min(1.0, d / half)


@njit(cache=True, nogil=True)
def ray_circle(px, py, ux, uy, cx, cy, radius):
    """Distance along a unit ray to a disk; 0 if the origin is inside it."""
    fx = cx - px
    fy = cy - py
    dist2 = fx * fx + fy * fy
    r2 = radius * radius
    if dist2 <= r2:
        return 0.0
    proj = fx * ux + fy * uy
    if proj <= 0.0:
        return INF
    perp2 = dist2 - proj * proj
    if perp2 > r2:
        return INF
    return proj - math.sqrt(r2 - perp2)


@njit(cache=True, nogil=True)
def ray_walls(px, py, ux, uy, half):
    t = INF
    if ux > 1e-12:
        t = min(t, (half - px) / ux)
    elif ux < -1e-12:
        t = min(t, (-half - px) / ux)
    if uy > 1e-12:
        t = min(t, (half - py) / uy)
    elif uy < -1e-12:
        t = min(t, (-half - py) / uy)
    return max(t, 0.0)


@njit(cache=True, nogil=True)
def read_infrared(x, y, heading, body_r, ox, oy, o_r, cyl_r, half, ir_range, out):
    # ray i points at (i - 1) * 15 deg so group k is centred on k * 45 deg
    for g in range(N_IR):
        acc = 0.0
        for j in range(3):
            ang = heading + (3 * g + j - 1) * RAY_STEP
            ux = math.cos(ang)
            uy = math.sin(ang)
            t = ray_walls(x, y, ux, uy, half)
            if cyl_r > 0.0:
                t = min(t, ray_circle(x, y, ux, uy, 0.0, 0.0, cyl_r))
            t = min(t, ray_circle(x, y, ux, uy, ox, oy, o_r))
            d = t - body_r
            if d < 0.0:
                d = 0.0
            a = 1.0 - d / ir_range
            if a > 0.0:
                acc += a
        out[g] = acc / 3.0


@njit(cache=True, nogil=True)
def _wrap_pieces(center, half_width, pieces):
    """Angular interval -> up to two pieces in [0, 2pi), frame shifted by
    half a sector so that sector k spans [k pi/4, (k+1) pi/4)."""
    if half_width >= math.pi:
        pieces[0, 0] = 0.0
        pieces[0, 1] = TWO_PI
        return 1
    lo = center - half_width + SECTOR / 2.0
    hi = center + half_width + SECTOR / 2.0
    shift = math.floor(lo / TWO_PI) * TWO_PI
    lo -= shift
    hi -= shift
    if hi <= TWO_PI:
        pieces[0, 0] = lo
        pieces[0, 1] = hi
        return 1
    pieces[0, 0] = lo
    pieces[0, 1] = TWO_PI
    pieces[1, 0] = 0.0
    pieces[1, 1] = hi - TWO_PI
    return 2


@njit(cache=True, nogil=True)
def _overlap(a0, a1, b0, b1):
    lo = max(a0, b0)
    hi = min(a1, b1)
    return hi - lo if hi > lo else 0.0


@njit(cache=True, nogil=True)
def _subtense(x, y, heading, tx, ty, radius):
    dx = tx - x
    dy = ty - y
    d = math.sqrt(dx * dx + dy * dy)
    if d <= radius:
        return 0.0, math.pi / 2.0, d
    bearing = math.atan2(dy, dx) - heading
    return bearing, math.asin(radius / d), d


@njit(cache=True, nogil=True)
def read_camera(x, y, heading, ox, oy, o_r, cyl_r, occludes, out):
    """8 sector coverages plus total coverage of the opponent's silhouette."""
    opp = np.empty((2, 2))
    occ = np.empty((2, 2))
    bearing, hw, d = _subtense(x, y, heading, ox, oy, o_r)
    n_opp = _wrap_pieces(bearing, hw, opp)
    n_occ = 0
    if occludes and cyl_r > 0.0:
        cb, chw, cd = _subtense(x, y, heading, 0.0, 0.0, cyl_r)
        if cd < d:
            n_occ = _wrap_pieces(cb, chw, occ)
    total = 0.0
    for k in range(N_SECTORS):
        s0 = k * SECTOR
        s1 = s0 + SECTOR
        cov = 0.0
        for i in range(n_opp):
            a0 = max(opp[i, 0], s0)
            a1 = min(opp[i, 1], s1)
            if a1 <= a0:
                continue
            cov += a1 - a0
            for j in range(n_occ):
                cov -= _overlap(a0, a1, occ[j, 0], occ[j, 1])
        if cov < 0.0:
            cov = 0.0
        out[k] = min(1.0, cov / SECTOR)
        total += cov
    out[N_SECTORS] = min(1.0, total / TWO_PI)


@njit(cache=True, nogil=True)
def read_ground(x, y, heading, radius, half, out):
    # front, right, back, left
    for k in range(4):
        ang = heading - k * (math.pi / 2.0)
        out[k] = ground_brightness(x + radius * math.cos(ang), y + radius * math.sin(ang), half)
    out[4] = (out[0] + out[1] + out[2] + out[3]) / 4.0


@njit(cache=True, nogil=True)
def tiredness_of(history):
    """history: chronological rs values, at most 200 of them."""
    acc = 0.0
    for v in history:
        acc += v
    mean = acc / HISTORY_LEN
    return mean * mean


@njit(cache=True, nogil=True)
def effective_max_speed(ms, tir):
    return ms * (1.0 - tir)


@njit(cache=True, nogil=True)
def motor_to_wheel_speeds(tm, rm, ms_t):
    base = ms_t * rm
    if tm < 0.5:
        f = -8.0 * (tm - 0.5) * (tm - 0.5) + 1.0
        return base * f, base
    if tm > 0.5:
        f = -8.0 * (tm - 0.5) * (tm - 0.5) + 1.0
        return base, base * f
    return base, base


@njit(cache=True, nogil=True)
def wheel_activity(rsl, rsr, ms):
    rs = (abs(rsl) + abs(rsr)) / (2.0 * ms)
    return min(1.0, max(0.0, rs))


@njit(cache=True, nogil=True)
def integrate_motion(x, y, heading, rsl, rsr, wheel_radius, axle_track, dt):
    v = wheel_radius * (rsl + rsr) / 2.0
    w = wheel_radius * (rsr - rsl) / axle_track
    if abs(w) < 1e-9:
        return x + v * dt * math.cos(heading), y + v * dt * math.sin(heading), heading
    h1 = heading + w * dt
    radius = v / w
    nx = x + radius * (math.sin(h1) - math.sin(heading))
    ny = y - radius * (math.cos(h1) - math.cos(heading))
    return nx, ny, (h1 + math.pi) % TWO_PI - math.pi


@njit(cache=True, nogil=True)
def resolve_static(x, y, body_r, half, cyl_r):
    """Push a body out of walls and the cylinder; returns (x, y, contact)."""
    contact = False
    lim = half - body_r
    if x > lim:
        x = lim
        contact = True
    elif x < -lim:
        x = -lim
        contact = True
    if y > lim:
        y = lim
        contact = True
    elif y < -lim:
        y = -lim
        contact = True
    if cyl_r > 0.0:
        reach = cyl_r + body_r
        d = math.sqrt(x * x + y * y)
        if d < reach:
            if d > 0.0:
                x = x / d * reach
                y = y / d * reach
            else:
                x = reach
                y = 0.0
            contact = True
    return x, y, contact


@njit(cache=True, nogil=True)
def assemble_into(out, x, y, heading, body_r, ox, oy, o_r, arena, contact, step, tir):
    half = arena[0] / 2.0
    cyl_r = arena[1]
    read_infrared(x, y, heading, body_r, ox, oy, o_r, cyl_r, half, arena[3], out[0:8])
    read_camera(x, y, heading, ox, oy, o_r, cyl_r, arena[2] > 0.5, out[8:17])
    read_ground(x, y, heading, arena[4], half, out[17:22])
    out[22] = 1.0 if contact else 0.0
    out[23] = step / NOMINAL_STEPS
    out[24] = tir


@njit(cache=True, nogil=True)
def _unpack(genes, n_s, n_h, n_m):
    i = n_s * n_h
    w_sh = genes[0:i].reshape((n_s, n_h))
    w_hh = genes[i:i + n_h * n_h].reshape((n_h, n_h))
    i += n_h * n_h
    w_hm = genes[i:i + n_h * n_m].reshape((n_h, n_m))
    i += n_h * n_m
    b_h = genes[i:i + n_h]
    b_m = genes[i + n_h:i + n_h + n_m]
    return w_sh, w_hh, w_hm, b_h, b_m


@njit(cache=True, nogil=True)
def _history_view(hist, count, buf):
    """Copy a ring buffer into chronological order; returns the filled prefix."""
    if count <= HISTORY_LEN:
        for i in range(count):
            buf[i] = hist[i]
        return buf[:count]
    start = count % HISTORY_LEN
    for i in range(HISTORY_LEN):
        buf[i] = hist[(start + i) % HISTORY_LEN]
    return buf


@njit(cache=True, nogil=True)
def run_episode_kernel(genes_pred, genes_prey, n_hidden, robots, arena, max_steps, noise, traj):
    """Simulate one episode. Robot 0 is the predator, robot 1 the prey.

    ``noise`` is either empty or a (max_steps, 2, 25) array of additive
    sensor noise; ``traj`` is either empty or (max_steps, 2, 9) and is
    filled row by row. Returns (capture_step or 0, executed steps).
    """
    record = traj.shape[0] > 0
    noisy = noise.shape[0] > 0
    w0 = _unpack(genes_pred, N_SENSORS, n_hidden, 2)
    w1 = _unpack(genes_prey, N_SENSORS, n_hidden, 2)
    half = arena[0] / 2.0
    cyl_r = arena[1]
    signed = arena[5] > 0.5

    pose = np.empty((2, 3))
    for r in range(2):
        pose[r, 0] = robots[r, 4]
        pose[r, 1] = robots[r, 5]
        pose[r, 2] = robots[r, 6]
    hidden = np.zeros((2, n_hidden))
    new_hidden = np.zeros(n_hidden)
    motors = np.zeros((2, 2))
    sensors = np.zeros(N_SENSORS)
    hist = np.zeros((2, HISTORY_LEN))
    buf = np.zeros(HISTORY_LEN)
    contact = np.zeros(2, dtype=np.bool_)
    wheels = np.zeros((2, 2))
    tirs = np.zeros(2)

    capture = 0
    executed = 0
    for t in range(max_steps):
        for r in range(2):
            o = 1 - r
            tirs[r] = tiredness_of(_history_view(hist[r], t, buf))
            assemble_into(sensors, pose[r, 0], pose[r, 1], pose[r, 2], robots[r, 1],
                          pose[o, 0], pose[o, 1], robots[o, 1], arena, contact[r], t, tirs[r])
            if noisy:
                for s in range(N_SENSORS):
                    v = sensors[s] + noise[t, r, s]
                    sensors[s] = min(1.0, max(0.0, v))
            w = w0 if r == 0 else w1
            step_kernel(w[0], w[1], w[2], w[3], w[4], hidden[r], sensors, new_hidden, motors[r])
            hidden[r, :] = new_hidden
        for r in range(2):
            ms = robots[r, 0]
            rm = motors[r, 1]
            if signed:
                rm = 2.0 * rm - 1.0
            rsl, rsr = motor_to_wheel_speeds(motors[r, 0], rm, effective_max_speed(ms, tirs[r]))
            wheels[r, 0] = rsl
            wheels[r, 1] = rsr
            hist[r, t % HISTORY_LEN] = wheel_activity(rsl, rsr, ms)
            x, y, h = integrate_motion(pose[r, 0], pose[r, 1], pose[r, 2], rsl, rsr,
                                       robots[r, 2], robots[r, 3], DT)
            x, y, c = resolve_static(x, y, robots[r, 1], half, cyl_r)
            pose[r, 0] = x
            pose[r, 1] = y
            pose[r, 2] = h
            contact[r] = c
        dx = pose[0, 0] - pose[1, 0]
        dy = pose[0, 1] - pose[1, 1]
        captured = math.sqrt(dx * dx + dy * dy) <= robots[0, 1] + robots[1, 1]
        if captured:
            contact[0] = True
            contact[1] = True
        if record:
            for r in range(2):
                traj[t, r, T_X] = pose[r, 0]
                traj[t, r, T_Y] = pose[r, 1]
                traj[t, r, T_HEADING] = pose[r, 2]
                traj[t, r, T_TV] = motors[r, 0]
                traj[t, r, T_RV] = motors[r, 1]
                traj[t, r, T_RSL] = wheels[r, 0]
                traj[t, r, T_RSR] = wheels[r, 1]
                traj[t, r, T_TIR] = tirs[r]
                traj[t, r, T_CONTACT] = 1.0 if contact[r] else 0.0
        executed = t + 1
        if captured:
            capture = t + 1
            break
    return capture, executed
