//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use airdrop_core::dubins::{DubinsPath, Pose4, SegmentKind};

pub fn wrap(a: f64) -> f64 {
    a.rem_euclid(TAU)
}

pub fn left_center(x: f64, y: f64, psi: f64, r: f64) -> (f64, f64) {
    (x - r * psi.sin(), y + r * psi.cos())
}

pub fn right_center(x: f64, y: f64, psi: f64, r: f64) -> (f64, f64) {
    (x + r * psi.sin(), y - r * psi.cos())
}

/// Shortest path length over every tangent-line and three-circle candidate.
pub fn tangent_oracle(a: &Pose4, b: &Pose4, r: f64) -> f64 {
    let (l0, r0) = (left_center(a.x, a.y, a.psi, r), right_center(a.x, a.y, a.psi, r));
    let (lf, rf) = (left_center(b.x, b.y, b.psi, r), right_center(b.x, b.y, b.psi, r));
    let sub = |p: (f64, f64), q: (f64, f64)| (q.0 - p.0, q.1 - p.1);
    let mut best = f64::INFINITY;

    // outer tangents
    let (dx, dy) = sub(l0, lf);
    let th = dy.atan2(dx);
    best = best.min(r * (wrap(th - a.psi) + wrap(b.psi - th)) + dx.hypot(dy));
    let (dx, dy) = sub(r0, rf);
    let th = dy.atan2(dx);
    best = best.min(r * (wrap(a.psi - th) + wrap(th - b.psi)) + dx.hypot(dy));

    // inner tangents
    let (dx, dy) = sub(l0, rf);
    let d = dx.hypot(dy);
    if d >= 2.0 * r {
        let ell = (d * d - 4.0 * r * r).sqrt();
        let th = dy.atan2(dx) + (2.0 * r).atan2(ell);
        best = best.min(r * (wrap(th - a.psi) + wrap(th - b.psi)) + ell);
    }
    let (dx, dy) = sub(r0, lf);
    let d = dx.hypot(dy);
    if d >= 2.0 * r {
        let ell = (d * d - 4.0 * r * r).sqrt();
        let th = dy.atan2(dx) - (2.0 * r).atan2(ell);
        best = best.min(r * (wrap(a.psi - th) + wrap(b.psi - th)) + ell);
    }

    // three circles: both placements of the middle circle
    for (c1, c3, first_left) in [(l0, lf, true), (r0, rf, false)] {
        let (dx, dy) = sub(c1, c3);
        let d = dx.hypot(dy);
        if d > 4.0 * r {
            continue;
        }
        let phi = dy.atan2(dx);
        let beta = (d / (4.0 * r)).clamp(-1.0, 1.0).acos();
        for s in [1.0, -1.0] {
            let g1 = phi + s * beta;
            let c2 = (c1.0 + 2.0 * r * g1.cos(), c1.1 + 2.0 * r * g1.sin());
            let (ex, ey) = sub(c2, c3);
            let g2 = ey.atan2(ex);
            let len = if first_left {
                let t1 = g1 + PI / 2.0;
                let t2 = g2 - PI / 2.0;
                wrap(t1 - a.psi) + wrap(t1 - t2) + wrap(b.psi - t2)
            } else {
                let t1 = g1 - PI / 2.0;
                let t2 = g2 + PI / 2.0;
                wrap(a.psi - t1) + wrap(t2 - t1) + wrap(t2 - b.psi)
            };
            best = best.min(r * len);
        }
    }
    best
}

/// Exact arc/line kinematics, written independently of the library.
pub fn fly(path: &DubinsPath) -> Pose4 {
    let (mut x, mut y, mut z, mut psi) = (path.start.x, path.start.y, path.start.z, path.start.psi);
    let r = path.radius;
    for seg in &path.segments {
        let planar = seg.length * seg.flight_path_angle.cos();
        z += seg.length * seg.flight_path_angle.sin();
        let k = match seg.kind {
            SegmentKind::LeftArc | SegmentKind::HelixLeft => 1.0,
            SegmentKind::RightArc | SegmentKind::HelixRight => -1.0,
            SegmentKind::Straight => 0.0,
        };
        if k == 0.0 {
            x += planar * psi.cos();
            y += planar * psi.sin();
        } else {
            let next = psi + k * planar / r;
            x += k * r * (next.sin() - psi.sin());
            y -= k * r * (next.cos() - psi.cos());
            psi = next;
        }
    }
    Pose4::new(x, y, z, psi)
}


/// Optimal closed tour through `n` nodes starting at 0, by dynamic
/// programming over subsets.
pub fn held_karp(n: usize, cost: impl Fn(usize, usize) -> f64) -> f64 {
    if n == 1 {
        return 0.0;
    }
    let full = 1usize << n;
    let mut dp = vec![f64::INFINITY; full * n];
    dp[n] = 0.0;
    for mask in 1..full {
        if mask & 1 == 0 {
            continue;
        }
        for last in 0..n {
            let here = dp[mask * n + last];
            if !here.is_finite() || mask & (1 << last) == 0 {
                continue;
            }
            for next in 1..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let m2 = mask | (1 << next);
                let v = here + cost(last, next);
                if v < dp[m2 * n + next] {
                    dp[m2 * n + next] = v;
                }
            }
        }
    }
    (1..n).map(|j| dp[(full - 1) * n + j] + cost(j, 0)).fold(f64::INFINITY, f64::min)
}

/// Minimum-sum perfect matching by trying every permutation.
pub fn brute_assignment(cost: &[Vec<f64>]) -> f64 {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if row == cost.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..cost.len() {
            if !used[j] {
                used[j] = true;
                go(cost, row + 1, used, acc + cost[row][j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(cost, 0, &mut vec![false; cost.len()], 0.0, &mut best);
    best
}

/// WGS84 meridional radius of curvature at latitude `phi`.
pub fn meridian_radius(phi: f64) -> f64 {
    let a = 6_378_137.0;
    let f = 1.0 / 298.257_223_563;
    let e2 = f * (2.0 - f);
    a * (1.0 - e2) / (1.0 - e2 * phi.sin().powi(2)).powf(1.5)
}

/// Time to fall `h` from rest under quadratic drag.
pub fn fall_time(h: f64, g: f64, vt: f64) -> f64 {
    vt / g * (g * h / (vt * vt)).exp().acosh()
}

pub struct SpiralModel {
    pub g: f64,
    pub vt: f64,
    pub gain: f64,
    pub drag: f64,
    pub heading: f64,
    pub amplitude: f64,
    pub omega: f64,
}

impl SpiralModel {
    fn deriv(&self, t: f64, s: [f64; 4]) -> [f64; 4] {
        let (roll, pitch) = (self.amplitude * (self.omega * t).sin(), self.amplitude * (self.omega * t).cos());
        let vz = self.vt * (self.g * t / self.vt).tanh();
        let k = self.gain * self.g * (1.0 - 0.5 * vz / self.vt);
        let (bx, by) = (roll.tan(), pitch.tan());
        let (sh, ch) = self.heading.sin_cos();
        let ax = k * (ch * bx - sh * by) - self.drag * s[2];
        let ay = k * (sh * bx + ch * by) - self.drag * s[3];
        [s[2], s[3], ax, ay]
    }

    /// Touchdown point from `(x0, y0)` at altitude `h`, classical RK4.
    pub fn touchdown(&self, x0: f64, y0: f64, h: f64, steps: usize) -> (f64, f64) {
        let t_end = fall_time(h, self.g, self.vt);
        let dt = t_end / steps as f64;
        let mut s = [x0, y0, 0.0, 0.0];
        let add = |s: [f64; 4], d: [f64; 4], k: f64| [s[0] + k * d[0], s[1] + k * d[1], s[2] + k * d[2], s[3] + k * d[3]];
        for i in 0..steps {
            let t = i as f64 * dt;
            let k1 = self.deriv(t, s);
            let k2 = self.deriv(t + dt / 2.0, add(s, k1, dt / 2.0));
            let k3 = self.deriv(t + dt / 2.0, add(s, k2, dt / 2.0));
            let k4 = self.deriv(t + dt, add(s, k3, dt));
            for j in 0..4 {
                s[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        (s[0], s[1])
    }
}
