//! Complex-plane shooting eigensolver.
//!
//! For a trial `lambda` the recessive solution is started from its WKB form
//! far out on each boundary ray and integrated inward to the origin, where
//! the Wronskian of the two ray solutions vanishes exactly at eigenvalues.
//! The ODE is integrated in the arc length `s` along `z = s e^(i theta)`:
//! `u''(s) = e^(2 i theta) (V(z) - lambda) u`.
//!
//! The left ray direction is built as `-conj` of the right one, so for a real
//! coefficient vector the two integrations are exact mirror images and the
//! Wronskian is exactly real for real `lambda`.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::asym::{lambda_n0, AsymptoticModel};
use crate::coeffs::ProblemSpec;
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions};
use crate::scalar::{from_usize, lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig<T> {
    /// Start radius is `radius_factor * max(|lambda|^(1/m), 1)`.
    pub radius_factor: T,
    pub rtol: T,
    pub atol: T,
    /// Stop once `|delta lambda| <= newton_tol * max(|lambda|, 1)`.
    pub newton_tol: T,
    pub max_iter: usize,
    pub renorm_threshold: T,
    /// Largest accepted residual at a converged root: the next secant
    /// correction measured in local level spacings.
    pub residual_tol: T,
    /// Integration step budget per ray.
    pub max_steps: usize,
}

impl<T: Real> Default for ShootingConfig<T> {
    fn default() -> Self {
        Self {
            radius_factor: lit(8.0),
            rtol: lit(1e-10),
            atol: lit(1e-12),
            newton_tol: lit(1e-9),
            max_iter: 50,
            renorm_threshold: lit(1e100),
            residual_tol: lit(1e-6),
            max_steps: 20_000_000,
        }
    }
}

impl<T: Real> ShootingConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("shooting config: {what}")));
        if !(self.radius_factor >= lit(2.0)) {
            return bad("radius_factor must be at least 2");
        }
        for (name, v) in [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("newton_tol", self.newton_tol),
            ("residual_tol", self.residual_tol),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(self.renorm_threshold > T::one()) {
            return bad("renorm_threshold must exceed 1");
        }
        if self.max_iter == 0 || self.max_steps == 0 {
            return bad("iteration and step limits must be positive");
        }
        Ok(())
    }

    fn ode_options(&self) -> OdeOptions<T> {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_init: None,
            h_max: None,
            max_steps: self.max_steps,
            renorm_threshold: Some(self.renorm_threshold),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Shooting,
    Asymptotic,
    Refined,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Shooting => "shooting",
            Method::Asymptotic => "asymptotic",
            Method::Refined => "refined",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenvalueRecord<T> {
    pub n: Option<usize>,
    pub lambda: Complex<T>,
    pub wronskian_residual: Complex<T>,
    pub iterations: usize,
    pub method: Method,
}

/// Solution data at a point of a ray; `du` is the derivative in arc length.
/// The represented values are `u * exp(log_scale)` and `du * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayState<T> {
    pub u: Complex<T>,
    pub du: Complex<T>,
    pub log_scale: T,
}

impl<T: Real> RayState<T> {
    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self { u: self.u * factor, du: self.du * factor, log_scale: self.log_scale }
    }
}

/// Boundary Wronskian at the origin in mantissa/exponent form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wronskian<T> {
    /// `(u_L u_R' - u_L' u_R) / (max(|u_L|,|u_L'|) max(|u_R|,|u_R'|))`.
    pub normalized: Complex<T>,
    /// Unnormalized value is `mantissa * exp(log_scale)`; analytic in lambda
    /// for a fixed start radius.
    pub mantissa: Complex<T>,
    pub log_scale: T,
}

/// `(theta_left, theta_right) = -pi/2 -+ (ell+1) pi/(m+2)`.
pub fn boundary_rays<T: Real>(spec: &ProblemSpec<T>) -> (T, T) {
    let half = T::FRAC_PI_2();
    let w = from_usize::<T>(spec.ell() + 1) * T::PI() / from_usize::<T>(spec.m() + 2);
    (-half - w, -half + w)
}

/// Unit direction vectors of the two rays, mirror images under `z -> -conj z`.
fn ray_directions<T: Real>(spec: &ProblemSpec<T>) -> (Complex<T>, Complex<T>) {
    let (_, right) = boundary_rays(spec);
    let r = Complex::new(right.cos(), right.sin());
    (-r.conj(), r)
}

/// `V(z) = (-1)^ell (iz)^m - P(iz)` and `dV/dz`.
pub fn potential_and_derivative<T: Real>(spec: &ProblemSpec<T>, z: Complex<T>) -> (Complex<T>, Complex<T>) {
    let w = Complex::new(-z.im, z.re);
    let lead = if spec.ell() % 2 == 0 { T::one() } else { -T::one() };
    // p(w) = lead w^(m-1) - a_1 w^(m-2) - ... - a_(m-1), V = w p(w)
    let mut p = Complex::new(lead, T::zero());
    let mut dp = Complex::new(T::zero(), T::zero());
    for &ak in spec.coeffs() {
        dp = dp * w + p;
        p = p * w - ak;
    }
    let v = p * w;
    let dv_dw = p + dp * w;
    (v, Complex::new(-dv_dw.im, dv_dw.re))
}

pub fn potential<T: Real>(spec: &ProblemSpec<T>, z: Complex<T>) -> Complex<T> {
    potential_and_derivative(spec, z).0
}

/// Principal square root, written so that `sqrt(conj x) == conj(sqrt x)`
/// bit for bit off the negative axis.
fn csqrt<T: Real>(x: Complex<T>) -> Complex<T> {
    let r = x.norm();
    if r == T::zero() {
        return x;
    }
    let half = lit::<T>(0.5);
    if x.re >= T::zero() {
        let t = ((r + x.re) * half).sqrt();
        Complex::new(t, x.im / (t + t))
    } else {
        let t = ((r - x.re) * half).sqrt();
        let re = x.im.abs() / (t + t);
        Complex::new(re, if x.im < T::zero() { -t } else { t })
    }
}

/// The shooting machinery only needs `Q = V - lambda` and `dQ/dz`.
trait Field<T>: Sync {
    fn q(&self, z: Complex<T>) -> (Complex<T>, Complex<T>);
    fn degree(&self) -> usize;
    fn coeff_bound(&self, r: T) -> T;
}

struct SpecField<'a, T> {
    spec: &'a ProblemSpec<T>,
    lambda: Complex<T>,
}

impl<T: Real> Field<T> for SpecField<'_, T> {
    fn q(&self, z: Complex<T>) -> (Complex<T>, Complex<T>) {
        let (v, dv) = potential_and_derivative(self.spec, z);
        (v - self.lambda, dv)
    }

    fn degree(&self) -> usize {
        self.spec.m()
    }

    fn coeff_bound(&self, r: T) -> T {
        let m = self.spec.m();
        self.lambda.norm()
            + self
                .spec
                .coeffs()
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (i, a)| acc + a.norm() * r.powi((m - i - 1) as i32))
    }
}

/// `|z|^m >= 4 (|lambda| + sum |a_k| R^(m-k))` at `|z| = R`.
pub fn dominance_holds<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>, r: T) -> bool {
    dominance(&SpecField { spec, lambda }, r)
}

fn dominance<T: Real, F: Field<T>>(field: &F, r: T) -> bool {
    r.powi(field.degree() as i32) >= lit::<T>(4.0) * field.coeff_bound(r)
}

const RADIUS_CAP: f64 = 64.0;

/// Start radius `R` and matching radius `rho` of the shooting contour.
///
/// `R` is `radius_factor * max(|lambda|^(1/m), 1)`, grown until dominance
/// holds; `rho <= R` is the smallest radius from twice the turning-point
/// scale at which dominance holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour<T> {
    pub start: T,
    pub matching: T,
    /// The rays are joined by the polyline `z_R -> M -> z_L` with
    /// `z_(R,L) = chord * e^(i theta_(R,L))` and `M` the chord midpoint
    /// shifted by `bend` along the normal pointing away from the origin.
    pub chord: T,
    pub bend: T,
}

impl<T: Real> Contour<T> {
    fn nodes(&self, dirs: (Complex<T>, Complex<T>)) -> [Complex<T>; 3] {
        let (dl, dr) = dirs;
        let (zl, zr) = (dl * self.chord, dr * self.chord);
        let v = dl - dr;
        let normal = Complex::new(-v.im, v.re) / v.norm();
        [zr, (zl + zr) * lit::<T>(0.5) + normal * self.bend, zl]
    }
}

fn grow_until_dominant<T: Real, F: Field<T>>(field: &F, mut r: T, cap: T) -> Result<T> {
    while !dominance(field, r) {
        r = r * lit(1.25);
        if r > cap {
            return Err(Error::Dominance { radius: r.to_f64().unwrap_or(f64::NAN) });
        }
    }
    Ok(r)
}

fn contour_for<T: Real, F: Field<T>>(
    field: &F,
    dirs: (Complex<T>, Complex<T>),
    lambda_scale: T,
    cfg: &ShootingConfig<T>,
) -> Result<Contour<T>> {
    let base = lambda_scale.powf(T::one() / from_usize::<T>(field.degree())).max(T::one());
    let cap = cfg.radius_factor.max(lit(RADIUS_CAP)) * base;
    let start = grow_until_dominant(field, cfg.radius_factor * base, cap)?;
    let matching = grow_until_dominant(field, lit::<T>(2.0) * base, cap)?.min(start);
    let proto = Contour { start, matching, chord: matching, bend: T::zero() };
    let ends = (far_field(field, dirs.0, proto, cfg)?, far_field(field, dirs.1, proto, cfg)?);
    // the exact Wronskian is the same on every joining path and at every
    // checkpoint: candidates whose values agree with many others are
    // trustworthy, and the spread around the meeting point ranks those
    let coarse = ShootingConfig { rtol: lit(1e-7), atol: lit(1e-9), ..*cfg };
    let floor = lit::<T>(1e-6);
    let mut cands: Vec<(Contour<T>, Wronskian<T>, T, T)> = Vec::new();
    for k in 8..=20 {
        let chord = (lit::<T>(0.1 * k as f64) * base).min(matching);
        for h in [-0.4, -0.2, 0.0, 0.2, 0.4] {
            let cand = Contour { chord, bend: lit::<T>(h) * base, ..proto };
            let Ok((left, right)) = carry_across(field, dirs, cand, ends, 3, &coarse) else { continue };
            let (i, size) = meeting_point(&left, &right);
            let n = left.len() - 1;
            let at = |j: usize| wronskian_points(&left[j], &right[n - j]);
            let w = at(i);
            let spread = [i.wrapping_sub(1), i + 1]
                .into_iter()
                .filter(|&j| j <= n)
                .map(|j| relative_gap(&at(j), &w))
                .fold(T::zero(), T::max);
            if spread.is_finite() && size.is_finite() && w.mantissa.norm() > T::zero() {
                cands.push((cand, w, spread.max(floor), size));
            }
        }
    }
    let agree = lit::<T>(1e-5);
    let votes: Vec<usize> = cands
        .iter()
        .map(|(_, w, _, _)| cands.iter().filter(|(_, o, _, _)| relative_gap(o, w) <= agree).count())
        .collect();
    let best = cands
        .iter()
        .zip(&votes)
        .min_by(|(x, vx), (y, vy)| {
            vy.cmp(vx)
                .then(x.2.partial_cmp(&y.2).unwrap_or(Ordering::Equal))
                .then(x.3.partial_cmp(&y.3).unwrap_or(Ordering::Equal))
        })
        .map_or(proto, |(c, _)| c.0);
    Ok(best)
}

/// Contour radii for a given lambda under `cfg`.
pub fn contour<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>, cfg: &ShootingConfig<T>) -> Result<Contour<T>> {
    contour_for(&SpecField { spec, lambda }, ray_directions(spec), lambda.norm(), cfg)
}

fn wkb_state<T: Real, F: Field<T>>(field: &F, dir: Complex<T>, r: T) -> Result<RayState<T>> {
    if !dominance(field, r) {
        return Err(Error::Dominance { radius: r.to_f64().unwrap_or(f64::NAN) });
    }
    let (qz, dqz) = field.q(dir * r);
    let q = dir * dir * qz;
    let dq = dir * dir * dir * dqz;
    let sq = csqrt(q);
    if !(sq.re > T::zero()) {
        return Err(Error::Branch { re: q.re.to_f64().unwrap_or(f64::NAN), im: q.im.to_f64().unwrap_or(f64::NAN) });
    }
    let one = Complex::new(T::one(), T::zero());
    Ok(RayState { u: one, du: -sq - dq / (q * lit::<T>(4.0)), log_scale: T::zero() })
}

/// Recessive WKB data at `z = R e^(i theta)` (u normalized to 1).
pub fn wkb_init<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>, theta: T, r: T) -> Result<RayState<T>> {
    wkb_state(&SpecField { spec, lambda }, Complex::new(theta.cos(), theta.sin()), r)
}

fn initial_step<T: Real, F: Field<T>>(field: &F, dir: Complex<T>, s: T) -> T {
    let (q, _) = field.q(dir * s);
    lit::<T>(0.05) / q.norm().sqrt().max(T::one())
}

/// Linear integration of `u'' = d^2 Q(z0 + d s) u` in `s` from `s0` to `s1`.
fn linear_path<T: Real, F: Field<T>>(
    field: &F,
    z0: Complex<T>,
    d: Complex<T>,
    s0: T,
    s1: T,
    init: RayState<T>,
    cfg: &ShootingConfig<T>,
) -> Result<RayState<T>> {
    let d2 = d * d;
    let rhs = |s: T, y: &[Complex<T>; 2]| {
        let (qz, _) = field.q(z0 + d * s);
        [y[1], d2 * qz * y[0]]
    };
    let mut opts = cfg.ode_options();
    let (q, _) = field.q(z0 + d * s0);
    opts.h_init = Some(lit::<T>(0.05) / q.norm().sqrt().max(T::one()));
    let sol = ode::integrate(rhs, s0, s1, [init.u, init.du], &opts)?;
    Ok(RayState { u: sol.y[0], du: sol.y[1], log_scale: init.log_scale + sol.log_scale })
}

fn linear_segment<T: Real, F: Field<T>>(
    field: &F,
    dir: Complex<T>,
    s0: T,
    s1: T,
    init: RayState<T>,
    cfg: &ShootingConfig<T>,
) -> Result<RayState<T>> {
    linear_path(field, Complex::new(T::zero(), T::zero()), dir, s0, s1, init, cfg)
}

/// Recessive solution at `s = rho`, normalized to `u = 1`.
///
/// Beyond the turning points the recessive solution has no zeros, so the
/// far field is covered with the log-derivative `y = u'/u`, which obeys
/// `y' = e^(2 i theta) Q - y^2` and is stable inward. If that fails the
/// linear equation is used instead.
fn far_field<T: Real, F: Field<T>>(
    field: &F,
    dir: Complex<T>,
    c: Contour<T>,
    cfg: &ShootingConfig<T>,
) -> Result<RayState<T>> {
    let init = wkb_state(field, dir, c.start)?;
    if c.matching >= c.start {
        return Ok(init);
    }
    let d2 = dir * dir;
    let rhs = |s: T, y: &[Complex<T>; 1]| {
        let (qz, _) = field.q(dir * s);
        [d2 * qz - y[0] * y[0]]
    };
    let mut opts = cfg.ode_options();
    opts.renorm_threshold = None;
    opts.h_init = Some(initial_step(field, dir, c.start));
    let one = Complex::new(T::one(), T::zero());
    match ode::integrate(rhs, c.start, c.matching, [init.du], &opts) {
        Ok(sol) if sol.y[0].norm().is_finite() => Ok(RayState { u: one, du: sol.y[0], log_scale: T::zero() }),
        _ => {
            let st = linear_segment(field, dir, c.start, c.matching, init, cfg)?;
            Ok(RayState { u: one, du: st.du / st.u, log_scale: T::zero() })
        }
    }
}

/// Integrates from the WKB start on the ray at angle `theta` to `z = 0`.
pub fn integrate_ray<T: Real>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    theta: T,
    cfg: &ShootingConfig<T>,
) -> Result<RayState<T>> {
    let field = SpecField { spec, lambda };
    let dir = Complex::new(theta.cos(), theta.sin());
    let c = contour_for(&field, (dir, dir.conj() * -T::one()), lambda.norm(), cfg)?;
    let st = far_field(&field, dir, c, cfg)?;
    linear_segment(&field, dir, c.matching, T::zero(), st, cfg)
}

/// Integrates the linear equation along the ray at angle `theta` from
/// `s = r` to `z = 0`, starting from a caller-supplied state.
pub fn integrate_ray_from<T: Real>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    theta: T,
    r: T,
    init: RayState<T>,
    cfg: &ShootingConfig<T>,
) -> Result<RayState<T>> {
    let dir = Complex::new(theta.cos(), theta.sin());
    linear_segment(&SpecField { spec, lambda }, dir, r, T::zero(), init, cfg)
}

/// Solution value and z-derivative at a point, with a shared log scale.
#[derive(Clone, Copy)]
struct Point<T> {
    u: Complex<T>,
    dz: Complex<T>,
    log_scale: T,
}

const CHECKPOINTS_PER_SEGMENT: usize = 8;

/// Carries a solution along a polyline, returning its value at the start
/// and at `per_segment` equally spaced points on every segment.
fn along_path<T: Real, F: Field<T>>(
    field: &F,
    nodes: &[Complex<T>],
    start: Point<T>,
    per_segment: usize,
    cfg: &ShootingConfig<T>,
) -> Result<Vec<Point<T>>> {
    let mut out = vec![start];
    let mut cur = start;
    for seg in nodes.windows(2) {
        let len = (seg[1] - seg[0]).norm();
        if len == T::zero() {
            out.extend(std::iter::repeat(cur).take(per_segment));
            continue;
        }
        let d = (seg[1] - seg[0]) / len;
        let piece = len / from_usize::<T>(per_segment);
        for k in 0..per_segment {
            let origin = seg[0] + d * (piece * from_usize::<T>(k));
            let st = RayState { u: cur.u, du: cur.dz * d, log_scale: cur.log_scale };
            let st = linear_path(field, origin, d, T::zero(), piece, st, cfg)?;
            cur = Point { u: st.u, dz: st.du * d.conj(), log_scale: st.log_scale };
            out.push(cur);
        }
    }
    Ok(out)
}

fn wronskian_points<T: Real>(left: &Point<T>, right: &Point<T>) -> Wronskian<T> {
    let mantissa = left.u * right.dz - left.dz * right.u;
    let nl = left.u.norm().max(left.dz.norm());
    let nr = right.u.norm().max(right.dz.norm());
    Wronskian { normalized: mantissa / (nl * nr), mantissa, log_scale: left.log_scale + right.log_scale }
}

/// Follows both boundary solutions from their far-field states at `rho`
/// inward to the joining polyline and across it.
fn carry_across<T: Real, F: Field<T>>(
    field: &F,
    dirs: (Complex<T>, Complex<T>),
    c: Contour<T>,
    ends: (RayState<T>, RayState<T>),
    per_segment: usize,
    cfg: &ShootingConfig<T>,
) -> Result<(Vec<Point<T>>, Vec<Point<T>>)> {
    let (dl, dr) = dirs;
    let nodes = c.nodes(dirs);
    let reversed = [nodes[2], nodes[1], nodes[0]];
    let carry = |dir: Complex<T>, st: RayState<T>, path: &[Complex<T>]| -> Result<Vec<Point<T>>> {
        let st = linear_segment(field, dir, c.matching, c.chord, st, cfg)?;
        let start = Point { u: st.u, dz: st.du * dir.conj(), log_scale: st.log_scale };
        along_path(field, path, start, per_segment, cfg)
    };
    let (left, right) = rayon::join(|| carry(dl, ends.0, &reversed), || carry(dr, ends.1, &nodes));
    Ok((left?, right?))
}

/// Index into `left` (and `n - index` into `right`) where
/// `ln |u_L| + ln |u_R|` is least, and that value.
fn relative_gap<T: Real>(a: &Wronskian<T>, b: &Wronskian<T>) -> T {
    (a.mantissa * (a.log_scale - b.log_scale).exp() - b.mantissa).norm() / b.mantissa.norm()
}

fn meeting_point<T: Real>(left: &[Point<T>], right: &[Point<T>]) -> (usize, T) {
    let n = left.len() - 1;
    let size = |p: &Point<T>| p.log_scale + p.u.norm().max(p.dz.norm()).ln();
    (0..=n).map(|i| (i, size(&left[i]) + size(&right[n - i]))).fold((n / 2, T::infinity()), |acc, (i, v)| {
        if v < acc.1 {
            (i, v)
        } else {
            acc
        }
    })
}

/// Each boundary solution is normalized to `u = 1` at radius `rho` on its
/// own ray, followed inward to the contour's joining polyline and carried
/// across it. The Wronskian is the same at every point of the path; it is
/// read off at the checkpoint where the two solutions are smallest, which
/// is where the subtraction loses the least. Near the origin both solutions
/// are typically dominated by the same growing mode, so reading it there is
/// hopeless for all but real-axis contours.
fn wronskian_field<T: Real, F: Field<T>>(
    field: &F,
    dirs: (Complex<T>, Complex<T>),
    c: Contour<T>,
    cfg: &ShootingConfig<T>,
) -> Result<Wronskian<T>> {
    let (dl, dr) = dirs;
    let (el, er) = rayon::join(|| far_field(field, dl, c, cfg), || far_field(field, dr, c, cfg));
    let (left, right) = carry_across(field, dirs, c, (el?, er?), CHECKPOINTS_PER_SEGMENT, cfg)?;
    let (best, _) = meeting_point(&left, &right);
    Ok(wronskian_points(&left[best], &right[left.len() - 1 - best]))
}

/// Boundary Wronskian on a fixed contour.
pub fn wronskian_on<T: Real>(
    spec: &ProblemSpec<T>,
    lambda: Complex<T>,
    c: Contour<T>,
    cfg: &ShootingConfig<T>,
) -> Result<Wronskian<T>> {
    wronskian_field(&SpecField { spec, lambda }, ray_directions(spec), c, cfg)
}

/// Normalized boundary Wronskian; zero exactly at eigenvalues.
pub fn wronskian<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>, cfg: &ShootingConfig<T>) -> Result<Complex<T>> {
    let c = contour(spec, lambda, cfg)?;
    Ok(wronskian_on(spec, lambda, c, cfg)?.normalized)
}

/// Rough distance between consecutive eigenvalues near `|lambda|`, from the
/// leading-order law `lambda_n ~ lambda_(0,0) (2n+1)^(2m/(m+2))`.
pub fn level_spacing<T: Real>(spec: &ProblemSpec<T>, lambda: Complex<T>) -> T {
    let m = from_usize::<T>(spec.m());
    let kappa = lit::<T>(2.0) * m / (m + lit(2.0));
    let l00 = lambda_n0(spec, 0);
    let mag = lambda.norm().max(l00);
    let x = (mag / l00).powf(kappa.recip());
    lit::<T>(2.0) * kappa * mag / x
}

/// Iterate of the root finder with the Wronskian in overflow-safe form.
#[derive(Clone, Copy)]
struct Sample<T> {
    x: Complex<T>,
    w: Wronskian<T>,
}

fn common_scale<T: Real>(samples: &[Sample<T>]) -> Vec<Complex<T>> {
    let top = samples.iter().fold(T::neg_infinity(), |acc, s| {
        let n = s.w.mantissa.norm();
        if n > T::zero() {
            acc.max(s.w.log_scale + n.ln())
        } else {
            acc
        }
    });
    samples
        .iter()
        .map(|s| {
            let n = s.w.mantissa.norm();
            if n == T::zero() || !top.is_finite() {
                s.w.mantissa
            } else {
                s.w.mantissa * (s.w.log_scale - top).exp()
            }
        })
        .collect()
}

fn secant_step<T: Real>(a: &Sample<T>, b: &Sample<T>) -> Option<Complex<T>> {
    let w = common_scale(&[*a, *b]);
    let den = w[1] - w[0];
    if den.norm() == T::zero() || !den.norm().is_finite() {
        return None;
    }
    let step = -w[1] * (b.x - a.x) / den;
    step.norm().is_finite().then_some(step)
}

fn muller_step<T: Real>(p: &[Sample<T>; 3], seed: Complex<T>) -> Option<Complex<T>> {
    let w = common_scale(p);
    let (x0, x1, x2) = (p[0].x, p[1].x, p[2].x);
    let h1 = x1 - x0;
    let h2 = x2 - x1;
    let d1 = (w[1] - w[0]) / h1;
    let d2 = (w[2] - w[1]) / h2;
    let a = (d2 - d1) / (h2 + h1);
    let b = a * h2 + d2;
    let disc = csqrt(b * b - a * w[2] * lit::<T>(4.0));
    let (dp, dm) = (b + disc, b - disc);
    let pick = |den: Complex<T>| -w[2] * lit::<T>(2.0) / den;
    let step = if (dp.norm() - dm.norm()).abs() <= T::epsilon() * dp.norm().max(dm.norm()) {
        // equal-size candidates: stay near the seed
        let (sp, sm) = (pick(dp), pick(dm));
        if (x2 + sp - seed).norm() <= (x2 + sm - seed).norm() {
            sp
        } else {
            sm
        }
    } else if dp.norm() > dm.norm() {
        pick(dp)
    } else {
        pick(dm)
    };
    step.norm().is_finite().then_some(step)
}

/// Converged root: location, final Wronskian, the would-be next secant
/// correction in units of the level spacing, and the iteration count.
struct Root<T> {
    x: Complex<T>,
    residual: Complex<T>,
    iterations: usize,
}

fn solve<T: Real, F>(eval: F, guess: Complex<T>, spacing: T, cfg: &ShootingConfig<T>) -> Result<Root<T>>
where
    F: Fn(Complex<T>) -> Result<Wronskian<T>>,
{
    let cap = spacing * lit(0.5);
    let clamp = |step: Complex<T>| {
        let n = step.norm();
        if n > cap {
            step * (cap / n)
        } else {
            step
        }
    };
    let mut trace = vec![(guess.re.to_f64().unwrap_or(f64::NAN), guess.im.to_f64().unwrap_or(f64::NAN))];
    let mut hist: Vec<Sample<T>> = Vec::with_capacity(cfg.max_iter + 2);
    hist.push(Sample { x: guess, w: eval(guess)? });
    let x1 = guess + Complex::new(spacing * lit(1e-3), T::zero());
    hist.push(Sample { x: x1, w: eval(x1)? });
    let mut stalls = 0usize;
    for it in 1..=cfg.max_iter {
        let k = hist.len();
        let (a, b) = (hist[k - 2], hist[k - 1]);
        let use_muller = stalls >= 2 && k >= 3;
        let step = if use_muller {
            muller_step(&[hist[k - 3], a, b], guess).or_else(|| secant_step(&a, &b))
        } else {
            secant_step(&a, &b).or_else(|| if k >= 3 { muller_step(&[hist[k - 3], a, b], guess) } else { None })
        };
        let step = match step {
            Some(s) => clamp(s),
            None => Complex::new(spacing * lit(1e-6), T::zero()),
        };
        let x = b.x + step;
        trace.push((x.re.to_f64().unwrap_or(f64::NAN), x.im.to_f64().unwrap_or(f64::NAN)));
        let w = eval(x)?;
        let next = Sample { x, w };
        let scaled = common_scale(&[b, next]);
        if scaled[1].norm() >= scaled[0].norm() {
            stalls += 1;
        } else {
            stalls = 0;
        }
        hist.push(next);
        if step.norm() <= cfg.newton_tol * x.norm().max(T::one()) || w.mantissa.norm() == T::zero() {
            let residual = match secant_step(&b, &next) {
                Some(corr) => corr / spacing,
                None => Complex::new(T::zero(), T::zero()),
            };
            return Ok(Root { x, residual, iterations: it });
        }
    }
    let last = hist.last().unwrap().x;
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        last_re: last.re.to_f64().unwrap_or(f64::NAN),
        last_im: last.im.to_f64().unwrap_or(f64::NAN),
        trace,
    })
}

/// Locates the eigenvalue nearest `guess` as a zero of the boundary Wronskian.
pub fn find_eigenvalue<T: Real>(
    spec: &ProblemSpec<T>,
    guess: Complex<T>,
    cfg: &ShootingConfig<T>,
) -> Result<EigenvalueRecord<T>> {
    cfg.validate()?;
    let spacing = level_spacing(spec, guess);
    let dirs = ray_directions(spec);
    // one contour per solve keeps the Wronskian analytic in lambda; it is
    // reselected at the root if the iterates wandered off
    let solve_near = |seed: Complex<T>, at: Complex<T>| -> Result<Root<T>> {
        let c = contour(spec, Complex::new(at.norm(), T::zero()), cfg)?;
        let eval = |lambda: Complex<T>| wronskian_field(&SpecField { spec, lambda }, dirs, c, cfg);
        solve(eval, seed, spacing, cfg)
    };
    let mut root = solve_near(guess, guess)?;
    if (root.x - guess).norm() > spacing {
        let again = solve_near(root.x, root.x)?;
        root = Root { iterations: root.iterations + again.iterations, ..again };
    }
    if !(root.residual.norm() <= cfg.residual_tol) {
        return Err(Error::NoConvergence {
            iterations: root.iterations,
            last_re: root.x.re.to_f64().unwrap_or(f64::NAN),
            last_im: root.x.im.to_f64().unwrap_or(f64::NAN),
            trace: vec![],
        });
    }
    Ok(EigenvalueRecord {
        n: None,
        lambda: root.x,
        wronskian_residual: root.residual,
        iterations: root.iterations,
        method: Method::Shooting,
    })
}

/// Follows the `n`-th eigenvalue from `a = 0` (seeded at `lambda_(n,0)`) to
/// the coefficients of `spec` along `t a`, `t` in `[0, 1]`.
pub fn find_eigenvalue_homotopy<T: Real>(
    spec: &ProblemSpec<T>,
    n: usize,
    cfg: &ShootingConfig<T>,
) -> Result<EigenvalueRecord<T>> {
    let scaled = |t: T| spec.with_coeffs(spec.coeffs().iter().map(|&a| a * t).collect());
    let zero = scaled(T::zero())?;
    let mut rec = find_eigenvalue(&zero, Complex::new(lambda_n0(spec, n), T::zero()), cfg)?;
    if spec.coeffs().iter().all(|a| a.is_zero()) {
        return Ok(rec);
    }
    let mut t = T::zero();
    let mut dt = lit::<T>(0.125);
    let min_dt = lit::<T>(1.0 / 1024.0);
    let mut iterations = rec.iterations;
    while t < T::one() {
        let t_next = (t + dt).min(T::one());
        let step_spec = scaled(t_next)?;
        let spacing = level_spacing(spec, rec.lambda);
        match find_eigenvalue(&step_spec, rec.lambda, cfg) {
            Ok(next) if (next.lambda - rec.lambda).norm() <= spacing * lit(0.5) => {
                iterations += next.iterations;
                rec = next;
                t = t_next;
                dt = (dt * lit(2.0)).min(lit(0.25));
            }
            Ok(_) | Err(_) if dt > min_dt => dt = dt * lit(0.5),
            Ok(_) => {
                return Err(Error::NoConvergence {
                    iterations,
                    last_re: rec.lambda.re.to_f64().unwrap_or(f64::NAN),
                    last_im: rec.lambda.im.to_f64().unwrap_or(f64::NAN),
                    trace: vec![],
                })
            }
            Err(e) => return Err(e),
        }
    }
    rec.iterations = iterations;
    Ok(rec)
}

#[derive(Debug)]
pub struct ScanResult<T> {
    /// Sorted by `|lambda|`, labelled by rank starting at `n_min`.
    pub records: Vec<EigenvalueRecord<T>>,
    /// Seed indices that produced no usable root.
    pub failures: Vec<(usize, Error)>,
}

fn is_dup<T: Real>(a: Complex<T>, b: Complex<T>) -> bool {
    (a - b).norm() <= lit::<T>(1e-6) * a.norm().max(b.norm())
}

/// Shoots for eigenvalues `n_min..=n_max` seeded by the asymptotic expansion,
/// falling back to continuation from `a = 0` for seeds that collide.
pub fn scan_spectrum<T: Real>(
    spec: &ProblemSpec<T>,
    n_min: usize,
    n_max: usize,
    cfg: &ShootingConfig<T>,
) -> Result<ScanResult<T>> {
    if n_max < n_min {
        return Err(Error::Domain { func: "scan_spectrum", detail: format!("n_max = {n_max} < n_min = {n_min}") });
    }
    cfg.validate()?;
    let model = AsymptoticModel::new(spec)?;
    let mut found: Vec<(usize, Result<EigenvalueRecord<T>>)> =
        (n_min..=n_max).into_par_iter().map(|n| (n, find_eigenvalue(spec, model.asym_eigenvalue(n), cfg))).collect();

    let collides = |found: &[(usize, Result<EigenvalueRecord<T>>)], i: usize| {
        let Ok(r) = &found[i].1 else { return true };
        found.iter().enumerate().any(|(j, (_, o))| j != i && matches!(o, Ok(s) if is_dup(s.lambda, r.lambda)))
    };
    let retry: Vec<usize> = (0..found.len()).filter(|&i| collides(&found, i)).collect();
    // continuation only differs from direct shooting when a is nonzero
    if !retry.is_empty() && spec.coeffs().iter().any(|a| !a.is_zero()) {
        let redone: Vec<(usize, Result<EigenvalueRecord<T>>)> = retry
            .par_iter()
            .map(|&i| {
                let n = found[i].0;
                (i, find_eigenvalue_homotopy(spec, n, cfg))
            })
            .collect();
        for (i, r) in redone {
            if r.is_ok() || found[i].1.is_err() {
                found[i].1 = r;
            }
        }
    }

    let mut records: Vec<EigenvalueRecord<T>> = Vec::new();
    let mut failures = Vec::new();
    for (n, r) in found {
        match r {
            Ok(rec) if records.iter().any(|s: &EigenvalueRecord<T>| is_dup(s.lambda, rec.lambda)) => failures.push((
                n,
                Error::NoConvergence {
                    iterations: rec.iterations,
                    last_re: rec.lambda.re.to_f64().unwrap_or(f64::NAN),
                    last_im: rec.lambda.im.to_f64().unwrap_or(f64::NAN),
                    trace: vec![],
                },
            )),
            Ok(rec) => records.push(rec),
            Err(e) => failures.push((n, e)),
        }
    }
    records.sort_by(|a, b| a.lambda.norm().partial_cmp(&b.lambda.norm()).unwrap_or(std::cmp::Ordering::Equal));
    for (k, r) in records.iter_mut().enumerate() {
        r.n = Some(n_min + k);
    }
    Ok(ScanResult { records, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn cfg() -> ShootingConfig<f64> {
        ShootingConfig { radius_factor: 3.0, ..Default::default() }
    }

    #[test]
    fn ray_angles() {
        let s = ProblemSpec::<f64>::zero(3, 1).unwrap();
        let (l, r) = boundary_rays(&s);
        let pi = std::f64::consts::PI;
        assert!((l - (-pi / 2.0 - 2.0 * pi / 5.0)).abs() < 1e-15);
        assert!((r - (-pi / 2.0 + 2.0 * pi / 5.0)).abs() < 1e-15);
        let s = ProblemSpec::<f64>::zero(4, 2).unwrap();
        let (l, r) = boundary_rays(&s);
        assert!((l + pi).abs() < 1e-15 && r.abs() < 1e-15);
        for m in 3..9 {
            for ell in 1..m {
                let (l, r) = boundary_rays(&ProblemSpec::<f64>::zero(m, ell).unwrap());
                assert!((l + r + pi).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn potential_examples() {
        let z = C::new(1.3, 0.0);
        let v3 = potential(&ProblemSpec::zero(3, 1).unwrap(), z);
        assert!((v3 - C::new(0.0, 1.3f64.powi(3))).norm() < 1e-14);
        let v4 = potential(&ProblemSpec::zero(4, 2).unwrap(), z);
        assert!((v4 - C::new(1.3f64.powi(4), 0.0)).norm() < 1e-13);
    }

    #[test]
    fn potential_derivative_matches_difference() {
        let s = ProblemSpec::new(5, 2, vec![C::new(0.3, -0.1), C::new(0.2, 0.4), C::new(-0.5, 0.0), C::new(0.1, 0.7)])
            .unwrap();
        let z = C::new(0.7, -1.1);
        let h = 1e-6;
        let (_, dv) = potential_and_derivative(&s, z);
        let fd = (potential(&s, z + h) - potential(&s, z - h)) / (2.0 * h);
        assert!((dv - fd).norm() < 1e-7 * dv.norm());
    }

    #[test]
    fn csqrt_is_principal_and_mirror_exact() {
        for &(re, im) in &[(1.0, 2.0), (-3.0, 0.5), (-3.0, -0.5), (0.0, -1.0), (2.0, 0.0)] {
            let x = C::new(re, im);
            let s = csqrt(x);
            assert!((s * s - x).norm() < 1e-14 * x.norm());
            assert!(s.re >= 0.0);
            assert_eq!(csqrt(x.conj()), s.conj());
        }
    }

    #[test]
    fn quartic_wkb_formula() {
        let s = ProblemSpec::zero(4, 2).unwrap();
        let (r, lambda) = (5.0, 1.5);
        let st = wkb_init(&s, C::new(lambda, 0.0), 0.0, r).unwrap();
        let q = r.powi(4) - lambda;
        let want = -q.sqrt() - r.powi(3) / q;
        assert!((st.du - want).norm() < 1e-12 * want.abs());
    }

    #[test]
    fn wkb_branch_decays_outward() {
        for m in 3..8 {
            for ell in 1..m {
                let s = ProblemSpec::<f64>::zero(m, ell).unwrap();
                let (l, r) = boundary_rays(&s);
                for th in [l, r] {
                    let st = wkb_init(&s, C::new(2.0, 1.0), th, 6.0).unwrap();
                    assert!((st.du / st.u).re < 0.0);
                }
            }
        }
    }

    #[test]
    fn dominance_failure_is_reported() {
        let s = ProblemSpec::<f64>::zero(4, 2).unwrap();
        assert!(matches!(wkb_init(&s, C::new(100.0, 0.0), 0.0, 2.0), Err(Error::Dominance { .. })));
    }

    #[test]
    fn scale_invariance_of_ray_state() {
        let s = ProblemSpec::zero(4, 2).unwrap();
        let lambda = C::new(3.0, 0.2);
        let init = wkb_init(&s, lambda, 0.0, 6.0).unwrap();
        let a = integrate_ray_from(&s, lambda, 0.0, 6.0, init, &cfg()).unwrap();
        let b = integrate_ray_from(&s, lambda, 0.0, 6.0, init.scaled(C::new(1e3, 0.0)), &cfg()).unwrap();
        let ra = a.u / a.du;
        let rb = b.u / b.du;
        assert!((ra - rb).norm() < 1e-12 * ra.norm());
    }

    #[test]
    fn quartic_ground_state() {
        let s = ProblemSpec::zero(4, 2).unwrap();
        let w = wronskian(&s, C::new(1.0603620904, 0.0), &cfg()).unwrap();
        assert!(w.norm() < 1e-6, "{w}");
        let rec = find_eigenvalue(&s, C::new(1.0, 0.0), &cfg()).unwrap();
        assert!((rec.lambda - 1.0603620904).norm() < 1e-7, "{:?}", rec);
        let again = find_eigenvalue(&s, rec.lambda, &cfg()).unwrap();
        assert!((again.lambda - rec.lambda).norm() <= 1e-9 * rec.lambda.norm());
    }

    #[test]
    fn cubic_ground_state_is_real() {
        let s = ProblemSpec::zero(3, 1).unwrap();
        let rec = find_eigenvalue(&s, C::new(lambda_n0(&s, 0), 0.0), &cfg()).unwrap();
        assert!((rec.lambda.re - 1.1562670719881).abs() < 1e-8, "{:?}", rec);
        assert!(rec.lambda.im.abs() < 1e-10);
    }

    #[test]
    fn wronskian_pt_symmetry() {
        let s = ProblemSpec::real(3, 1, &[0.2, -0.3]).unwrap();
        let lambda = C::new(4.0, 1.5);
        let c = contour(&s, C::new(10.0, 0.0), &cfg()).unwrap();
        let full = |l: C| {
            let w = wronskian_on(&s, l, c, &cfg()).unwrap();
            w.mantissa * w.log_scale.exp()
        };
        let (w1, w2) = (full(lambda), full(lambda.conj()));
        assert!((w1 - w2.conj()).norm() < 1e-8 * w1.norm(), "{w1} {w2}");
        let real = full(C::new(4.0, 0.0));
        assert!(real.im.abs() < 1e-8 * real.norm(), "{real}");
    }

    #[test]
    fn quartic_sign_changes_bracket_levels() {
        let s = ProblemSpec::zero(4, 2).unwrap();
        let c = contour(&s, C::new(8.0, 0.0), &cfg()).unwrap();
        let w = |x: f64| wronskian_on(&s, C::new(x, 0.0), c, &cfg()).unwrap().normalized.re;
        for (lo, hi) in [(0.9, 1.2), (3.6, 3.9), (7.3, 7.6)] {
            assert!(w(lo) * w(hi) < 0.0, "no sign change in [{lo}, {hi}]");
        }
    }

    #[test]
    fn rotated_odd_equation_has_same_spectrum() {
        // v(z) = u(-iz) solves -v'' + [z^m + P(z) + lambda] v = 0 for odd ell,
        // decaying on arg z = -+(ell+1) pi/(m+2)
        struct Rotated<'a> {
            spec: &'a ProblemSpec<f64>,
            lambda: C,
        }
        impl Field<f64> for Rotated<'_> {
            fn q(&self, z: C) -> (C, C) {
                let (mut p, mut dp) = (C::new(1.0, 0.0), C::new(0.0, 0.0));
                for &a in self.spec.coeffs() {
                    dp = dp * z + p;
                    p = p * z + a;
                }
                (p * z + self.lambda, p + dp * z)
            }
            fn degree(&self) -> usize {
                self.spec.m()
            }
            fn coeff_bound(&self, r: f64) -> f64 {
                SpecField { spec: self.spec, lambda: self.lambda }.coeff_bound(r)
            }
        }
        let s = ProblemSpec::real(3, 1, &[0.3, -0.2]).unwrap();
        let rec = find_eigenvalue(&s, C::new(lambda_n0(&s, 1), 0.0), &cfg()).unwrap();
        let ang = 2.0 * std::f64::consts::PI / 5.0;
        let c = contour(&s, C::new(lambda_n0(&s, 4), 0.0), &cfg()).unwrap();
        let dirs = (C::new(ang.cos(), -ang.sin()), C::new(ang.cos(), ang.sin()));
        let eval = |lambda: C| wronskian_field(&Rotated { spec: &s, lambda }, dirs, c, &cfg());
        let root = solve(eval, rec.lambda * 1.01, level_spacing(&s, rec.lambda), &cfg()).unwrap().x;
        assert!((root - rec.lambda).norm() < 1e-8 * rec.lambda.norm(), "{root} vs {}", rec.lambda);
    }

    #[test]
    fn rotated_even_equation_has_same_spectrum() {
        // for even ell, y(z) = v(omega^(-1/2) z) solves
        // -y'' + [z^m + omega^(-1) P(omega^(-1/2) z) + omega^(-1) lambda] y = 0
        // decaying in the sectors S_((ell+2)/2) and S_(-ell/2)
        struct Rotated<'a> {
            spec: &'a ProblemSpec<f64>,
            lambda: C,
            wm1: C,
            wmh: C,
        }
        impl Field<f64> for Rotated<'_> {
            fn q(&self, z: C) -> (C, C) {
                let zz = self.wmh * z;
                let (mut p, mut dp) = (C::new(0.0, 0.0), C::new(0.0, 0.0));
                for &a in self.spec.coeffs() {
                    dp = dp * zz + p;
                    p = p * zz + a;
                }
                let (pz, dpz) = (p * zz, p + dp * zz);
                let m = self.spec.m() as i32;
                (
                    z.powi(m) + self.wm1 * pz + self.wm1 * self.lambda,
                    z.powi(m - 1) * m as f64 + self.wm1 * self.wmh * dpz,
                )
            }
            fn degree(&self) -> usize {
                self.spec.m()
            }
            fn coeff_bound(&self, r: f64) -> f64 {
                SpecField { spec: self.spec, lambda: self.lambda }.coeff_bound(r)
            }
        }
        let s = ProblemSpec::real(4, 2, &[0.25, -0.3, 0.15]).unwrap();
        let m = 4.0;
        let omega_arg = 2.0 * std::f64::consts::PI / (m + 2.0);
        let wm1 = C::from_polar(1.0, -omega_arg);
        let wmh = C::from_polar(1.0, -omega_arg / 2.0);
        let rec = find_eigenvalue(&s, C::new(lambda_n0(&s, 1), 0.0), &cfg()).unwrap();
        let center = |k: f64| C::from_polar(1.0, 2.0 * k * std::f64::consts::PI / (m + 2.0));
        let dirs = (center(2.0), center(-1.0));
        let c = contour(&s, C::new(lambda_n0(&s, 4), 0.0), &cfg()).unwrap();
        let eval = |lambda: C| wronskian_field(&Rotated { spec: &s, lambda, wm1, wmh }, dirs, c, &cfg());
        let root = solve(eval, rec.lambda * 1.01, level_spacing(&s, rec.lambda), &cfg()).unwrap().x;
        assert!((root - rec.lambda).norm() < 1e-8 * rec.lambda.norm(), "{root} vs {}", rec.lambda);
    }

    #[test]
    fn config_validation() {
        assert!(ShootingConfig::<f64>::default().validate().is_ok());
        assert!(ShootingConfig { radius_factor: 1.5, ..ShootingConfig::<f64>::default() }.validate().is_err());
        assert!(ShootingConfig { rtol: 0.0, ..ShootingConfig::<f64>::default() }.validate().is_err());
    }
}
