//! Closed-form solutions of `Δv + nKv = −1` on geodesic balls, together with
//! exact one-dimensional checks of the pointwise identities behind the
//! rigidity argument.
//!
//! Every derivative here is analytic. This module is the oracle the planar
//! solver is measured against, so nothing in it uses finite differences.

use crate::error::{Error, Result};
use crate::geometry::{profile_unchecked, Curvature, Profile, SpaceForm, DEFAULT_CAP_MARGIN};
use crate::quadrature::CompositeGauss;

/// Torsion-type solution on the geodesic ball `B_R` centred at the pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSolution {
    form: SpaceForm,
    radius: f64,
    at_radius: Profile,
}

/// Value and first three radial derivatives of a radial function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialJet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl RadialSolution {
    pub fn new(form: SpaceForm, radius: f64) -> Result<Self> {
        Self::with_cap_margin(form, radius, DEFAULT_CAP_MARGIN)
    }

    pub fn with_cap_margin(form: SpaceForm, radius: f64, margin: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        form.curvature.check_cap(radius, margin).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(Self { form, radius, at_radius: profile_unchecked(form.curvature, radius) })
    }

    pub fn form(&self) -> SpaceForm {
        self.form
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn scale(&self) -> f64 {
        self.form.n() * self.at_radius.dh
    }

    /// The boundary gradient `c = h(R) / (n ḣ(R))`.
    pub fn c(&self) -> f64 {
        self.at_radius.h / self.scale()
    }

    /// Maximum value `v(0)`.
    pub fn center_value(&self) -> f64 {
        self.value(0.0)
    }

    pub fn value(&self, r: f64) -> f64 {
        let p = profile_unchecked(self.form.curvature, r);
        (self.at_radius.integral - p.integral) / self.scale()
    }

    pub fn derivative(&self, r: f64) -> f64 {
        -profile_unchecked(self.form.curvature, r).h / self.scale()
    }

    pub fn jet(&self, r: f64) -> RadialJet {
        let p = profile_unchecked(self.form.curvature, r);
        let s = self.scale();
        RadialJet { v: (self.at_radius.integral - p.integral) / s, d1: -p.h / s, d2: -p.dh / s, d3: -p.ddh / s }
    }

    /// `P = v′² + (2/n) v + K v²` at radius `r`.
    pub fn p_function(&self, r: f64) -> f64 {
        let j = self.jet(r);
        j.d1 * j.d1 + 2.0 / self.form.n() * j.v + self.form.k() * j.v * j.v
    }

    /// Sample radii `R·i/samples`, `i = 1..=samples`; the pole is skipped.
    fn sample_radii(&self, samples: usize) -> impl Iterator<Item = f64> + '_ {
        let samples = samples.max(1);
        (1..=samples).map(move |i| self.radius * i as f64 / samples as f64)
    }
}

pub fn radial_solution(k: Curvature, n: usize, radius: f64) -> Result<RadialSolution> {
    RadialSolution::new(SpaceForm::new(k, n)?, radius)
}

/// Radial Laplacian `u″ + (n−1)(ḣ/h) u′`.
fn radial_laplacian(n: f64, p: &Profile, d1: f64, d2: f64) -> f64 {
    d2 + (n - 1.0) * p.dh / p.h * d1
}

/// Max of `|v″ + (n−1)(ḣ/h)v′ + nKv + 1|` over the sample radii.
pub fn radial_pde_residual(sol: &RadialSolution, samples: usize) -> f64 {
    let (n, k) = (sol.form.n(), sol.form.k());
    sol.sample_radii(samples)
        .map(|r| {
            let p = profile_unchecked(sol.form.curvature, r);
            let j = sol.jet(r);
            (radial_laplacian(n, &p, j.d1, j.d2) + n * k * j.v + 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Max deviation of the radial and tangential Hessian eigenvalues from `−(1/n + Kv)`.
pub fn hessian_proportionality_residual(sol: &RadialSolution, samples: usize) -> f64 {
    let (n, k) = (sol.form.n(), sol.form.k());
    sol.sample_radii(samples)
        .map(|r| {
            let p = profile_unchecked(sol.form.curvature, r);
            let j = sol.jet(r);
            let target = 1.0 / n + k * j.v;
            let radial = (j.d2 + target).abs();
            let tangential = (p.dh / p.h * j.d1 + target).abs();
            radial.max(tangential)
        })
        .fold(0.0, f64::max)
}

/// Max of `|P(v) − c²|` over the sample radii (pole included).
pub fn p_constancy_residual(sol: &RadialSolution, samples: usize) -> f64 {
    let c2 = sol.c() * sol.c();
    std::iter::once(0.0).chain(sol.sample_radii(samples)).map(|r| (sol.p_function(r) - c2).abs()).fold(0.0, f64::max)
}

/// Residuals of the three divergence identities, each `|lhs − rhs|`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IdentityResiduals {
    /// `½Δ|∇v|² = |∇²v|² + ∇(Δv)·∇v + (n−1)K|∇v|²`
    pub bochner: f64,
    /// `div(ḣ v ∇v) = ḣ|∇v|² + ḣ v Δv + ḧ v v_r`
    pub weighted_divergence: f64,
    /// `div(½|∇v|² X − h v_r ∇v) = ((n−2)/2) ḣ|∇v|² − h v_r Δv` with `X = h∂_r`
    pub pohozaev: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.bochner.max(self.weighted_divergence).max(self.pohozaev)
    }

    fn merge(self, other: Self) -> Self {
        Self {
            bochner: self.bochner.max(other.bochner),
            weighted_divergence: self.weighted_divergence.max(other.weighted_divergence),
            pohozaev: self.pohozaev.max(other.pohozaev),
        }
    }
}

/// Evaluates the three identities for an arbitrary radial function at one radius.
///
/// Uses `div(W ∂_r) = W′ + (n−1)(ḣ/h) W` for radial vector fields; valid for `r > 0`.
pub fn identity_residuals_at(form: SpaceForm, r: f64, jet: RadialJet) -> IdentityResiduals {
    let n = form.n();
    let k = form.k();
    let p = profile_unchecked(form.curvature, r);
    let ratio = p.dh / p.h;
    let div = |w: f64, dw: f64| dw + (n - 1.0) * ratio * w;
    let RadialJet { v, d1, d2, d3 } = jet;

    let lap = radial_laplacian(n, &p, d1, d2);
    let dlap = d3 + (n - 1.0) * ((p.ddh / p.h - ratio * ratio) * d1 + ratio * d2);

    // w = v′²/2
    let half_lap_grad_sq = div(d1 * d2, d2 * d2 + d1 * d3);
    let hess_sq = d2 * d2 + (n - 1.0) * (ratio * d1).powi(2);
    let bochner = half_lap_grad_sq - (hess_sq + dlap * d1 + (n - 1.0) * k * d1 * d1);

    // W = ḣ v v′
    let w = p.dh * v * d1;
    let dw = p.ddh * v * d1 + p.dh * d1 * d1 + p.dh * v * d2;
    let weighted = div(w, dw) - (p.dh * d1 * d1 + p.dh * v * lap + p.ddh * v * d1);

    // W = ½v′² h − h v′² = −½ h v′²
    let w = -0.5 * p.h * d1 * d1;
    let dw = -0.5 * p.dh * d1 * d1 - p.h * d1 * d2;
    let pohozaev = div(w, dw) - ((n - 2.0) / 2.0 * p.dh * d1 * d1 - p.h * d1 * lap);

    IdentityResiduals { bochner: bochner.abs(), weighted_divergence: weighted.abs(), pohozaev: pohozaev.abs() }
}

/// Max identity residuals over sample radii in `[R/samples, R]`.
pub fn identity_suite_radial(sol: &RadialSolution, samples: usize) -> IdentityResiduals {
    sol.sample_radii(samples)
        .map(|r| identity_residuals_at(sol.form, r, sol.jet(r)))
        .fold(IdentityResiduals::default(), IdentityResiduals::merge)
}

/// Numerical trajectory of `f̈ = −1/n − K f`, `f(0) = a`, `ḟ(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObataTrajectory {
    pub form: SpaceForm,
    pub initial_value: f64,
    pub step: f64,
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
}

/// Closed-form solution `a ḣ(s) − H(s)/n` of the Obata ODE.
pub fn obata_closed_form(form: SpaceForm, a: f64, s: f64) -> f64 {
    let p = profile_unchecked(form.curvature, s);
    a * p.dh - p.integral / form.n()
}

/// Integrates the Obata ODE with classical RK4 on `[0, s_max]`.
///
/// The step is shrunk slightly, if needed, so that it divides `s_max`.
pub fn obata_ode_solve(form: SpaceForm, a: f64, s_max: f64, step: f64) -> Result<ObataTrajectory> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("initial maximum must be positive, got {a}")));
    }
    if !(step > 0.0) || !(s_max >= 0.0) {
        return Err(Error::Domain("step must be positive and s_max non-negative".into()));
    }
    let steps = (s_max / step).ceil().max(0.0) as usize;
    let h = if steps == 0 { step } else { s_max / steps as f64 };
    let (n, k) = (form.n(), form.k());
    let rhs = |y: [f64; 2]| [y[1], -1.0 / n - k * y[0]];

    let mut s = Vec::with_capacity(steps + 1);
    let mut f = Vec::with_capacity(steps + 1);
    let mut df = Vec::with_capacity(steps + 1);
    let mut y = [a, 0.0];
    s.push(0.0);
    f.push(y[0]);
    df.push(y[1]);
    for i in 0..steps {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
        for c in 0..2 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        s.push(h * (i + 1) as f64);
        f.push(y[0]);
        df.push(y[1]);
    }
    Ok(ObataTrajectory { form, initial_value: a, step: h, s, f, df })
}

impl ObataTrajectory {
    /// Sup-norm distance to the closed form over the grid.
    pub fn sup_error(&self) -> f64 {
        self.s
            .iter()
            .zip(&self.f)
            .map(|(&s, &f)| (f - obata_closed_form(self.form, self.initial_value, s)).abs())
            .fold(0.0, f64::max)
    }

    /// Max ODE residual at interior grid points using second differences of the samples.
    pub fn ode_residual(&self) -> f64 {
        let h2 = self.step * self.step;
        let (n, k) = (self.form.n(), self.form.k());
        self.f.windows(3).map(|w| ((w[2] - 2.0 * w[1] + w[0]) / h2 + 1.0 / n + k * w[1]).abs()).fold(0.0, f64::max)
    }

    pub fn final_value(&self) -> f64 {
        *self.f.last().expect("trajectory has at least one sample")
    }
}

/// Observed order from sup errors at `step` and `step/2`.
pub fn obata_convergence_order(form: SpaceForm, a: f64, s_max: f64, step: f64) -> Result<f64> {
    let coarse = obata_ode_solve(form, a, s_max, step)?.sup_error();
    let fine = obata_ode_solve(form, a, s_max, 0.5 * step)?.sup_error();
    Ok((coarse / fine).log2())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HemisphereEigenCheck {
    /// Max of `|φ″ + (n−1)(cot r) φ′ + nφ|` for `φ = cos r` on the open interval.
    pub residual: f64,
    /// `φ > 0` at every sample of `[0, π/2)`.
    pub positive: bool,
    /// `φ(π/2)`.
    pub boundary_value: f64,
}

/// Checks that `cos r` is a positive Dirichlet eigenfunction with eigenvalue `n` on the hemisphere.
pub fn hemisphere_eigen_residual(n: usize, samples: usize) -> HemisphereEigenCheck {
    use std::f64::consts::FRAC_PI_2;
    let nf = n as f64;
    let samples = samples.max(1);
    let mut residual: f64 = 0.0;
    let mut positive = 1.0f64.cos() > 0.0 && 0.0f64.cos() > 0.0;
    for i in 1..=samples {
        let r = FRAC_PI_2 * i as f64 / (samples + 1) as f64;
        let (s, c) = r.sin_cos();
        let (phi, d1, d2) = (c, -s, -c);
        residual = residual.max((d2 + (nf - 1.0) * c / s * d1 + nf * phi).abs());
        positive &= phi > 0.0;
    }
    HemisphereEigenCheck { residual, positive, boundary_value: FRAC_PI_2.cos() }
}

/// Both sides of `c² ∫ḣ = (1 + 2/n)(∫ḣ v − K ∫ h v v_r)` over a ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PohozaevBalance {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_residual: f64,
}

impl PohozaevBalance {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs());
        let relative_residual = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
        Self { lhs, rhs, relative_residual }
    }
}

/// Evaluates the integral identity on the ball with the volume element `|S^{n-1}| hⁿ⁻¹ dr`.
pub fn pohozaev_ball_check(sol: &RadialSolution, quadrature_points: usize) -> Result<PohozaevBalance> {
    if quadrature_points < 16 {
        return Err(Error::Domain(format!("at least 16 quadrature points are required, got {quadrature_points}")));
    }
    let form = sol.form;
    let (n, k) = (form.n(), form.k());
    let q = CompositeGauss::with_points(quadrature_points);
    let area = form.sphere_area();
    let measure = |r: f64| area * profile_unchecked(form.curvature, r).h.powi(form.dim as i32 - 1);
    let radius = sol.radius;

    let i1 = q.integrate(0.0, radius, |r| profile_unchecked(form.curvature, r).dh * measure(r));
    let i2 = q.integrate(0.0, radius, |r| profile_unchecked(form.curvature, r).dh * sol.value(r) * measure(r));
    let i3 = q.integrate(0.0, radius, |r| {
        let j = sol.jet(r);
        profile_unchecked(form.curvature, r).h * j.v * j.d1 * measure(r)
    });
    let c = sol.c();
    Ok(PohozaevBalance::new(c * c * i1, (1.0 + 2.0 / n) * (i2 - k * i3)))
}
