//! Two-excitation amplitude picture of the weakly driven system.
//!
//! The state is truncated to |q, r⟩ with q + r ≤ 2 and evolved under the
//! non-Hermitian Hamiltonian H₂. In the weak-drive limit the amplitudes are
//! ordered |P₀₀| ≈ 1 ≫ |P₁₀|, |P₀₁| ≫ |P₁₁|, |P₂₀|, |P₀₂|, and the steady
//! state follows order by order with P₀₀ pinned to 1.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::operators::{solve_dense, Mode};
use crate::scalar::{imag_unit, re, Cplx, Real};

/// Floor below which a denominator is treated as singular (κ units).
pub const DEGENERACY_FLOOR: f64 = 1e-30;

/// Amplitudes P_qr of the bare states |q, r⟩ with q + r ≤ 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeState<T> {
    pub p00: Cplx<T>,
    pub p10: Cplx<T>,
    pub p01: Cplx<T>,
    pub p11: Cplx<T>,
    pub p20: Cplx<T>,
    pub p02: Cplx<T>,
}

impl<T: Real> AmplitudeState<T> {
    pub fn zero() -> Self {
        Self::from_array([Cplx::new(T::zero(), T::zero()); 6])
    }

    pub fn vacuum() -> Self {
        Self {
            p00: re(T::one()),
            ..Self::zero()
        }
    }

    /// Order: `[p00, p10, p01, p11, p20, p02]`.
    pub fn to_array(&self) -> [Cplx<T>; 6] {
        [self.p00, self.p10, self.p01, self.p11, self.p20, self.p02]
    }

    pub fn from_array(a: [Cplx<T>; 6]) -> Self {
        Self {
            p00: a[0],
            p10: a[1],
            p01: a[2],
            p11: a[3],
            p20: a[4],
            p02: a[5],
        }
    }

    /// Σ |P_qr|².
    pub fn norm_sqr(&self) -> T {
        self.to_array().iter().map(|p| p.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.to_array()
            .iter()
            .zip(other.to_array().iter())
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }

    /// Equal-time correlation `2|P₂|²/|P₁|⁴` of one mode.
    pub fn g2(&self, mode: Mode) -> Result<T> {
        let (single, pair) = match mode {
            Mode::Magnon => (self.p10, self.p20),
            Mode::Cavity => (self.p01, self.p02),
        };
        let denom = single.norm_sqr() * single.norm_sqr();
        if !(denom.as_f64() > DEGENERACY_FLOOR) {
            return Err(Error::Unpopulated {
                mode: mode.label(),
                occupation: single.norm_sqr().as_f64(),
            });
        }
        Ok(T::lit(2.0) * pair.norm_sqr() / denom)
    }

    fn map2(self, other: Self, f: impl Fn(Cplx<T>, Cplx<T>) -> Cplx<T>) -> Self {
        let (a, b) = (self.to_array(), other.to_array());
        Self::from_array(std::array::from_fn(|i| f(a[i], b[i])))
    }
}

impl<T: Real> Add for AmplitudeState<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.map2(rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for AmplitudeState<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.map2(rhs, |a, b| a - b)
    }
}

impl<T: Real> Mul<Cplx<T>> for AmplitudeState<T> {
    type Output = Self;
    fn mul(self, rhs: Cplx<T>) -> Self {
        Self::from_array(self.to_array().map(|a| a * rhs))
    }
}

/// Generator `M` of `i dP/dt = M P` on `[p00, p10, p01, p11, p20, p02]`.
fn generator<T: Real>(params: &SystemParams<T>) -> Result<[[Cplx<T>; 6]; 6]> {
    let mu = re(params.kerr_strength()?);
    let s2 = T::lit(2.0).sqrt();
    let e = re(params.drive);
    let g = re(params.g_mc);
    let dm = params.delta_m_prime();
    let dc = params.delta_c_prime();
    let i = imag_unit::<T>();
    let squeeze_up = i * params.lambda * s2 * crate::operators::phase(params.theta);
    let two = re(T::lit(2.0));

    let mut m = [[Cplx::new(T::zero(), T::zero()); 6]; 6];
    const P00: usize = 0;
    const P10: usize = 1;
    const P01: usize = 2;
    const P11: usize = 3;
    const P20: usize = 4;
    const P02: usize = 5;

    m[P00][P10] = e;
    m[P00][P20] = squeeze_up.conj();

    m[P10][P00] = e;
    m[P10][P10] = dm - mu;
    m[P10][P01] = g;
    m[P10][P20] = e * s2;

    m[P01][P10] = g;
    m[P01][P01] = dc;
    m[P01][P11] = e;

    m[P11][P20] = g * s2;
    m[P11][P01] = e;
    m[P11][P11] = dc + dm - mu;
    m[P11][P02] = g * s2;

    m[P02][P11] = g * s2;
    m[P02][P02] = two * dc;

    m[P20][P10] = e * s2;
    m[P20][P20] = two * (dm - two * mu);
    m[P20][P11] = g * s2;
    m[P20][P00] = squeeze_up;
    Ok(m)
}

/// Time derivative dP/dt of the six amplitudes.
///
/// The squeezing couples P₀₀ and P₂₀ through `−i√2λe^{−iθ}` and
/// `i√2λe^{iθ}` respectively.
pub fn amplitude_rhs<T: Real>(state: &AmplitudeState<T>, params: &SystemParams<T>) -> Result<AmplitudeState<T>> {
    params.validate()?;
    let m = generator(params)?;
    Ok(apply_rhs(&m, state))
}

fn apply_rhs<T: Real>(m: &[[Cplx<T>; 6]; 6], state: &AmplitudeState<T>) -> AmplitudeState<T> {
    let p = state.to_array();
    let minus_i = -imag_unit::<T>();
    AmplitudeState::from_array(std::array::from_fn(|row| {
        minus_i * m[row].iter().zip(&p).map(|(a, b)| *a * *b).sum::<Cplx<T>>()
    }))
}

fn rk4_step<T: Real>(m: &[[Cplx<T>; 6]; 6], y: &AmplitudeState<T>, h: T) -> AmplitudeState<T> {
    let half = re(h * T::lit(0.5));
    let k1 = apply_rhs(m, y);
    let k2 = apply_rhs(m, &(*y + k1 * half));
    let k3 = apply_rhs(m, &(*y + k2 * half));
    let k4 = apply_rhs(m, &(*y + k3 * re(h)));
    let sixth = re(h / T::lit(6.0));
    *y + (k1 + k2 * re(T::lit(2.0)) + k3 * re(T::lit(2.0)) + k4) * sixth
}

fn rk4_span<T: Real>(m: &[[Cplx<T>; 6]; 6], y: AmplitudeState<T>, span: T, steps: usize) -> AmplitudeState<T> {
    let h = span / T::from_count(steps);
    (0..steps).fold(y, |acc, _| rk4_step(m, &acc, h))
}

/// Relative tolerance of the halved-step comparison.
const RICHARDSON_TOL: f64 = 1e-8;

/// Integrates the amplitude equations over `t_grid` (must start at 0).
///
/// Each output interval is stepped with classical RK4 at
/// `dt ≤ 0.01 / max|M_ij|` and repeated at half the step; the interval is
/// refined until both agree to 1e−8 relative.
pub fn evolve_amplitudes<T: Real>(
    params: &SystemParams<T>,
    initial: AmplitudeState<T>,
    t_grid: &[T],
) -> Result<Vec<AmplitudeState<T>>> {
    params.validate()?;
    check_grid(t_grid)?;
    let m = generator(params)?;
    let scale = m
        .iter()
        .flatten()
        .fold(T::zero(), |acc, x| acc.max(x.norm()))
        .max(params.kappa_c.max(params.kappa_m));
    let dt = T::lit(0.01) / scale;

    let mut out = Vec::with_capacity(t_grid.len());
    let mut y = initial;
    out.push(y);
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let mut steps = (span / dt).ceil().to_usize().unwrap_or(1).max(1);
        let mut accepted = None;
        for _ in 0..12 {
            let coarse = rk4_span(&m, y, span, steps);
            let fine = rk4_span(&m, y, span, 2 * steps);
            let size = fine.norm_sqr().sqrt().max(T::one());
            if coarse.max_abs_diff(&fine) <= T::lit(RICHARDSON_TOL) * size {
                accepted = Some(fine);
                break;
            }
            steps *= 2;
        }
        y = accepted.ok_or(Error::StepFailure { t: w[0].as_f64() })?;
        out.push(y);
    }
    Ok(out)
}

pub(crate) fn check_grid<T: Real>(t_grid: &[T]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidGrid("empty".into()));
    }
    if t_grid[0] != T::zero() {
        return Err(Error::InvalidGrid("must start at 0".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Intermediate quantities of the closed-form steady state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticIngredients<T> {
    /// Δ' = Δ − iκ/2.
    pub delta_prime: Cplx<T>,
    /// χ = g_mc² + μΔ' − Δ'².
    pub chi: Cplx<T>,
    /// 𝒜 = ℰ²Δ'²(2Δ' − μ) − iλχ(χ − Δ'²).
    pub a_num: Cplx<T>,
    /// ℬ = √2 χ [Δ'(Δ' − 2μ)(2Δ' − μ) − 2g_mc²(Δ' − μ)].
    pub b_den: Cplx<T>,
    /// 𝒞 = g_mc² [2ℰ²(Δ' − μ) + iλχ].
    pub c_num: Cplx<T>,
}

fn nearly_equal<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-12) * (T::one() + a.abs().max(b.abs()))
}

fn check_floor<T: Real>(what: &'static str, z: Cplx<T>) -> Result<()> {
    let magnitude = z.norm().as_f64();
    if magnitude > DEGENERACY_FLOOR {
        Ok(())
    } else {
        Err(Error::Degenerate { what, magnitude })
    }
}

/// Evaluates Δ', χ, 𝒜, ℬ, 𝒞 under Δ_c = Δ_m, κ_c = κ_m, θ = 0.
pub fn analytic_ingredients<T: Real>(params: &SystemParams<T>) -> Result<AnalyticIngredients<T>> {
    params.validate()?;
    if !nearly_equal(params.delta_c, params.delta_m) {
        return Err(Error::SymmetryViolated("delta_c = delta_m"));
    }
    if !nearly_equal(params.kappa_c, params.kappa_m) {
        return Err(Error::SymmetryViolated("kappa_c = kappa_m"));
    }
    if params.theta != T::zero() {
        return Err(Error::SymmetryViolated("theta = 0"));
    }
    let mu = re(params.kerr_strength()?);
    let d = params.delta_m_prime();
    let g2 = re(params.g_mc * params.g_mc);
    let e2 = re(params.drive * params.drive);
    let i = imag_unit::<T>();
    let lam = re(params.lambda);
    let two = re(T::lit(2.0));

    let chi = g2 + mu * d - d * d;
    let a_num = e2 * d * d * (two * d - mu) - i * lam * chi * (chi - d * d);
    let b_den = chi
        * (d * (d - two * mu) * (two * d - mu) - two * g2 * (d - mu))
        * T::lit(2.0).sqrt();
    let c_num = g2 * (two * e2 * (d - mu) + i * lam * chi);
    Ok(AnalyticIngredients {
        delta_prime: d,
        chi,
        a_num,
        b_den,
        c_num,
    })
}

/// Closed-form weak-drive steady state with P₀₀ = 1.
///
/// P₁₀ = ℰΔ'/χ, P₀₁ = −g_mc ℰ/χ, P₂₀ = −𝒜/ℬ, P₀₂ = −𝒞/ℬ; P₁₁ follows from
/// the stationary P₁₁ equation.
pub fn steady_amplitudes_closed<T: Real>(params: &SystemParams<T>) -> Result<AmplitudeState<T>> {
    let ing = analytic_ingredients(params)?;
    check_floor("chi", ing.chi)?;
    check_floor("B", ing.b_den)?;
    let e = re(params.drive);
    let g = re(params.g_mc);
    let mu = re(params.kerr_strength()?);
    let d = ing.delta_prime;
    let s2 = T::lit(2.0).sqrt();

    let p10 = e * d / ing.chi;
    let p01 = -(g * e) / ing.chi;
    let p20 = -ing.a_num / ing.b_den;
    let p02 = -ing.c_num / ing.b_den;
    let p11_coeff = re(T::lit(2.0)) * d - mu;
    check_floor("2 delta' - mu", p11_coeff)?;
    let p11 = -((p20 + p02) * g * s2 + e * p01) / p11_coeff;
    Ok(AmplitudeState {
        p00: re(T::one()),
        p10,
        p01,
        p11,
        p20,
        p02,
    })
}

/// Steady state from a direct linear solve of the stationary amplitude
/// equations with P₀₀ = 1.
///
/// Unknowns `(P₁₀, P₀₁, P₁₁, P₂₀, P₀₂)` satisfy the P₁₀…P₀₂ equations at
/// weak-drive order: the back-action terms √2ℰP₂₀ and ℰP₁₁ in the
/// single-excitation equations are dropped, every other term is kept. Valid
/// for θ ≠ 0 and asymmetric detunings or decay rates.
pub fn steady_amplitudes_linear<T: Real>(params: &SystemParams<T>) -> Result<AmplitudeState<T>> {
    params.validate()?;
    let full = generator(params)?;
    // rows: equations for P10, P01, P11, P20, P02; columns: P10, P01, P11, P20, P02
    const ROWS: [usize; 5] = [1, 2, 3, 4, 5];
    let mut a = Vec::with_capacity(25);
    let mut b = Vec::with_capacity(5);
    for &row in &ROWS {
        for &col in &ROWS {
            let back_action = (row == 1 && col == 4) || (row == 2 && col == 3);
            a.push(if back_action {
                Cplx::new(T::zero(), T::zero())
            } else {
                full[row][col]
            });
        }
        b.push(-full[row][0]);
    }
    let x = solve_dense(a, 5, b)?;
    Ok(AmplitudeState {
        p00: re(T::one()),
        p10: x[0],
        p01: x[1],
        p11: x[2],
        p20: x[3],
        p02: x[4],
    })
}

/// Analytic equal-time correlation g²(0) from the closed-form amplitudes.
pub fn g2_analytic<T: Real>(params: &SystemParams<T>, mode: Mode) -> Result<T> {
    steady_amplitudes_closed(params)?.g2(mode)
}

/// Relative distance between two amplitude states, scaled per component.
pub fn relative_difference<T: Real>(a: &AmplitudeState<T>, b: &AmplitudeState<T>) -> T {
    a.to_array()
        .iter()
        .zip(b.to_array().iter())
        .map(|(x, y)| {
            let scale = x.norm().max(y.norm());
            if scale == T::zero() {
                T::zero()
            } else {
                (*x - *y).norm() / scale
            }
        })
        .fold(T::zero(), T::max)
}
