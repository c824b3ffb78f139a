//! Physical parameters, Hamiltonians and Lindblad dissipators.
//!
//! Every quantity is expressed in units of the cavity decay rate κ_c. With
//! the mechanical frequency equal to κ, detunings in units of ω_b and κ
//! coincide.

use crate::error::{Error, Result};
use crate::operators::{ComplexOperator, Layout, ModeOperators, Truncation};
use crate::scalar::{c, imag_unit, re, Cplx, Real};

/// Cavity decay rate κ/2π in Hz used to convert laboratory inputs.
pub const KAPPA_OVER_2PI_HZ: f64 = 1.0e6;

/// All rates, detunings and couplings of the reduced two-mode model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams<T> {
    pub kappa_c: T,
    pub kappa_m: T,
    /// Cavity detuning Δ_c.
    pub delta_c: T,
    /// Magnon detuning Δ_m.
    pub delta_m: T,
    /// Mechanical frequency ω_b.
    pub omega_b: T,
    /// Magnomechanical coupling g_mb.
    pub g_mb: T,
    /// Magnon-photon coupling g_mc.
    pub g_mc: T,
    /// Squeezing strength λ.
    pub lambda: T,
    /// Squeezing phase θ in radians.
    pub theta: T,
    /// Magnon drive amplitude ℰ.
    pub drive: T,
    /// Pure-dephasing rate γ_p.
    pub gamma_p: T,
}

impl<T: Real> SystemParams<T> {
    /// κ_c = κ_m = ω_b = 1, ℰ = 0.01, g_mb = 3, g_mc = 0.5, resonant drive,
    /// no squeezing, no dephasing.
    pub fn baseline() -> Self {
        Self {
            kappa_c: T::one(),
            kappa_m: T::one(),
            delta_c: T::zero(),
            delta_m: T::zero(),
            omega_b: T::one(),
            g_mb: T::lit(3.0),
            g_mc: T::lit(0.5),
            lambda: T::zero(),
            theta: T::zero(),
            drive: T::lit(0.01),
            gamma_p: T::zero(),
        }
    }

    /// Sets Δ_c = Δ_m = Δ.
    pub fn with_detuning(mut self, delta: T) -> Self {
        self.delta_c = delta;
        self.delta_m = delta;
        self
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_gamma_p(mut self, gamma_p: T) -> Self {
        self.gamma_p = gamma_p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("kappa_c", self.kappa_c),
            ("kappa_m", self.kappa_m),
            ("delta_c", self.delta_c),
            ("delta_m", self.delta_m),
            ("omega_b", self.omega_b),
            ("g_mb", self.g_mb),
            ("g_mc", self.g_mc),
            ("lambda", self.lambda),
            ("theta", self.theta),
            ("drive", self.drive),
            ("gamma_p", self.gamma_p),
        ];
        for (name, value) in all {
            if !value.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        for (name, value) in [
            ("kappa_c", self.kappa_c),
            ("kappa_m", self.kappa_m),
            ("omega_b", self.omega_b),
        ] {
            if value <= T::zero() {
                return Err(invalid(name, "must be strictly positive"));
            }
        }
        for (name, value) in [
            ("g_mb", self.g_mb),
            ("g_mc", self.g_mc),
            ("lambda", self.lambda),
            ("drive", self.drive),
            ("gamma_p", self.gamma_p),
        ] {
            if value < T::zero() {
                return Err(invalid(name, "must be non-negative"));
            }
        }
        Ok(())
    }

    /// Kerr strength μ = g_mb²/ω_b.
    pub fn kerr_strength(&self) -> Result<T> {
        if !(self.omega_b > T::zero()) {
            return Err(invalid("omega_b", "must be strictly positive"));
        }
        Ok(self.g_mb * self.g_mb / self.omega_b)
    }

    /// Whether ℰ ≤ 0.1·min(κ_c, κ_m), the regime of the perturbative amplitudes.
    pub fn is_weak_drive(&self) -> bool {
        self.drive <= T::lit(0.1) * self.kappa_c.min(self.kappa_m)
    }

    /// Complex magnon detuning Δ'_m = Δ_m − iκ_m/2.
    pub fn delta_m_prime(&self) -> Cplx<T> {
        c(self.delta_m, -self.kappa_m * T::lit(0.5))
    }

    /// Complex cavity detuning Δ'_c = Δ_c − iκ_c/2.
    pub fn delta_c_prime(&self) -> Cplx<T> {
        c(self.delta_c, -self.kappa_c * T::lit(0.5))
    }
}

fn invalid(name: &'static str, reason: &str) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.to_owned(),
    }
}

/// The Hermitian Hamiltonian
/// `H₁ = Δ_c c†c + Δ_m m†m + g_mc(m†c + c†m) − μ(m†m)² + iλ(m†² e^{iθ} − m² e^{−iθ}) + ℰ(m† + m)`.
pub fn build_h1<T: Real>(params: &SystemParams<T>, truncation: Truncation) -> Result<ComplexOperator<T>> {
    params.validate()?;
    truncation.require(3)?;
    let mu = params.kerr_strength()?;
    let ops = ModeOperators::<T>::new(truncation)?;
    let (m, cav) = (&ops.m, &ops.c);
    let md = m.adjoint();
    let cd = cav.adjoint();
    let nm = ops.number(crate::operators::Mode::Magnon);
    let nc = ops.number(crate::operators::Mode::Cavity);

    let mut h = nc.scale_real(params.delta_c);
    h = h.add(&nm.scale_real(params.delta_m))?;
    let exchange = md.matmul(cav)?.add(&cd.matmul(m)?)?;
    h = h.add(&exchange.scale_real(params.g_mc))?;
    h = h.sub(&nm.matmul(&nm)?.scale_real(mu))?;
    let phase = crate::operators::phase(params.theta);
    let squeeze = md
        .matmul(&md)?
        .scale(phase)
        .sub(&m.matmul(m)?.scale(phase.conj()))?
        .scale(imag_unit::<T>() * params.lambda);
    h = h.add(&squeeze)?;
    h = h.add(&md.add(m)?.scale_real(params.drive))?;
    Ok(h)
}

/// The non-Hermitian Hamiltonian `H₂ = H₁ − i(κ_c/2)c†c − i(κ_m/2)m†m`.
pub fn build_h2<T: Real>(params: &SystemParams<T>, truncation: Truncation) -> Result<ComplexOperator<T>> {
    let mut h = build_h1(params, truncation)?;
    let half = T::lit(0.5);
    for i in 0..truncation.total() {
        let (q, r) = truncation.occupations(i);
        let decay = (params.kappa_m * T::from_count(q) + params.kappa_c * T::from_count(r)) * half;
        h.add_at(i, i, c(T::zero(), -decay));
    }
    Ok(h)
}

/// Lindblad channel `D[C]ρ = (rate/2)(2CρC† − C†Cρ − ρC†C)`.
#[derive(Clone, Debug)]
pub struct Dissipator<T> {
    collapse: ComplexOperator<T>,
    collapse_dag: ComplexOperator<T>,
    c_dag_c: ComplexOperator<T>,
    rate: T,
}

impl<T: Real> Dissipator<T> {
    pub fn new(collapse: ComplexOperator<T>, rate: T) -> Result<Self> {
        if !(rate >= T::zero()) {
            return Err(invalid("rate", "must be non-negative"));
        }
        let collapse_dag = collapse.adjoint();
        let c_dag_c = collapse_dag.matmul(&collapse)?;
        Ok(Self {
            collapse,
            collapse_dag,
            c_dag_c,
            rate,
        })
    }

    pub fn rate(&self) -> T {
        self.rate
    }

    pub fn collapse(&self) -> &ComplexOperator<T> {
        &self.collapse
    }

    /// Applies the channel to a state.
    pub fn apply(&self, rho: &ComplexOperator<T>) -> Result<ComplexOperator<T>> {
        if self.rate == T::zero() {
            return Ok(ComplexOperator::zeros(rho.layout()));
        }
        let jump = self
            .collapse
            .matmul(rho)?
            .matmul(&self.collapse_dag)?
            .scale_real(T::lit(2.0));
        let anti = self.c_dag_c.matmul(rho)?.add(&rho.matmul(&self.c_dag_c)?)?;
        Ok(jump.sub(&anti)?.scale_real(self.rate * T::lit(0.5)))
    }

    /// Column-stacking superoperator
    /// `(rate/2)(2 C̄⊗C − 𝟙⊗C†C − (C†C)ᵀ⊗𝟙)`.
    pub fn superoperator(&self) -> ComplexOperator<T> {
        let d = self.collapse.dim();
        let id = ComplexOperator::identity(Layout::Flat(d));
        let jump = self.collapse.conj().kron(&self.collapse).scale_real(T::lit(2.0));
        let left = id.kron(&self.c_dag_c);
        let right = self.c_dag_c.transpose().kron(&id);
        jump.sub(&left)
            .and_then(|x| x.sub(&right))
            .expect("equal superoperator dimensions")
            .scale(re(self.rate * T::lit(0.5)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{fock_projector, Mode};
    use num_complex::Complex64;
    use proptest::prelude::*;

    const T3: Truncation = Truncation::new(3, 3);

    fn arb_params() -> impl Strategy<Value = SystemParams<f64>> {
        (
            (0.1f64..3.0, 0.1f64..3.0, -10.0f64..10.0, -10.0f64..10.0),
            (0.2f64..4.0, 0.0f64..3.0, 0.0f64..2.0, 0.0f64..0.5),
            (-3.2f64..3.2, 0.0f64..0.5, 0.0f64..1.0),
        )
            .prop_map(|((kc, km, dc, dm), (wb, gmb, gmc, lam), (th, e, gp))| SystemParams {
                kappa_c: kc,
                kappa_m: km,
                delta_c: dc,
                delta_m: dm,
                omega_b: wb,
                g_mb: gmb,
                g_mc: gmc,
                lambda: lam,
                theta: th,
                drive: e,
                gamma_p: gp,
            })
    }

    #[test]
    fn kerr_strength_values() {
        let p = SystemParams::<f64>::baseline();
        assert_eq!(p.kerr_strength().unwrap(), 9.0);
        let p = SystemParams { g_mb: 0.0, ..p };
        assert_eq!(p.kerr_strength().unwrap(), 0.0);
        let p = SystemParams { g_mb: 1.0, omega_b: 4.0, ..p };
        assert_eq!(p.kerr_strength().unwrap(), 0.25);
        let p = SystemParams { omega_b: 0.0, ..p };
        assert!(p.kerr_strength().is_err());
    }

    #[test]
    fn validation_rejects_bad_rates() {
        let p = SystemParams::<f64>::baseline();
        assert!(p.validate().is_ok());
        assert!(SystemParams { kappa_m: 0.0, ..p }.validate().is_err());
        assert!(SystemParams { gamma_p: -0.1, ..p }.validate().is_err());
        assert!(SystemParams { drive: f64::NAN, ..p }.validate().is_err());
        assert!(SystemParams { delta_c: -3.0, ..p }.validate().is_ok());
        assert!(p.is_weak_drive());
        assert!(!SystemParams { drive: 0.5, ..p }.is_weak_drive());
    }

    #[test]
    fn free_hamiltonian_is_diagonal_detuning() {
        let p = SystemParams {
            delta_c: 0.7,
            delta_m: -1.3,
            g_mb: 0.0,
            g_mc: 0.0,
            lambda: 0.0,
            drive: 0.0,
            ..SystemParams::<f64>::baseline()
        };
        let h = build_h1(&p, T3).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let (q, r) = T3.occupations(i);
                let expected = if i == j { -1.3 * q as f64 + 0.7 * r as f64 } else { 0.0 };
                assert!((h.get(i, j) - Complex64::new(expected, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn squeezing_couples_vacuum_to_two_magnons() {
        let p = SystemParams::<f64>::baseline().with_lambda(0.3);
        let h = build_h1(&p, T3).unwrap();
        // (m†)² |0⟩ = √2 |2⟩
        let elem = h.get(T3.index(2, 0), T3.index(0, 0));
        assert!((elem - Complex64::new(0.0, 0.3 * 2f64.sqrt())).norm() < 1e-14);
        let elem = h.get(T3.index(0, 0), T3.index(2, 0));
        assert!((elem - Complex64::new(0.0, -0.3 * 2f64.sqrt())).norm() < 1e-14);
    }

    #[test]
    fn kerr_term_is_not_normal_ordered() {
        let p = SystemParams {
            g_mc: 0.0,
            drive: 0.0,
            ..SystemParams::<f64>::baseline()
        };
        let h = build_h1(&p, T3).unwrap();
        assert!((h.get(T3.index(1, 0), T3.index(1, 0)).re + 9.0).abs() < 1e-14);
        assert!((h.get(T3.index(2, 0), T3.index(2, 0)).re + 36.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_truncation() {
        let p = SystemParams::<f64>::baseline();
        assert!(matches!(
            build_h1(&p, Truncation::new(2, 3)),
            Err(Error::TooFewLevels { levels: 2, min: 3 })
        ));
    }

    #[test]
    fn h2_single_magnon_diagonal_is_complex_detuning() {
        let p = SystemParams {
            delta_m: 2.5,
            kappa_m: 0.8,
            g_mb: 0.0,
            g_mc: 0.0,
            drive: 0.0,
            ..SystemParams::<f64>::baseline()
        };
        let h2 = build_h2(&p, T3).unwrap();
        let d = h2.get(T3.index(1, 0), T3.index(1, 0));
        assert!((d - p.delta_m_prime()).norm() < 1e-15);
    }

    #[test]
    fn h2_anti_hermitian_part_is_dissipative() {
        let p = SystemParams {
            theta: 0.4,
            ..SystemParams::<f64>::baseline().with_lambda(0.2).with_detuning(1.0)
        };
        let h2 = build_h2(&p, T3).unwrap();
        // i(H₂ − H₂†)/2
        let gen = h2
            .sub(&h2.adjoint())
            .unwrap()
            .scale(Complex64::new(0.0, -0.5));
        for ev in gen.hermitian_eigenvalues() {
            assert!(ev <= 1e-12);
        }
        let undamped = SystemParams {
            kappa_c: 1e-300,
            kappa_m: 1e-300,
            ..p
        };
        let d = build_h2(&undamped, T3)
            .unwrap()
            .max_abs_diff(&build_h1(&undamped, T3).unwrap())
            .unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn zero_rate_dissipator_is_zero_map() {
        let ops = ModeOperators::<f64>::new(T3).unwrap();
        let d = Dissipator::new(ops.c.clone(), 0.0).unwrap();
        let rho = fock_projector::<f64>(T3, 0, 1);
        assert_eq!(d.apply(&rho).unwrap().max_abs(), 0.0);
        assert_eq!(d.superoperator().max_abs(), 0.0);
        assert!(Dissipator::new(ops.c.clone(), -1.0).is_err());
    }

    #[test]
    fn cavity_decay_of_single_photon() {
        let ops = ModeOperators::<f64>::new(T3).unwrap();
        let kappa = 1.7;
        let d = Dissipator::new(ops.c.clone(), kappa).unwrap();
        let out = d.apply(&fock_projector(T3, 0, 1)).unwrap();
        let expected = fock_projector::<f64>(T3, 0, 0)
            .sub(&fock_projector(T3, 0, 1))
            .unwrap()
            .scale_real(kappa);
        assert!(out.max_abs_diff(&expected).unwrap() < 1e-14);
    }

    proptest! {
        #[test]
        fn h1_is_hermitian(p in arb_params()) {
            let h = build_h1(&p, T3).unwrap();
            prop_assert!(h.hermiticity_error() <= 1e-12);
        }

        #[test]
        fn h2_minus_h1_is_diagonal_decay(p in arb_params()) {
            let diff = build_h2(&p, T3).unwrap().sub(&build_h1(&p, T3).unwrap()).unwrap();
            for i in 0..9 {
                for j in 0..9 {
                    let (q, r) = T3.occupations(i);
                    let expected = if i == j {
                        Complex64::new(0.0, -(p.kappa_m * q as f64 + p.kappa_c * r as f64) / 2.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    prop_assert!((diff.get(i, j) - expected).norm() <= 1e-12);
                }
            }
        }

        #[test]
        fn dissipator_preserves_trace_and_hermiticity(
            vals in prop::collection::vec(-1.0f64..1.0, 2 * 81),
            rate in 0.0f64..3.0,
            mode in prop::bool::ANY,
        ) {
            let ops = ModeOperators::<f64>::new(T3).unwrap();
            let a = ComplexOperator::from_fn(Layout::TwoMode(T3), |i, j| {
                Complex64::new(vals[2 * (i * 9 + j)], vals[2 * (i * 9 + j) + 1])
            });
            let rho = a.add(&a.adjoint()).unwrap();
            let collapse = ops.lowering(if mode { Mode::Magnon } else { Mode::Cavity }).clone();
            for channel in [collapse.clone(), collapse.adjoint().matmul(&collapse).unwrap()] {
                let d = Dissipator::new(channel, rate).unwrap();
                let out = d.apply(&rho).unwrap();
                prop_assert!(out.trace().norm() <= 1e-12);
                prop_assert!(out.hermiticity_error() <= 1e-12);
            }
        }
    }
}
