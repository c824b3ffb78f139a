//! Dense complex operators on the truncated magnon ⊗ cavity Fock space.
//!
//! Basis convention: the magnon factor is the left Kronecker factor and the
//! cavity factor the right one, so the product state |q, r⟩ (q magnons,
//! r photons) sits at index `q * dim_c + r`.

pub(crate) mod linalg;

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{imag_unit, re, Cplx, Real};

pub use linalg::{hermitian_eigenvalues, solve_dense};

/// Which bosonic mode an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Magnon,
    Cavity,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Magnon => "magnon",
            Mode::Cavity => "cavity",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Truncation of the two-mode space: number of Fock levels kept per mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Truncation {
    pub dim_m: usize,
    pub dim_c: usize,
}

impl Truncation {
    pub const fn new(dim_m: usize, dim_c: usize) -> Self {
        Self { dim_m, dim_c }
    }

    pub const fn total(&self) -> usize {
        self.dim_m * self.dim_c
    }

    /// Basis index of |q, r⟩.
    #[inline]
    pub const fn index(&self, q: usize, r: usize) -> usize {
        q * self.dim_c + r
    }

    /// Inverse of [`Truncation::index`].
    #[inline]
    pub const fn occupations(&self, index: usize) -> (usize, usize) {
        (index / self.dim_c, index % self.dim_c)
    }

    /// Fails unless both modes keep at least `min` levels.
    pub fn require(&self, min: usize) -> Result<()> {
        for levels in [self.dim_m, self.dim_c] {
            if levels < min {
                return Err(Error::TooFewLevels { levels, min });
            }
        }
        Ok(())
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Self::new(6, 6)
    }
}

/// Space an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Unstructured square matrix (single-mode operators, superoperators).
    Flat(usize),
    /// Operator on the two-mode space.
    TwoMode(Truncation),
}

impl Layout {
    pub const fn dim(&self) -> usize {
        match self {
            Layout::Flat(n) => *n,
            Layout::TwoMode(t) => t.total(),
        }
    }
}

/// Square dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOperator<T> {
    data: Vec<Cplx<T>>,
    layout: Layout,
}

impl<T: Real> ComplexOperator<T> {
    pub fn zeros(layout: Layout) -> Self {
        let n = layout.dim();
        Self {
            data: vec![Cplx::new(T::zero(), T::zero()); n * n],
            layout,
        }
    }

    pub fn identity(layout: Layout) -> Self {
        let mut out = Self::zeros(layout);
        for i in 0..layout.dim() {
            out.set(i, i, re(T::one()));
        }
        out
    }

    pub fn from_fn(layout: Layout, mut f: impl FnMut(usize, usize) -> Cplx<T>) -> Self {
        let n = layout.dim();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { data, layout }
    }

    /// Wraps row-major data; `data.len()` must equal `dim²`.
    pub fn from_row_major(layout: Layout, data: Vec<Cplx<T>>) -> Result<Self> {
        let n = layout.dim();
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                op: "from_row_major",
                left: data.len(),
                right: n * n,
            });
        }
        Ok(Self { data, layout })
    }

    pub fn from_diagonal(layout: Layout, diag: &[Cplx<T>]) -> Result<Self> {
        if diag.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                op: "from_diagonal",
                left: diag.len(),
                right: layout.dim(),
            });
        }
        let mut out = Self::zeros(layout);
        for (i, &d) in diag.iter().enumerate() {
            out.set(i, i, d);
        }
        Ok(out)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    #[inline]
    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn truncation(&self) -> Option<Truncation> {
        match self.layout {
            Layout::TwoMode(t) => Some(t),
            Layout::Flat(_) => None,
        }
    }

    /// Same data, relabelled layout of equal dimension.
    pub fn with_layout(mut self, layout: Layout) -> Result<Self> {
        check_dims("with_layout", self.dim(), layout.dim())?;
        self.layout = layout;
        Ok(self)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx<T> {
        self.data[i * self.dim() + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Cplx<T>) {
        let n = self.dim();
        self.data[i * n + j] = value;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, value: Cplx<T>) {
        let n = self.dim();
        self.data[i * n + j] += value;
    }

    pub fn as_slice(&self) -> &[Cplx<T>] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Cplx<T>> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[Cplx<T>] {
        let n = self.dim();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with("add", other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with("sub", other, |a, b| a - b)
    }

    pub fn scale(&self, factor: Cplx<T>) -> Self {
        self.map(|a| a * factor)
    }

    pub fn scale_real(&self, factor: T) -> Self {
        self.map(|a| a * factor)
    }

    pub fn map(&self, f: impl Fn(Cplx<T>) -> Cplx<T>) -> Self {
        Self {
            data: self.data.iter().map(|&a| f(a)).collect(),
            layout: self.layout,
        }
    }

    fn zip_with(
        &self,
        op: &'static str,
        other: &Self,
        f: impl Fn(Cplx<T>, Cplx<T>) -> Cplx<T>,
    ) -> Result<Self> {
        check_dims(op, self.dim(), other.dim())?;
        Ok(Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            layout: merge_layout(self.layout, other.layout),
        })
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        check_dims("matmul", self.dim(), other.dim())?;
        let n = self.dim();
        let zero = Cplx::new(T::zero(), T::zero());
        let mut out = vec![zero; n * n];
        for i in 0..n {
            let out_row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == zero {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self {
            data: out,
            layout: merge_layout(self.layout, other.layout),
        })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        Self::from_fn(self.layout, |i, j| self.data[j * n + i].conj())
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim();
        Self::from_fn(self.layout, |i, j| self.data[j * n + i])
    }

    pub fn conj(&self) -> Self {
        self.map(|a| a.conj())
    }

    pub fn trace(&self) -> Cplx<T> {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Kronecker product `self ⊗ other`; the result has a flat layout.
    pub fn kron(&self, other: &Self) -> Self {
        let (na, nb) = (self.dim(), other.dim());
        let n = na * nb;
        let zero = Cplx::new(T::zero(), T::zero());
        let mut data = vec![zero; n * n];
        for ia in 0..na {
            for ja in 0..na {
                let a = self.get(ia, ja);
                if a == zero {
                    continue;
                }
                for ib in 0..nb {
                    let row = (ia * nb + ib) * n + ja * nb;
                    for jb in 0..nb {
                        data[row + jb] = a * other.get(ib, jb);
                    }
                }
            }
        }
        Self {
            data,
            layout: Layout::Flat(n),
        }
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
        check_dims("apply", self.dim(), v.len())?;
        Ok((0..self.dim())
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, a| m.max(a.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        check_dims("max_abs_diff", self.dim(), other.dim())?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm())))
    }

    /// Largest entrywise deviation from Hermiticity, `max |A − A†|`.
    pub fn hermiticity_error(&self) -> T {
        let n = self.dim();
        let mut worst = T::zero();
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.data.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        let n = self.dim();
        (0..n)
            .map(|j| (0..n).map(|i| self.get(i, j).norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Eigenvalues of the Hermitian part `(A + A†)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<T> {
        hermitian_eigenvalues(&self.data, self.dim())
    }

    /// Matrix exponential by scaling and squaring of a truncated Taylor series.
    pub fn expm(&self) -> Self {
        let n = self.dim();
        let norm = self.norm_one();
        let half = T::lit(0.5);
        let mut squarings = 0u32;
        let mut scaled = norm;
        while scaled > half {
            scaled = scaled * half;
            squarings += 1;
        }
        let x = self.scale_real(T::lit(0.5f64.powi(squarings as i32)));
        let mut result = Self::identity(self.layout);
        let mut term = Self::identity(self.layout);
        let eps = T::epsilon();
        for k in 1..=30 {
            term = term
                .matmul(&x)
                .expect("square")
                .scale_real(T::one() / T::from_count(k));
            result = result.add(&term).expect("square");
            if term.max_abs() <= eps * result.max_abs() {
                break;
            }
        }
        for _ in 0..squarings {
            result = result.matmul(&result).expect("square");
        }
        debug_assert_eq!(result.dim(), n);
        result
    }
}

fn check_dims(op: &'static str, left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { op, left, right })
    }
}

fn merge_layout(a: Layout, b: Layout) -> Layout {
    match (a, b) {
        (Layout::TwoMode(t), _) | (_, Layout::TwoMode(t)) => Layout::TwoMode(t),
        _ => a,
    }
}

/// Bosonic annihilation operator truncated to `n_levels` Fock states.
pub fn annihilation<T: Real>(n_levels: usize) -> Result<ComplexOperator<T>> {
    if n_levels < 2 {
        return Err(Error::TooFewLevels {
            levels: n_levels,
            min: 2,
        });
    }
    let mut a = ComplexOperator::zeros(Layout::Flat(n_levels));
    for k in 1..n_levels {
        a.set(k - 1, k, re(T::from_count(k).sqrt()));
    }
    Ok(a)
}

pub fn creation<T: Real>(n_levels: usize) -> Result<ComplexOperator<T>> {
    Ok(annihilation::<T>(n_levels)?.adjoint())
}

pub fn number<T: Real>(n_levels: usize) -> Result<ComplexOperator<T>> {
    if n_levels < 2 {
        return Err(Error::TooFewLevels {
            levels: n_levels,
            min: 2,
        });
    }
    let diag: Vec<_> = (0..n_levels).map(|k| re(T::from_count(k))).collect();
    ComplexOperator::from_diagonal(Layout::Flat(n_levels), &diag)
}

/// Lifts a single-mode operator onto the two-mode space.
///
/// Magnon operators become `op ⊗ 𝟙_c`, cavity operators `𝟙_m ⊗ op`.
pub fn embed<T: Real>(
    op: &ComplexOperator<T>,
    mode: Mode,
    truncation: Truncation,
) -> Result<ComplexOperator<T>> {
    let (own, other) = match mode {
        Mode::Magnon => (truncation.dim_m, truncation.dim_c),
        Mode::Cavity => (truncation.dim_c, truncation.dim_m),
    };
    check_dims("embed", op.dim(), own)?;
    let id = ComplexOperator::identity(Layout::Flat(other));
    let lifted = match mode {
        Mode::Magnon => op.kron(&id),
        Mode::Cavity => id.kron(op),
    };
    lifted.with_layout(Layout::TwoMode(truncation))
}

/// Ladder operators of both modes on a fixed truncation.
#[derive(Clone, Debug)]
pub struct ModeOperators<T> {
    pub truncation: Truncation,
    /// Magnon annihilation `m`.
    pub m: ComplexOperator<T>,
    /// Cavity annihilation `c`.
    pub c: ComplexOperator<T>,
}

impl<T: Real> ModeOperators<T> {
    pub fn new(truncation: Truncation) -> Result<Self> {
        Ok(Self {
            truncation,
            m: embed(&annihilation(truncation.dim_m)?, Mode::Magnon, truncation)?,
            c: embed(&annihilation(truncation.dim_c)?, Mode::Cavity, truncation)?,
        })
    }

    pub fn lowering(&self, mode: Mode) -> &ComplexOperator<T> {
        match mode {
            Mode::Magnon => &self.m,
            Mode::Cavity => &self.c,
        }
    }

    /// Number operator `a†a` of the given mode (diagonal).
    pub fn number(&self, mode: Mode) -> ComplexOperator<T> {
        let t = self.truncation;
        let diag: Vec<_> = (0..t.total())
            .map(|i| {
                let (q, r) = t.occupations(i);
                re(T::from_count(match mode {
                    Mode::Magnon => q,
                    Mode::Cavity => r,
                }))
            })
            .collect();
        ComplexOperator::from_diagonal(Layout::TwoMode(t), &diag).expect("diagonal length")
    }

    /// `a†a†aa` of the given mode (diagonal).
    pub fn pair_number(&self, mode: Mode) -> ComplexOperator<T> {
        let n = self.number(mode);
        let one = ComplexOperator::identity(n.layout());
        n.matmul(&n.sub(&one).expect("same dims")).expect("same dims")
    }
}

/// Rank-one projector |q, r⟩⟨q, r| on the two-mode space.
pub fn fock_projector<T: Real>(truncation: Truncation, q: usize, r: usize) -> ComplexOperator<T> {
    let mut p = ComplexOperator::zeros(Layout::TwoMode(truncation));
    let i = truncation.index(q, r);
    p.set(i, i, re(T::one()));
    p
}

/// `e^{iφ}` as a complex scalar.
pub(crate) fn phase<T: Real>(phi: T) -> Cplx<T> {
    (imag_unit::<T>() * phi).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn random_op(n: usize, seed: &[f64]) -> ComplexOperator<f64> {
        ComplexOperator::from_fn(Layout::Flat(n), |i, j| {
            let k = 2 * (i * n + j);
            Complex64::new(seed[k % seed.len()], seed[(k + 1) % seed.len()])
        })
    }

    #[test]
    fn annihilation_two_levels() {
        let a = annihilation::<f64>(2).unwrap();
        assert_eq!(a.get(0, 1), Complex64::new(1.0, 0.0));
        assert_eq!(a.get(0, 0), Complex64::new(0.0, 0.0));
        assert_eq!(a.get(1, 0), Complex64::new(0.0, 0.0));
        assert_eq!(a.get(1, 1), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn annihilation_three_levels_has_sqrt_superdiagonal() {
        let a = annihilation::<f64>(3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = match (i, j) {
                    (0, 1) => 1.0,
                    (1, 2) => 2f64.sqrt(),
                    _ => 0.0,
                };
                assert_eq!(a.get(i, j), Complex64::new(expected, 0.0));
            }
        }
        let n = a.adjoint().matmul(&a).unwrap();
        let diag = number::<f64>(3).unwrap();
        assert!(n.max_abs_diff(&diag).unwrap() < 1e-15);
    }

    #[test]
    fn annihilation_rejects_single_level() {
        assert_eq!(
            annihilation::<f64>(1).unwrap_err(),
            Error::TooFewLevels { levels: 1, min: 2 }
        );
    }

    #[test]
    fn truncated_commutator_has_edge_defect() {
        for n in 2..7 {
            let a = annihilation::<f64>(n).unwrap();
            let comm = a.commutator(&a.adjoint()).unwrap();
            let mut expected = ComplexOperator::identity(Layout::Flat(n));
            expected.set(n - 1, n - 1, Complex64::new(1.0 - n as f64, 0.0));
            assert!(comm.max_abs_diff(&expected).unwrap() < 1e-12);
        }
    }

    #[test]
    fn embedding_follows_magnon_left_convention() {
        let t = Truncation::new(2, 2);
        let a = annihilation::<f64>(2).unwrap();
        let m = embed(&a, Mode::Magnon, t).unwrap();
        let direct = a.kron(&ComplexOperator::identity(Layout::Flat(2)));
        assert_eq!(m.as_slice(), direct.as_slice());
        // m |1,0⟩ = |0,0⟩ with |1,0⟩ at index 2
        assert_eq!(m.get(t.index(0, 0), t.index(1, 0)), Complex64::new(1.0, 0.0));
        let id = embed(&ComplexOperator::<f64>::identity(Layout::Flat(2)), Mode::Cavity, t).unwrap();
        assert_eq!(id, ComplexOperator::identity(Layout::TwoMode(t)));
    }

    #[test]
    fn modes_commute() {
        let ops = ModeOperators::<f64>::new(Truncation::new(4, 3)).unwrap();
        let comm = ops.m.commutator(&ops.c).unwrap();
        assert!(comm.max_abs() <= 1e-12);
        let comm = ops.m.commutator(&ops.c.adjoint()).unwrap();
        assert!(comm.max_abs() <= 1e-12);
    }

    #[test]
    fn embed_rejects_wrong_dimension() {
        let a = annihilation::<f64>(3).unwrap();
        assert!(matches!(
            embed(&a, Mode::Cavity, Truncation::new(3, 4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn binary_ops_reject_mismatch() {
        let a = ComplexOperator::<f64>::identity(Layout::Flat(3));
        let b = ComplexOperator::<f64>::identity(Layout::Flat(4));
        assert!(a.add(&b).is_err());
        assert!(a.matmul(&b).is_err());
        assert!(a.commutator(&b).is_err());
        assert!(a.apply(&[Complex64::new(1.0, 0.0); 4]).is_err());
    }

    #[test]
    fn trace_of_identity() {
        let id = ComplexOperator::<f64>::identity(Layout::TwoMode(Truncation::new(2, 2)));
        assert_eq!(id.trace(), Complex64::new(4.0, 0.0));
        let k = ComplexOperator::<f64>::identity(Layout::Flat(2))
            .kron(&ComplexOperator::identity(Layout::Flat(3)));
        assert_eq!(k, ComplexOperator::identity(Layout::Flat(6)));
    }

    #[test]
    fn generic_over_single_precision() {
        let a = annihilation::<f32>(4).unwrap();
        let comm = a.commutator(&a.adjoint()).unwrap();
        assert!((comm.get(0, 0).re - 1.0).abs() < 1e-6);
        assert!((comm.get(3, 3).re + 3.0).abs() < 1e-6);
    }

    #[test]
    fn expm_of_diagonal_and_nilpotent() {
        let d = ComplexOperator::<f64>::from_diagonal(
            Layout::Flat(2),
            &[Complex64::new(-3.0, 1.0), Complex64::new(0.5, -2.0)],
        )
        .unwrap();
        let e = d.expm();
        assert!((e.get(0, 0) - Complex64::new(-3.0, 1.0).exp()).norm() < 1e-13);
        assert!((e.get(1, 1) - Complex64::new(0.5, -2.0).exp()).norm() < 1e-13);
        // exp of a strictly upper triangular 2x2 is 1 + N
        let mut n = ComplexOperator::<f64>::zeros(Layout::Flat(2));
        n.set(0, 1, Complex64::new(7.0, 0.0));
        let e = n.expm();
        assert!((e.get(0, 1) - Complex64::new(7.0, 0.0)).norm() < 1e-12);
    }

    fn vals() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0f64..2.0, 2 * 16)
    }

    proptest! {
        #[test]
        fn adjoint_is_involution_and_reverses_products(a in vals(), b in vals()) {
            let a = random_op(4, &a);
            let b = random_op(4, &b);
            prop_assert_eq!(a.adjoint().adjoint(), a.clone());
            let lhs = a.matmul(&b).unwrap().adjoint();
            let rhs = b.adjoint().matmul(&a.adjoint()).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
        }

        #[test]
        fn trace_is_cyclic(a in vals(), b in vals()) {
            let a = random_op(4, &a);
            let b = random_op(4, &b);
            // direct double sum Σ_ij A_ij B_ji
            let mut direct = Complex64::new(0.0, 0.0);
            for i in 0..4 {
                for j in 0..4 {
                    direct += a.get(i, j) * b.get(j, i);
                }
            }
            let ab = a.matmul(&b).unwrap().trace();
            let ba = b.matmul(&a).unwrap().trace();
            prop_assert!((ab - direct).norm() <= 1e-12);
            prop_assert!((ba - direct).norm() <= 1e-12);
        }

        #[test]
        fn kron_dimensions_multiply(n in 1usize..4, m in 1usize..4) {
            let a = ComplexOperator::<f64>::identity(Layout::Flat(n));
            let b = ComplexOperator::<f64>::identity(Layout::Flat(m));
            let k = a.kron(&b);
            prop_assert_eq!(k.dim(), n * m);
            prop_assert_eq!(k, ComplexOperator::identity(Layout::Flat(n * m)));
        }
    }
}
