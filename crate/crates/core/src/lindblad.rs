//! Master-equation numerics on the truncated two-mode space.
//!
//! Density matrices are vectorized by column stacking,
//! `vec(ρ)[i + d·j] = ρ_ij`, under which `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
//! The generator is
//!
//! ```text
//! L = −i(𝟙⊗H₁ − H₁ᵀ⊗𝟙) + Σ (rate/2)(2 C̄⊗C − 𝟙⊗C†C − (C†C)ᵀ⊗𝟙)
//! ```
//!
//! with collapse operators `m` (κ_m), `c` (κ_c) and optionally a number
//! operator (γ_p) for pure dephasing.

use crate::error::{Error, Result};
use crate::model::{build_h1, Dissipator, SystemParams};
use crate::operators::{solve_dense, ComplexOperator, Layout, Mode, ModeOperators, Truncation};
use crate::optimizer::{CorrelationCurve, CurvePoint};
use crate::scalar::{imag_unit, re, Cplx, Real};

/// Floor on ⟨a†a⟩ below which g² is undefined.
pub const OCCUPATION_FLOOR: f64 = 1e-20;

/// Which number operator carries the pure-dephasing channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum DephasingTarget {
    /// `D[c†c]`, the channel as written for the cavity.
    #[default]
    Cavity,
    /// `D[m†m]` on the magnon.
    Magnon,
}

impl DephasingTarget {
    pub fn mode(self) -> Mode {
        match self {
            DephasingTarget::Cavity => Mode::Cavity,
            DephasingTarget::Magnon => Mode::Magnon,
        }
    }
}

/// Hermitian, unit-trace state on the two-mode space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    op: ComplexOperator<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Wraps an operator, checking Hermiticity and unit trace to 1e−10.
    pub fn new(op: ComplexOperator<T>) -> Result<Self> {
        if op.truncation().is_none() {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: "density matrix needs a two-mode layout".into(),
            });
        }
        let rho = Self { op };
        let tol = T::lit(1e-10);
        if rho.hermiticity_error() > tol {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: format!("not Hermitian ({:e})", rho.hermiticity_error()),
            });
        }
        if rho.trace_error() > tol {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: format!("trace differs from 1 by {:e}", rho.trace_error()),
            });
        }
        Ok(rho)
    }

    pub(crate) fn new_unchecked(op: ComplexOperator<T>) -> Self {
        Self { op }
    }

    /// |q, r⟩⟨q, r|.
    pub fn fock(truncation: Truncation, q: usize, r: usize) -> Self {
        Self {
            op: crate::operators::fock_projector(truncation, q, r),
        }
    }

    pub fn vacuum(truncation: Truncation) -> Self {
        Self::fock(truncation, 0, 0)
    }

    pub fn operator(&self) -> &ComplexOperator<T> {
        &self.op
    }

    pub fn truncation(&self) -> Truncation {
        self.op.truncation().expect("two-mode layout")
    }

    pub fn trace_error(&self) -> T {
        (self.op.trace() - re(T::one())).norm()
    }

    pub fn hermiticity_error(&self) -> T {
        self.op.hermiticity_error()
    }

    pub fn min_eigenvalue(&self) -> T {
        self.op.hermitian_eigenvalues()[0]
    }

    /// Population of |q, r⟩ summed over the other mode, i.e. P(n_mode = n).
    pub fn population(&self, mode: Mode, n: usize) -> T {
        let t = self.truncation();
        (0..t.total())
            .filter(|&i| {
                let (q, r) = t.occupations(i);
                match mode {
                    Mode::Magnon => q == n,
                    Mode::Cavity => r == n,
                }
            })
            .map(|i| self.op.get(i, i).re)
            .sum()
    }

    /// ½ Σ |eig(ρ − σ)|.
    pub fn trace_distance(&self, other: &Self) -> Result<T> {
        let diff = self.op.sub(&other.op)?;
        Ok(diff.hermitian_eigenvalues().iter().map(|x| x.abs()).sum::<T>() * T::lit(0.5))
    }

    /// Column-stacked vector.
    pub fn vectorize(&self) -> Vec<Cplx<T>> {
        vectorize(&self.op)
    }
}

fn vectorize<T: Real>(op: &ComplexOperator<T>) -> Vec<Cplx<T>> {
    let d = op.dim();
    let mut v = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            v.push(op.get(i, j));
        }
    }
    v
}

fn unvectorize<T: Real>(v: &[Cplx<T>], truncation: Truncation) -> ComplexOperator<T> {
    let d = truncation.total();
    ComplexOperator::from_fn(Layout::TwoMode(truncation), |i, j| v[i + d * j])
}

/// Compressed-row view of a sparse matrix.
#[derive(Clone, Debug)]
struct Csr<T> {
    offsets: Vec<usize>,
    columns: Vec<usize>,
    values: Vec<Cplx<T>>,
}

impl<T: Real> Csr<T> {
    fn from_dense(m: &ComplexOperator<T>) -> Self {
        let n = m.dim();
        let zero = Cplx::new(T::zero(), T::zero());
        let mut offsets = Vec::with_capacity(n + 1);
        let mut columns = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for i in 0..n {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != zero {
                    columns.push(j);
                    values.push(v);
                }
            }
            offsets.push(columns.len());
        }
        Self {
            offsets,
            columns,
            values,
        }
    }

    fn apply_into(&self, x: &[Cplx<T>], out: &mut [Cplx<T>]) {
        for (i, o) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
            *o = self.columns[lo..hi]
                .iter()
                .zip(&self.values[lo..hi])
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
    }

    fn norm_inf(&self) -> T {
        (0..self.offsets.len() - 1)
            .map(|i| {
                self.values[self.offsets[i]..self.offsets[i + 1]]
                    .iter()
                    .map(|v| v.norm())
                    .sum::<T>()
            })
            .fold(T::zero(), T::max)
    }
}

/// Vectorized master-equation generator with its provenance.
#[derive(Clone, Debug)]
pub struct Liouvillian<T> {
    matrix: ComplexOperator<T>,
    sparse: Csr<T>,
    params: SystemParams<T>,
    truncation: Truncation,
    dephasing: Option<DephasingTarget>,
}

/// Assembles the Liouvillian; `dephasing = None` omits the γ_p channel.
pub fn build_liouvillian<T: Real>(
    params: &SystemParams<T>,
    truncation: Truncation,
    dephasing: Option<DephasingTarget>,
) -> Result<Liouvillian<T>> {
    params.validate()?;
    truncation.require(3)?;
    let h = build_h1(params, truncation)?;
    let ops = ModeOperators::<T>::new(truncation)?;
    let mut channels = vec![
        Dissipator::new(ops.m.clone(), params.kappa_m)?,
        Dissipator::new(ops.c.clone(), params.kappa_c)?,
    ];
    if let Some(target) = dephasing {
        channels.push(Dissipator::new(ops.number(target.mode()), params.gamma_p)?);
    }

    let d = truncation.total();
    let mut l = ComplexOperator::zeros(Layout::Flat(d * d));
    let zero = Cplx::new(T::zero(), T::zero());
    let minus_i = -imag_unit::<T>();
    // effective non-Hermitian part: K = −iH − ½ Σ rate C†C acting as Kρ + ρK†
    let mut k = h.scale(minus_i);
    for ch in &channels {
        let cdc = ch.collapse().adjoint().matmul(ch.collapse())?;
        k = k.sub(&cdc.scale_real(ch.rate() * T::lit(0.5)))?;
    }
    let k_dag = k.adjoint();
    for j in 0..d {
        for i in 0..d {
            let row = i + d * j;
            // (Kρ)_ij = Σ_p K_ip ρ_pj
            for p in 0..d {
                let v = k.get(i, p);
                if v != zero {
                    l.add_at(row, p + d * j, v);
                }
            }
            // (ρK†)_ij = Σ_p ρ_ip K†_pj
            for p in 0..d {
                let v = k_dag.get(p, j);
                if v != zero {
                    l.add_at(row, i + d * p, v);
                }
            }
        }
    }
    for ch in &channels {
        if ch.rate() == T::zero() {
            continue;
        }
        let c = ch.collapse();
        let nz: Vec<(usize, usize, Cplx<T>)> = (0..d)
            .flat_map(|a| (0..d).map(move |b| (a, b)))
            .filter_map(|(a, b)| {
                let v = c.get(a, b);
                (v != zero).then_some((a, b, v))
            })
            .collect();
        // rate · (CρC†)_ij = rate Σ C_ip ρ_pq conj(C_jq)
        for &(i, p, cip) in &nz {
            for &(j, q, cjq) in &nz {
                l.add_at(i + d * j, p + d * q, cip * cjq.conj() * ch.rate());
            }
        }
    }
    let sparse = Csr::from_dense(&l);
    Ok(Liouvillian {
        matrix: l,
        sparse,
        params: *params,
        truncation,
        dephasing,
    })
}

impl<T: Real> Liouvillian<T> {
    pub fn matrix(&self) -> &ComplexOperator<T> {
        &self.matrix
    }

    pub fn params(&self) -> &SystemParams<T> {
        &self.params
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn dephasing(&self) -> Option<DephasingTarget> {
        self.dephasing
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        self.sparse.values.len()
    }

    /// `L · v` on a column-stacked vector.
    pub fn apply_vec(&self, v: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
        let n = self.matrix.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                op: "liouvillian apply",
                left: n,
                right: v.len(),
            });
        }
        let mut out = vec![Cplx::new(T::zero(), T::zero()); n];
        self.sparse.apply_into(v, &mut out);
        Ok(out)
    }

    /// dρ/dt for an operator on the two-mode space.
    pub fn apply(&self, rho: &ComplexOperator<T>) -> Result<ComplexOperator<T>> {
        let v = self.apply_vec(&vectorize(rho))?;
        Ok(unvectorize(&v, self.truncation))
    }

    /// Largest entry of `vec(𝟙)ᵀ L`, zero for a trace-preserving generator.
    pub fn trace_row_residual(&self) -> T {
        let d = self.truncation.total();
        let n = d * d;
        let mut acc = vec![Cplx::new(T::zero(), T::zero()); n];
        for i in 0..d {
            for (col, value) in self.matrix.row(i + d * i).iter().enumerate() {
                acc[col] += *value;
            }
        }
        acc.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// Euclidean norm of `L vec(ρ)`.
    pub fn residual(&self, rho: &DensityMatrix<T>) -> T {
        self.apply_vec(&rho.vectorize())
            .expect("matching truncation")
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    fn norm_inf(&self) -> T {
        self.sparse.norm_inf()
    }
}

/// Basis order used for the steady-state solve: cavity-major,
/// |q, r⟩ ↦ r·dim_m + q, which narrows the band of L.
fn solver_basis_order(t: Truncation) -> Vec<usize> {
    (0..t.total())
        .map(|i| {
            let (q, r) = t.occupations(i);
            r * t.dim_m + q
        })
        .collect()
}

/// Stationary state of `L`, solved directly on the cavity-major basis.
///
/// ρ₀₀ is pinned to one and its own equation, implied by trace
/// preservation, is dropped; the trace is normalized afterwards. This keeps
/// the system banded and, unlike replacing a row by `Tr ρ = 1`, leaves the
/// tiny two-excitation populations behind g² accurate relative to their
/// own size.
pub fn steady_state<T: Real>(liouvillian: &Liouvillian<T>) -> Result<DensityMatrix<T>> {
    let t = liouvillian.truncation;
    let d = t.total();
    let n = d * d;
    let basis = solver_basis_order(t);
    let perm: Vec<usize> = (0..n).map(|v| basis[v % d] + d * basis[v / d]).collect();
    let pin = perm[0];
    let reduced = |k: usize| if k > pin { k - 1 } else { k };
    let m = n - 1;
    let zero = Cplx::new(T::zero(), T::zero());
    let mut a = vec![zero; m * m];
    let mut b = vec![zero; m];
    let csr = &liouvillian.sparse;
    for row in 0..n {
        let pr = perm[row];
        if pr == pin {
            continue;
        }
        let r = reduced(pr);
        for idx in csr.offsets[row]..csr.offsets[row + 1] {
            let col = csr.columns[idx];
            let v = csr.values[idx];
            let pc = perm[col];
            if pc == pin {
                b[r] -= v;
            } else {
                a[r * m + reduced(pc)] = v;
            }
        }
    }

    let y = solve_dense(a, m, b)?;
    let mut v = vec![zero; n];
    for (orig, &p) in perm.iter().enumerate() {
        v[orig] = if p == pin { re(T::one()) } else { y[reduced(p)] };
    }
    let rho = unvectorize(&v, t);
    let herm = rho.add(&rho.adjoint())?.scale_real(T::lit(0.5));
    let tr = herm.trace().re;
    Ok(DensityMatrix::new_unchecked(herm.scale_real(T::one() / tr)))
}

/// `Tr(op · ρ)`.
pub fn expectation<T: Real>(op: &ComplexOperator<T>, rho: &DensityMatrix<T>) -> Result<Cplx<T>> {
    let n = op.dim();
    if n != rho.op.dim() {
        return Err(Error::DimensionMismatch {
            op: "expectation",
            left: n,
            right: rho.op.dim(),
        });
    }
    let mut acc = Cplx::new(T::zero(), T::zero());
    for i in 0..n {
        for k in 0..n {
            acc += op.get(i, k) * rho.op.get(k, i);
        }
    }
    Ok(acc)
}

/// Equal-time `⟨a†a†aa⟩ / ⟨a†a⟩²`.
pub fn g2_zero<T: Real>(rho: &DensityMatrix<T>, mode: Mode) -> Result<T> {
    let ops = ModeOperators::<T>::new(rho.truncation())?;
    let n = expectation(&ops.number(mode), rho)?.re;
    if !(n.as_f64() > OCCUPATION_FLOOR) {
        return Err(Error::Unpopulated {
            mode: mode.label(),
            occupation: n.as_f64(),
        });
    }
    let pairs = expectation(&ops.pair_number(mode), rho)?.re;
    Ok((pairs / (n * n)).max(T::zero()))
}

/// Time-stepping scheme for the vectorized master equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Propagation {
    /// Classical RK4, `dt = 0.005/κ` reduced until `‖L‖∞·dt ≤ 0.1`.
    #[default]
    RungeKutta4,
    /// Exact propagator `exp(L Δt)` per output interval; dense, small spaces only.
    MatrixExponential,
}

fn rk4_dt<T: Real>(l: &Liouvillian<T>) -> T {
    let kappa = l.params.kappa_c.max(l.params.kappa_m);
    let mut dt = T::lit(0.005) / kappa;
    let norm = l.norm_inf();
    if norm * dt > T::lit(0.1) {
        dt = T::lit(0.1) / norm;
    }
    dt
}

/// Propagates a vectorized operator over `t_grid`, returning one vector per
/// grid point.
fn propagate<T: Real>(
    l: &Liouvillian<T>,
    v0: Vec<Cplx<T>>,
    t_grid: &[T],
    scheme: Propagation,
) -> Result<Vec<Vec<Cplx<T>>>> {
    crate::amplitudes::check_grid(t_grid)?;
    let n = v0.len();
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(v0.clone());
    match scheme {
        Propagation::RungeKutta4 => {
            let dt = rk4_dt(l);
            let zero = Cplx::new(T::zero(), T::zero());
            let (mut k1, mut k2, mut k3, mut k4) =
                (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
            let mut tmp = vec![zero; n];
            let mut y = v0;
            for w in t_grid.windows(2) {
                let span = w[1] - w[0];
                let steps = (span / dt).ceil().to_usize().unwrap_or(0).max(1);
                let h = span / T::from_count(steps);
                let half = h * T::lit(0.5);
                let sixth = h / T::lit(6.0);
                for _ in 0..steps {
                    l.sparse.apply_into(&y, &mut k1);
                    for i in 0..n {
                        tmp[i] = y[i] + k1[i] * half;
                    }
                    l.sparse.apply_into(&tmp, &mut k2);
                    for i in 0..n {
                        tmp[i] = y[i] + k2[i] * half;
                    }
                    l.sparse.apply_into(&tmp, &mut k3);
                    for i in 0..n {
                        tmp[i] = y[i] + k3[i] * h;
                    }
                    l.sparse.apply_into(&tmp, &mut k4);
                    for i in 0..n {
                        y[i] += (k1[i] + (k2[i] + k3[i]) * T::lit(2.0) + k4[i]) * sixth;
                    }
                }
                if y.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                    return Err(Error::StepFailure { t: w[0].as_f64() });
                }
                out.push(y.clone());
            }
        }
        Propagation::MatrixExponential => {
            let mut y = v0;
            let mut cached: Option<(T, ComplexOperator<T>)> = None;
            for w in t_grid.windows(2) {
                let span = w[1] - w[0];
                let reuse = matches!(&cached, Some((s, _)) if (*s - span).abs() <= T::epsilon() * span * T::lit(8.0));
                if !reuse {
                    cached = Some((span, l.matrix.scale_real(span).expm()));
                }
                let (_, prop) = cached.as_ref().expect("propagator");
                y = prop.apply(&y)?;
                if y.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                    return Err(Error::StepFailure { t: w[0].as_f64() });
                }
                out.push(y.clone());
            }
        }
    }
    Ok(out)
}

/// Solves the master equation from `rho0` over `t_grid` (starting at 0).
pub fn evolve<T: Real>(
    liouvillian: &Liouvillian<T>,
    rho0: &DensityMatrix<T>,
    t_grid: &[T],
) -> Result<Vec<DensityMatrix<T>>> {
    evolve_with(liouvillian, rho0, t_grid, Propagation::default())
}

pub fn evolve_with<T: Real>(
    liouvillian: &Liouvillian<T>,
    rho0: &DensityMatrix<T>,
    t_grid: &[T],
    scheme: Propagation,
) -> Result<Vec<DensityMatrix<T>>> {
    if rho0.truncation() != liouvillian.truncation {
        return Err(Error::DimensionMismatch {
            op: "evolve",
            left: liouvillian.truncation.total(),
            right: rho0.truncation().total(),
        });
    }
    let t = liouvillian.truncation;
    Ok(propagate(liouvillian, rho0.vectorize(), t_grid, scheme)?
        .into_iter()
        .map(|v| DensityMatrix::new_unchecked(unvectorize(&v, t)))
        .collect())
}

/// Options shared by the numerical correlation routines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericOptions {
    pub truncation: Truncation,
    pub dephasing: Option<DephasingTarget>,
    pub propagation: Propagation,
}

impl Default for NumericOptions {
    fn default() -> Self {
        Self {
            truncation: Truncation::default(),
            dephasing: None,
            propagation: Propagation::RungeKutta4,
        }
    }
}

/// Steady-state equal-time g² from the master equation.
pub fn g2_numeric<T: Real>(params: &SystemParams<T>, mode: Mode, options: &NumericOptions) -> Result<T> {
    let l = build_liouvillian(params, options.truncation, options.dephasing)?;
    g2_zero(&steady_state(&l)?, mode)
}

/// Stationary delayed correlation g²(τ) by the quantum regression theorem:
/// `B(τ) = e^{Lτ}[a ρ_ss a†]`, `g²(τ) = Tr[a†a B(τ)] / ⟨a†a⟩²`.
pub fn g2_tau<T: Real>(
    params: &SystemParams<T>,
    tau_grid: &[T],
    mode: Mode,
    options: &NumericOptions,
) -> Result<CorrelationCurve<T>> {
    let l = build_liouvillian(params, options.truncation, options.dephasing)?;
    let rho = steady_state(&l)?;
    let ops = ModeOperators::<T>::new(options.truncation)?;
    let a = ops.lowering(mode);
    let number = ops.number(mode);
    let n = expectation(&number, &rho)?.re;
    if !(n.as_f64() > OCCUPATION_FLOOR) {
        return Err(Error::Unpopulated {
            mode: mode.label(),
            occupation: n.as_f64(),
        });
    }
    let b0 = a.matmul(rho.operator())?.matmul(&a.adjoint())?;
    let traj = propagate(&l, vectorize(&b0), tau_grid, options.propagation)?;
    let d = options.truncation.total();
    let points = tau_grid
        .iter()
        .zip(traj)
        .map(|(&tau, v)| {
            // Tr[N B] with N diagonal
            let tr: T = (0..d).map(|i| (number.get(i, i) * v[i + d * i]).re).sum();
            CurvePoint::new(tau, Some(tr / (n * n)))
        })
        .collect();
    Ok(CorrelationCurve::new(
        format!("g2_tau_{}", mode.label()),
        "tau",
        points,
        *params,
    ))
}
