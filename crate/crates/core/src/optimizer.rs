//! Parameter sweeps and the (Δ, λ) search for the deepest blockade.

use rayon::prelude::*;

use crate::amplitudes::g2_analytic;
use crate::error::{Error, Result};
use crate::lindblad::{g2_numeric, NumericOptions};
use crate::model::SystemParams;
use crate::operators::Mode;
use crate::scalar::Real;

/// One sample of a correlation curve; `g2 = None` marks a point where the
/// engine could not produce a value.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint<T> {
    pub x: T,
    pub g2: Option<T>,
    pub extra: Vec<T>,
}

impl<T: Real> CurvePoint<T> {
    pub fn new(x: T, g2: Option<T>) -> Self {
        Self {
            x,
            g2,
            extra: Vec::new(),
        }
    }
}

/// Ordered samples of g² against a sweep variable.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationCurve<T> {
    pub sweep_name: String,
    pub x_label: String,
    pub extra_columns: Vec<String>,
    points: Vec<CurvePoint<T>>,
    pub params: SystemParams<T>,
}

impl<T: Real> CorrelationCurve<T> {
    pub fn new(
        sweep_name: impl Into<String>,
        x_label: impl Into<String>,
        points: Vec<CurvePoint<T>>,
        params: SystemParams<T>,
    ) -> Self {
        Self {
            sweep_name: sweep_name.into(),
            x_label: x_label.into(),
            extra_columns: Vec::new(),
            points,
            params,
        }
    }

    pub fn points(&self) -> &[CurvePoint<T>] {
        &self.points
    }

    /// x strictly increasing and every present g² non-negative.
    pub fn is_well_formed(&self) -> bool {
        self.points.windows(2).all(|w| w[1].x > w[0].x)
            && self
                .points
                .iter()
                .all(|p| p.g2.map_or(true, |g| g >= T::zero()))
    }

    /// Point with the smallest g²; ties go to the smallest |x|.
    pub fn argmin(&self) -> Option<&CurvePoint<T>> {
        self.points
            .iter()
            .filter(|p| p.g2.is_some())
            .min_by(|a, b| {
                let (ga, gb) = (a.g2.unwrap(), b.g2.unwrap());
                ga.partial_cmp(&gb)
                    .unwrap()
                    .then(a.x.abs().partial_cmp(&b.x.abs()).unwrap())
            })
    }

    /// Interior samples strictly below both neighbours.
    pub fn local_minima(&self) -> Vec<&CurvePoint<T>> {
        self.points
            .windows(3)
            .filter_map(|w| match (w[0].g2, w[1].g2, w[2].g2) {
                (Some(a), Some(b), Some(c)) if b < a && b < c => Some(&w[1]),
                _ => None,
            })
            .collect()
    }

    pub fn gaps(&self) -> usize {
        self.points.iter().filter(|p| p.g2.is_none()).count()
    }
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScanVariable {
    /// Common detuning Δ = Δ_c = Δ_m.
    Delta,
    Lambda,
    GammaP,
}

impl ScanVariable {
    pub fn label(self) -> &'static str {
        match self {
            ScanVariable::Delta => "delta",
            ScanVariable::Lambda => "lambda",
            ScanVariable::GammaP => "gamma_p",
        }
    }

    pub fn apply<T: Real>(self, params: &SystemParams<T>, value: T) -> SystemParams<T> {
        match self {
            ScanVariable::Delta => params.with_detuning(value),
            ScanVariable::Lambda => params.with_lambda(value),
            ScanVariable::GammaP => params.with_gamma_p(value),
        }
    }
}

/// How g² is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Engine {
    /// Closed-form weak-drive amplitudes.
    Analytic,
    /// Master-equation steady state.
    Numeric(NumericOptions),
}

impl Engine {
    pub fn label(&self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Numeric(_) => "numeric",
        }
    }

    pub fn g2<T: Real>(&self, params: &SystemParams<T>, mode: Mode) -> Result<T> {
        match self {
            Engine::Analytic => g2_analytic(params, mode),
            Engine::Numeric(opts) => g2_numeric(params, mode, opts),
        }
    }
}

/// `n` evenly spaced points on `[lo, hi]`, endpoints included.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / T::from_count(n - 1);
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + step * T::from_count(k) })
        .collect()
}

fn check_range<T: Real>(range: (T, T), n_points: usize) -> Result<()> {
    let (lo, hi) = range;
    if n_points < 2 || !lo.is_finite() || !hi.is_finite() || !(hi > lo) {
        return Err(Error::EmptyRange {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            n_points,
        });
    }
    Ok(())
}

/// Evaluates g² on an even grid of `variable` over `range`.
///
/// Points where the engine fails are kept as gaps. Evaluation runs on the
/// current rayon pool; the output order is the grid order.
pub fn scan<T: Real>(
    params: &SystemParams<T>,
    variable: ScanVariable,
    range: (T, T),
    n_points: usize,
    mode: Mode,
    engine: &Engine,
) -> Result<CorrelationCurve<T>> {
    check_range(range, n_points)?;
    let xs = linspace(range.0, range.1, n_points);
    let points: Vec<CurvePoint<T>> = xs
        .par_iter()
        .map(|&x| CurvePoint::new(x, engine.g2(&variable.apply(params, x), mode).ok()))
        .collect();
    if points.iter().all(|p| p.g2.is_none()) {
        return Err(Error::AllPointsFailed);
    }
    Ok(CorrelationCurve::new(
        format!("{}_{}_{}", engine.label(), mode.label(), variable.label()),
        variable.label(),
        points,
        *params,
    ))
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization on `[lo, hi]`; returns `(x, f(x), final width)`.
pub fn golden_section<T: Real>(mut f: impl FnMut(T) -> T, lo: T, hi: T, tol: T) -> (T, T, T) {
    let r = T::lit(INV_PHI);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut guard = 0;
    while (b - a) > tol && guard < 400 {
        guard += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    (x, fx, b - a)
}

/// Minimizes g² along one variable within `bracket`, on log₁₀ g².
pub fn minimize_along<T: Real>(
    params: &SystemParams<T>,
    variable: ScanVariable,
    bracket: (T, T),
    mode: Mode,
    engine: &Engine,
    tol: T,
) -> Result<(T, T)> {
    check_range(bracket, 2)?;
    let (x, _, _) = golden_section(
        |x| log_objective(engine.g2(&variable.apply(params, x), mode)),
        bracket.0,
        bracket.1,
        tol,
    );
    Ok((x, engine.g2(&variable.apply(params, x), mode)?))
}

fn log_objective<T: Real>(g2: Result<T>) -> T {
    match g2 {
        Ok(g) if g.is_finite() => g.max(T::min_positive_value()).log10(),
        _ => T::infinity(),
    }
}

/// Rectangle searched by [`find_optimum`]; λ bounds may coincide to pin λ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBounds<T> {
    pub delta: (T, T),
    pub lambda: (T, T),
}

impl<T: Real> Default for SearchBounds<T> {
    fn default() -> Self {
        Self {
            delta: (T::lit(-2.0), T::lit(12.0)),
            lambda: (T::zero(), T::lit(1e-3)),
        }
    }
}

/// Grid sizes and stopping rules of the search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchSettings {
    pub delta_points: usize,
    pub lambda_points: usize,
    pub max_candidates: usize,
    pub max_iterations: usize,
    /// Target golden-section bracket in Δ (ω_b units).
    pub delta_tol: f64,
    /// Target golden-section bracket in λ (ω_b units).
    pub lambda_tol: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            delta_points: 200,
            lambda_points: 50,
            max_candidates: 8,
            max_iterations: 400,
            delta_tol: 1e-7,
            lambda_tol: 1e-10,
        }
    }
}

/// Provenance of an [`Optimum`].
#[derive(Clone, Debug, PartialEq)]
pub struct SearchMetadata<T> {
    pub bounds: SearchBounds<T>,
    pub settings: SearchSettings,
    pub candidates: usize,
    pub iterations: usize,
    pub delta_bracket: T,
    pub lambda_bracket: T,
    /// `(Δ, λ, g²)` after each accepted refinement sweep of the winning candidate.
    pub trace: Vec<(T, T, T)>,
}

/// Location and depth of the deepest analytic g² dip.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum<T> {
    pub delta_opt: T,
    pub lambda_opt: T,
    pub g2_min: T,
    pub mode: Mode,
    pub metadata: SearchMetadata<T>,
}

struct Refined<T> {
    delta: T,
    lambda: T,
    g2: T,
    iterations: usize,
    delta_bracket: T,
    lambda_bracket: T,
    trace: Vec<(T, T, T)>,
}

/// Searches `bounds` for the (Δ, λ) pair minimizing the analytic g²(0).
///
/// A coarse grid on log₁₀ g² seeds every interior local minimum (up to
/// `max_candidates`), each refined by alternating golden-section searches
/// in Δ and λ. The deepest refined dip wins; ties go to the smallest |Δ|.
pub fn find_optimum<T: Real>(
    params: &SystemParams<T>,
    mode: Mode,
    bounds: SearchBounds<T>,
    settings: SearchSettings,
) -> Result<Optimum<T>> {
    params.validate()?;
    let (dlo, dhi) = bounds.delta;
    let (llo, lhi) = bounds.lambda;
    if !(dhi > dlo) || !(lhi >= llo) || settings.delta_points < 3 {
        return Err(Error::EmptyRange {
            lo: dlo.as_f64(),
            hi: dhi.as_f64(),
            n_points: settings.delta_points,
        });
    }
    let pinned = lhi == llo;
    let deltas = linspace(dlo, dhi, settings.delta_points);
    let lambdas = if pinned {
        vec![llo]
    } else {
        linspace(llo, lhi, settings.lambda_points.max(2))
    };
    let nl = lambdas.len();
    let objective = |delta: T, lambda: T| {
        log_objective(g2_analytic(&params.with_detuning(delta).with_lambda(lambda), mode))
    };
    let grid: Vec<T> = deltas
        .par_iter()
        .flat_map_iter(|&d| lambdas.iter().map(move |&l| (d, l)))
        .map(|(d, l)| objective(d, l))
        .collect();
    let at = |i: usize, j: usize| grid[i * nl + j];

    let mut seeds = Vec::new();
    for i in 1..deltas.len() - 1 {
        for j in 0..nl {
            let v = at(i, j);
            if !v.is_finite() && v > T::zero() {
                continue;
            }
            let mut is_min = true;
            for di in [-1i64, 0, 1] {
                for dj in [-1i64, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if nj < 0 || nj >= nl as i64 {
                        continue;
                    }
                    if at(ni as usize, nj as usize) < v {
                        is_min = false;
                    }
                }
            }
            if is_min {
                seeds.push((v, i, j));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    seeds.truncate(settings.max_candidates);

    let dstep = deltas[1] - deltas[0];
    let lstep = if pinned { T::zero() } else { lambdas[1] - lambdas[0] };
    let dtol = T::lit(settings.delta_tol);
    let ltol = T::lit(settings.lambda_tol);

    let candidates = seeds.len();
    let mut best: Option<Refined<T>> = None;
    for &(_, i, j) in &seeds {
        let refined = refine(
            &objective,
            (deltas[i], lambdas[j]),
            (dstep, lstep),
            bounds,
            (dtol, ltol),
            settings.max_iterations,
        );
        let interior = refined.delta > dlo + dstep * T::lit(0.5) && refined.delta < dhi - dstep * T::lit(0.5);
        if !interior {
            continue;
        }
        let g2 = match g2_analytic(&params.with_detuning(refined.delta).with_lambda(refined.lambda), mode) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let refined = Refined { g2, ..refined };
        best = match best {
            None => Some(refined),
            Some(current) => {
                let better = refined.g2 < current.g2
                    || (refined.g2 == current.g2 && refined.delta.abs() < current.delta.abs());
                Some(if better { refined } else { current })
            }
        };
    }
    let best = best.ok_or(Error::NoInteriorMinimum)?;
    Ok(Optimum {
        delta_opt: best.delta,
        lambda_opt: best.lambda,
        g2_min: best.g2,
        mode,
        metadata: SearchMetadata {
            bounds,
            settings,
            candidates,
            iterations: best.iterations,
            delta_bracket: best.delta_bracket,
            lambda_bracket: best.lambda_bracket,
            trace: best.trace,
        },
    })
}

fn refine<T: Real>(
    objective: &impl Fn(T, T) -> T,
    start: (T, T),
    steps: (T, T),
    bounds: SearchBounds<T>,
    tol: (T, T),
    max_iterations: usize,
) -> Refined<T> {
    let (mut delta, mut lambda) = start;
    let (dstep, lstep) = steps;
    let (dtol, ltol) = tol;
    let pinned = lstep == T::zero();
    let (mut dwin, mut lwin) = (dstep, lstep);
    let (mut dbr, mut lbr) = (dstep, T::zero());
    let mut trace = Vec::new();
    let clamp = |x: T, (lo, hi): (T, T)| x.max(lo).min(hi);
    let mut iterations = 0;

    for it in 0..max_iterations {
        iterations = it + 1;
        let (lo, hi) = (
            clamp(delta - dwin, bounds.delta),
            clamp(delta + dwin, bounds.delta),
        );
        let (d_new, _, width) = golden_section(|d| objective(d, lambda), lo, hi, dtol);
        dbr = width;
        let dmove = (d_new - delta).abs();
        delta = d_new;
        let d_edge = (d_new - lo).abs() <= width || (hi - d_new).abs() <= width;

        let mut lmove = T::zero();
        let mut l_edge = false;
        if !pinned {
            let (lo, hi) = (
                clamp(lambda - lwin, bounds.lambda),
                clamp(lambda + lwin, bounds.lambda),
            );
            let (l_new, _, width) = golden_section(|l| objective(delta, l), lo, hi, ltol);
            lbr = width;
            lmove = (l_new - lambda).abs();
            lambda = l_new;
            l_edge = ((l_new - lo).abs() <= width && lo > bounds.lambda.0)
                || ((hi - l_new).abs() <= width && hi < bounds.lambda.1);
        }
        trace.push((delta, lambda, objective(delta, lambda)));

        // windows track the step size, widened whenever a search pins to its edge
        let four = T::lit(4.0);
        dwin = if d_edge { dwin * T::lit(2.0) } else { (dmove * four).max(dtol * T::lit(100.0)).min(dstep) };
        if !pinned {
            lwin = if l_edge { lwin * T::lit(2.0) } else { (lmove * four).max(ltol * T::lit(100.0)).min(lstep) };
        }
        if !d_edge && !l_edge && dmove <= dtol && lmove <= ltol {
            break;
        }
    }
    Refined {
        delta,
        lambda,
        g2: T::nan(),
        iterations,
        delta_bracket: dbr,
        lambda_bracket: lbr,
        trace,
    }
}
