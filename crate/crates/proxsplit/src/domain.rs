//! Domain types: the feasible box, structured component functions, stepsize
//! schedules, stopping rules and run traces. No algorithmic logic lives here;
//! evaluation and gradients are data-driven formulas.

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::rng::SplitMix64;
use crate::scalar::{s, Scalar};

/// Axis-aligned box `{ x : lower <= x <= upper }` in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet<S> {
    lower: Vec<S>,
    upper: Vec<S>,
}

impl<S: Scalar> BoxSet<S> {
    pub fn new(lower: Vec<S>, upper: Vec<S>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::invalid("box must have at least one coordinate"));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(format!(
                    "invalid bounds at coordinate {i}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    #[inline]
    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    #[inline]
    pub fn upper(&self) -> &[S] {
        &self.upper
    }

    /// Coordinatewise clamp onto the box. Idempotent and nonexpansive.
    pub fn project(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&v, (&lo, &hi))| v.max(lo).min(hi))
            .collect())
    }

    pub fn contains(&self, x: &[S], tol: S) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo - tol && v <= hi + tol)
    }

    pub fn midpoint(&self) -> Vec<S> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| (lo + hi) * s::<S>(0.5))
            .collect()
    }

    /// Uniform sample inside the box.
    pub fn sample(&self, rng: &mut SplitMix64) -> Vec<S> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| lo + (hi - lo) * s::<S>(rng.next_f64()))
            .collect()
    }

    /// Bounds restricted to a coordinate subset.
    pub fn restrict(&self, coords: &[usize]) -> (Vec<S>, Vec<S>) {
        let lo = coords.iter().map(|&c| self.lower[c]).collect();
        let hi = coords.iter().map(|&c| self.upper[c]).collect();
        (lo, hi)
    }
}

/// Largest Euclidean norm attainable on the sub-box `[lo, hi]`.
fn corner_norm<S: Scalar>(lo: &[S], hi: &[S]) -> S {
    lo.iter()
        .zip(hi)
        .map(|(&a, &b)| {
            let m = a.abs().max(b.abs());
            m * m
        })
        .sum::<S>()
        .sqrt()
}

/// The structured function kinds a piece can take.
#[derive(Debug, Clone, PartialEq)]
pub enum PieceKind<S> {
    /// `h(t) = -t^2 - t` on one coordinate.
    NegQuad1D,
    /// `h(t) = 5t + ln(10t + 1)` on one coordinate.
    LinLog1D,
    /// `h(u) = u' M u` with `M` symmetric PSD on a coordinate block.
    QuadForm(SymMatrix<S>),
}

/// One coordinate-block piece of a component, carrying the bounds inherited
/// from the feasible box on its coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPiece<S> {
    pub(crate) kind: PieceKind<S>,
    pub(crate) coords: Vec<usize>,
    pub(crate) lower: Vec<S>,
    pub(crate) upper: Vec<S>,
    /// Cached spectral norm of the quadratic form matrix (zero otherwise).
    pub(crate) matrix_norm: S,
}

/// Relative tolerance for the PSD check at construction. The instance
/// generator produces eigenvalues bounded away from zero; this only guards
/// user-supplied matrices.
const PSD_TOL: f64 = 1e-8;

impl<S: Scalar> BlockPiece<S> {
    pub fn neg_quad(coord: usize, feasible: &BoxSet<S>) -> Result<Self> {
        Self::check_coords(&[coord], feasible.dim())?;
        let (lower, upper) = feasible.restrict(&[coord]);
        Ok(BlockPiece {
            kind: PieceKind::NegQuad1D,
            coords: vec![coord],
            lower,
            upper,
            matrix_norm: S::zero(),
        })
    }

    pub fn lin_log(coord: usize, feasible: &BoxSet<S>) -> Result<Self> {
        Self::check_coords(&[coord], feasible.dim())?;
        let (lower, upper) = feasible.restrict(&[coord]);
        if lower[0] < S::zero() {
            return Err(Error::invalid(
                "lin-log piece requires a nonnegative interval so ln(10t+1) is defined",
            ));
        }
        Ok(BlockPiece {
            kind: PieceKind::LinLog1D,
            coords: vec![coord],
            lower,
            upper,
            matrix_norm: S::zero(),
        })
    }

    pub fn quad_form(coords: Vec<usize>, matrix: SymMatrix<S>, feasible: &BoxSet<S>) -> Result<Self> {
        Self::check_coords(&coords, feasible.dim())?;
        if matrix.dim() != coords.len() {
            return Err(Error::DimensionMismatch {
                expected: coords.len(),
                got: matrix.dim(),
            });
        }
        let norm = matrix.spectral_norm();
        let min_eig = matrix.min_eigenvalue();
        if min_eig < -s::<S>(PSD_TOL) * norm.max(S::one()) {
            return Err(Error::invalid(format!(
                "quadratic form matrix is not PSD (min eigenvalue {min_eig})"
            )));
        }
        let (lower, upper) = feasible.restrict(&coords);
        Ok(BlockPiece {
            kind: PieceKind::QuadForm(matrix),
            coords,
            lower,
            upper,
            matrix_norm: norm,
        })
    }

    fn check_coords(coords: &[usize], dim: usize) -> Result<()> {
        if coords.is_empty() {
            return Err(Error::invalid("piece must read at least one coordinate"));
        }
        for w in coords.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::invalid("piece coordinates must be strictly increasing"));
            }
        }
        if *coords.last().unwrap() >= dim {
            return Err(Error::invalid(format!(
                "piece coordinate {} outside dimension {dim}",
                coords.last().unwrap()
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn kind(&self) -> &PieceKind<S> {
        &self.kind
    }

    #[inline]
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn bounds(&self) -> (&[S], &[S]) {
        (&self.lower, &self.upper)
    }

    /// Cached spectral norm of the quadratic-form matrix (zero for the 1-D
    /// kinds).
    #[inline]
    pub fn matrix_norm(&self) -> S {
        self.matrix_norm
    }

    /// Stepsize floor enforced when validating run configurations:
    /// `1/5` for the lin-log piece, zero otherwise.
    pub fn beta_min(&self) -> S {
        match self.kind {
            PieceKind::LinLog1D => s(0.2),
            _ => S::zero(),
        }
    }

    /// Smallest stepsize at which the prox-convex inequality with modulus 1
    /// provably holds for every pair of points in the piece's sub-box.
    ///
    /// For the 1-D nonconvex quadratic the inequality can only hold once the
    /// prox is pinned at the right endpoint for every in-box center, which
    /// happens for `beta >= (hi - lo)/(1 + lo + hi)`; below that an interior
    /// prox yields a violation of exactly `(x - prox)^2` at the stationary
    /// point. The lin-log certificate needs `beta > 1/5` (same endpoint
    /// mechanism), and convex quadratic forms are covered for every
    /// positive stepsize.
    pub fn certified_beta_floor(&self) -> S {
        match self.kind {
            PieceKind::NegQuad1D => {
                let lo = self.lower[0];
                let hi = self.upper[0];
                (hi - lo) / (S::one() + lo + hi)
            }
            PieceKind::LinLog1D => s(0.2),
            PieceKind::QuadForm(_) => S::zero(),
        }
    }

    /// Evaluates the piece at the coordinates it reads from the full vector.
    pub fn eval(&self, x: &[S]) -> Result<S> {
        let last = *self.coords.last().unwrap();
        if last >= x.len() {
            return Err(Error::DimensionMismatch {
                expected: last + 1,
                got: x.len(),
            });
        }
        Ok(match &self.kind {
            PieceKind::NegQuad1D => {
                let t = x[self.coords[0]];
                -t * t - t
            }
            PieceKind::LinLog1D => {
                let t = x[self.coords[0]];
                s::<S>(5.0) * t + (s::<S>(10.0) * t + S::one()).ln()
            }
            PieceKind::QuadForm(m) => {
                let u: Vec<S> = self.coords.iter().map(|&c| x[c]).collect();
                m.quad_form(&u)
            }
        })
    }

    /// Accumulates the piece gradient into `grad` (full-dimensional).
    pub fn add_gradient(&self, x: &[S], grad: &mut [S]) -> Result<()> {
        let last = *self.coords.last().unwrap();
        if last >= x.len() || grad.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: grad.len(),
            });
        }
        match &self.kind {
            PieceKind::NegQuad1D => {
                let c = self.coords[0];
                grad[c] += -(s::<S>(2.0) * x[c]) - S::one();
            }
            PieceKind::LinLog1D => {
                let c = self.coords[0];
                grad[c] += s::<S>(5.0) + s::<S>(10.0) / (s::<S>(10.0) * x[c] + S::one());
            }
            PieceKind::QuadForm(m) => {
                let u: Vec<S> = self.coords.iter().map(|&c| x[c]).collect();
                let mut mu = vec![S::zero(); u.len()];
                m.matvec(&u, &mut mu);
                for (slot, &c) in self.coords.iter().enumerate() {
                    grad[c] += s::<S>(2.0) * mu[slot];
                }
            }
        }
        Ok(())
    }

    /// Analytic Lipschitz bound for the piece on its sub-box.
    pub fn lipschitz_bound(&self) -> S {
        match &self.kind {
            PieceKind::NegQuad1D => {
                // |h'(t)| = |2t + 1| maximized at an endpoint.
                let lo = self.lower[0];
                let hi = self.upper[0];
                (s::<S>(2.0) * lo + S::one())
                    .abs()
                    .max((s::<S>(2.0) * hi + S::one()).abs())
            }
            PieceKind::LinLog1D => {
                // h'(t) = 5 + 10/(10t+1), decreasing; maximal at the left end.
                s::<S>(5.0) + s::<S>(10.0) / (s::<S>(10.0) * self.lower[0] + S::one())
            }
            PieceKind::QuadForm(_) => {
                s::<S>(2.0) * self.matrix_norm * corner_norm(&self.lower, &self.upper)
            }
        }
    }
}

/// One component function `f_i`: a sum of pieces over pairwise-disjoint
/// coordinate blocks, with its prox-convex modulus and the smallest certified
/// stepsize.
#[derive(Debug, Clone, PartialEq)]
pub struct Component<S> {
    pieces: Vec<BlockPiece<S>>,
    modulus: S,
    beta_min: S,
}

impl<S: Scalar> Component<S> {
    /// Builds a component with modulus 1 (valid for all three piece kinds).
    pub fn new(pieces: Vec<BlockPiece<S>>) -> Result<Self> {
        let mut seen: Vec<usize> = pieces.iter().flat_map(|p| p.coords.iter().copied()).collect();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid(
                "component pieces must act on pairwise-disjoint coordinates",
            ));
        }
        let beta_min = pieces
            .iter()
            .map(|p| p.beta_min())
            .fold(S::zero(), |a, b| a.max(b));
        Ok(Component {
            pieces,
            modulus: S::one(),
            beta_min,
        })
    }

    #[inline]
    pub fn pieces(&self) -> &[BlockPiece<S>] {
        &self.pieces
    }

    #[inline]
    pub fn modulus(&self) -> S {
        self.modulus
    }

    #[inline]
    pub fn beta_min(&self) -> S {
        self.beta_min
    }

    /// Largest certified stepsize floor over the pieces (see
    /// [`BlockPiece::certified_beta_floor`]); inequality checks sample
    /// stepsizes above this.
    pub fn certified_beta_floor(&self) -> S {
        self.pieces
            .iter()
            .map(|p| p.certified_beta_floor())
            .fold(S::zero(), |a, b| a.max(b))
    }

    /// Sum of piece evaluations; `x` need not lie in the box.
    pub fn eval(&self, x: &[S]) -> Result<S> {
        let mut acc = S::zero();
        for p in &self.pieces {
            acc += p.eval(x)?;
        }
        Ok(acc)
    }

    pub fn add_gradient(&self, x: &[S], grad: &mut [S]) -> Result<()> {
        for p in &self.pieces {
            p.add_gradient(x, grad)?;
        }
        Ok(())
    }

    /// Lipschitz bound for the component: pieces act on disjoint blocks, so
    /// the gradient stacks blockwise and the bounds combine in quadrature.
    pub fn lipschitz_bound(&self) -> S {
        self.pieces
            .iter()
            .map(|p| {
                let b = p.lipschitz_bound();
                b * b
            })
            .sum::<S>()
            .sqrt()
    }

    pub fn max_coord(&self) -> usize {
        self.pieces
            .iter()
            .filter_map(|p| p.coords.last().copied())
            .max()
            .unwrap_or(0)
    }
}

/// The full problem: a box, N components, and the certified constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem<S> {
    feasible: BoxSet<S>,
    components: Vec<Component<S>>,
    lipschitz: S,
    modulus: S,
}

impl<S: Scalar> Problem<S> {
    pub fn new(feasible: BoxSet<S>, components: Vec<Component<S>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("problem needs at least one component"));
        }
        for (i, c) in components.iter().enumerate() {
            if c.max_coord() >= feasible.dim() {
                return Err(Error::invalid(format!(
                    "component {i} reads coordinate {} outside dimension {}",
                    c.max_coord(),
                    feasible.dim()
                )));
            }
        }
        let lipschitz = components
            .iter()
            .map(|c| c.lipschitz_bound())
            .fold(S::zero(), |a, b| a.max(b));
        let modulus = components
            .iter()
            .map(|c| c.modulus())
            .fold(S::infinity(), |a, b| a.min(b));
        Ok(Problem {
            feasible,
            components,
            lipschitz,
            modulus,
        })
    }

    #[inline]
    pub fn feasible(&self) -> &BoxSet<S> {
        &self.feasible
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.feasible.dim()
    }

    #[inline]
    pub fn components(&self) -> &[Component<S>] {
        &self.components
    }

    #[inline]
    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    /// Common Lipschitz constant (analytic upper bound over the box).
    #[inline]
    pub fn lipschitz(&self) -> S {
        self.lipschitz
    }

    /// Minimum prox-convex modulus over the components.
    #[inline]
    pub fn modulus(&self) -> S {
        self.modulus
    }

    /// Largest `beta_min` over the components.
    pub fn beta_min(&self) -> S {
        self.components
            .iter()
            .map(|c| c.beta_min())
            .fold(S::zero(), |a, b| a.max(b))
    }

    /// `f(x) = sum_i f_i(x)`.
    pub fn objective(&self, x: &[S]) -> Result<S> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut acc = S::zero();
        for c in &self.components {
            acc += c.eval(x)?;
        }
        Ok(acc)
    }

    /// Exact gradient of the full objective.
    pub fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut grad = vec![S::zero(); x.len()];
        for c in &self.components {
            c.add_gradient(x, &mut grad)?;
        }
        Ok(grad)
    }

    /// Replaces the stored Lipschitz constant. Test hook for checker
    /// sensitivity experiments; the constructor value is a certified bound.
    pub fn override_lipschitz(&mut self, lipschitz: S) {
        self.lipschitz = lipschitz;
    }
}

/// Diminishing stepsize schedule `beta_k = c / (k+1)^p` with `p` in
/// `(1/2, 1]`, so the sum diverges while the squared sum converges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule<S> {
    pub c: S,
    pub p: S,
}

impl<S: Scalar> Schedule<S> {
    #[inline]
    pub fn beta(&self, k: usize) -> S {
        self.c / s::<S>(k as f64 + 1.0).powf(self.p)
    }
}

/// Stop when the successive-iterate distance drops to `epsilon`, or after
/// `max_outer` cycles/iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule<S> {
    pub epsilon: S,
    pub max_outer: usize,
}

impl<S: Scalar> StoppingRule<S> {
    pub fn new(epsilon: S, max_outer: usize) -> Result<Self> {
        if !(epsilon > S::zero()) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if max_outer == 0 {
            return Err(Error::invalid("max_outer must be at least 1"));
        }
        Ok(StoppingRule { epsilon, max_outer })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Permuted,
    Cyclic,
    Stochastic,
}

impl MethodKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodKind::Permuted => "permuted",
            MethodKind::Cyclic => "cyclic",
            MethodKind::Stochastic => "stochastic",
        }
    }
}

impl std::fmt::Display for MethodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MethodKind {
    type Err = Error;

    fn from_str(v: &str) -> Result<Self> {
        match v {
            "permuted" => Ok(MethodKind::Permuted),
            "cyclic" => Ok(MethodKind::Cyclic),
            "stochastic" => Ok(MethodKind::Stochastic),
            other => Err(Error::invalid(format!(
                "unknown method '{other}' (expected cyclic, permuted or stochastic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    EpsilonReached,
    MaxIterations,
}

/// One per-iteration record: the state index `k`, the step taken from it,
/// the objective at `x_k`, optionally the distance from `x_k` to a supplied
/// reference point, and wall time since the run started.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<S> {
    pub k: usize,
    pub step_norm: S,
    pub f_value: S,
    pub dist_to_oracle: Option<S>,
    pub elapsed_ms: f64,
}

/// Result of one run. Full iterates are retained only on request; for the
/// permuted/cyclic method retention stores every inner state, so cycle
/// endpoints sit at stride `N`.
#[derive(Debug, Clone)]
pub struct Trace<S> {
    pub method: MethodKind,
    pub seed: u64,
    pub records: Vec<TraceRecord<S>>,
    pub iterates: Option<Vec<Vec<S>>>,
    pub final_point: Vec<S>,
    pub terminated: Termination,
    pub warnings: Vec<String>,
}

impl<S: Scalar> Trace<S> {
    /// Outer iteration count: cycles for permuted/cyclic, prox steps for the
    /// stochastic method.
    pub fn iterations(&self) -> usize {
        self.records.last().map(|r| r.k + 1).unwrap_or(0)
    }

    pub fn final_step_norm(&self) -> Option<S> {
        self.records.last().map(|r| r.step_norm)
    }

    pub fn elapsed_ms(&self) -> f64 {
        self.records.last().map(|r| r.elapsed_ms).unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::dist2;

    fn unit_box(dim: usize) -> BoxSet<f64> {
        BoxSet::new(vec![0.0; dim], vec![5.0; dim]).unwrap()
    }

    #[test]
    fn box_validation() {
        assert!(BoxSet::new(vec![0.0], vec![-1.0]).is_err());
        assert!(BoxSet::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(BoxSet::<f64>::new(vec![], vec![]).is_err());
    }

    #[test]
    fn project_examples() {
        let b = BoxSet::new(vec![0.0], vec![2.0]).unwrap();
        assert_eq!(b.project(&[-1.0]).unwrap(), vec![0.0]);
        assert_eq!(b.project(&[1.0]).unwrap(), vec![1.0]);
        let b2 = BoxSet::new(vec![0.0, 0.0], vec![2.0, 5.0]).unwrap();
        assert_eq!(b2.project(&[3.0, -1.0]).unwrap(), vec![2.0, 0.0]);
        assert!(b2.project(&[0.0]).is_err());
    }

    #[test]
    fn projection_idempotent_and_nonexpansive() {
        let b = BoxSet::new(vec![-1.0, 0.0, 2.0], vec![1.0, 4.0, 2.5]).unwrap();
        let mut rng = SplitMix64::new(31);
        for _ in 0..500 {
            let x: Vec<f64> = (0..3).map(|_| 10.0 * (rng.next_f64() - 0.5)).collect();
            let y: Vec<f64> = (0..3).map(|_| 10.0 * (rng.next_f64() - 0.5)).collect();
            let px = b.project(&x).unwrap();
            let py = b.project(&y).unwrap();
            assert_eq!(b.project(&px).unwrap(), px);
            assert!(dist2(&px, &py) <= dist2(&x, &y) + 1e-15);
        }
    }

    #[test]
    fn evaluate_piece_examples() {
        let b = unit_box(2);
        // x' I x at (1, 2) = 5
        let quad =
            BlockPiece::quad_form(vec![0, 1], SymMatrix::identity(2), &b).unwrap();
        assert_eq!(quad.eval(&[1.0, 2.0]).unwrap(), 5.0);
        // -t^2 - t at t = 1
        let neg = BlockPiece::neg_quad(0, &b).unwrap();
        assert_eq!(neg.eval(&[1.0, 0.0]).unwrap(), -2.0);
        // 5t + ln(10t+1) at t = 1
        let ll = BlockPiece::lin_log(0, &b).unwrap();
        let got: f64 = ll.eval(&[1.0, 0.0]).unwrap();
        assert!((got - (5.0 + 11.0_f64.ln())).abs() < 1e-14);
        assert!((got - 7.397_895_272_798_371).abs() < 1e-12);
    }

    #[test]
    fn component_and_objective() {
        let b = unit_box(2);
        let zero_quad =
            BlockPiece::quad_form(vec![0, 1], SymMatrix::zeros(2), &b).unwrap();
        let c = Component::new(vec![zero_quad]).unwrap();
        let p = Problem::new(b.clone(), vec![c.clone(), c.clone()]).unwrap();
        assert_eq!(p.objective(&[1.0, 4.0]).unwrap(), 0.0);

        // Additivity: two identical copies double the single value.
        let quad =
            BlockPiece::quad_form(vec![0, 1], SymMatrix::identity(2), &b).unwrap();
        let c = Component::new(vec![quad]).unwrap();
        let p = Problem::new(b, vec![c.clone(), c.clone()]).unwrap();
        let single = c.eval(&[1.0, 2.0]).unwrap();
        assert_eq!(p.objective(&[1.0, 2.0]).unwrap(), 2.0 * single);
        assert!(p.objective(&[1.0]).is_err());
    }

    #[test]
    fn additivity_on_random_points() {
        let b = unit_box(4);
        let mut rng = SplitMix64::new(9);
        let pieces = vec![
            BlockPiece::neg_quad(0, &b).unwrap(),
            BlockPiece::quad_form(vec![1, 3], SymMatrix::identity(2), &b).unwrap(),
        ];
        let c1 = Component::new(pieces).unwrap();
        let c2 = Component::new(vec![BlockPiece::lin_log(2, &b).unwrap()]).unwrap();
        let p = Problem::new(b.clone(), vec![c1.clone(), c2.clone()]).unwrap();
        for _ in 0..100 {
            let x = b.sample(&mut rng);
            let total = p.objective(&x).unwrap();
            let parts = c1.eval(&x).unwrap() + c2.eval(&x).unwrap();
            assert!((total - parts).abs() <= 1e-12 * total.abs().max(1.0));
        }
    }

    #[test]
    fn disjointness_enforced() {
        let b = unit_box(2);
        let a = BlockPiece::neg_quad(0, &b).unwrap();
        let c = BlockPiece::lin_log(0, &b).unwrap();
        assert!(Component::new(vec![a, c]).is_err());
    }

    #[test]
    fn psd_check_rejects_indefinite() {
        let b = unit_box(2);
        let m = SymMatrix::from_rows(2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(BlockPiece::quad_form(vec![0, 1], m, &b).is_err());
    }

    #[test]
    fn lipschitz_bound_holds_on_samples() {
        let b = unit_box(3);
        let mut rng = SplitMix64::new(17);
        let m = {
            let q = crate::linalg::orthonormalize(
                3,
                &(0..9).map(|_| rng.next_normal()).collect::<Vec<f64>>(),
            )
            .unwrap();
            crate::linalg::from_orthonormal_eigen(3, &q, &[0.5, 1.0, 2.0])
        };
        let comps = vec![
            Component::new(vec![
                BlockPiece::neg_quad(0, &b).unwrap(),
                BlockPiece::quad_form(vec![1, 2], SymMatrix::identity(2), &b).unwrap(),
            ])
            .unwrap(),
            Component::new(vec![BlockPiece::quad_form(vec![0, 1, 2], m, &b).unwrap()]).unwrap(),
        ];
        let p = Problem::new(b.clone(), comps).unwrap();
        let lip = p.lipschitz();
        for _ in 0..10_000 {
            let x = b.sample(&mut rng);
            let y = b.sample(&mut rng);
            let d = dist2(&x, &y);
            for c in p.components() {
                let df = (c.eval(&x).unwrap() - c.eval(&y).unwrap()).abs();
                assert!(df <= lip * d + 1e-9, "|df| = {df}, L*d = {}", lip * d);
            }
        }
    }

    #[test]
    fn beta_min_propagates() {
        let b = unit_box(2);
        let c = Component::new(vec![BlockPiece::lin_log(0, &b).unwrap()]).unwrap();
        assert_eq!(c.beta_min(), 0.2);
        let c2 = Component::new(vec![BlockPiece::neg_quad(1, &b).unwrap()]).unwrap();
        assert_eq!(c2.beta_min(), 0.0);
        let p = Problem::new(b, vec![c, c2]).unwrap();
        assert_eq!(p.beta_min(), 0.2);
    }

    #[test]
    fn certified_floor_values() {
        let b = BoxSet::new(vec![0.0_f64, 1.0], vec![2.0, 2.0]).unwrap();
        let neg = BlockPiece::neg_quad(0, &b).unwrap();
        assert!((neg.certified_beta_floor() - 2.0 / 3.0).abs() < 1e-15);
        let ll = BlockPiece::lin_log(1, &b).unwrap();
        assert_eq!(ll.certified_beta_floor(), 0.2);
        let q = BlockPiece::quad_form(vec![0, 1], SymMatrix::identity(2), &b).unwrap();
        assert_eq!(q.certified_beta_floor(), 0.0);
        // The floor certificate is tight: just below it, an adversarial
        // (z, x) pair violates the defining inequality.
        let beta = 0.3; // below 2/3 on [0, 2]
        let xbar = crate::prox::prox_negquad_1d(0.0, beta, 0.0, 2.0).unwrap();
        let lhs = (-xbar * xbar - xbar) - 0.0; // h(xbar) - h(0)
        let rhs = 1.0 / beta * (xbar - 0.0) * (0.0 - xbar);
        assert!(lhs > rhs, "expected a violation below the floor");
    }

    #[test]
    fn schedule_values() {
        let sched = Schedule { c: 1.0_f64, p: 1.0 };
        assert_eq!(sched.beta(0), 1.0);
        assert!((sched.beta(5) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_partial_sum_trend() {
        // Partial sums of beta diverge (keep growing) while partial sums of
        // beta^2 go Cauchy, sampled on a log grid up to 1e6.
        let sched = Schedule { c: 2.0, p: 1.0 };
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut sum_checkpoints = Vec::new();
        let mut sq_tail = Vec::new();
        let mut next_check = 10usize;
        for k in 0..1_000_000usize {
            let b = sched.beta(k);
            sum += b;
            sum_sq += b * b;
            if k + 1 == next_check {
                sum_checkpoints.push(sum);
                sq_tail.push(sum_sq);
                next_check *= 10;
            }
        }
        // Divergence trend: each decade adds roughly c*ln(10).
        for w in sum_checkpoints.windows(2) {
            assert!(w[1] - w[0] > 4.0);
        }
        // Square-summability: tail increments shrink toward zero.
        let diffs: Vec<f64> = sq_tail.windows(2).map(|w| w[1] - w[0]).collect();
        for w in diffs.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(diffs.last().unwrap() < &1e-4);
    }

    #[test]
    fn stopping_rule_validation() {
        assert!(StoppingRule::new(0.0, 10).is_err());
        assert!(StoppingRule::new(1e-8, 0).is_err());
        assert!(StoppingRule::new(1e-8, 1).is_ok());
    }
}
