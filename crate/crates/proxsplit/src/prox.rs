//! Constrained proximal operators for the structured piece kinds, blockwise
//! composition for components, the Moreau-envelope evaluator, and a
//! brute-force grid oracle used for verification.
//!
//! All operators solve
//!
//! ```text
//! argmin { h(y) + (1/(2 beta)) ||y - z||^2 : y in the piece's sub-box }
//! ```
//!
//! exactly (closed forms, monotone bisection) or to high accuracy (projected
//! gradient for the box-constrained quadratic form).

use crate::domain::{BoxSet, Component, PieceKind};
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::scalar::{s, Scalar};

/// Default inner-solver tolerance: target on the projected-gradient
/// residual `||y - P(y - grad)||`.
pub const DEFAULT_INNER_TOL: f64 = 1e-10;

/// Iteration cap for the projected-gradient inner solver.
const INNER_CAP: usize = 1_000_000;

/// Prox of `h(t) = -t^2 - t` over `[lo, hi]`.
///
/// The inner objective `-y^2 - y + (y - z)^2 / (2 beta)` is strictly convex
/// for `beta < 1/2` (clamped stationary point `(z + beta)/(1 - 2 beta)`) and
/// concave for `beta >= 1/2`, where the minimum sits at an endpoint; exact
/// endpoint ties break toward `hi` for deterministic traces.
pub fn prox_negquad_1d<S: Scalar>(z: S, beta: S, lo: S, hi: S) -> Result<S> {
    if !(beta > S::zero()) {
        return Err(Error::invalid("beta must be positive"));
    }
    if !(lo < hi) {
        return Err(Error::invalid("interval must satisfy lo < hi"));
    }
    let half = s::<S>(0.5);
    if beta < half {
        let y = (z + beta) / (S::one() - s::<S>(2.0) * beta);
        Ok(y.max(lo).min(hi))
    } else {
        let obj = |y: S| -y * y - y + (y - z) * (y - z) / (s::<S>(2.0) * beta);
        if obj(lo) < obj(hi) {
            Ok(lo)
        } else {
            Ok(hi)
        }
    }
}

/// Prox of `h(t) = 5t + ln(10t + 1)` over `[lo, hi]` with `0 <= lo < hi`.
///
/// The inner derivative `phi(y) = 5 + 10/(10y+1) + (y - z)/beta` is convex in
/// `y` with its minimum at `y = sqrt(beta) - 1/10`, so the global minimizer of
/// the inner objective is `lo`, `hi`, or the rightmost root of `phi` (where
/// `phi` crosses from negative to positive), found by safeguarded bisection
/// on the increasing branch to width `tol`.
pub fn prox_linlog_1d<S: Scalar>(z: S, beta: S, lo: S, hi: S, tol: S) -> Result<S> {
    if !(beta > S::zero()) || !(tol > S::zero()) {
        return Err(Error::invalid("beta and tol must be positive"));
    }
    if !(lo >= S::zero() && lo < hi) {
        return Err(Error::invalid("interval must satisfy 0 <= lo < hi"));
    }
    let ten = s::<S>(10.0);
    let phi = |y: S| s::<S>(5.0) + ten / (ten * y + S::one()) + (y - z) / beta;
    let obj = |y: S| {
        s::<S>(5.0) * y
            + (ten * y + S::one()).ln()
            + (y - z) * (y - z) / (s::<S>(2.0) * beta)
    };

    // Left edge of the increasing branch of phi inside [lo, hi].
    let dip = beta.sqrt() - s::<S>(0.1);
    let a = dip.max(lo).min(hi);

    let mut best = lo;
    let mut best_val = obj(lo);
    let hi_val = obj(hi);
    if hi_val < best_val {
        best = hi;
        best_val = hi_val;
    }
    // Interior candidate: root of phi on the increasing branch [a, hi].
    if phi(a) < S::zero() && phi(hi) > S::zero() {
        let mut left = a;
        let mut right = hi;
        let tol = tol.max(S::epsilon() * (hi - lo));
        for _ in 0..200 {
            if right - left <= tol {
                break;
            }
            let mid = (left + right) * s::<S>(0.5);
            if phi(mid) < S::zero() {
                left = mid;
            } else {
                right = mid;
            }
        }
        let root = (left + right) * s::<S>(0.5);
        if obj(root) < best_val {
            best = root;
        }
    }
    Ok(best)
}

/// Smallest projected-gradient residual resolvable in floating point for the
/// composite `y' M y + ||y - z||^2 / (2 beta)`: the `(y - z)/beta` term
/// amplifies cancellation noise by `1/beta` once iterates stop moving.
fn residual_floor<S: Scalar>(z: &[S], beta: S, m_norm: S) -> S {
    let z_scale = z
        .iter()
        .fold(S::one(), |acc, &v| acc.max(v.abs()));
    let dim = s::<S>(z.len() as f64).sqrt();
    s::<S>(16.0) * S::epsilon() * dim * z_scale * (S::one() / beta + s::<S>(2.0) * m_norm + S::one())
}

/// Projected-gradient solve of the box-constrained prox of a PSD quadratic
/// form, with fixed step `1/(2 ||M||_2 + 1/beta)`. Terminates when the
/// residual `||y - P(y - grad)||` reaches `tol` (or its floating-point floor)
/// or when the iterate stops moving bitwise.
fn pg_quadform_prox<S: Scalar>(
    m: &SymMatrix<S>,
    m_norm: S,
    z: &[S],
    beta: S,
    lo: &[S],
    hi: &[S],
    tol: S,
) -> Result<Vec<S>> {
    let n = z.len();
    if m.dim() != n || lo.len() != n || hi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.dim(),
        });
    }
    if !(beta > S::zero()) || !(tol > S::zero()) {
        return Err(Error::invalid("beta and tol must be positive"));
    }
    let clamp = |v: S, i: usize| v.max(lo[i]).min(hi[i]);
    let mut y: Vec<S> = z.iter().enumerate().map(|(i, &v)| clamp(v, i)).collect();
    let mut y_next = vec![S::zero(); n];
    let step = S::one() / (s::<S>(2.0) * m_norm + S::one() / beta);
    let floor = residual_floor(z, beta, m_norm);
    let mut my = vec![S::zero(); n];
    let mut residual = S::zero();
    for _ in 0..INNER_CAP {
        m.matvec(&y, &mut my);
        let mut resid_sq = S::zero();
        let mut moved = false;
        for i in 0..n {
            let g = s::<S>(2.0) * my[i] + (y[i] - z[i]) / beta;
            let r = y[i] - clamp(y[i] - g, i);
            resid_sq += r * r;
            let yi = clamp(y[i] - step * g, i);
            if yi != y[i] {
                moved = true;
            }
            y_next[i] = yi;
        }
        residual = resid_sq.sqrt();
        if residual <= tol || residual <= floor || !moved {
            return Ok(y);
        }
        std::mem::swap(&mut y, &mut y_next);
    }
    Err(Error::ConvergenceFailure {
        iterations: INNER_CAP,
        residual: residual.to_f64().unwrap_or(f64::NAN),
    })
}

/// Prox of `h(u) = u' M u` over the sub-box `[lo, hi]`; the inner problem is
/// strongly convex with modulus at least `1/beta`, so the minimizer is unique.
pub fn prox_quadform_box<S: Scalar>(
    m: &SymMatrix<S>,
    z: &[S],
    beta: S,
    lo: &[S],
    hi: &[S],
    tol: S,
) -> Result<Vec<S>> {
    pg_quadform_prox(m, m.spectral_norm(), z, beta, lo, hi, tol)
}

/// Constrained prox of a whole component at a full-dimensional center `z`.
///
/// Pieces act on disjoint blocks, so the prox splits exactly: each block is
/// set by its piece's 1-D or quadratic-form prox, and coordinates no piece
/// reads are projected onto the box (the prox of the zero function plus the
/// box indicator), keeping iterates feasible.
pub fn prox_component<S: Scalar>(
    component: &Component<S>,
    z: &[S],
    beta: S,
    feasible: &BoxSet<S>,
    tol: S,
) -> Result<Vec<S>> {
    if z.len() != feasible.dim() {
        return Err(Error::DimensionMismatch {
            expected: feasible.dim(),
            got: z.len(),
        });
    }
    let mut out = feasible.project(z)?;
    for piece in component.pieces() {
        let (lo, hi) = piece.bounds();
        match piece.kind() {
            PieceKind::NegQuad1D => {
                let c = piece.coords()[0];
                out[c] = prox_negquad_1d(z[c], beta, lo[0], hi[0])?;
            }
            PieceKind::LinLog1D => {
                let c = piece.coords()[0];
                out[c] = prox_linlog_1d(z[c], beta, lo[0], hi[0], tol)?;
            }
            PieceKind::QuadForm(m) => {
                let zb: Vec<S> = piece.coords().iter().map(|&c| z[c]).collect();
                let yb = pg_quadform_prox(m, piece.matrix_norm(), &zb, beta, lo, hi, tol)?;
                for (slot, &c) in piece.coords().iter().enumerate() {
                    out[c] = yb[slot];
                }
            }
        }
    }
    Ok(out)
}

/// Moreau envelope of a component at `z`: evaluates the prox at
/// `beta = 1/alpha` and returns `h(prox) + (alpha/2) ||z - prox||^2`.
/// Finite for every `z`.
pub fn moreau_envelope<S: Scalar>(
    component: &Component<S>,
    z: &[S],
    feasible: &BoxSet<S>,
    tol: S,
) -> Result<S> {
    let alpha = component.modulus();
    let beta = S::one() / alpha;
    let prox = prox_component(component, z, beta, feasible, tol)?;
    let h = component.eval(&prox)?;
    let d2: S = z
        .iter()
        .zip(&prox)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    Ok(h + alpha * s::<S>(0.5) * d2)
}

/// Brute-force 1-D prox oracle: scans a uniform grid of pitch `resolution`
/// over `[lo, hi]`, then runs a golden-section refinement inside the winning
/// cell. Independent of every closed-form/bisection path above.
pub fn grid_prox_oracle<S: Scalar>(
    h: impl Fn(S) -> S,
    z: S,
    beta: S,
    lo: S,
    hi: S,
    resolution: S,
) -> Result<S> {
    if !(lo < hi) {
        return Err(Error::invalid("interval must satisfy lo < hi"));
    }
    if !(resolution > S::zero()) || !(beta > S::zero()) {
        return Err(Error::invalid("resolution and beta must be positive"));
    }
    let obj = |y: S| h(y) + (y - z) * (y - z) / (s::<S>(2.0) * beta);
    let cells = ((hi - lo) / resolution)
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    let width = (hi - lo) / s::<S>(cells as f64);
    let mut best_i = 0usize;
    let mut best_val = S::infinity();
    for i in 0..=cells {
        let y = if i == cells {
            hi
        } else {
            lo + width * s::<S>(i as f64)
        };
        let v = obj(y);
        if v < best_val {
            best_val = v;
            best_i = i;
        }
    }
    // Golden-section search over the two cells around the winner.
    let mut a = if best_i == 0 { lo } else { lo + width * s::<S>(best_i as f64 - 1.0) };
    let mut b = if best_i >= cells {
        hi
    } else {
        lo + width * s::<S>(best_i as f64 + 1.0)
    };
    let inv_phi = s::<S>(0.618_033_988_749_894_8);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = obj(c);
    let mut fd = obj(d);
    for _ in 0..200 {
        if (b - a).abs() <= S::epsilon() * (hi - lo).max(S::one()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = obj(d);
        }
    }
    Ok((a + b) * s::<S>(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BlockPiece;
    use crate::rng::SplitMix64;
    use crate::scalar::{dist2, dot};

    const TOL: f64 = 1e-12;

    fn negquad(y: f64) -> f64 {
        -y * y - y
    }

    fn linlog(y: f64) -> f64 {
        5.0 * y + (10.0 * y + 1.0).ln()
    }

    #[test]
    fn negquad_prox_frozen_values() {
        // Grid oracle at 1e-7 confirms these; frozen closed forms:
        // (z + beta)/(1 - 2 beta) for the convex regime, endpoint otherwise.
        assert!((prox_negquad_1d::<f64>(1.0, 0.1, 0.0, 2.0).unwrap() - 1.375).abs() < 1e-15);
        assert!((prox_negquad_1d::<f64>(0.0, 0.1, 0.0, 2.0).unwrap() - 0.125).abs() < 1e-15);
        assert_eq!(prox_negquad_1d::<f64>(0.0, 1.0, 0.0, 2.0).unwrap(), 2.0);
        assert!(prox_negquad_1d::<f64>(1.0, 0.0, 0.0, 2.0).is_err());
        assert!(prox_negquad_1d::<f64>(1.0, 0.1, 2.0, 2.0).is_err());
    }

    #[test]
    fn negquad_prox_is_constant_on_inbox_centers_at_large_beta() {
        // For z in [0, r] and beta >= 1/2 the endpoint comparison always
        // picks r, so the map is constant (hence firmly nonexpansive there).
        for z in [0.0_f64, 0.3, 1.0, 1.7, 2.0] {
            assert_eq!(prox_negquad_1d(z, 0.5, 0.0, 2.0).unwrap(), 2.0);
            assert_eq!(prox_negquad_1d(z, 3.0, 0.0, 2.0).unwrap(), 2.0);
        }
    }

    #[test]
    fn linlog_prox_frozen_values() {
        // Derivative positive on all of [1, 2] -> left endpoint.
        assert_eq!(prox_linlog_1d::<f64>(1.5, 0.5, 1.0, 2.0, TOL).unwrap(), 1.0);
        // Interior root of 4y - 7 + 10/(10y+1); equivalently the larger root
        // of t^2 - 18.5 t + 25 with t = 10y + 1: y = 1.603219120813669.
        let y = prox_linlog_1d::<f64>(3.0, 0.25, 1.0, 2.0, TOL).unwrap();
        assert!((y - 1.603_219_120_813_669).abs() < 1e-9, "y = {y}");
        // Slope >= 5 dominates a weak proximal pull.
        assert_eq!(prox_linlog_1d::<f64>(1.0, 10.0, 1.0, 2.0, TOL).unwrap(), 1.0);
        assert!(prox_linlog_1d::<f64>(1.0, 0.25, 2.0, 1.0, TOL).is_err());
        assert!(prox_linlog_1d::<f64>(1.0, 0.25, -0.5, 1.0, TOL).is_err());
    }

    #[test]
    fn quadform_prox_frozen_values() {
        // Scalar M = 1, box [0,5], z = 4, beta = 1: root of 2y + (y-4) = 0.
        let m = SymMatrix::scalar(1.0_f64);
        let y = prox_quadform_box(&m, &[4.0], 1.0, &[0.0], &[5.0], 1e-10).unwrap();
        assert!((y[0] - 4.0 / 3.0).abs() < 1e-9);
        // M = 0 projects the (in-box) center.
        let z = vec![1.0_f64, 2.0];
        let y = prox_quadform_box(&SymMatrix::zeros(2), &z, 1.0, &[0.0, 0.0], &[5.0, 5.0], 1e-10)
            .unwrap();
        assert_eq!(y, z);
        // Separable identity case: coordinate 1 clamps at 0.
        let y = prox_quadform_box(
            &SymMatrix::<f64>::identity(2),
            &[-2.0, 1.0],
            1.0,
            &[0.0, 0.0],
            &[5.0, 5.0],
            1e-10,
        )
        .unwrap();
        assert!(y[0].abs() < 1e-12);
        assert!((y[1] - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn quadform_prox_residual_meets_tolerance() {
        let mut rng = SplitMix64::new(40);
        let n = 6;
        let q = crate::linalg::orthonormalize(
            n,
            &(0..n * n).map(|_| rng.next_normal()).collect::<Vec<f64>>(),
        )
        .unwrap();
        let d: Vec<f64> = (0..n).map(|_| rng.next_normal().abs() + 0.3).collect();
        let m = crate::linalg::from_orthonormal_eigen(n, &q, &d);
        let lo = vec![0.0; n];
        let hi = vec![5.0; n];
        for _ in 0..50 {
            let z: Vec<f64> = (0..n).map(|_| 6.0 * rng.next_f64() - 0.5).collect();
            let beta = 0.05 + rng.next_f64();
            let y = prox_quadform_box(&m, &z, beta, &lo, &hi, 1e-10).unwrap();
            // Residual check against the definition.
            let mut my = vec![0.0; n];
            m.matvec(&y, &mut my);
            let mut resid = 0.0;
            for i in 0..n {
                let g = 2.0 * my[i] + (y[i] - z[i]) / beta;
                let r = y[i] - (y[i] - g).clamp(lo[i], hi[i]);
                resid += r * r;
            }
            assert!(resid.sqrt() <= 1e-10, "residual {}", resid.sqrt());
        }
    }

    #[test]
    fn component_prox_blockwise() {
        // NegQuad on coordinate 0, untouched coordinate projected.
        let b = BoxSet::new(vec![0.0, 0.0], vec![2.0, 5.0]).unwrap();
        let c = Component::new(vec![BlockPiece::neg_quad(0, &b).unwrap()]).unwrap();
        let y = prox_component(&c, &[1.0, 7.0], 0.1, &b, TOL).unwrap();
        assert!((y[0] - 1.375).abs() < 1e-15);
        assert_eq!(y[1], 5.0);

        // Component with zero pieces is the box projection.
        let empty = Component::new(vec![]).unwrap();
        let y = prox_component(&empty, &[-3.0, 2.0], 0.7, &b, TOL).unwrap();
        assert_eq!(y, vec![0.0, 2.0]);

        // A single full-span quadratic form matches prox_quadform_box.
        let b5 = BoxSet::new(vec![0.0, 0.0], vec![5.0, 5.0]).unwrap();
        let full = Component::new(vec![BlockPiece::quad_form(
            vec![0, 1],
            SymMatrix::identity(2),
            &b5,
        )
        .unwrap()])
        .unwrap();
        let z = [-2.0, 1.0];
        let via_component = prox_component(&full, &z, 1.0, &b5, 1e-10).unwrap();
        let direct =
            prox_quadform_box(&SymMatrix::identity(2), &z, 1.0, &[0.0, 0.0], &[5.0, 5.0], 1e-10)
                .unwrap();
        assert_eq!(via_component, direct);

        assert!(prox_component(&c, &[1.0], 0.1, &b, TOL).is_err());
    }

    #[test]
    fn moreau_envelope_frozen_values() {
        let b = BoxSet::new(vec![0.0], vec![2.0]).unwrap();
        let zero = Component::new(vec![]).unwrap();
        assert_eq!(moreau_envelope(&zero, &[1.0], &b, TOL).unwrap(), 0.0);

        // NegQuad on [0,2], alpha = 1, z = 0: prox at beta = 1 is 2, so the
        // envelope is -6 + (1/2)*4 = -4.
        let neg = Component::new(vec![BlockPiece::neg_quad(0, &b).unwrap()]).unwrap();
        let v = moreau_envelope(&neg, &[0.0], &b, TOL).unwrap();
        assert!((v + 4.0).abs() < 1e-12);

        // Quadratic M = 1 on [0,5], z = 4: value 48/9 at y = 4/3.
        let b5 = BoxSet::new(vec![0.0], vec![5.0]).unwrap();
        let quad = Component::new(vec![BlockPiece::quad_form(
            vec![0],
            SymMatrix::scalar(1.0),
            &b5,
        )
        .unwrap()])
        .unwrap();
        let v: f64 = moreau_envelope(&quad, &[4.0], &b5, 1e-12).unwrap();
        assert!((v - 48.0 / 9.0).abs() < 1e-8);
    }

    #[test]
    fn grid_oracle_frozen_values() {
        // Quadratic y^2 with beta = 1, z = 1: closed form 1/3.
        let y = grid_prox_oracle(|y: f64| y * y, 1.0, 1.0, 0.0, 5.0, 1e-4).unwrap();
        assert!((y - 1.0 / 3.0).abs() < 1e-6);
        // Constant function: pure projection (clamp of z).
        let y = grid_prox_oracle(|_| 0.0_f64, 7.0, 0.5, 0.0, 2.0, 1e-4).unwrap();
        assert!((y - 2.0).abs() < 1e-6);
        let y = grid_prox_oracle(|_| 0.0_f64, 0.6, 0.5, 0.0, 2.0, 1e-4).unwrap();
        assert!((y - 0.6).abs() < 1e-6);
        assert!(grid_prox_oracle(|y: f64| y, 0.0, 1.0, 2.0, 2.0, 1e-4).is_err());
    }

    #[test]
    fn one_dimensional_proxes_match_grid_oracle() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..1000 {
            let z = 4.0 * rng.next_f64() - 1.0;
            let beta = 10.0_f64.powf(2.0 * rng.next_f64() - 1.5); // (0.03, 3)
            let got = prox_negquad_1d(z, beta, 0.0, 2.0).unwrap();
            let want = grid_prox_oracle(negquad, z, beta, 0.0, 2.0, 1e-5).unwrap();
            assert!(
                (got - want).abs() < 1e-6,
                "negquad z={z} beta={beta}: {got} vs {want}"
            );

            let z = 4.0 * rng.next_f64();
            let got = prox_linlog_1d(z, beta, 1.0, 2.0, TOL).unwrap();
            let want = grid_prox_oracle(linlog, z, beta, 1.0, 2.0, 1e-5).unwrap();
            assert!(
                (got - want).abs() < 1e-6,
                "linlog z={z} beta={beta}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn linlog_prox_handles_nonmonotone_derivative() {
        // Large beta with a far-right center: the derivative dips negative in
        // the interior, so the interior local minimum must be compared with
        // the left endpoint.
        for (z, beta) in [(25.0, 4.0), (40.0, 9.0), (12.0, 2.56)] {
            let got = prox_linlog_1d(z, beta, 1.0, 2.0, TOL).unwrap();
            let want = grid_prox_oracle(linlog, z, beta, 1.0, 2.0, 1e-6).unwrap();
            assert!(
                (got - want).abs() < 1e-6,
                "z={z} beta={beta}: {got} vs {want}"
            );
        }
    }

    fn sample_inbox(rng: &mut SplitMix64, feasible: &BoxSet<f64>) -> Vec<f64> {
        feasible.sample(rng)
    }

    fn test_components() -> (BoxSet<f64>, Vec<Component<f64>>) {
        let b = BoxSet::new(vec![0.0, 1.0, 0.0], vec![2.0, 2.0, 5.0]).unwrap();
        let mut rng = SplitMix64::new(8);
        let q = crate::linalg::orthonormalize(
            2,
            &(0..4).map(|_| rng.next_normal()).collect::<Vec<f64>>(),
        )
        .unwrap();
        let m = crate::linalg::from_orthonormal_eigen(2, &q, &[0.4, 1.7]);
        let comps = vec![
            Component::new(vec![BlockPiece::neg_quad(0, &b).unwrap()]).unwrap(),
            Component::new(vec![BlockPiece::lin_log(1, &b).unwrap()]).unwrap(),
            Component::new(vec![BlockPiece::quad_form(vec![0, 2], m, &b).unwrap()]).unwrap(),
        ];
        (b, comps)
    }

    #[test]
    fn descent_and_prox_convex_inequalities_hold() {
        // For x-bar = prox(z) with z, x in the box and beta above the
        // certified threshold:
        //   f(x-bar) - f(x) <= (a/2b)(||z-x||^2 - ||x-bar-x||^2)
        //   f(x-bar) - f(x) <= (a/b) <x-bar - z, x - x-bar>
        let (b, comps) = test_components();
        let mut rng = SplitMix64::new(21);
        for _ in 0..1000 {
            let which = rng.next_index(comps.len());
            let comp = &comps[which];
            let alpha = comp.modulus();
            let beta_lo = comp.certified_beta_floor().max(0.01);
            let beta = beta_lo + (2.0 - beta_lo) * rng.next_f64();
            let z = sample_inbox(&mut rng, &b);
            let x = sample_inbox(&mut rng, &b);
            let xbar = prox_component(comp, &z, beta, &b, TOL).unwrap();
            let lhs = comp.eval(&xbar).unwrap() - comp.eval(&x).unwrap();
            let dz = dist2(&z, &x);
            let dx = dist2(&xbar, &x);
            let rhs_lemma = alpha / (2.0 * beta) * (dz * dz - dx * dx);
            assert!(lhs <= rhs_lemma + 1e-9, "lemma slack {}", rhs_lemma - lhs);
            let diff1: Vec<f64> = xbar.iter().zip(&z).map(|(a, b)| a - b).collect();
            let diff2: Vec<f64> = x.iter().zip(&xbar).map(|(a, b)| a - b).collect();
            let rhs_def = alpha / beta * dot(&diff1, &diff2);
            assert!(lhs <= rhs_def + 1e-9, "definition slack {}", rhs_def - lhs);
        }
    }

    #[test]
    fn prox_is_firmly_nonexpansive_at_beta_one_over_alpha() {
        let (b, comps) = test_components();
        let mut rng = SplitMix64::new(22);
        for comp in &comps {
            let beta = 1.0 / comp.modulus();
            for _ in 0..1000 {
                let z1 = sample_inbox(&mut rng, &b);
                let z2 = sample_inbox(&mut rng, &b);
                let x1 = prox_component(comp, &z1, beta, &b, TOL).unwrap();
                let x2 = prox_component(comp, &z2, beta, &b, TOL).unwrap();
                let dx: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a - b).collect();
                let dz: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a - b).collect();
                let lhs = dot(&dx, &dx);
                let rhs = dot(&dx, &dz);
                assert!(lhs <= rhs + 1e-9, "firm nonexpansiveness slack {}", rhs - lhs);
            }
        }
    }

    #[test]
    fn prox_beats_random_feasible_candidates() {
        let (b, comps) = test_components();
        let mut rng = SplitMix64::new(23);
        for _ in 0..200 {
            let comp = &comps[rng.next_index(comps.len())];
            let beta = 0.05 + 1.5 * rng.next_f64();
            let z = sample_inbox(&mut rng, &b);
            let xbar = prox_component(comp, &z, beta, &b, TOL).unwrap();
            let inner = |y: &[f64]| {
                let d = dist2(y, &z);
                comp.eval(y).unwrap() + d * d / (2.0 * beta)
            };
            let best = inner(&xbar);
            for _ in 0..10 {
                let cand = sample_inbox(&mut rng, &b);
                assert!(best <= inner(&cand) + 1e-10);
            }
        }
    }

    #[test]
    fn prox_generic_f32_smoke() {
        let y = prox_negquad_1d(1.0_f32, 0.1, 0.0, 2.0).unwrap();
        assert!((y - 1.375).abs() < 1e-6);
    }
}
