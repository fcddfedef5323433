//! Exact-degree complex polynomial arithmetic in one variable.
//!
//! Polynomials are stored as dense coefficient vectors `c_0..c_D` (so `c_k`
//! multiplies `z^k`). Trailing zeros are permitted: the declared length and
//! the effective degree are distinct notions, which matters when a section of
//! a degree-`d` line bundle is represented in the `w = 1/z` chart.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Default relative tolerance used when deciding whether a Taylor
/// coefficient counts as nonzero (vanishing-order detection).
pub const DEFAULT_ORDER_TOL: f64 = 1e-6;

/// Default clustering tolerance for root finding, on inputs normalized to
/// unit max-coefficient.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("ZeroPolynomial: operation requires a polynomial that is not identically zero")]
    ZeroPolynomial,
    #[error("DegreeExceedsLineBundle: effective degree {degree} exceeds line-bundle degree {bundle}")]
    DegreeExceedsLineBundle { degree: usize, bundle: usize },
    #[error("RootClusterAmbiguity: near {location} (cluster size {cluster_size}, vanishing order {taylor_order}); input is too ill-conditioned to assign multiplicities")]
    RootClusterAmbiguity {
        location: Complex64,
        cluster_size: usize,
        taylor_order: usize,
    },
    #[error("RootFindingFailed: {0}")]
    RootFindingFailed(String),
}

/// Dense complex polynomial `c_0 + c_1 z + … + c_D z^D`.
#[derive(Debug, Clone)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

impl ComplexPoly {
    /// Builds a polynomial from its coefficient vector (lowest power first).
    /// An empty vector is normalized to the zero polynomial of length 1.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        if coeffs.is_empty() {
            Self {
                coeffs: vec![Complex64::ZERO],
            }
        } else {
            Self { coeffs }
        }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// The monomial `z^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![Complex64::ZERO; k + 1];
        coeffs[k] = Complex64::ONE;
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self {
            coeffs: vec![Complex64::ZERO],
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Declared storage length minus one (the largest representable power).
    pub fn declared_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Index of the last exactly-nonzero coefficient, or `None` for the zero
    /// polynomial.
    pub fn effective_degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| *c != Complex64::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.effective_degree().is_none()
    }

    /// Largest coefficient magnitude; the scale used by all relative
    /// tolerance comparisons.
    pub fn coeff_scale(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> ComplexPoly {
        if self.coeffs.len() <= 1 {
            return ComplexPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        ComplexPoly::new(coeffs)
    }

    /// Represents a section of `O(d)` in the `w = 1/z` chart:
    /// `S̃(w) = w^d · S(1/w)`, i.e. the reversed coefficient sequence padded
    /// to length `d + 1`.
    pub fn chart_swap(&self, d: usize) -> Result<ComplexPoly, PolyError> {
        if let Some(deg) = self.effective_degree() {
            if deg > d {
                return Err(PolyError::DegreeExceedsLineBundle {
                    degree: deg,
                    bundle: d,
                });
            }
        }
        let mut coeffs = vec![Complex64::ZERO; d + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            if k <= d {
                coeffs[d - k] = c;
            }
        }
        Ok(ComplexPoly::new(coeffs))
    }

    /// Coefficients of `p(z0 + ζ)` as a polynomial in `ζ`, i.e. the Taylor
    /// coefficients `p^{(k)}(z0)/k!`, via repeated synthetic division.
    pub fn shifted(&self, z0: Complex64) -> ComplexPoly {
        let n = self.coeffs.len();
        let mut work = self.coeffs.clone();
        let mut out = vec![Complex64::ZERO; n];
        for j in 0..n {
            // Divide the running quotient (stored in work[j..]) by (z - z0);
            // the remainder lands in work[j] and is the next Taylor coefficient.
            let mut rem = Complex64::ZERO;
            for c in work[j..].iter_mut().rev() {
                rem = rem * z0 + *c;
                *c = rem;
            }
            out[j] = work[j];
        }
        ComplexPoly::new(out)
    }

    pub fn add(&self, other: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![Complex64::ZERO; n];
        for (k, slot) in coeffs.iter_mut().enumerate() {
            let a = self.coeffs.get(k).copied().unwrap_or(Complex64::ZERO);
            let b = other.coeffs.get(k).copied().unwrap_or(Complex64::ZERO);
            *slot = a + b;
        }
        ComplexPoly::new(coeffs)
    }

    pub fn sub(&self, other: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![Complex64::ZERO; n];
        for (k, slot) in coeffs.iter_mut().enumerate() {
            let a = self.coeffs.get(k).copied().unwrap_or(Complex64::ZERO);
            let b = other.coeffs.get(k).copied().unwrap_or(Complex64::ZERO);
            *slot = a - b;
        }
        ComplexPoly::new(coeffs)
    }

    pub fn mul(&self, other: &ComplexPoly) -> ComplexPoly {
        if self.is_zero() || other.is_zero() {
            return ComplexPoly::zero();
        }
        let mut coeffs = vec![Complex64::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == Complex64::ZERO {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        ComplexPoly::new(coeffs)
    }

    pub fn scale(&self, factor: Complex64) -> ComplexPoly {
        ComplexPoly::new(self.coeffs.iter().map(|&c| c * factor).collect())
    }
}

impl PartialEq for ComplexPoly {
    /// Equality as polynomials: declared trailing zeros are ignored.
    fn eq(&self, other: &Self) -> bool {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n).all(|k| {
            self.coeffs.get(k).copied().unwrap_or(Complex64::ZERO)
                == other.coeffs.get(k).copied().unwrap_or(Complex64::ZERO)
        })
    }
}

/// One isolated root location with its multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct RootCluster {
    pub location: Complex64,
    pub multiplicity: usize,
    /// Max |p| over the refined eigenvalue approximations absorbed into this
    /// cluster (on the unit-max-coefficient normalization of `p`).
    pub residual: f64,
}

/// Vanishing order and leading Taylor coefficient of `p` at `z0`:
/// the smallest `k` with `|p^{(k)}(z0)/k!| > tol · max|c|`, and that
/// coefficient `u`.
pub fn vanishing_order(
    p: &ComplexPoly,
    z0: Complex64,
    tol: f64,
) -> Result<(usize, Complex64), PolyError> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    let shifted = p.shifted(z0);
    let threshold = tol * p.coeff_scale();
    for (k, &c) in shifted.coeffs().iter().enumerate() {
        if c.norm() > threshold {
            return Ok((k, c));
        }
    }
    // All Taylor coefficients below threshold yet p is nonzero: the shift has
    // destroyed the scale (|z0| huge). Report the largest coefficient.
    let (k, &c) = shifted
        .coeffs()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("nonzero polynomial has coefficients");
    Ok((k, c))
}

/// All complex roots of `p`, grouped into clusters with multiplicities that
/// sum to the effective degree.
///
/// Companion-matrix eigenvalues seed the search; each seed is polished by
/// Newton iteration, seeds are merged by distance, and every cluster's
/// cardinality is cross-checked against the Taylor vanishing order at the
/// cluster mean. A mismatch between the two independent estimates signals an
/// ill-conditioned input and raises `RootClusterAmbiguity`.
pub fn roots_with_multiplicity(
    p: &ComplexPoly,
    cluster_tol: f64,
) -> Result<Vec<RootCluster>, PolyError> {
    let deg = p.effective_degree().ok_or(PolyError::ZeroPolynomial)?;
    if deg == 0 {
        return Ok(Vec::new());
    }
    // Normalize to unit max-coefficient so every tolerance below is relative.
    let scale = p.coeff_scale();
    let normalized = ComplexPoly::new(
        p.coeffs()[..=deg]
            .iter()
            .map(|&c| c / scale)
            .collect::<Vec<_>>(),
    );
    let deriv = normalized.derivative();

    // Exact zero roots come off first: they are common (monomial-type
    // sections), they are exact, and they would otherwise make the companion
    // matrix nilpotent, which eigenvalue iterations handle poorly.
    let zero_mult = normalized
        .coeffs()
        .iter()
        .take_while(|c| **c == Complex64::ZERO)
        .count();
    let cofactor = ComplexPoly::new(normalized.coeffs()[zero_mult..].to_vec());

    let mut seeds = vec![Complex64::ZERO; zero_mult];
    if !cofactor.coeffs().is_empty() && cofactor.effective_degree() != Some(0) {
        seeds.extend(global_root_seeds(&cofactor)?);
    }
    for seed in seeds.iter_mut().skip(zero_mult) {
        *seed = newton_polish(&normalized, &deriv, *seed, 40);
    }
    if std::env::var("KSLOPE_ROOT_DEBUG").is_ok() {
        eprintln!("polished seeds: {seeds:?}");
    }

    // Merge seeds. An m-fold root scatters companion eigenvalues over a disk
    // of radius ~ eps^(1/m) (up to a few e-3 for the quadruple roots this
    // artifact targets), so try a ladder of merge radii and keep the first
    // grouping whose cluster sizes all agree with the Taylor vanishing order
    // at the refined centers.
    let root_scale = 1.0 + seeds.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut ladder = vec![10.0 * cluster_tol];
    ladder.extend(
        [1e-6, 1e-5, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2]
            .iter()
            .map(|f| f * root_scale),
    );
    ladder.retain(|r| *r > 0.0);
    ladder.sort_by(f64::total_cmp);

    // A double-precision m-fold root with local expansion u·(z-z0)^m smears
    // its seeds over the noise basin |u| δ^m ~ ε·Σ|c_k||z0|^k. Accepted
    // cluster members must sit inside the basin, and distinct clusters must
    // be separated by more than their combined one; anything else is a group
    // of genuinely distinct roots wearing one Taylor order.
    let noise_floor = |center: Complex64| -> f64 {
        let r = center.norm();
        f64::EPSILON
            * normalized
                .coeffs()
                .iter()
                .fold((0.0, 1.0), |(acc, pow), c| (acc + c.norm() * pow, pow * r))
                .0
    };
    let basin = |m: usize, center: Complex64, taylor_coeff: f64| -> f64 {
        let floor = (200.0 * noise_floor(center) / taylor_coeff.max(1e-300)).powf(1.0 / m as f64);
        (10.0 * cluster_tol).max(floor)
    };

    let mut clusters = Vec::new();
    let mut first_failure: Option<PolyError> = None;
    'ladder: for &merge_radius in &ladder {
        clusters.clear();
        if std::env::var("KSLOPE_ROOT_DEBUG").is_ok() {
            eprintln!(
                "rung {merge_radius:.3e}: groups {:?}",
                merge_by_distance(&seeds, merge_radius)
                    .iter()
                    .map(|g| g.len())
                    .collect::<Vec<_>>()
            );
        }
        for group in merge_by_distance(&seeds, merge_radius) {
            let m = group.len();
            let mean = group.iter().sum::<Complex64>() / m as f64;
            // Refine the center as a simple root of the (m-1)-th derivative;
            // this converges quadratically even when the root of p is multiple.
            let mut dk = normalized.clone();
            for _ in 0..m.saturating_sub(1) {
                dk = dk.derivative();
            }
            let dk1 = dk.derivative();
            let location = newton_polish(&dk, &dk1, mean, 40);
            // Plain Newton only converges linearly on a multiple root; with
            // the cluster size in hand, a Schroeder pass (step scaled by m)
            // restores quadratic convergence for the member residuals.
            let residual = group
                .iter()
                .map(|&z| {
                    let refined = schroeder_polish(&normalized, &deriv, z, m, 12);
                    normalized.eval(refined).norm()
                })
                .fold(0.0, f64::max);
            if residual > cluster_tol {
                if first_failure.is_none() {
                    first_failure = Some(PolyError::RootFindingFailed(format!(
                        "cluster near {location} has residual {residual:.3e} > cluster_tol {cluster_tol:.3e}"
                    )));
                }
                continue 'ladder;
            }
            let (taylor_order, taylor_coeff) =
                vanishing_order(&normalized, location, DEFAULT_ORDER_TOL)?;
            if taylor_order != m {
                if std::env::var("KSLOPE_ROOT_DEBUG").is_ok() {
                    eprintln!("  size {m} at {location}: taylor {taylor_order}");
                }
                if first_failure.is_none() {
                    first_failure = Some(PolyError::RootClusterAmbiguity {
                        location,
                        cluster_size: m,
                        taylor_order,
                    });
                }
                continue 'ladder;
            }
            let spread = group
                .iter()
                .map(|&z| (z - location).norm())
                .fold(0.0, f64::max);
            if spread > basin(m, location, taylor_coeff.norm()) {
                if first_failure.is_none() {
                    first_failure = Some(PolyError::RootClusterAmbiguity {
                        location,
                        cluster_size: m,
                        taylor_order,
                    });
                }
                continue 'ladder;
            }
            clusters.push((
                RootCluster {
                    location,
                    multiplicity: m,
                    residual,
                },
                taylor_coeff.norm(),
            ));
        }
        // Accepted clusters closer than their combined noise basin belong
        // together; escalate so a later rung can merge them.
        let mut too_close = None;
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let m = clusters[i].0.multiplicity + clusters[j].0.multiplicity;
                let coeff = clusters[i].1.min(clusters[j].1);
                let gap = (clusters[i].0.location - clusters[j].0.location).norm();
                if gap < basin(m, clusters[i].0.location, coeff) {
                    too_close = Some(PolyError::RootClusterAmbiguity {
                        location: clusters[i].0.location,
                        cluster_size: m,
                        taylor_order: clusters[i].0.multiplicity,
                    });
                }
            }
        }
        if let Some(err) = too_close {
            if first_failure.is_none() {
                first_failure = Some(err);
            }
            continue 'ladder;
        }
        first_failure = None;
        break;
    }
    if let Some(err) = first_failure {
        return Err(err);
    }
    let mut clusters: Vec<RootCluster> = clusters.into_iter().map(|(c, _)| c).collect();

    debug_assert_eq!(clusters.iter().map(|c| c.multiplicity).sum::<usize>(), deg);
    clusters.sort_by(|a, b| {
        (a.location.re, a.location.im).partial_cmp(&(b.location.re, b.location.im)).unwrap()
    });
    Ok(clusters)
}

/// Companion-matrix eigenvalues, retried under exact coordinate translations
/// when the Schur iteration stalls: symmetric spectra (for example antipodal
/// multiple roots) can cycle the shift strategy, and a translation breaks
/// the symmetry without perturbing the roots.
fn global_root_seeds(p: &ComplexPoly) -> Result<Vec<Complex64>, PolyError> {
    let shifts = [
        Complex64::ZERO,
        Complex64::new(0.31, 0.17),
        Complex64::new(-0.43, 0.29),
        Complex64::new(0.5, -0.618),
    ];
    let mut last = PolyError::RootFindingFailed("no transform attempted".into());
    for shift in shifts {
        let q = if shift == Complex64::ZERO {
            p.clone()
        } else {
            p.shifted(shift)
        };
        match companion_eigenvalues(&q) {
            Ok(mut roots) => {
                for r in roots.iter_mut() {
                    *r += shift;
                }
                return Ok(roots);
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn companion_eigenvalues(p: &ComplexPoly) -> Result<Vec<Complex64>, PolyError> {
    let deg = p.effective_degree().expect("caller checked nonzero");
    let lead = p.coeffs()[deg];
    if deg == 1 {
        return Ok(vec![-p.coeffs()[0] / lead]);
    }
    let mut companion = DMatrix::<Complex64>::zeros(deg, deg);
    for row in 1..deg {
        companion[(row, row - 1)] = Complex64::ONE;
    }
    for k in 0..deg {
        companion[(k, deg - 1)] = -p.coeffs()[k] / lead;
    }
    // Bounded iteration count: the default eigenvalue path iterates without
    // limit and can spin on defective matrices.
    let schur = nalgebra::linalg::Schur::try_new(companion, 1e-14, 10_000).ok_or_else(|| {
        PolyError::RootFindingFailed("companion-matrix Schur iteration did not converge".into())
    })?;
    let eigenvalues = schur.eigenvalues().ok_or_else(|| {
        PolyError::RootFindingFailed("companion-matrix eigenvalues unavailable".into())
    })?;
    Ok(eigenvalues.iter().copied().collect())
}

/// Newton refinement of an eigenvalue seed, with two guards: the iterate
/// keeps the best point by |p|, and it may not leave a trust region around
/// the start. Near a multiple root the correction p/p' degenerates into
/// rounding noise: an unguarded step can be O(1) and land in the basin of a
/// different root, where |p| is genuinely smaller.
fn newton_polish(p: &ComplexPoly, dp: &ComplexPoly, start: Complex64, max_iter: usize) -> Complex64 {
    guarded_iteration(p, dp, start, 1.0, max_iter)
}

/// Newton with the step scaled by the multiplicity: quadratic on an m-fold
/// root, same guards as `newton_polish`.
fn schroeder_polish(
    p: &ComplexPoly,
    dp: &ComplexPoly,
    start: Complex64,
    multiplicity: usize,
    max_iter: usize,
) -> Complex64 {
    guarded_iteration(p, dp, start, multiplicity as f64, max_iter)
}

fn guarded_iteration(
    p: &ComplexPoly,
    dp: &ComplexPoly,
    start: Complex64,
    step_factor: f64,
    max_iter: usize,
) -> Complex64 {
    let leash = 0.05 * (1.0 + start.norm());
    let mut z = start;
    let mut best = start;
    let mut best_val = p.eval(start).norm();
    for _ in 0..max_iter {
        let f = p.eval(z);
        let g = dp.eval(z);
        if g.norm() < 1e-300 {
            break;
        }
        let step = step_factor * f / g;
        z -= step;
        if (z - start).norm() > leash {
            break;
        }
        let val = p.eval(z).norm();
        if val < best_val {
            best_val = val;
            best = z;
        }
        if step.norm() < 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    best
}

fn merge_by_distance(points: &[Complex64], radius: f64) -> Vec<Vec<Complex64>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i] - points[j]).norm() < radius {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<Complex64>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(points[i]);
    }
    groups.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_zero_poly() {
        let p = ComplexPoly::from_real(&[0.0]);
        assert_eq!(p.eval(c(5.0, 1.0)), Complex64::ZERO);
    }

    #[test]
    fn eval_root_by_construction() {
        let p = ComplexPoly::from_real(&[1.0, 0.0, 1.0]); // 1 + z^2
        assert!(p.eval(c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn eval_direct_arithmetic() {
        // z^2 - 3z + 2 at 1.5 -> -0.25
        let p = ComplexPoly::from_real(&[2.0, -3.0, 1.0]);
        let v = p.eval(c(1.5, 0.0));
        assert!((v - c(-0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn derivative_rules() {
        assert_eq!(
            ComplexPoly::from_real(&[7.0]).derivative(),
            ComplexPoly::from_real(&[0.0])
        );
        assert_eq!(
            ComplexPoly::from_real(&[0.0, 0.0, 1.0]).derivative(),
            ComplexPoly::from_real(&[0.0, 2.0])
        );
        assert_eq!(
            ComplexPoly::from_real(&[1.0, 1.0, 1.0, 1.0]).derivative(),
            ComplexPoly::from_real(&[1.0, 2.0, 3.0])
        );
    }

    #[test]
    fn chart_swap_examples() {
        let z2 = ComplexPoly::from_real(&[0.0, 0.0, 1.0]);
        assert_eq!(z2.chart_swap(2).unwrap(), ComplexPoly::from_real(&[1.0]));
        let one = ComplexPoly::from_real(&[1.0]);
        assert_eq!(
            one.chart_swap(2).unwrap(),
            ComplexPoly::from_real(&[0.0, 0.0, 1.0])
        );
        let p = ComplexPoly::from_real(&[1.0, 2.0]);
        assert_eq!(
            p.chart_swap(2).unwrap(),
            ComplexPoly::from_real(&[0.0, 2.0, 1.0])
        );
    }

    #[test]
    fn chart_swap_rejects_high_degree() {
        let p = ComplexPoly::from_real(&[0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            p.chart_swap(2),
            Err(PolyError::DegreeExceedsLineBundle { degree: 3, bundle: 2 })
        ));
    }

    #[test]
    fn chart_swap_involution() {
        let p = ComplexPoly::new(vec![c(1.0, -2.0), c(0.5, 0.0), c(0.0, 3.0)]);
        let back = p.chart_swap(4).unwrap().chart_swap(4).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn vanishing_order_examples() {
        let z2 = ComplexPoly::from_real(&[0.0, 0.0, 1.0]);
        let (k, u) = vanishing_order(&z2, Complex64::ZERO, 1e-9).unwrap();
        assert_eq!(k, 2);
        assert!((u - Complex64::ONE).norm() < 1e-14);

        let p = ComplexPoly::from_real(&[1.0, 1.0]);
        let (k, u) = vanishing_order(&p, Complex64::ZERO, 1e-9).unwrap();
        assert_eq!(k, 0);
        assert!((u - Complex64::ONE).norm() < 1e-14);

        // (z-1)^2 (z+2) = z^3 - 3z + 2; order 2 at 1 with leading coeff 3.
        let p = ComplexPoly::from_real(&[2.0, -3.0, 0.0, 1.0]);
        let (k, u) = vanishing_order(&p, Complex64::ONE, 1e-9).unwrap();
        assert_eq!(k, 2);
        assert!((u - c(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn vanishing_order_rejects_zero_poly() {
        assert_eq!(
            vanishing_order(&ComplexPoly::zero(), Complex64::ZERO, 1e-9),
            Err(PolyError::ZeroPolynomial)
        );
    }

    #[test]
    fn roots_simple_cases() {
        let z = ComplexPoly::from_real(&[0.0, 1.0]);
        let r = roots_with_multiplicity(&z, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].location.norm() < 1e-12);
        assert_eq!(r[0].multiplicity, 1);

        let z2 = ComplexPoly::from_real(&[0.0, 0.0, 1.0]);
        let r = roots_with_multiplicity(&z2, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 2);
        assert!(r[0].location.norm() < 1e-7);
    }

    #[test]
    fn roots_cubic_factored() {
        // z^3 - z = z(z-1)(z+1)
        let p = ComplexPoly::from_real(&[0.0, -1.0, 0.0, 1.0]);
        let r = roots_with_multiplicity(&p, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(r.len(), 3);
        let mut locs: Vec<f64> = r.iter().map(|c| c.location.re).collect();
        locs.sort_by(f64::total_cmp);
        assert!((locs[0] + 1.0).abs() < 1e-10);
        assert!(locs[1].abs() < 1e-10);
        assert!((locs[2] - 1.0).abs() < 1e-10);
        assert!(r.iter().all(|c| c.multiplicity == 1));
        assert!(r.iter().all(|c| c.residual <= DEFAULT_CLUSTER_TOL));
    }

    #[test]
    fn roots_reject_zero_poly() {
        assert_eq!(
            roots_with_multiplicity(&ComplexPoly::zero(), 1e-8),
            Err(PolyError::ZeroPolynomial)
        );
    }

    #[test]
    fn roots_quadruple_planted() {
        // (z - (1+i))^4, the hardest multiplicity at desk scale.
        let lin = ComplexPoly::new(vec![c(-1.0, -1.0), Complex64::ONE]);
        let p = lin.mul(&lin).mul(&lin).mul(&lin);
        let r = roots_with_multiplicity(&p, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].multiplicity, 4);
        assert!((r[0].location - c(1.0, 1.0)).norm() < 1e-6);
    }

    #[test]
    fn shifted_matches_taylor() {
        // p(z) = (z-1)^2 (z+2); p(1+h) = 3h^2 + h^3
        let p = ComplexPoly::from_real(&[2.0, -3.0, 0.0, 1.0]);
        let s = p.shifted(Complex64::ONE);
        let expect = [0.0, 0.0, 3.0, 1.0];
        for (k, &e) in expect.iter().enumerate() {
            assert!((s.coeffs()[k] - c(e, 0.0)).norm() < 1e-12, "k={k}");
        }
    }
}
