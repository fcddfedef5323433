// debug one ambiguous double-root case
use kslope::poly::*;
use num_complex::Complex64;

fn main() {
    // roots: (-2+3i) double, (-1+2i) simple, 0 quadruple
    let r1 = Complex64::new(-2.0, 3.0);
    let r2 = Complex64::new(-1.0, 2.0);
    let mut p = ComplexPoly::from_real(&[1.0]);
    for _ in 0..2 { p = p.mul(&ComplexPoly::new(vec![-r1, Complex64::ONE])); }
    p = p.mul(&ComplexPoly::new(vec![-r2, Complex64::ONE]));
    for _ in 0..4 { p = p.mul(&ComplexPoly::monomial(1)); }

    let scale = p.coeff_scale();
    let norm = ComplexPoly::new(p.coeffs().iter().map(|c| c / scale).collect());
    // vanishing order at the true double root and near it
    for dz in [0.0, 1e-8, 1e-7] {
        let z = r1 + Complex64::new(dz, 0.0);
        let (k, u) = vanishing_order(&norm, z, 1e-6).unwrap();
        let shifted = norm.shifted(z);
        let b: Vec<f64> = shifted.coeffs().iter().take(4).map(|c| c.norm()).collect();
        println!("dz {dz:.1e}: order {k} coeff {:.3e}, taylor mags {:?}", u.norm(), b);
    }
    match roots_with_multiplicity(&p, DEFAULT_CLUSTER_TOL) {
        Ok(cs) => for c in cs { println!("cluster {} mult {} resid {:.3e}", c.location, c.multiplicity, c.residual); },
        Err(e) => println!("ERR: {e}"),
    }
}
