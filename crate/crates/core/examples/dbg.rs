use hausdorff_lab::quad;

fn main() {
    let x: f64 = 0.0546875;
    // integrand after mirroring: g(s) = chi_(1,2)(x e^s) * chi_{s>0}
    let mut g = |s: f64| {
        let u = x * s.exp();
        if u > 1.0 && u < 2.0 && s > 0.0 { 1.0 } else { 0.0 }
    };
    let out = quad::integrate_improper(&mut g, Some(0.0), None, 0.0, 1e-9, 4000);
    println!("value {} err {:.3e} evals {} conv {} div {}", out.value, out.error, out.evals, out.converged, out.diverged);
    println!("expect {}", 2.0f64.ln());

    // plain adaptive over [0,8]
    let out2 = quad::adaptive_panels(&mut g, 0.0, 8.0, 1e-9/4.0, 4000, 1.0);
    println!("seg value {} err {:.3e} evals {} conv {}", out2.value, out2.error, out2.evals, out2.converged);
}
