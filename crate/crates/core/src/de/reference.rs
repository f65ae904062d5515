//! Classical fault-free recursions for regular ensembles, written directly
//! from their textbook form. They share no code with the missing-connection
//! maps and serve as the reference those maps must reduce to at `alpha = 0`.

/// Fault-free Gallager A on a `(dv, dc)`-regular ensemble:
/// `x' = ε - ε q₊^(dv-1) + (1-ε) q₋^(dv-1)` with `q± = (1 ± (1-2x)^(dc-1)) / 2`.
pub fn gallager_a(x: f64, epsilon: f64, dv: u32, dc: u32) -> f64 {
    let parity = (1.0 - 2.0 * x).powf(f64::from(dc - 1));
    let good = 0.5 * (1.0 + parity);
    let bad = 0.5 * (1.0 - parity);
    let k = f64::from(dv - 1);
    epsilon - epsilon * good.powf(k) + (1.0 - epsilon) * bad.powf(k)
}

/// Fault-free Gallager B with flip threshold `b`: a variable flips its
/// channel value when at least `b` of its `dv - 1` extrinsic checks disagree.
pub fn gallager_b(x: f64, epsilon: f64, dv: u32, dc: u32, b: u32) -> f64 {
    let parity = (1.0 - 2.0 * x).powf(f64::from(dc - 1));
    let good = 0.5 * (1.0 + parity);
    let bad = 0.5 * (1.0 - parity);
    let n = dv - 1;
    let mut corrected = 0.0;
    let mut corrupted = 0.0;
    for k in b..=n {
        let ways = choose(n, k);
        corrected += ways * good.powf(f64::from(k)) * bad.powf(f64::from(n - k));
        corrupted += ways * bad.powf(f64::from(k)) * good.powf(f64::from(n - k));
    }
    epsilon * (1.0 - corrected) + (1.0 - epsilon) * corrupted
}

/// Fault-free BEC recursion `x' = ε (1 - (1-x)^(dc-1))^(dv-1)`.
pub fn peeling(x: f64, epsilon: f64, dv: u32, dc: u32) -> f64 {
    epsilon * (1.0 - (1.0 - x).powf(f64::from(dc - 1))).powf(f64::from(dv - 1))
}

fn choose(n: u32, k: u32) -> f64 {
    let mut r = 1.0;
    for i in 1..=k {
        r = r * f64::from(n + 1 - i) / f64::from(i);
    }
    r
}
