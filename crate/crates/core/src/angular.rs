//! Wigner 6-j symbols. Angular momenta are passed doubled so half-integers stay exact.

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn triangle(a: i32, b: i32, c: i32) -> bool {
    c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// Δ(abc) with doubled arguments; assumes the triangle condition holds.
fn delta(a: i32, b: i32, c: i32) -> f64 {
    let num = factorial((a + b - c) / 2) * factorial((a - b + c) / 2) * factorial((-a + b + c) / 2);
    (num / factorial((a + b + c) / 2 + 1)).sqrt()
}

/// `{j1 j2 j3; j4 j5 j6}` via the Racah sum. All arguments are `2j`.
pub fn wigner_6j(two_j: [i32; 6]) -> f64 {
    let [j1, j2, j3, j4, j5, j6] = two_j;
    if two_j.iter().any(|&j| j < 0) {
        return 0.0;
    }
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if !triads.iter().all(|&(a, b, c)| triangle(a, b, c)) {
        return 0.0;
    }
    let prefactor: f64 = triads.iter().map(|&(a, b, c)| delta(a, b, c)).product();

    let a = [
        (j1 + j2 + j3) / 2,
        (j1 + j5 + j6) / 2,
        (j4 + j2 + j6) / 2,
        (j4 + j5 + j3) / 2,
    ];
    let b = [
        (j1 + j2 + j4 + j5) / 2,
        (j2 + j3 + j5 + j6) / 2,
        (j3 + j1 + j6 + j4) / 2,
    ];
    let t_min = *a.iter().max().unwrap();
    let t_max = *b.iter().min().unwrap();
    let mut sum = 0.0;
    for t in t_min..=t_max {
        let mut den = 1.0;
        for &ai in &a {
            den *= factorial(t - ai);
        }
        for &bi in &b {
            den *= factorial(bi - t);
        }
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * factorial(t + 1) / den;
    }
    prefactor * sum
}
