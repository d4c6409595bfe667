//! Combinatorial and integral identities the bounds rely on.

/// `C(n, k)` exactly; `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i + 1) as u128;
    }
    Some(acc)
}

/// `Σ_{m=k}^{n} C(m, k) = C(n+1, k+1)`.
pub fn hockey_stick_holds(n: u64, k: u64) -> bool {
    let lhs = (k..=n).try_fold(0u128, |acc, m| acc.checked_add(binomial(m, k)?));
    matches!((lhs, binomial(n + 1, k + 1)), (Some(a), Some(b)) if a == b)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Volume of `{0 ≤ s_1 ≤ … ≤ s_n ≤ t}` by nested Gauss-Legendre quadrature.
pub fn simplex_volume_quadrature(n: usize, t: f64) -> f64 {
    let rule = gauss_legendre(8);
    fn nested(k: usize, upper: f64, rule: &[(f64, f64)]) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let half = upper / 2.0;
        rule.iter()
            .map(|&(x, w)| w * half * nested(k - 1, half * (x + 1.0), rule))
            .sum()
    }
    nested(n, t, &rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials() {
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(30, 15), Some(155_117_520));
        assert_eq!(binomial(3, 5), Some(0));
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let rule = gauss_legendre(8);
        let w: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert!((w - 2.0).abs() < 1e-14);
        let x14: f64 = rule.iter().map(|&(x, w)| w * x.powi(14)).sum();
        assert!((x14 - 2.0 / 15.0).abs() < 1e-14);
    }
}
