//! Statistical helpers: tail probabilities, goodness-of-fit statistics,
//! quadrature and one-dimensional minimization.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// `P(Z > z)` for a standard normal.
pub fn normal_sf(z: f64) -> f64 {
    Normal::standard().sf(z)
}

pub fn normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

/// Two-sided normal tail `P(|Z| > |z|)`.
pub fn two_sided_p(z: f64) -> f64 {
    (2.0 * normal_sf(z.abs())).min(1.0)
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    match ChiSquared::new(dof as f64) {
        Ok(c) => c.sf(stat.max(0.0)),
        Err(_) => f64::NAN,
    }
}

/// Asymptotic Kolmogorov p-value of statistic `d` for sample size `n`, with
/// the usual small-sample correction of the argument.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    kolmogorov_q(lambda)
}

/// `Q(l) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 l^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    if lambda < 0.3 {
        // series converges slowly here; use the dual (Jacobi) form
        let pi2 = std::f64::consts::PI.powi(2);
        let mut s = 0.0;
        for k in 1..=20 {
            let kk = (2 * k - 1) as f64;
            s += (-kk * kk * pi2 / (8.0 * lambda * lambda)).exp();
        }
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS statistic of `xs` against `cdf`. Sorts a copy.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// p-value of the two-sample statistic.
pub fn ks_two_sample_pvalue(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let se = ne.sqrt();
    kolmogorov_q((se + 0.12 + 0.11 / se) * d)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Golden-section minimization of a unimodal `f` on `[a, b]` to absolute
/// tolerance `tol` in the argument. Returns `(argmin, min)`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, v)
}

/// Merges adjacent bins (in order) until each expected count is at least
/// `min_expected`; a short tail is merged into the last full bin. Returns
/// the merged `(observed, expected)`.
pub fn rebin(observed: &[f64], expected: &[f64], min_expected: f64) -> (Vec<f64>, Vec<f64>) {
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&a, &b) in observed.iter().zip(expected) {
        o += a;
        e += b;
        if e >= min_expected {
            obs.push(o);
            exp.push(e);
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match (obs.last_mut(), exp.last_mut()) {
            (Some(lo), Some(le)) => {
                *lo += o;
                *le += e;
            }
            _ => {
                obs.push(o);
                exp.push(e);
            }
        }
    }
    (obs, exp)
}

/// Pearson statistic and degrees of freedom (`bins - 1 - fitted`) after
/// the five-count rebinning rule.
pub fn chi_square(observed: &[f64], expected: &[f64], fitted: usize) -> (f64, usize) {
    let (o, e) = rebin(observed, expected, 5.0);
    let stat = o.iter().zip(&e).map(|(o, e)| if *e > 0.0 { (o - e).powi(2) / e } else { 0.0 }).sum();
    (stat, o.len().saturating_sub(1 + fitted))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_known_values() {
        // Q(1.36) ~ 0.049, Q(1.63) ~ 0.0098
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_q(1.628) - 0.0100).abs() < 5e-4);
        // the two series agree where both are valid
        let l: f64 = 0.3;
        let pi2 = std::f64::consts::PI.powi(2);
        let jacobi: f64 =
            1.0 - (2.0 * std::f64::consts::PI).sqrt() / l * (1..=20).map(|k| (-(((2 * k - 1) as f64).powi(2)) * pi2 / (8.0 * l * l)).exp()).sum::<f64>();
        assert!((jacobi - kolmogorov_q(0.3)).abs() < 1e-9);
    }

    #[test]
    fn quadrature_and_minimizer() {
        let v = integrate(&|x: f64| x * x * (-x).exp(), 0.0, 60.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-9);
        let (x, _) = golden_section(|x| (x - 1.234).powi(2), 0.0, 5.0, 1e-9);
        assert!((x - 1.234).abs() < 1e-8);
    }

    #[test]
    fn rebinning_reaches_five() {
        let (o, e) = rebin(&[1.0, 2.0, 10.0, 1.0], &[1.0, 3.0, 9.0, 1.0], 5.0);
        assert_eq!(e, vec![14.0]);
        assert_eq!(o, vec![14.0]);
        let (_, e) = rebin(&[0.0; 4], &[6.0, 2.0, 4.0, 7.0], 5.0);
        assert_eq!(e, vec![6.0, 6.0, 7.0]);
    }
}
