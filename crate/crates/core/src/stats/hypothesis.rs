use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::{TestMethod, TestResult};
use crate::{Error, Result};

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("non-finite value in sample"))
    }
}

/// Two-sided p-value for a t statistic with `df` degrees of freedom.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

/// Evaluates `c[0] + c[1] x + c[2] x^2 + ...`.
fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Shapiro-Wilk W with Royston's (AS R94) coefficient and p-value
/// approximations. Valid for `3 <= n <= 5000`.
pub fn shapiro_wilk(x: &[f64]) -> Result<TestResult> {
    let n = x.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::invalid(format!(
            "Shapiro-Wilk needs 3 <= n <= 5000, got {n}"
        )));
    }
    check_finite(x)?;
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let range = sorted[n - 1] - sorted[0];
    if range <= 0.0 {
        return Err(Error::ZeroVariance("sample".into()));
    }

    let nn2 = n / 2;
    let an = n as f64;
    // a[i] for i in 0..nn2 pairs x[n-1-i] with x[i]
    let mut a = vec![0.0; nn2];
    if n == 3 {
        a[0] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let norm = standard_normal();
        let m: Vec<f64> = (1..=nn2)
            .map(|i| -norm.inverse_cdf((i as f64 - 0.375) / (an + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
        const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let a1 = poly(&C1, rsn) + m[0] / ssumm2;
        if n > 5 {
            let a2 = poly(&C2, rsn) + m[1] / ssumm2;
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            a[0] = a1;
            a[1] = a2;
            for i in 2..nn2 {
                a[i] = m[i] / fac;
            }
        } else {
            let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            a[0] = a1;
            for i in 1..nn2 {
                a[i] = m[i] / fac;
            }
        }
    }

    // W as the squared correlation between ordered data and coefficients
    let coef = |i: usize| -> f64 {
        let j = n - 1 - i;
        match i.cmp(&j) {
            std::cmp::Ordering::Less => -a[i],
            std::cmp::Ordering::Greater => a[j],
            std::cmp::Ordering::Equal => 0.0,
        }
    };
    let xs: Vec<f64> = sorted.iter().map(|v| v / range).collect();
    let mean_x = xs.iter().sum::<f64>() / an;
    let mean_a = (0..n).map(coef).sum::<f64>() / an;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (i, xi) in xs.iter().enumerate() {
        let da = coef(i) - mean_a;
        let dx = xi - mean_x;
        ssa += da * da;
        ssx += dx * dx;
        sax += da * dx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = (1.0 - w1).clamp(0.0, 1.0);

    Ok(TestResult {
        statistic: w,
        p_value: shapiro_p(w, n),
        method: TestMethod::ShapiroWilk,
        n: vec![n],
    })
}

fn shapiro_p(w: f64, n: usize) -> f64 {
    if w >= 1.0 {
        return 1.0;
    }
    let an = n as f64;
    if n == 3 {
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - std::f64::consts::FRAC_PI_3);
        return p.clamp(0.0, 1.0);
    }
    let mut y = (1.0 - w).ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&[-2.273, 0.459], an);
        if y >= gamma {
            return 0.0;
        }
        y = -(gamma - y).ln();
        (
            poly(&[0.544, -0.39978, 0.025054, -6.714e-4], an),
            poly(&[1.3822, -0.77857, 0.062767, -0.0020322], an).exp(),
        )
    } else {
        let ln_n = an.ln();
        (
            poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], ln_n),
            poly(&[-0.4803, -0.082676, 0.0030302], ln_n).exp(),
        )
    };
    standard_normal().sf((y - m) / s).clamp(0.0, 1.0)
}

/// Paired two-sided t-test on `a - b` with `n - 1` degrees of freedom.
///
/// Identical samples give `t = 0, p = 1`; any other constant difference is
/// [`Error::DegeneratePairing`].
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    check_finite(a)?;
    check_finite(b)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let result = |t: f64, p: f64| TestResult {
        statistic: t,
        p_value: p,
        method: TestMethod::PairedT,
        n: vec![n],
    };
    if d.iter().all(|&v| v == d[0]) {
        return if d[0] == 0.0 {
            Ok(result(0.0, 1.0))
        } else {
            Err(Error::DegeneratePairing)
        };
    }
    let t = mean / (var / nf).sqrt();
    Ok(result(t, t_two_sided_p(t, nf - 1.0)))
}

/// Number of `k`-subsets of `{1..=n}` with each possible rank sum, indexed by sum.
fn rank_sum_counts(n: usize, k: usize) -> Vec<f64> {
    let max_sum = n * (n + 1) / 2;
    // f[j][s]: subsets of size j with sum s over the items seen so far
    let mut f = vec![vec![0.0f64; max_sum + 1]; k + 1];
    f[0][0] = 1.0;
    for item in 1..=n {
        for j in (1..=k.min(item)).rev() {
            for s in (item..=max_sum).rev() {
                f[j][s] += f[j - 1][s - item];
            }
        }
    }
    f.swap_remove(k)
}

/// Midranks (1-based) of the pooled sample plus the tie-correction term
/// `sum (t^3 - t)` over tie groups.
fn midranks(pooled: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_unstable_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) test. The statistic is the
/// rank sum of `a`.
///
/// Exact null distribution when `a.len() + b.len() <= 20` with no ties,
/// otherwise the normal approximation with tie and continuity corrections.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData {
            needed: 1,
            got: a.len().min(b.len()),
        });
    }
    check_finite(a)?;
    check_finite(b)?;
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let w: f64 = ranks[..na].iter().sum();

    let p = if n <= 20 && ties == 0.0 {
        let counts = rank_sum_counts(n, na);
        let total: f64 = counts.iter().sum();
        let w_int = w.round() as usize;
        let lower: f64 = counts[..=w_int].iter().sum::<f64>() / total;
        let upper: f64 = counts[w_int..].iter().sum::<f64>() / total;
        (2.0 * lower.min(upper)).min(1.0)
    } else {
        let (fa, fb, fnn) = (na as f64, nb as f64, n as f64);
        let mean = fa * (fnn + 1.0) / 2.0;
        let var = fa * fb / 12.0 * ((fnn + 1.0) - ties / (fnn * (fnn - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
            (2.0 * standard_normal().sf(z)).min(1.0)
        }
    };
    Ok(TestResult {
        statistic: w,
        p_value: p,
        method: TestMethod::WilcoxonRankSum,
        n: vec![na, nb],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use rand::Rng;

    fn normal_sample<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let u1: f64 = 1.0 - rng.random::<f64>();
                let u2: f64 = rng.random();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect()
    }

    #[test]
    fn shapiro_constant_and_range_errors() {
        assert!(shapiro_wilk(&[2.0; 10]).is_err());
        assert!(shapiro_wilk(&[1.0, 2.0]).is_err());
        assert!(shapiro_wilk(&vec![0.5; 5001]).is_err());
    }

    #[test]
    fn shapiro_reference_values() {
        // scipy.stats.shapiro
        let r = shapiro_wilk(&[2.0, 4.0, 5.0, 7.0, 11.0]).unwrap();
        assert!((r.statistic - 0.9608590).abs() < 1e-5, "{}", r.statistic);
        assert!((r.p_value - 0.8139521).abs() < 1e-3, "{}", r.p_value);

        let x: Vec<f64> = (1..=20).map(|i| f64::from(i * i)).collect();
        let r = shapiro_wilk(&x).unwrap();
        assert!((r.statistic - 0.9061306).abs() < 1e-5, "{}", r.statistic);
        assert!((r.p_value - 0.0538096).abs() < 2e-3, "{}", r.p_value);

        let r = shapiro_wilk(&[1.0, 2.0, 4.0]).unwrap();
        assert!((r.statistic - 0.9642857).abs() < 1e-6);
        assert!((r.p_value - 0.6368868).abs() < 1e-5);
    }

    #[test]
    fn shapiro_bimodal_rejects() {
        let mut x = vec![0.0; 50];
        x.extend([1.0; 50]);
        let r = shapiro_wilk(&x).unwrap();
        assert!(r.p_value < 0.001, "{}", r.p_value);
        assert!(r.statistic > 0.0 && r.statistic <= 1.0);
    }

    #[test]
    fn shapiro_large_normal_rarely_rejects() {
        let mut pass = 0;
        for s in 0..100 {
            let x = normal_sample(&mut rng_for(11, "sw-large", s), 5000);
            if shapiro_wilk(&x).unwrap().p_value > 0.01 {
                pass += 1;
            }
        }
        assert!(pass >= 97, "{pass}/100");
    }

    #[test]
    fn paired_t_examples() {
        let r = paired_t_test(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        assert!(matches!(
            paired_t_test(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]),
            Err(Error::DegeneratePairing)
        ));
        // d = (1, 2, 2, 3): mean 2, sd sqrt(2/3); scipy.stats.ttest_rel
        let r = paired_t_test(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!((r.statistic - 4.898979485566356).abs() < 1e-12);
        assert!((r.p_value - 0.016276).abs() < 1e-5, "{}", r.p_value);
    }

    #[test]
    fn t_tail_reference() {
        // two-sided tail of t = sqrt(18) at 3 df
        assert!((t_two_sided_p(18f64.sqrt(), 3.0) - 0.0239812).abs() < 1e-6);
        assert_eq!(t_two_sided_p(0.0, 5.0), 1.0);
        assert_eq!(t_two_sided_p(f64::INFINITY, 5.0), 0.0);
    }

    #[test]
    fn wilcoxon_examples() {
        let r = wilcoxon_rank_sum(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.statistic, 3.0);

        let same = [0.3, 1.2, 0.7, 2.2, 1.9];
        assert!(wilcoxon_rank_sum(&same, &same).unwrap().p_value >= 0.9);

        let lo: Vec<f64> = (0..10).map(f64::from).collect();
        let hi: Vec<f64> = (100..110).map(f64::from).collect();
        assert!(wilcoxon_rank_sum(&lo, &hi).unwrap().p_value < 0.001);
        assert!(wilcoxon_rank_sum(&[], &[1.0]).is_err());
    }

    #[test]
    fn wilcoxon_normal_branch_reference() {
        // scipy.stats.mannwhitneyu(method="asymptotic", use_continuity=True)
        let a = [1.0, 2.0, 2.0, 3.0, 5.0, 8.0, 8.0, 9.0, 12.0, 13.0, 14.0];
        let b = [2.0, 4.0, 6.0, 7.0, 8.0, 10.0, 15.0, 16.0, 17.0, 18.0, 20.0];
        let r = wilcoxon_rank_sum(&a, &b).unwrap();
        assert!((r.p_value - 0.1142141).abs() < 1e-5, "{}", r.p_value);
    }

    #[test]
    fn exact_counts_match_binomial_total() {
        let c = rank_sum_counts(8, 3);
        assert_eq!(c.iter().sum::<f64>(), 56.0);
        assert_eq!(c[6], 1.0);
        assert_eq!(c[21], 1.0);
    }

    #[test]
    fn wilcoxon_is_symmetric() {
        let mut rng = rng_for(3, "wilcoxon-sym", 0);
        for len in [4usize, 9, 15, 40] {
            let a: Vec<f64> = (0..len)
                .map(|_| (rng.random::<f64>() * 8.0).floor())
                .collect();
            let b: Vec<f64> = (0..len + 3).map(|_| rng.random::<f64>() * 8.0).collect();
            let ab = wilcoxon_rank_sum(&a, &b).unwrap().p_value;
            let ba = wilcoxon_rank_sum(&b, &a).unwrap().p_value;
            assert!((ab - ba).abs() < 1e-12);
        }
    }

    #[test]
    fn null_false_positive_rates() {
        let reps = 1000;
        let (mut sw, mut pt, mut wx_exact, mut wx_normal) = (0, 0, 0, 0);
        for rep in 0..reps {
            let mut rng = rng_for(2024, "type-one", rep);
            let a = normal_sample(&mut rng, 30);
            let b = normal_sample(&mut rng, 30);
            sw += usize::from(shapiro_wilk(&a).unwrap().p_value < 0.05);
            pt += usize::from(paired_t_test(&a, &b).unwrap().p_value < 0.05);
            wx_normal += usize::from(wilcoxon_rank_sum(&a, &b).unwrap().p_value < 0.05);
            wx_exact += usize::from(wilcoxon_rank_sum(&a[..10], &b[..10]).unwrap().p_value < 0.05);
        }
        for (name, hits) in [
            ("sw", sw),
            ("t", pt),
            ("wx_exact", wx_exact),
            ("wx_normal", wx_normal),
        ] {
            let rate = hits as f64 / reps as f64;
            assert!((rate - 0.05).abs() <= 0.02, "{name}: {rate}");
        }
    }
}
