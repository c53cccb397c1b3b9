//! Hypothesis tests, interval estimates and effect sizes for proportion data.

use super::special::{chi2_sf, ln_factorial, normal_cdf, normal_quantile, normal_sf};
use super::BenchError;

/// Outcome of a test. `effect` carries a test-specific effect size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatResult {
    pub statistic: f64,
    pub p_value: f64,
    pub effect: Option<f64>,
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_ci(k: u64, n: u64, confidence: f64) -> Result<(f64, f64), BenchError> {
    if n == 0 || k > n {
        return Err(BenchError::InvalidCounts(format!("k={k}, n={n}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(BenchError::OutOfRange(format!("confidence {confidence}")));
    }
    let z = normal_quantile(1.0 - (1.0 - confidence) / 2.0);
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let low = if k == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let high = if k == n {
        1.0
    } else {
        (center + half).min(1.0)
    };
    Ok((low, high))
}

/// Two-sided Fisher exact test on the table `[[k1, n1-k1], [k2, n2-k2]]`.
///
/// The p-value sums every table with the observed margins whose
/// probability does not exceed the observed one. `statistic` is the sample
/// odds ratio and `effect` is Cohen's h for `k1/n1` against `k2/n2`.
pub fn fisher_exact(k1: u64, n1: u64, k2: u64, n2: u64) -> Result<StatResult, BenchError> {
    if n1 == 0 || n2 == 0 || k1 > n1 || k2 > n2 {
        return Err(BenchError::InvalidCounts(format!("{k1}/{n1} vs {k2}/{n2}")));
    }
    let col = k1 + k2;
    let total = n1 + n2;
    let ln_denom = ln_factorial(total) - ln_factorial(col) - ln_factorial(total - col);
    let ln_p = |a: u64| -> f64 {
        let b = col - a;
        ln_factorial(n1) - ln_factorial(a) - ln_factorial(n1 - a) + ln_factorial(n2)
            - ln_factorial(b)
            - ln_factorial(n2 - b)
            - ln_denom
    };
    let observed = ln_p(k1);
    let lo = col.saturating_sub(n2);
    let hi = col.min(n1);
    let mut p = 0.0;
    for a in lo..=hi {
        let lp = ln_p(a);
        // relative slack keeps tables tied with the observed one from
        // dropping out through rounding
        if lp <= observed + 1e-7 {
            p += lp.exp();
        }
    }
    let odds = {
        let num = (k1 * (n2 - k2)) as f64;
        let den = ((n1 - k1) * k2) as f64;
        num / den
    };
    Ok(StatResult {
        statistic: odds,
        p_value: p.min(1.0),
        effect: Some(cohens_h(k1 as f64 / n1 as f64, k2 as f64 / n2 as f64)?),
    })
}

/// Cohen's h between two proportions.
pub fn cohens_h(p1: f64, p2: f64) -> Result<f64, BenchError> {
    for p in [p1, p2] {
        if !(0.0..=1.0).contains(&p) {
            return Err(BenchError::OutOfRange(format!("proportion {p}")));
        }
    }
    Ok(2.0 * p1.sqrt().asin() - 2.0 * p2.sqrt().asin())
}

/// Friedman test output with the per-method average ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanResult {
    pub result: StatResult,
    /// Mean rank per method, rank 1 being the best (largest) value.
    pub average_ranks: Vec<f64>,
    /// `rank_matrix[method][task]`.
    pub rank_matrix: Vec<Vec<f64>>,
}

impl FriedmanResult {
    /// Rank matrix as text, one method per line.
    pub fn render_ranks(&self, labels: &[&str]) -> String {
        let mut out = String::new();
        for (i, row) in self.rank_matrix.iter().enumerate() {
            let label = labels.get(i).copied().unwrap_or("?");
            let cells: Vec<String> = row.iter().map(|r| format!("{r:.1}")).collect();
            out.push_str(&format!(
                "{label}: [{}] mean {:.3}\n",
                cells.join(", "),
                self.average_ranks[i]
            ));
        }
        out
    }
}

/// Midranks of `values`, largest first.
fn descending_midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    (ranks, ties)
}

/// Friedman test over `values[method][task]`, tasks acting as blocks.
///
/// Ties share the average rank and the statistic uses the usual tie
/// correction. When every block is a complete tie the statistic is 0.
pub fn friedman(values: &[Vec<f64>]) -> Result<FriedmanResult, BenchError> {
    let k = values.len();
    if k < 3 {
        return Err(BenchError::TooFewMethods { needed: 3, got: k });
    }
    let n = values[0].len();
    if n < 2 {
        return Err(BenchError::TooFewTasks(n));
    }
    for (m, row) in values.iter().enumerate() {
        for t in 0..n {
            match row.get(t) {
                Some(v) if v.is_finite() => {}
                _ => return Err(BenchError::MissingCell { method: m, task: t }),
            }
        }
        if row.len() != n {
            return Err(BenchError::MissingCell {
                method: m,
                task: row.len().min(n),
            });
        }
    }

    let mut rank_matrix = vec![vec![0.0; n]; k];
    let mut tie_sum = 0.0;
    for t in 0..n {
        let column: Vec<f64> = values.iter().map(|row| row[t]).collect();
        let (ranks, ties) = descending_midranks(&column);
        tie_sum += ties;
        for m in 0..k {
            rank_matrix[m][t] = ranks[m];
        }
    }
    let (kf, nf) = (k as f64, n as f64);
    let rank_sums: Vec<f64> = rank_matrix.iter().map(|r| r.iter().sum()).collect();
    let average_ranks = rank_sums.iter().map(|s| s / nf).collect();

    let numer = 12.0 / (nf * kf * (kf + 1.0)) * rank_sums.iter().map(|r| r * r).sum::<f64>()
        - 3.0 * nf * (kf + 1.0);
    let correction = 1.0 - tie_sum / (nf * kf * (kf * kf - 1.0));
    let (chi2, p) = if correction <= 1e-12 {
        (0.0, 1.0)
    } else {
        let chi2 = (numer / correction).max(0.0);
        (chi2, chi2_sf(chi2, kf - 1.0))
    };
    Ok(FriedmanResult {
        result: StatResult {
            statistic: chi2,
            p_value: p,
            effect: None,
        },
        average_ranks,
        rank_matrix,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sidedness {
    TwoSided,
    /// Alternative: `a` tends to be smaller than `b`.
    Less,
    /// Alternative: `a` tends to be larger than `b`.
    Greater,
}

/// Above this many `n_a * n_b` pairs the normal approximation is used.
pub const MWU_EXACT_LIMIT: usize = 400;

/// Mann-Whitney U test. `statistic` is U for sample `a`, `effect` is
/// `U / (n_a n_b)`.
pub fn mann_whitney(a: &[f64], b: &[f64], sided: Sidedness) -> Result<StatResult, BenchError> {
    if a.is_empty() || b.is_empty() {
        return Err(BenchError::EmptySample);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(BenchError::OutOfRange("non-finite observation".into()));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (doubled, tie_sum) = doubled_ascending_midranks(&pooled);
    let ra2: u64 = doubled[..na].iter().sum();
    // U in half units keeps tied ranks integral
    let u2 = ra2 - (na * (na + 1)) as u64;
    let u = u2 as f64 / 2.0;
    let effect = Some(u / (na * nb) as f64);

    let p = if na * nb <= MWU_EXACT_LIMIT {
        let dist = rank_sum_distribution(&doubled, na);
        let total: f64 = dist.iter().sum();
        let le: f64 = dist[..=ra2 as usize].iter().sum::<f64>() / total;
        let ge: f64 = dist[ra2 as usize..].iter().sum::<f64>() / total;
        match sided {
            Sidedness::Less => le,
            Sidedness::Greater => ge,
            Sidedness::TwoSided => (2.0 * le.min(ge)).min(1.0),
        }
    } else {
        let n = (na + nb) as f64;
        let mu = (na * nb) as f64 / 2.0;
        let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let sd = var.sqrt();
            match sided {
                Sidedness::Greater => normal_sf((u - mu - 0.5) / sd),
                Sidedness::Less => normal_cdf((u - mu + 0.5) / sd),
                Sidedness::TwoSided => {
                    let z = ((u - mu).abs() - 0.5).max(0.0) / sd;
                    (2.0 * normal_sf(z)).min(1.0)
                }
            }
        }
    };
    Ok(StatResult {
        statistic: u,
        p_value: p.clamp(0.0, 1.0),
        effect,
    })
}

/// Twice the ascending midranks (integral) and the tie term `sum(t^3 - t)`.
fn doubled_ascending_midranks(values: &[f64]) -> (Vec<u64>, f64) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&x, &y| values[x].total_cmp(&values[y]));
    let mut ranks = vec![0u64; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        // (i+1 + j+1) is twice the midrank
        let r2 = (i + j + 2) as u64;
        for &k in &idx[i..=j] {
            ranks[k] = r2;
        }
        i = j + 1;
    }
    (ranks, ties)
}

/// Number of size-`m` subsets of `weights` per achievable weight sum.
fn rank_sum_distribution(weights: &[u64], m: usize) -> Vec<f64> {
    let max_sum: u64 = weights.iter().sum();
    let width = max_sum as usize + 1;
    let mut dp = vec![vec![0.0f64; width]; m + 1];
    dp[0][0] = 1.0;
    for (seen, &w) in weights.iter().enumerate() {
        let w = w as usize;
        for j in (1..=m.min(seen + 1)).rev() {
            let (lower, upper) = dp.split_at_mut(j);
            let prev = &lower[j - 1];
            let cur = &mut upper[0];
            for s in (w..width).rev() {
                if prev[s - w] != 0.0 {
                    cur[s] += prev[s - w];
                }
            }
        }
    }
    dp.swap_remove(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjustment {
    Bonferroni,
    BenjaminiHochberg,
}

/// Multiplicity-adjusted p-values, returned in input order.
pub fn adjust_pvalues(ps: &[f64], method: Adjustment) -> Result<Vec<f64>, BenchError> {
    if let Some(p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(BenchError::OutOfRange(format!("p-value {p}")));
    }
    let m = ps.len() as f64;
    match method {
        Adjustment::Bonferroni => Ok(ps.iter().map(|p| (p * m).min(1.0)).collect()),
        Adjustment::BenjaminiHochberg => {
            let mut order: Vec<usize> = (0..ps.len()).collect();
            order.sort_by(|&a, &b| ps[a].total_cmp(&ps[b]));
            let mut out = vec![0.0; ps.len()];
            let mut running = 1.0f64;
            for (pos, &i) in order.iter().enumerate().rev() {
                let rank = (pos + 1) as f64;
                running = running.min(ps[i] * m / rank);
                out[i] = running.min(1.0);
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_boundaries() {
        let (lo, hi) = wilson_ci(0, 10, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.25 && hi < 0.35);
        let (lo, hi) = wilson_ci(10, 10, 0.95).unwrap();
        assert_eq!(hi, 1.0);
        assert!(lo > 0.65);
        assert!(wilson_ci(3, 2, 0.95).is_err());
        assert!(wilson_ci(0, 0, 0.95).is_err());
    }

    #[test]
    fn fisher_symmetric_table() {
        let r = fisher_exact(5, 10, 5, 10).unwrap();
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fisher_hand_table() {
        // [[3,1],[1,3]]: tables a=0..4 have probs 1,16,36,16,1 over 70
        let r = fisher_exact(3, 4, 1, 4).unwrap();
        assert!((r.p_value - 34.0 / 70.0).abs() < 1e-12);
    }

    #[test]
    fn cohens_h_identity_and_range() {
        assert_eq!(cohens_h(0.3, 0.3).unwrap(), 0.0);
        assert!(cohens_h(1.2, 0.3).is_err());
    }

    #[test]
    fn friedman_three_by_three_by_hand() {
        // rankings per task: (1,2,3), (1,3,2), (2,1,3)
        // rank sums 4, 6, 8; chi2 = 12/(3*3*4) * (16+36+64) - 3*3*4 = 2.6667
        let values = vec![
            vec![9.0, 9.0, 5.0],
            vec![5.0, 1.0, 9.0],
            vec![1.0, 5.0, 1.0],
        ];
        let r = friedman(&values).unwrap();
        assert!((r.result.statistic - 8.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.average_ranks, vec![4.0 / 3.0, 2.0, 8.0 / 3.0]);
    }

    #[test]
    fn friedman_all_tied() {
        let values = vec![vec![1.0, 2.0]; 4];
        let r = friedman(&values).unwrap();
        assert_eq!(r.result.statistic, 0.0);
        assert_eq!(r.result.p_value, 1.0);
    }

    #[test]
    fn friedman_rejects_small_inputs() {
        assert!(matches!(
            friedman(&[vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(BenchError::TooFewMethods { .. })
        ));
        assert!(matches!(
            friedman(&[vec![1.0, 2.0], vec![2.0], vec![1.0, 1.0]]),
            Err(BenchError::MissingCell { method: 1, task: 1 })
        ));
    }

    #[test]
    fn mwu_separated_samples() {
        let a: Vec<f64> = (1..=10).map(f64::from).collect();
        let b: Vec<f64> = (11..=20).map(f64::from).collect();
        let r = mann_whitney(&a, &b, Sidedness::TwoSided).unwrap();
        assert_eq!(r.statistic, 0.0);
        // only one arrangement is this extreme on each side
        let expected = 2.0 / 184_756.0;
        assert!((r.p_value - expected).abs() < 1e-15);
    }

    #[test]
    fn mwu_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = mann_whitney(&a, &a, Sidedness::TwoSided).unwrap();
        assert!(r.p_value >= 0.99);
        assert_eq!(r.statistic, 8.0);
    }

    #[test]
    fn mwu_normal_branch_is_sane() {
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..30).map(|i| i as f64 + 0.5).collect();
        let r = mann_whitney(&a, &b, Sidedness::TwoSided).unwrap();
        assert!(r.p_value > 0.8);
        assert!(mann_whitney(&[], &b, Sidedness::Less).is_err());
    }

    #[test]
    fn adjustments_by_hand() {
        assert_eq!(
            adjust_pvalues(&[0.01], Adjustment::Bonferroni).unwrap(),
            vec![0.01]
        );
        assert_eq!(
            adjust_pvalues(&[0.01], Adjustment::BenjaminiHochberg).unwrap(),
            vec![0.01]
        );
        let b = adjust_pvalues(&[0.02, 0.03], Adjustment::Bonferroni).unwrap();
        assert!((b[0] - 0.04).abs() < 1e-15 && (b[1] - 0.06).abs() < 1e-15);
        let bh = adjust_pvalues(&[0.05, 0.01, 0.04, 0.02], Adjustment::BenjaminiHochberg).unwrap();
        let want = [0.05, 0.04, 0.05, 0.04];
        for (g, w) in bh.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{bh:?}");
        }
    }
}
