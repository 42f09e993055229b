//! Counting helpers: log-factorials, binomial mass functions and the
//! occupancy distribution of `n` labelled balls thrown uniformly into `c`
//! bins.

/// `ln(k!)` for `k = 0..=max`.
#[derive(Debug, Clone)]
pub struct LnFactorials {
    table: Vec<f64>,
}

impl LnFactorials {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        table.push(0.0);
        for k in 1..=max {
            let prev = table[k - 1];
            table.push(prev + (k as f64).ln());
        }
        Self { table }
    }

    pub fn ln_fact(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// `ln C(n, k)`; `-inf` when `k > n`.
    pub fn ln_choose(&self, n: usize, k: usize) -> f64 {
        if k > n {
            f64::NEG_INFINITY
        } else {
            self.table[n] - self.table[k] - self.table[n - k]
        }
    }

    /// `ln(n! / (n-k)!)`, the number of ordered selections.
    pub fn ln_falling(&self, n: usize, k: usize) -> f64 {
        if k > n {
            f64::NEG_INFINITY
        } else {
            self.table[n] - self.table[n - k]
        }
    }
}

/// `C(n, k)` as a float, exact for the small arguments used here.
pub fn choose(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Binomial(n, prob) mass function as a vector of length `n + 1`.
pub fn binomial_pmf(n: usize, prob: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    if prob <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if prob >= 1.0 {
        out[n] = 1.0;
        return out;
    }
    let lf = LnFactorials::new(n);
    let (lp, lq) = (prob.ln(), (1.0 - prob).ln());
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = (lf.ln_choose(n, k) + k as f64 * lp + (n - k) as f64 * lq).exp();
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// Distribution of the number of distinct occupied bins when `n` labelled
/// balls land independently and uniformly in `c` bins. Entry `k` is
/// `C(c,k) Surj(n,k) / c^n`.
///
/// Built ball by ball: a new ball either hits one of the `k` occupied bins
/// or opens a new one. For `c == 0` every ball is lost and the result is the
/// point mass at zero.
pub fn occupancy_pmf(n: usize, c: usize) -> Vec<f64> {
    let kmax = n.min(c);
    let mut dist = vec![0.0; kmax + 1];
    dist[0] = 1.0;
    if c == 0 {
        return dist;
    }
    let cf = c as f64;
    for balls in 0..n {
        let top = balls.min(c);
        let mut next = vec![0.0; kmax + 1];
        for k in 0..=top.min(kmax) {
            let pk = dist[k];
            if pk == 0.0 {
                continue;
            }
            next[k] += pk * k as f64 / cf;
            if k < kmax {
                next[k + 1] += pk * (cf - k as f64) / cf;
            }
        }
        dist = next;
    }
    dist
}

/// Number of surjections from an `n`-set onto a `k`-set,
/// `sum_j (-1)^j C(k,j) (k-j)^n`, in exact integer arithmetic.
///
/// Returns `None` on overflow.
pub fn surjections(n: u32, k: u32) -> Option<u128> {
    let mut pos: u128 = 0;
    let mut neg: u128 = 0;
    for j in 0..=k {
        let c = choose_u128(k as u128, j as u128)?;
        let term = pow_u128((k - j) as u128, n)?.checked_mul(c)?;
        if j % 2 == 0 {
            pos = pos.checked_add(term)?;
        } else {
            neg = neg.checked_add(term)?;
        }
    }
    pos.checked_sub(neg)
}

fn pow_u128(base: u128, exp: u32) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

fn choose_u128(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Discrete convolution of two mass functions.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Thin each of `k` occupied slots independently with success probability
/// `prob`: returns the law of `Binomial(K, prob)` mixed over `K ~ counts`.
pub fn thin(counts: &[f64], prob: f64) -> Vec<f64> {
    let mut out = vec![0.0; counts.len()];
    for (k, &w) in counts.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (j, b) in binomial_pmf(k, prob).into_iter().enumerate() {
            out[j] += w * b;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_surjection_counts() {
        assert_eq!(surjections(3, 2), Some(6));
        assert_eq!(surjections(4, 2), Some(14));
        assert_eq!(surjections(4, 3), Some(36));
        assert_eq!(surjections(5, 5), Some(120));
        assert_eq!(surjections(0, 0), Some(1));
        assert_eq!(surjections(3, 0), Some(0));
        assert_eq!(surjections(2, 3), Some(0));
    }

    #[test]
    fn occupancy_matches_surjection_formula() {
        for c in 1..=12usize {
            for n in 0..=10usize {
                let dp = occupancy_pmf(n, c);
                let total = (c as f64).powi(n as i32);
                for (k, &v) in dp.iter().enumerate() {
                    let surj = surjections(n as u32, k as u32).unwrap() as f64;
                    let expect = choose(c, k) * surj / total;
                    assert!((v - expect).abs() < 1e-13, "n={n} c={c} k={k}: {v} vs {expect}");
                }
                assert!((dp.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_bins_is_point_mass() {
        assert_eq!(occupancy_pmf(4, 0), vec![1.0]);
    }

    #[test]
    fn binomial_sums_to_one() {
        for n in [0usize, 1, 5, 64, 500] {
            let s: f64 = binomial_pmf(n, 0.37).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "n={n} sum={s}");
        }
        assert_eq!(binomial_pmf(3, 0.0), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(binomial_pmf(3, 1.0), vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn choose_and_log_tables_agree() {
        let lf = LnFactorials::new(64);
        for n in 0..=40 {
            for k in 0..=n {
                let direct = choose(n, k);
                assert!((lf.ln_choose(n, k).exp() - direct).abs() / direct < 1e-12);
            }
        }
    }
}
