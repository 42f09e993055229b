//! Transition probabilities `P(R -> R' | P_rec)`.
//!
//! One slot of the process: each of the `N` users independently enters the
//! recommended branch with probability `P_rec` and then picks a channel
//! uniformly inside its branch. An occupied recommended channel (idle last
//! slot) is idle again with probability `1 - q`; an occupied unrecommended
//! channel is idle with the stationary probability `p / (p + q)`. Every idle
//! occupied channel yields exactly one successful transmission and thus one
//! recommendation, so `R'` counts idle occupied channels.

use rand::Rng;

use super::{check_action, MdpModel, ZeroStateSemantics};
use crate::combinatorics::{binomial_pmf, convolve, occupancy_pmf, thin, LnFactorials};
use crate::error::Result;

/// Precomputed conditional laws of `R'` given the number of users in the
/// recommended branch. A full row for any action is then a binomial mixture
/// over these tables, which is what makes policy evaluation cheap.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    n_users: usize,
    num_states: usize,
    /// `table[r][n_r][r']`.
    table: Vec<Vec<Vec<f64>>>,
}

impl TransitionKernel {
    /// Exact finite-`M` kernel for a model.
    pub fn exact(model: &MdpModel) -> Self {
        let m = model.m_channels;
        let n = model.n_users;
        let num_states = model.num_states();
        let p_rec_idle = 1.0 - model.channel.q;
        let p_unrec_idle = model.channel.stationary_idle_prob();

        let table = (0..num_states)
            .map(|r| {
                let degenerate = (r == 0 || r == m) && model.zero_state == ZeroStateSemantics::RandomAccess;
                if degenerate {
                    // Every user picks uniformly among all M channels, which all
                    // share one class.
                    let idle = if r == 0 { p_unrec_idle } else { p_rec_idle };
                    let dist = pad(thin(&occupancy_pmf(n, m), idle), num_states);
                    return vec![dist; n + 1];
                }
                (0..=n)
                    .map(|n_r| {
                        let rec = thin(&occupancy_pmf(n_r, r), p_rec_idle);
                        let unrec = thin(&occupancy_pmf(n - n_r, m - r), p_unrec_idle);
                        pad(convolve(&rec, &unrec), num_states)
                    })
                    .collect()
            })
            .collect();
        Self { n_users: n, num_states, table }
    }

    /// Kernel for `M = infinity`: unrecommended users never share a channel.
    /// States run over `0..=N`; the recommended branch is empty (silent) at `R = 0`.
    pub fn infinite_m(n_users: usize, p: f64, q: f64) -> Self {
        let num_states = n_users + 1;
        let p_unrec_idle = p / (p + q);
        let table = (0..num_states)
            .map(|r| {
                (0..=n_users)
                    .map(|n_r| {
                        let rec = thin(&occupancy_pmf(n_r, r), 1.0 - q);
                        let unrec = binomial_pmf(n_users - n_r, p_unrec_idle);
                        pad(convolve(&rec, &unrec), num_states)
                    })
                    .collect()
            })
            .collect();
        Self { n_users, num_states, table }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    /// Row `r` under action `p_rec`. `p_rec` may be 0 or 1 here; callers
    /// that need an interior action check it themselves.
    pub fn row(&self, r: usize, p_rec: f64) -> Vec<f64> {
        let weights = binomial_pmf(self.n_users, p_rec);
        let mut out = vec![0.0; self.num_states];
        for (w, dist) in weights.iter().zip(&self.table[r]) {
            if *w == 0.0 {
                continue;
            }
            for (o, d) in out.iter_mut().zip(dist) {
                *o += w * d;
            }
        }
        out
    }
}

fn pad(mut v: Vec<f64>, len: usize) -> Vec<f64> {
    debug_assert!(v.iter().skip(len).all(|&x| x == 0.0));
    v.resize(len, 0.0);
    v
}

/// Exact row for state `r` of a finite model.
pub fn transition_row_exact(model: &MdpModel, r: usize, p_rec: f64) -> Result<Vec<f64>> {
    check_action(p_rec)?;
    check_state(model, r)?;
    Ok(TransitionKernel::exact(model).row(r, p_rec))
}

pub fn transition_prob_exact(model: &MdpModel, r: usize, r_next: usize, p_rec: f64) -> Result<f64> {
    check_state(model, r_next)?;
    Ok(transition_row_exact(model, r, p_rec)?[r_next])
}

fn check_state(model: &MdpModel, r: usize) -> Result<()> {
    if r > model.max_state() {
        return Err(crate::error::Error::Config(format!(
            "state {r} outside 0..={}",
            model.max_state()
        )));
    }
    Ok(())
}

/// Row for state `r` evaluated with the closed-form triple sum over
/// `(n_r, m̄_r, m_r)` and its mirror on the unrecommended side.
///
/// The combinatorial factor for `n` users covering exactly `m̄` of `c`
/// channels is `c!/(c-m̄)! * C(n-1, m̄-1) * c^-n`, with `C(n-1, -1) = 1` iff
/// `n = 0`. That factor counts compositions of `n`, so for `n >= 3` users on
/// one side the row loses mass compared to [`transition_row_exact`]; rows
/// with at most two users per side coincide.
pub fn transition_row_paper(model: &MdpModel, r: usize, p_rec: f64) -> Result<Vec<f64>> {
    check_action(p_rec)?;
    check_state(model, r)?;
    let m = model.m_channels;
    let n = model.n_users;
    let q = model.channel.q;
    let b = model.channel.stationary_idle_prob();
    let lf = LnFactorials::new(n.max(m) + 1);
    let num_states = model.num_states();

    let degenerate_random = (r == 0 || r == m) && model.zero_state == ZeroStateSemantics::RandomAccess;
    let user_split: Vec<f64> = if degenerate_random {
        // All users land in the single non-empty class.
        let mut w = vec![0.0; n + 1];
        if r == 0 {
            w[0] = 1.0;
        } else {
            w[n] = 1.0;
        }
        w
    } else {
        (0..=n)
            .map(|n_r| {
                let n_u = n - n_r;
                (lf.ln_choose(n, n_r) + ln_pow(p_rec, n_r) + ln_pow(1.0 - p_rec, n_u)).exp()
            })
            .collect()
    };

    let mut row = vec![0.0; num_states];
    for (n_r, &split) in user_split.iter().enumerate() {
        if split == 0.0 {
            continue;
        }
        let n_u = n - n_r;
        let rec = composition_side(&lf, n_r, r, 1.0 - q);
        let unrec = composition_side(&lf, n_u, m - r, b);
        for (m_r, &a) in rec.iter().enumerate() {
            for (m_u, &c) in unrec.iter().enumerate() {
                row[m_r + m_u] += split * a * c;
            }
        }
    }
    Ok(row)
}

/// `sum over m̄ of C(m̄, k) s^k (1-s)^(m̄-k) * c!/(c-m̄)! * C(n-1, m̄-1) * c^-n`,
/// indexed by the success count `k`.
fn composition_side(lf: &LnFactorials, n: usize, c: usize, success: f64) -> Vec<f64> {
    let mut out = vec![0.0; n.min(c) + 1];
    if c == 0 {
        // Empty branch: its users are silent.
        out[0] = 1.0;
        return out;
    }
    for m_bar in 0..=n.min(c) {
        let ln_cover = if m_bar == 0 {
            if n == 0 {
                0.0
            } else {
                continue;
            }
        } else {
            lf.ln_falling(c, m_bar) + lf.ln_choose(n - 1, m_bar - 1) - n as f64 * (c as f64).ln()
        };
        for k in 0..=m_bar {
            let ln_t = ln_cover + lf.ln_choose(m_bar, k) + ln_pow(success, k) + ln_pow(1.0 - success, m_bar - k);
            out[k] += ln_t.exp();
        }
    }
    out
}

fn ln_pow(base: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * base.ln()
    }
}

pub fn transition_prob_paper(model: &MdpModel, r: usize, r_next: usize, p_rec: f64) -> Result<f64> {
    check_state(model, r_next)?;
    Ok(transition_row_paper(model, r, p_rec)?[r_next])
}

/// Row by the requested formula.
pub fn transition_row(model: &MdpModel, r: usize, p_rec: f64, formula: super::TransitionFormula) -> Result<Vec<f64>> {
    match formula {
        super::TransitionFormula::Exact => transition_row_exact(model, r, p_rec),
        super::TransitionFormula::Paper => transition_row_paper(model, r, p_rec),
    }
}

/// Empirical law of `R'` from `samples` simulated slots of the process.
///
/// `p_rec` may be anywhere in `[0, 1]`; this is the ground-truth oracle for
/// the analytic rows.
pub fn transition_row_mc<R: Rng + ?Sized>(
    model: &MdpModel,
    r: usize,
    p_rec: f64,
    samples: usize,
    rng: &mut R,
) -> Vec<f64> {
    assert!(samples >= 1, "need at least one sample");
    let m = model.m_channels;
    let n = model.n_users;
    let q = model.channel.q;
    let b = model.channel.stationary_idle_prob();
    let random_access = (r == 0 || r == m) && model.zero_state == ZeroStateSemantics::RandomAccess;

    let mut counts = vec![0u64; model.num_states()];
    // Channels 0..r are the recommended ones. `stamp[c] == round` marks occupancy.
    let mut stamp = vec![0u64; m];
    let mut touched: Vec<usize> = Vec::with_capacity(n);
    for round in 1..=samples as u64 {
        touched.clear();
        for _ in 0..n {
            let ch = if random_access {
                Some(rng.random_range(0..m))
            } else if rng.random::<f64>() < p_rec {
                (r > 0).then(|| rng.random_range(0..r))
            } else {
                (m > r).then(|| r + rng.random_range(0..m - r))
            };
            if let Some(c) = ch {
                if stamp[c] != round {
                    stamp[c] = round;
                    touched.push(c);
                }
            }
        }
        let mut successes = 0usize;
        for &c in &touched {
            let idle_prob = if c < r { 1.0 - q } else { b };
            if rng.random::<f64>() < idle_prob {
                successes += 1;
            }
        }
        counts[successes] += 1;
    }
    counts.iter().map(|&c| c as f64 / samples as f64).collect()
}

/// Row of the `M = infinity` transition law over states `0..=N`.
pub fn transition_row_infinite_m(n_users: usize, r: usize, p_rec: f64, p: f64, q: f64) -> Vec<f64> {
    assert!(r <= n_users, "state {r} outside 0..={n_users}");
    TransitionKernel::infinite_m(n_users, p, q).row(r, p_rec)
}

pub fn transition_prob_infinite_m(n_users: usize, r: usize, r_next: usize, p_rec: f64, p: f64, q: f64) -> f64 {
    transition_row_infinite_m(n_users, r, p_rec, p, q)
        .get(r_next)
        .copied()
        .unwrap_or(0.0)
}

/// `N = infinity` row: every channel is accessed, so `R'` is the sum of a
/// `Binomial(R, 1-q)` and a `Binomial(M-R, p/(p+q))`, whatever the action.
pub fn saturation_row(m_channels: usize, r: usize, p: f64, q: f64) -> Vec<f64> {
    assert!(r <= m_channels, "state {r} outside 0..={m_channels}");
    let rec = binomial_pmf(r, 1.0 - q);
    let unrec = binomial_pmf(m_channels - r, p / (p + q));
    convolve(&rec, &unrec)
}

pub fn saturation_transition(m_channels: usize, r: usize, r_next: usize, p: f64, q: f64) -> f64 {
    if r_next > m_channels {
        return 0.0;
    }
    saturation_row(m_channels, r, p, q)[r_next]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::mdp::ZeroStateSemantics;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(m: usize, n: usize, p: f64, q: f64) -> MdpModel {
        MdpModel::new(m, n, ChannelParams::new(p, q, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn single_user_single_channel_zero_state() {
        let (p, q) = (0.3, 0.2);
        let md = model(1, 1, p, q);
        let row = transition_row_paper(&md, 0, 0.5).unwrap();
        let b = p / (p + q);
        assert!((row[1] - 0.5 * b).abs() < 1e-15);
        assert!((row[0] - (1.0 - 0.5 * b)).abs() < 1e-15);
        let exact = transition_row_exact(&md, 0, 0.5).unwrap();
        assert!((exact[1] - 0.5 * b).abs() < 1e-15);
    }

    #[test]
    fn single_user_hand_formula() {
        let (p, q) = (0.15, 0.35);
        let b = p / (p + q);
        for m in 1..6 {
            let md = model(m, 1, p, q);
            for p_rec in [0.1, 0.5, 0.93] {
                let row = transition_row_exact(&md, 1, p_rec).unwrap();
                let expect = if m == 1 {
                    // r = M: the unrecommended branch is empty and silent
                    p_rec * (1.0 - q)
                } else {
                    p_rec * (1.0 - q) + (1.0 - p_rec) * b
                };
                assert!((row[1] - expect).abs() < 1e-14, "m={m} p_rec={p_rec}");
                assert!((row[0] + row[1] - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_state_rows_ignore_recommended_side() {
        let md = model(7, 4, 0.2, 0.4);
        let b = md.channel.stationary_idle_prob();
        let p_rec = 0.35;
        let row = transition_row_exact(&md, 0, p_rec).unwrap();
        // Rec-branch users are silent: mix over the number of unrec users.
        let mut expect = vec![0.0; 5];
        for (n_u, w) in binomial_pmf(4, 1.0 - p_rec).into_iter().enumerate() {
            for (k, v) in thin(&occupancy_pmf(n_u, 7), b).into_iter().enumerate() {
                expect[k] += w * v;
            }
        }
        for (a, e) in row.iter().zip(&expect) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn random_access_zero_state_is_action_independent() {
        let md = model(6, 3, 0.2, 0.3).with_zero_state(ZeroStateSemantics::RandomAccess);
        let a = transition_row_exact(&md, 0, 0.1).unwrap();
        let c = transition_row_exact(&md, 0, 0.9).unwrap();
        for (x, y) in a.iter().zip(&c) {
            assert!((x - y).abs() < 1e-15);
        }
        let pa = transition_row_paper(&md, 0, 0.4).unwrap();
        // three users: the composition count undercounts, so only compare N <= 2 elsewhere
        assert!(pa.iter().sum::<f64>() <= 1.0 + 1e-12);
    }

    #[test]
    fn closed_form_equals_exact_up_to_two_users_per_side() {
        for (m, n) in [(1, 1), (3, 1), (2, 2), (5, 2), (8, 2)] {
            for mode in [ZeroStateSemantics::IdleBranch, ZeroStateSemantics::RandomAccess] {
                let md = model(m, n, 0.3, 0.6).with_zero_state(mode);
                for r in 0..=md.max_state() {
                    for p_rec in [0.05, 0.5, 0.8] {
                        let a = transition_row_paper(&md, r, p_rec).unwrap();
                        let e = transition_row_exact(&md, r, p_rec).unwrap();
                        for (x, y) in a.iter().zip(&e) {
                            assert!((x - y).abs() < 1e-13, "m={m} n={n} r={r}");
                        }
                        assert!((a.iter().sum::<f64>() - 1.0).abs() < crate::mdp::CLOSED_FORM_ROW_TOL);
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_mass_deficit_is_the_composition_gap() {
        // M=20, N=4, r=2: the only lost mass comes from 3 or 4 users sharing one side.
        let md = model(20, 4, 0.2, 0.2);
        let p_rec: f64 = 0.4;
        let row = transition_row_paper(&md, 2, p_rec).unwrap();
        let deficit = 1.0 - row.iter().sum::<f64>();
        // covering probability captured by the composition count, per side size c and n users
        let captured = |n: usize, c: usize| -> f64 {
            if n == 0 {
                return 1.0;
            }
            (1..=n.min(c))
                .map(|mb| {
                    crate::combinatorics::choose(n - 1, mb - 1)
                        * (0..mb).map(|i| (c - i) as f64).product::<f64>()
                        / (c as f64).powi(n as i32)
                })
                .sum()
        };
        let expect: f64 = binomial_pmf(4, p_rec)
            .iter()
            .enumerate()
            .map(|(n_r, w)| w * (1.0 - captured(n_r, 2) * captured(4 - n_r, 18)))
            .sum();
        assert!(deficit > 0.01);
        assert!((deficit - expect).abs() < 1e-12, "deficit {deficit} expect {expect}");
    }

    #[test]
    fn mc_deterministic_success() {
        // q tiny is as close to q = 0 as the model allows; use p_rec = 1 directly.
        let md = model(3, 1, 0.5, 1e-300);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let row = transition_row_mc(&md, 1, 1.0, 10_000, &mut rng);
        assert_eq!(row[1], 1.0);
    }

    #[test]
    fn mc_sums_to_one() {
        let md = model(10, 5, 0.01, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let row = transition_row_mc(&md, 3, 0.6, 100_000, &mut rng);
        assert_eq!(row.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn exact_matches_mc_reference_config() {
        let md = model(20, 4, 0.2, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let samples = 1_000_000;
        let mc = transition_row_mc(&md, 2, 0.4, samples, &mut rng);
        let ex = transition_row_exact(&md, 2, 0.4).unwrap();
        for (k, (e, f)) in ex.iter().zip(&mc).enumerate() {
            let se = crate::stats::binomial_se(*e, samples).max(1e-12);
            assert!((e - f).abs() <= 3.0 * se, "entry {k}: exact {e} mc {f} se {se}");
        }
    }

    #[test]
    fn infinite_m_two_user_zero_state() {
        let (p, q) = (0.2, 0.5);
        let b = p / (p + q);
        let p_rec = 0.3;
        let v = transition_prob_infinite_m(2, 0, 2, p_rec, p, q);
        assert!((v - (1.0f64 - p_rec).powi(2) * b * b).abs() < 1e-15);
        let row = transition_row_infinite_m(2, 0, 1.0, p, q);
        assert_eq!(row[0], 1.0);
    }

    #[test]
    fn saturation_values() {
        let row = saturation_row(2, 0, 0.3, 0.3);
        assert!((row[1] - 0.5).abs() < 1e-15);
        for m in 1..6 {
            for r in 0..=m {
                let s: f64 = saturation_row(m, r, 0.1, 0.7).iter().sum();
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
        assert_eq!(saturation_transition(3, 1, 4, 0.5, 0.5), 0.0);
    }

    #[test]
    fn domain_errors() {
        let md = model(4, 2, 0.2, 0.2);
        assert!(transition_row_exact(&md, 0, 0.0).is_err());
        assert!(transition_row_paper(&md, 0, 1.0).is_err());
        assert!(transition_row_exact(&md, 3, 0.5).is_err());
    }
}
