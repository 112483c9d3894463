//! Independent numerical oracles for the test suites.
//!
//! Nothing here is used by the library itself. The quadrature routine checks
//! the closed-form truncated moments, and the enumeration helpers give exact
//! answers for the Monte-Carlo diagnostics on discretized beliefs.

#![allow(clippy::excessive_precision, clippy::needless_range_loop)]

use alloc::vec::Vec;

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]` to absolute
/// tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    // Global bisection of the worst interval.
    let (v, e) = gk15(&f, a, b);
    let mut parts: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, v, e)];
    for _ in 0..20_000 {
        let total_err: f64 = parts.iter().map(|p| p.3).sum();
        if total_err <= tol {
            break;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    // Sum small to large.
    let mut values: Vec<f64> = parts.iter().map(|p| p.2).collect();
    values.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    values.iter().sum()
}

/// Integral over the whole real line via `x = s / (1 - s²)`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    integrate(
        |s| {
            let d = 1.0 - s * s;
            if d <= 0.0 {
                return 0.0;
            }
            let x = s / d;
            let jac = (1.0 + s * s) / (d * d);
            let v = f(x) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        -1.0,
        1.0,
        tol,
    )
}

/// A belief over one arm's mean with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBelief {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Exact probabilities of the boundary events for independent discrete
/// beliefs, by enumerating every (belief, Thompson) pair of outcome vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactBoundary {
    /// `P(A^TS_rho ∈ J*)`, indexed by rank `rho - 1`.
    pub ts_rank_in_top: Vec<f64>,
    /// `P(J* != J^TS)`.
    pub error: f64,
}

pub fn enumerate_boundary(beliefs: &[DiscreteBelief], m: usize) -> ExactBoundary {
    let k = beliefs.len();
    let outcomes = enumerate_outcomes(beliefs);
    let mut in_top = alloc::vec![0.0; k];
    let mut error = 0.0;
    for (belief, p_belief) in &outcomes {
        let j_star = crate::bandit::top_m(belief, m);
        for (ts, p_ts) in &outcomes {
            let w = p_belief * p_ts;
            let ranked = crate::bandit::rank_descending(ts);
            let mut mismatch = false;
            for (rho, arm) in ranked.iter().enumerate() {
                let inside = j_star.contains(arm);
                if inside {
                    in_top[rho] += w;
                }
                if rho < m && !inside {
                    mismatch = true;
                }
            }
            if mismatch {
                error += w;
            }
        }
    }
    ExactBoundary {
        ts_rank_in_top: in_top,
        error,
    }
}

fn enumerate_outcomes(beliefs: &[DiscreteBelief]) -> Vec<(Vec<f64>, f64)> {
    let mut out: Vec<(Vec<f64>, f64)> = alloc::vec![(Vec::new(), 1.0)];
    for b in beliefs {
        let mut next = Vec::with_capacity(out.len() * b.values.len());
        for (prefix, p) in &out {
            for (v, q) in b.values.iter().zip(&b.probs) {
                let mut row = prefix.clone();
                row.push(*v);
                next.push((row, p * q));
            }
        }
        out = next;
    }
    out
}

/// Straight-line rerun of the epidemic day loop over a flat list of strata,
/// consuming the random stream in the documented order. Returns `(ARI, ARH)`.
pub fn straight_line_epidemic(
    config: &crate::env::epidemic::EpidemicConfig,
    strategy: &crate::env::epidemic::VaccineStrategy,
    seed: u64,
) -> (f64, f64) {
    use crate::env::epidemic::VaccineType;
    use rand_distr::{Binomial, Distribution, Hypergeometric};

    // kind: 0 unvaccinated, 1 mature mRNA, 2 mature vector, 3 cohort.
    #[derive(Clone, Copy)]
    struct Stratum {
        group: usize,
        kind: u8,
        vaccine: usize,
        dose_day: u32,
        c: [u64; 4],
    }

    let mut rng = crate::seed::rng(seed);
    let bin = |rng: &mut rand_chacha::ChaCha8Rng, n: u64, p: f64| -> u64 {
        if n == 0 || p <= 0.0 {
            0
        } else if p >= 1.0 {
            n
        } else {
            Binomial::new(n, p).unwrap().sample(rng)
        }
    };
    let hyper = |rng: &mut rand_chacha::ChaCha8Rng, total: u64, good: u64, draws: u64| -> u64 {
        if draws == 0 || good == 0 {
            0
        } else if good == total {
            draws
        } else {
            Hypergeometric::new(total, good, draws).unwrap().sample(rng)
        }
    };
    let split = |amount: u64, w: &[u64], cap: &[u64]| -> Vec<u64> {
        let total: u64 = w.iter().sum();
        if total == 0 || amount == 0 {
            return alloc::vec![0; w.len()];
        }
        let mut base: Vec<u64> = w.iter().map(|&x| amount * x / total).collect();
        let rem: Vec<u64> = w
            .iter()
            .zip(&base)
            .map(|(&x, &b)| amount * x - b * total)
            .collect();
        let mut short = amount - base.iter().sum::<u64>();
        while short > 0 {
            let mut best = usize::MAX;
            for k in 0..w.len() {
                let taken = base[k] * total + rem[k] != amount * w[k];
                if !taken && (best == usize::MAX || rem[k] > rem[best]) {
                    best = k;
                }
            }
            base[best] += 1;
            short -= 1;
        }
        base.iter().zip(cap).map(|(&b, &c)| b.min(c)).collect()
    };

    let n = config.population;
    let g_count = n.len();
    let m_eff = config.effective_contacts();
    let prof = |v: usize| if v == 0 { config.mrna } else { config.vector };
    let rec0: Vec<u64> = n
        .iter()
        .map(|&x| libm::round(config.initial_recovered_fraction * x as f64) as u64)
        .collect();
    let room: Vec<u64> = n.iter().zip(&rec0).map(|(a, b)| a - b).collect();
    let inf0 = split(config.initial_infected, &n, &room);
    let mut strata: Vec<Stratum> = Vec::new();
    for g in 0..g_count {
        strata.push(Stratum {
            group: g,
            kind: 0,
            vaccine: 0,
            dose_day: 0,
            c: [n[g] - rec0[g] - inf0[g], 0, inf0[g], rec0[g]],
        });
        strata.push(Stratum {
            group: g,
            kind: 1,
            vaccine: 0,
            dose_day: 0,
            c: [0; 4],
        });
        strata.push(Stratum {
            group: g,
            kind: 2,
            vaccine: 1,
            dose_day: 0,
            c: [0; 4],
        });
    }
    let mut infected: u64 = inf0.iter().sum();
    let mut hospitalized = 0u64;
    for g in 0..g_count {
        hospitalized += bin(&mut rng, inf0[g], config.hospitalization[g]);
    }
    let mut acc = [0.0f64; 2];
    for day in 0..config.horizon_days {
        for (v, vt) in [VaccineType::Mrna, VaccineType::Vector]
            .into_iter()
            .enumerate()
        {
            acc[v] += config.supply.weekly(vt, (day / 7) as usize) / 7.0;
            let d = libm::floor(acc[v]);
            acc[v] -= d;
            let mut left = d as u64;
            if left == 0 {
                continue;
            }
            let free: Vec<u64> = (0..g_count).map(|g| strata[3 * g].c.iter().sum()).collect();
            let same: Vec<usize> = (0..g_count)
                .filter(|&g| strategy.assignment[g] == vt)
                .collect();
            let w: Vec<u64> = same.iter().map(|&g| n[g]).collect();
            let cap: Vec<u64> = same.iter().map(|&g| free[g]).collect();
            let mut give = alloc::vec![0u64; g_count];
            for (&g, x) in same.iter().zip(split(left, &w, &cap)) {
                give[g] = x;
                left -= x;
            }
            let order: Vec<usize> = same
                .iter()
                .copied()
                .chain((0..g_count).filter(|&g| strategy.assignment[g] != vt))
                .collect();
            for g in order {
                let extra = (free[g] - give[g]).min(left);
                give[g] += extra;
                left -= extra;
            }
            for g in 0..g_count {
                if give[g] == 0 {
                    continue;
                }
                let pool = strata[3 * g].c;
                let mut moved = [0u64; 4];
                let mut total: u64 = pool.iter().sum();
                let mut want = give[g];
                for k in 0..3 {
                    moved[k] = hyper(&mut rng, total, pool[k], want);
                    total -= pool[k];
                    want -= moved[k];
                }
                moved[3] = want;
                for k in 0..4 {
                    strata[3 * g].c[k] -= moved[k];
                }
                strata.push(Stratum {
                    group: g,
                    kind: 3,
                    vaccine: v,
                    dose_day: day,
                    c: moved,
                });
            }
        }

        let act = |s: &Stratum| -> f64 {
            match s.kind {
                0 => 0.0,
                1 | 2 => 1.0,
                _ => prof(s.vaccine).activation(day - s.dose_day),
            }
        };
        let mut weighted = alloc::vec![0.0f64; g_count];
        for g in 0..g_count {
            let mut w = strata[3 * g].c[2] as f64;
            for v in 0..2 {
                w += (1.0 - prof(v).ve_i) * strata[3 * g + 1 + v].c[2] as f64;
            }
            for s in strata.iter().filter(|s| s.kind == 3 && s.group == g) {
                w += (1.0 - act(s) * prof(s.vaccine).ve_i) * s.c[2] as f64;
            }
            weighted[g] = w;
        }
        let p: Vec<f64> = (0..g_count)
            .map(|i| {
                let lambda: f64 = (0..g_count)
                    .map(|j| m_eff[i][j] * weighted[j] / n[j] as f64)
                    .sum();
                -libm::expm1(-config.transmission_probability * lambda)
            })
            .collect();

        for g in 0..g_count {
            let idx: Vec<usize> = (0..strata.len())
                .filter(|&k| strata[k].group == g)
                .collect();
            for k in idx {
                let s = strata[k];
                let a = act(&s);
                let (ve_s, ve_d) = if s.kind == 0 {
                    (0.0, 0.0)
                } else {
                    (prof(s.vaccine).ve_s, prof(s.vaccine).ve_d)
                };
                let new_i = bin(&mut rng, s.c[0], p[g] * (1.0 - a * ve_s));
                hospitalized += bin(
                    &mut rng,
                    new_i,
                    config.hospitalization[g] * (1.0 - a * ve_d),
                );
                let ei = bin(&mut rng, s.c[1], 1.0 / config.latent_days);
                let ir = bin(&mut rng, s.c[2], 1.0 / config.infectious_days);
                infected += new_i;
                strata[k].c = [
                    s.c[0] - new_i,
                    s.c[1] + new_i - ei,
                    s.c[2] + ei - ir,
                    s.c[3] + ir,
                ];
            }
        }
        let mut k = 0;
        while k < strata.len() {
            let s = strata[k];
            if s.kind == 3 && day + 1 - s.dose_day >= prof(s.vaccine).activation_days {
                for c in 0..4 {
                    strata[3 * s.group + 1 + s.vaccine].c[c] += s.c[c];
                }
                strata.remove(k);
            } else {
                k += 1;
            }
        }
    }
    let total = config.total_population() as f64;
    (infected as f64 / total, hospitalized as f64 / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_polynomial_and_gaussian() {
        let v = integrate(|x| x * x * x - x, 0.0, 2.0, 1e-13);
        assert!((v - 2.0).abs() < 1e-13);
        let g = integrate_real_line(|x| libm::exp(-0.5 * x * x), 1e-12);
        assert!((g - libm::sqrt(2.0 * core::f64::consts::PI)).abs() < 1e-10);
    }

    #[test]
    fn two_identical_point_beliefs() {
        let b = DiscreteBelief {
            values: alloc::vec![0.5],
            probs: alloc::vec![1.0],
        };
        let exact = enumerate_boundary(&[b.clone(), b], 1);
        // Ties go to the lower index in both draws, so the ranking agrees.
        assert_eq!(exact.error, 0.0);
        assert_eq!(exact.ts_rank_in_top, [1.0, 0.0]);
    }

    #[test]
    fn straight_line_epidemic_matches_simulator() {
        use crate::env::epidemic::{enumerate_strategies, fixture, simulate_epidemic};
        let cfg = fixture::config(10_000);
        for (k, s) in enumerate_strategies().iter().step_by(45).enumerate() {
            let out = simulate_epidemic(&cfg, s, 100 + k as u64);
            assert_eq!(
                straight_line_epidemic(&cfg, s, 100 + k as u64),
                (out.ari, out.arh)
            );
        }
    }
}
