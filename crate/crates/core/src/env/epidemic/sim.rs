//! Daily chain-binomial S→E→I→R simulation with cohort-level vaccination.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Hypergeometric};
use serde::{Deserialize, Serialize};

use super::{EpidemicConfig, VaccineProfile, VaccineStrategy, VaccineType, GROUPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackRates {
    pub ari: f64,
    pub arh: f64,
}

/// State of one age group at the end of `day`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayRecord {
    pub day: u32,
    pub group: usize,
    pub s: u64,
    pub e: u64,
    pub i: u64,
    pub r: u64,
    pub vaccinated_mrna: u64,
    pub vaccinated_vector: u64,
    pub hospitalized_cum: u64,
    pub infected_cum: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub ari: f64,
    pub arh: f64,
    /// Days `0..=horizon`, groups ascending within a day.
    pub series: Vec<DayRecord>,
    /// Doses that found no unvaccinated recipient, `[mrna, vector]`.
    pub discarded_doses: [u64; 2],
}

impl SimOutcome {
    pub fn attack_rates(&self) -> AttackRates {
        AttackRates {
            ari: self.ari,
            arh: self.arh,
        }
    }
}

pub fn simulate_epidemic(
    config: &EpidemicConfig,
    strategy: &VaccineStrategy,
    seed: u64,
) -> SimOutcome {
    let mut series = Vec::with_capacity((config.horizon_days as usize + 1) * GROUPS);
    let (rates, discarded) = run(config, strategy, seed, Some(&mut series));
    SimOutcome {
        ari: rates.ari,
        arh: rates.arh,
        series,
        discarded_doses: discarded,
    }
}

/// Same draws as [`simulate_epidemic`] without recording the series.
pub fn simulate_attack_rates(
    config: &EpidemicConfig,
    strategy: &VaccineStrategy,
    seed: u64,
) -> AttackRates {
    run(config, strategy, seed, None).0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Bucket {
    s: u64,
    e: u64,
    i: u64,
    r: u64,
}

impl Bucket {
    fn total(&self) -> u64 {
        self.s + self.e + self.i + self.r
    }

    fn add(&mut self, o: &Bucket) {
        self.s += o.s;
        self.e += o.e;
        self.i += o.i;
        self.r += o.r;
    }

    fn sub(&mut self, o: &Bucket) {
        self.s -= o.s;
        self.e -= o.e;
        self.i -= o.i;
        self.r -= o.r;
    }
}

#[derive(Debug, Clone, Copy)]
struct Cohort {
    vaccine: usize,
    dose_day: u32,
    people: Bucket,
}

#[derive(Debug, Clone, Default)]
struct Group {
    unvaccinated: Bucket,
    /// Fully protected, `[mrna, vector]`.
    mature: [Bucket; 2],
    cohorts: Vec<Cohort>,
    vaccinated: [u64; 2],
    hospitalized: u64,
    infected: u64,
}

impl Group {
    fn totals(&self) -> Bucket {
        let mut b = self.unvaccinated;
        b.add(&self.mature[0]);
        b.add(&self.mature[1]);
        for c in &self.cohorts {
            b.add(&c.people);
        }
        b
    }
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

fn hypergeometric(rng: &mut ChaCha8Rng, total: u64, successes: u64, draws: u64) -> u64 {
    if draws == 0 || successes == 0 {
        return 0;
    }
    if successes == total {
        return draws;
    }
    Hypergeometric::new(total, successes, draws)
        .expect("valid urn")
        .sample(rng)
}

/// Splits `amount` over `weights` proportionally with largest remainders,
/// lower index first on ties, never exceeding `caps`.
pub(crate) fn proportional_split(amount: u64, weights: &[u64], caps: &[u64]) -> Vec<u64> {
    let total: u64 = weights.iter().sum();
    let mut out = alloc::vec![0u64; weights.len()];
    if total == 0 || amount == 0 {
        return out;
    }
    let mut remainders: Vec<(u128, usize)> = Vec::with_capacity(weights.len());
    let mut given = 0u64;
    for (k, &w) in weights.iter().enumerate() {
        let num = u128::from(amount) * u128::from(w);
        out[k] = (num / u128::from(total)) as u64;
        given += out[k];
        remainders.push((num % u128::from(total), k));
    }
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, k) in remainders.iter().take((amount - given) as usize) {
        out[k] += 1;
    }
    for (o, &c) in out.iter_mut().zip(caps) {
        *o = (*o).min(c);
    }
    out
}

/// Doses per group for `doses` of `vaccine`: proportional over the groups
/// assigned that vaccine, then leftovers to those same groups in ascending
/// order, then to every other group in ascending order. Returns the
/// allocation and the discarded remainder.
pub(crate) fn allocate_doses(
    doses: u64,
    vaccine: VaccineType,
    strategy: &VaccineStrategy,
    population: &[u64; GROUPS],
    unvaccinated: &[u64; GROUPS],
) -> ([u64; GROUPS], u64) {
    let mut alloc_ = [0u64; GROUPS];
    let same: Vec<usize> = (0..GROUPS)
        .filter(|&g| strategy.vaccine(g) == vaccine)
        .collect();
    let weights: Vec<u64> = same.iter().map(|&g| population[g]).collect();
    let caps: Vec<u64> = same.iter().map(|&g| unvaccinated[g]).collect();
    let split = proportional_split(doses, &weights, &caps);
    let mut left = doses;
    for (&g, &x) in same.iter().zip(&split) {
        alloc_[g] = x;
        left -= x;
    }
    let others = (0..GROUPS).filter(|&g| strategy.vaccine(g) != vaccine);
    for g in same.iter().copied().chain(others) {
        if left == 0 {
            break;
        }
        let extra = (unvaccinated[g] - alloc_[g]).min(left);
        alloc_[g] += extra;
        left -= extra;
    }
    (alloc_, left)
}

fn profile_of(config: &EpidemicConfig, v: usize) -> &VaccineProfile {
    if v == 0 {
        &config.mrna
    } else {
        &config.vector
    }
}

const TYPES: [VaccineType; 2] = [VaccineType::Mrna, VaccineType::Vector];

fn run(
    config: &EpidemicConfig,
    strategy: &VaccineStrategy,
    seed: u64,
    mut series: Option<&mut Vec<DayRecord>>,
) -> (AttackRates, [u64; 2]) {
    let mut rng = crate::seed::rng(seed);
    let n = config.population;
    let n_total = config.total_population() as f64;
    let contacts = config.effective_contacts();
    let q = config.transmission_probability;
    let p_ei = 1.0 / config.latent_days;
    let p_ir = 1.0 / config.infectious_days;

    let recovered = n.map(|ng| libm::round(config.initial_recovered_fraction * ng as f64) as u64);
    let room: Vec<u64> = (0..GROUPS).map(|g| n[g] - recovered[g]).collect();
    let seeded = proportional_split(config.initial_infected, &n, &room);
    let mut groups: Vec<Group> = (0..GROUPS)
        .map(|g| Group {
            unvaccinated: Bucket {
                s: n[g] - recovered[g] - seeded[g],
                e: 0,
                i: seeded[g],
                r: recovered[g],
            },
            infected: seeded[g],
            ..Group::default()
        })
        .collect();
    for (g, grp) in groups.iter_mut().enumerate() {
        grp.hospitalized = binomial(&mut rng, seeded[g], config.hospitalization[g]);
    }

    let record = |series: &mut Option<&mut Vec<DayRecord>>, day: u32, groups: &[Group]| {
        if let Some(out) = series.as_deref_mut() {
            for (g, grp) in groups.iter().enumerate() {
                let b = grp.totals();
                out.push(DayRecord {
                    day,
                    group: g,
                    s: b.s,
                    e: b.e,
                    i: b.i,
                    r: b.r,
                    vaccinated_mrna: grp.vaccinated[0],
                    vaccinated_vector: grp.vaccinated[1],
                    hospitalized_cum: grp.hospitalized,
                    infected_cum: grp.infected,
                });
            }
        }
    };
    record(&mut series, 0, &groups);

    let mut accumulator = [0.0f64; 2];
    let mut discarded = [0u64; 2];

    for day in 0..config.horizon_days {
        // Vaccination.
        let week = (day / 7) as usize;
        for (v, vaccine) in TYPES.into_iter().enumerate() {
            accumulator[v] += config.supply.weekly(vaccine, week) / 7.0;
            let doses = libm::floor(accumulator[v]);
            accumulator[v] -= doses;
            let doses = doses as u64;
            if doses == 0 {
                continue;
            }
            let unvaccinated: [u64; GROUPS] =
                core::array::from_fn(|g| groups[g].unvaccinated.total());
            let (per_group, lost) = allocate_doses(doses, vaccine, strategy, &n, &unvaccinated);
            discarded[v] += lost;
            for (g, grp) in groups.iter_mut().enumerate() {
                let x = per_group[g];
                if x == 0 {
                    continue;
                }
                let pool = grp.unvaccinated;
                let mut left_total = pool.total();
                let s = hypergeometric(&mut rng, left_total, pool.s, x);
                left_total -= pool.s;
                let e = hypergeometric(&mut rng, left_total, pool.e, x - s);
                left_total -= pool.e;
                let i = hypergeometric(&mut rng, left_total, pool.i, x - s - e);
                let r = x - s - e - i;
                let moved = Bucket { s, e, i, r };
                grp.unvaccinated.sub(&moved);
                grp.cohorts.push(Cohort {
                    vaccine: v,
                    dose_day: day,
                    people: moved,
                });
                grp.vaccinated[v] += x;
            }
        }

        // Force of infection.
        let mut weighted_i = [0.0f64; GROUPS];
        for (g, grp) in groups.iter().enumerate() {
            let mut w = grp.unvaccinated.i as f64;
            for v in 0..2 {
                w += (1.0 - profile_of(config, v).ve_i) * grp.mature[v].i as f64;
            }
            for c in &grp.cohorts {
                let p = profile_of(config, c.vaccine);
                w += (1.0 - p.activation(day - c.dose_day) * p.ve_i) * c.people.i as f64;
            }
            weighted_i[g] = w;
        }
        let p_inf: [f64; GROUPS] = core::array::from_fn(|i| {
            let lambda: f64 = (0..GROUPS)
                .map(|j| contacts[i][j] * weighted_i[j] / n[j] as f64)
                .sum();
            -libm::expm1(-q * lambda)
        });

        // Transitions.
        for (g, grp) in groups.iter_mut().enumerate() {
            let h = config.hospitalization[g];
            let mut new_inf = 0u64;
            let mut new_hosp = 0u64;
            let mut step =
                |b: &mut Bucket, a: f64, prof: Option<&VaccineProfile>, rng: &mut ChaCha8Rng| {
                    let (ve_s, ve_d) = prof.map_or((0.0, 0.0), |p| (p.ve_s, p.ve_d));
                    let inf = binomial(rng, b.s, p_inf[g] * (1.0 - a * ve_s));
                    let hosp = binomial(rng, inf, h * (1.0 - a * ve_d));
                    let ei = binomial(rng, b.e, p_ei);
                    let ir = binomial(rng, b.i, p_ir);
                    b.s -= inf;
                    b.e = b.e + inf - ei;
                    b.i = b.i + ei - ir;
                    b.r += ir;
                    new_inf += inf;
                    new_hosp += hosp;
                };
            step(&mut grp.unvaccinated, 0.0, None, &mut rng);
            for v in 0..2 {
                step(
                    &mut grp.mature[v],
                    1.0,
                    Some(profile_of(config, v)),
                    &mut rng,
                );
            }
            for c in grp.cohorts.iter_mut() {
                let p = profile_of(config, c.vaccine);
                step(
                    &mut c.people,
                    p.activation(day - c.dose_day),
                    Some(p),
                    &mut rng,
                );
            }
            grp.infected += new_inf;
            grp.hospitalized += new_hosp;

            // Cohorts reaching full protection tomorrow join the mature pool.
            let mut k = 0;
            while k < grp.cohorts.len() {
                let c = grp.cohorts[k];
                if day + 1 - c.dose_day >= profile_of(config, c.vaccine).activation_days {
                    grp.mature[c.vaccine].add(&c.people);
                    grp.cohorts.remove(k);
                } else {
                    k += 1;
                }
            }
        }
        record(&mut series, day + 1, &groups);
    }

    let infected: u64 = groups.iter().map(|g| g.infected).sum();
    let hospitalized: u64 = groups.iter().map(|g| g.hospitalized).sum();
    let rates = AttackRates {
        ari: infected as f64 / n_total,
        arh: hospitalized as f64 / n_total,
    };
    (rates, discarded)
}

#[cfg(test)]
mod tests {
    use super::super::fixture;
    use super::*;
    use crate::env::epidemic::{enumerate_strategies, SupplySchedule};

    fn check_series(cfg: &EpidemicConfig, out: &SimOutcome) {
        assert_eq!(out.series.len(), (cfg.horizon_days as usize + 1) * GROUPS);
        for rec in &out.series {
            assert_eq!(
                rec.s + rec.e + rec.i + rec.r,
                cfg.population[rec.group],
                "{rec:?}"
            );
            assert!(rec.hospitalized_cum <= rec.infected_cum);
        }
        for g in 0..GROUPS {
            let rows: Vec<&DayRecord> = out.series.iter().filter(|r| r.group == g).collect();
            assert!(rows
                .windows(2)
                .all(|w| w[0].infected_cum <= w[1].infected_cum
                    && w[0].hospitalized_cum <= w[1].hospitalized_cum
                    && w[0].r <= w[1].r));
        }
        assert!(out.arh <= out.ari);
    }

    #[test]
    fn conservation_and_monotone_counters() {
        let cfg = fixture::config(10_000);
        for (k, s) in enumerate_strategies().iter().take(5).enumerate() {
            check_series(&cfg, &simulate_epidemic(&cfg, s, k as u64));
        }
    }

    #[test]
    fn attack_rates_match_full_run() {
        let cfg = fixture::config(5_000);
        let s = enumerate_strategies()[17];
        let full = simulate_epidemic(&cfg, &s, 9);
        assert_eq!(simulate_attack_rates(&cfg, &s, 9), full.attack_rates());
    }

    #[test]
    fn no_transmission_keeps_initial_cases() {
        let mut cfg = fixture::config(10_000);
        cfg.transmission_probability = 0.0;
        let out = simulate_epidemic(&cfg, &enumerate_strategies()[3], 4);
        assert_eq!(out.ari, cfg.initial_infected as f64 / 10_000.0);
        let last = &out.series[out.series.len() - GROUPS..];
        let hosp: u64 = last.iter().map(|r| r.hospitalized_cum).sum();
        let first: u64 = out.series[..GROUPS]
            .iter()
            .map(|r| r.hospitalized_cum)
            .sum();
        assert_eq!(hosp, first);
    }

    #[test]
    fn zero_supply_makes_strategies_inert() {
        let mut cfg = fixture::config(5_000);
        cfg.supply = SupplySchedule::none();
        let all = enumerate_strategies();
        let reference = simulate_epidemic(&cfg, &all[0], 21);
        for s in all.iter().skip(1).step_by(37) {
            assert_eq!(simulate_epidemic(&cfg, s, 21), reference);
        }
    }

    #[test]
    fn doses_are_counted() {
        let cfg = fixture::config(10_000);
        let out = simulate_epidemic(&cfg, &enumerate_strategies()[100], 1);
        let last = &out.series[out.series.len() - GROUPS..];
        let mrna: u64 =
            last.iter().map(|r| r.vaccinated_mrna).sum::<u64>() + out.discarded_doses[0];
        let mut acc = 0.0;
        let mut expected = 0u64;
        for day in 0..cfg.horizon_days {
            acc += cfg.supply.weekly(VaccineType::Mrna, (day / 7) as usize) / 7.0;
            let d = libm::floor(acc);
            acc -= d;
            expected += d as u64;
        }
        assert_eq!(mrna, expected);
    }

    #[test]
    fn proportional_split_largest_remainder() {
        assert_eq!(proportional_split(10, &[1, 1, 1], &[10, 10, 10]), [4, 3, 3]);
        assert_eq!(proportional_split(7, &[2, 5], &[100, 100]), [2, 5]);
        assert_eq!(proportional_split(7, &[2, 5], &[1, 100]), [1, 5]);
    }

    #[test]
    fn allocation_spills_same_type_first() {
        let s: VaccineStrategy = "MVM--".parse().unwrap();
        let pop = [100; GROUPS];
        let (a, lost) = allocate_doses(50, VaccineType::Mrna, &s, &pop, &[10, 100, 100, 100, 100]);
        assert_eq!((a, lost), ([10, 0, 40, 0, 0], 0));
        let (a, lost) = allocate_doses(50, VaccineType::Mrna, &s, &pop, &[10, 100, 5, 100, 100]);
        assert_eq!((a, lost), ([10, 35, 5, 0, 0], 0));
        let (a, lost) = allocate_doses(50, VaccineType::Mrna, &s, &pop, &[10, 0, 5, 0, 0]);
        assert_eq!((a, lost), ([10, 0, 5, 0, 0], 35));
    }
}
