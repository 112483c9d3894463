use mtop::config::Settings;
use mtop_core::env::epidemic::{enumerate_strategies, simulate_epidemic, Scenario, GROUPS};
use mtop_core::oracle::straight_line_epidemic;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compartments_are_conserved(arm in 0usize..180, scenario in 0usize..6, sim_seed in any::<u64>()) {
        let mut s = Settings::defaults();
        s.epidemic.population = 3_000;
        let cfg = s.epidemic_config(Scenario::ALL[scenario]).unwrap();
        let strategy = enumerate_strategies()[arm];
        let out = simulate_epidemic(&cfg, &strategy, sim_seed);
        prop_assert!(out.arh <= out.ari);
        prop_assert!((0.0..=1.0).contains(&out.ari));
        for r in &out.series {
            prop_assert_eq!(r.s + r.e + r.i + r.r, cfg.population[r.group]);
        }
        for (prev, next) in out.series.iter().zip(&out.series[GROUPS..]) {
            prop_assert!(next.infected_cum >= prev.infected_cum);
            prop_assert!(next.hospitalized_cum >= prev.hospitalized_cum);
            prop_assert!(next.vaccinated_mrna >= prev.vaccinated_mrna);
            prop_assert!(next.vaccinated_vector >= prev.vaccinated_vector);
        }
        let (ari, arh) = straight_line_epidemic(&cfg, &strategy, sim_seed);
        prop_assert_eq!((ari, arh), (out.ari, out.arh));
    }
}
