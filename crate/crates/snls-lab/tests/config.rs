use proptest::prelude::*;

use snls_core::diagnostics::{Exponent, StrichartzPair};
use snls_lab::config::KEYS;
use snls_lab::{ExperimentConfig, ExperimentKind, LabError};

fn key_error(text: &str) -> (String, String) {
    match ExperimentConfig::parse(text).unwrap_err() {
        LabError::Config { key, reason } => (key, reason),
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn empty_config_is_the_mass_check() {
    let c = ExperimentConfig::parse("").unwrap();
    assert_eq!(c.experiment, ExperimentKind::MassCheck);
    assert_eq!((c.dim, c.points, c.extent), (1, 256, 64.0));
    assert_eq!((c.dt, c.horizon), (1e-3, 10.0));
    assert_eq!((c.paths, c.gamma, c.v0), (8, 0.1, 1.0));
    assert_eq!(c.seed, 42);
    assert_eq!(c.rhos, vec![1.5, 2.0, f64::INFINITY]);
    assert_eq!(c.pair, StrichartzPair::default_for(1));
    assert_eq!(c, ExperimentConfig::default());
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let c = ExperimentConfig::parse("# header\n\n  noise.gamma = 0.5  # tail comment\n").unwrap();
    assert_eq!(c.gamma, 0.5);
}

#[test]
fn non_power_of_two_grid_is_rejected() {
    let (key, reason) = key_error("grid.N=100");
    assert_eq!(key, "grid.N");
    assert!(reason.contains("power of two"), "{reason}");
}

#[test]
fn negative_gamma_is_rejected() {
    let (key, reason) = key_error("noise.gamma=-1");
    assert_eq!(key, "noise.gamma");
    assert!(reason.contains(">= 0"), "{reason}");
}

#[test]
fn unknown_and_repeated_keys_are_rejected() {
    assert_eq!(key_error("noise.gama=0.5"), ("noise.gama".into(), "unknown key".into()));
    assert_eq!(key_error("grid.N=64\ngrid.N=128").0, "grid.N");
    assert!(key_error("just words").1.contains("key=value"));
}

#[test]
fn type_mismatches_name_the_key() {
    assert_eq!(key_error("ensemble.paths=many").0, "ensemble.paths");
    assert_eq!(key_error("flow.dealias=yes").0, "flow.dealias");
    assert_eq!(key_error("flow.dt=nan").0, "flow.dt");
    assert_eq!(key_error("experiment=warp-drive").0, "experiment");
    assert_eq!(key_error("strichartz.q=q").0, "strichartz.q");
}

#[test]
fn constraint_violations_name_the_key() {
    for (text, key) in [
        ("grid.d=4", "grid.d"),
        ("grid.L=0", "grid.L"),
        ("flow.dt=0", "flow.dt"),
        ("flow.checkpoint_every=0.0015", "flow.checkpoint_every"),
        ("noise.width=-1", "noise.width"),
        ("ensemble.paths=0", "ensemble.paths"),
        ("ensemble.rho=0.5", "ensemble.rho"),
        ("strichartz.q=4\nstrichartz.p=3", "strichartz.q"),
        ("diagnostics.probes=0.3", "diagnostics.probes"),
        ("experiment=burkholder-check\nensemble.rho=1.5", "ensemble.rho"),
        ("experiment=gamma-sweep\nsweep.gammas=1,-2", "sweep.gammas"),
        ("experiment=gamma-sweep\nsweep.horizons=30", "sweep.horizons"),
        ("experiment=dispersive-check\ndispersive.times=2,1", "dispersive.times"),
        ("experiment=scattering-study\ndiagnostics.probes=5", "diagnostics.probes"),
        ("experiment=mass-check\nflow.model=free", "flow.model"),
    ] {
        assert_eq!(key_error(text).0, key, "{text}");
    }
}

#[test]
fn defaults_follow_the_dimension() {
    let c = ExperimentConfig::parse("experiment=dispersive-check\ngrid.d=3").unwrap();
    assert_eq!((c.points, c.extent), (64, 48.0));
    assert_eq!(c.pair, StrichartzPair::new(Exponent::ratio(14, 3), Exponent::ratio(14, 5)));
    assert_eq!(c.dispersive_times.first(), Some(&1.0));
    assert_eq!(c.dispersive_times.last(), Some(&4.0));
}

#[test]
fn every_preset_round_trips() {
    for kind in ExperimentKind::ALL {
        let c = ExperimentConfig::preset(kind);
        let printed = c.to_string();
        assert_eq!(printed.lines().count(), KEYS.len());
        assert_eq!(ExperimentConfig::parse(&printed).unwrap(), c, "{kind}");
    }
}

fn config_strategy() -> impl Strategy<Value = String> {
    (
        prop::sample::select(ExperimentKind::ALL.to_vec()),
        prop::sample::select(vec![16usize, 32, 64]),
        1.0f64..100.0,
        0.0f64..3.0,
        prop::option::of(0.01f64..2.0),
        any::<u64>(),
        prop::collection::vec(1.0f64..10.0, 1..4),
        any::<bool>(),
    )
        .prop_map(|(kind, n, l, gamma, mass, seed, rhos, dealias)| {
            let rhos = if kind == ExperimentKind::BurkholderCheck {
                rhos.iter().map(|r| r + 1.0).collect()
            } else {
                rhos
            };
            let rho_text: Vec<String> = rhos.iter().map(|r| r.to_string()).collect();
            format!(
                "experiment={kind}\ngrid.N={n}\ngrid.L={l}\nnoise.gamma={gamma}\ninit.mass={}\nensemble.seed={seed}\nensemble.rho={}\nflow.dealias={dealias}\n",
                mass.map_or("none".to_string(), |m| m.to_string()),
                rho_text.join(",")
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_print_round_trip(text in config_strategy()) {
        let c = ExperimentConfig::parse(&text).unwrap();
        let again = ExperimentConfig::parse(&c.to_string()).unwrap();
        prop_assert_eq!(&again, &c);
        prop_assert_eq!(again.to_string(), c.to_string());
    }
}
