use proptest::prelude::*;
use rand::Rng;

use sketchsynth::cantstop::{GameState, Phase};
use sketchsynth::cloning::{action_score, cell_overlap, observation_score};
use sketchsynth::dsl::{cantstop_grammar, GaStrategy, ProgramStrategy, RandomStrategy, StrategyPair};
use sketchsynth::evaluation::{play_match, read_dataset, replay, starter_for, write_dataset, DatasetMode, MatchPool};
use sketchsynth::grammar::toy_grammar;
use sketchsynth::rng;
use sketchsynth::sa::{accept_probability, sa_run, temperature, SaConfig, Start};
use sketchsynth::search::{Budget, Evaluation};
use sketchsynth::sketch::Mode;
use sketchsynth::uct::{select_child, UctConfig, UctSearch};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn acceptance_is_a_probability(cur in -1.0f64..2.0, cand in -1.0f64..2.0, t in 0.01f64..1000.0, beta in 0.1f64..500.0) {
        let p = accept_probability(cur, cand, t, beta).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        if cand >= cur {
            prop_assert_eq!(p, 1.0);
        } else {
            let hotter = accept_probability(cur, cand, t * 2.0, beta).unwrap();
            prop_assert!(hotter >= p);
        }
    }

    #[test]
    fn acceptance_grows_with_improvement(cur in 0.0f64..1.0, d1 in -1.0f64..0.0, d2 in -1.0f64..0.0) {
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let a = accept_probability(cur, cur + lo, 10.0, 200.0).unwrap();
        let b = accept_probability(cur, cur + hi, 10.0, 200.0).unwrap();
        prop_assert!(a <= b);
    }

    #[test]
    fn temperature_strictly_decreases(t in 1.0f64..1000.0, alpha in 0.01f64..50.0, j in 0u64..100_000) {
        prop_assert!(temperature(t, alpha, j + 1) < temperature(t, alpha, j));
        prop_assert_eq!(temperature(t, alpha, 0), t);
    }

    #[test]
    fn programs_round_trip(seed in any::<u64>(), limit in 1u32..16) {
        let g = cantstop_grammar();
        let p = g.random_program(&mut rng::stream(seed), limit);
        prop_assert!(p.is_complete());
        prop_assert_eq!(&g.parse_sexpr(&g.to_sexpr(&p)).unwrap(), &p);
        prop_assert_eq!(&g.replay(&p.derivation()).unwrap(), &p);
    }

    #[test]
    fn neighbors_are_complete_and_parse(seed in any::<u64>()) {
        let g = cantstop_grammar();
        let mut r = rng::stream(seed);
        let p = g.random_program(&mut r, 15);
        let q = g.neighbor(&p, &mut r, false, 15).unwrap();
        prop_assert!(q.is_complete());
        prop_assert_eq!(q.root().symbol, p.root().symbol);
        prop_assert_eq!(g.parse_sexpr(&g.to_sexpr(&q)).unwrap(), q);
    }

    #[test]
    fn leaf_restricted_runs_keep_the_prefix(seed in any::<u64>(), steps in 1usize..6) {
        let g = cantstop_grammar();
        let mut r = rng::stream(seed);
        let mut partial = g.start_program();
        for _ in 0..steps {
            let n = g.branching(&partial);
            if n == 0 {
                break;
            }
            partial = g.expand_leftmost(&partial, r.random_range(0..n)).unwrap();
        }
        prop_assume!(!partial.is_complete());
        let mut outside = 0;
        let mut eval = |p: &sketchsynth::Program| {
            if !partial.is_prefix_of(p) {
                outside += 1;
            }
            Evaluation::plain(r.random::<f64>())
        };
        let config = SaConfig { max_iterations: Some(40), ..SaConfig::default() };
        let start = Start { program: Some(&partial), evaluation: None, leaf_restricted: true };
        let run = sa_run(g, &config, start, &mut eval, &mut rng::stream(seed ^ 1), &mut Budget::Iterations(u64::MAX).start(), None);
        prop_assert_eq!(outside, 0);
        prop_assert!(partial.is_prefix_of(&run.best));
    }

    #[test]
    fn playouts_keep_invariants_and_replay(seed in any::<u64>(), i in 0u64..2) {
        let trace = play_match(&RandomStrategy, &GaStrategy::default(), seed, starter_for(i));
        for step in &trace.steps {
            prop_assert!(step.state.check_invariants().is_ok());
            let legal = step.state.legal_actions().unwrap();
            prop_assert!(legal.contains(&step.action));
            if step.state.phase() == Phase::YesNo {
                prop_assert_eq!(legal.len(), 2);
            }
        }
        prop_assert!(replay(&trace).is_ok());
        prop_assert_eq!(trace.end.winner(), Some(trace.winner));
    }

    #[test]
    fn new_games_start_clean(seed in any::<u64>(), i in 0u64..2) {
        let s = GameState::new(starter_for(i), &mut rng::stream(seed));
        prop_assert_eq!(s.phase(), Phase::Column);
        prop_assert!(s.neutrals().is_empty());
        prop_assert!(s.check_invariants().is_ok());
    }

    #[test]
    fn overlap_is_a_symmetric_ratio(a in prop::array::uniform11(0u8..14), b in prop::array::uniform11(0u8..14)) {
        let x = cell_overlap(&a, &b);
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert_eq!(x, cell_overlap(&b, &a));
        prop_assert_eq!(cell_overlap(&a, &a), 1.0);
    }

    #[test]
    fn ucb_prefers_unvisited_children(visits in prop::collection::vec(0u64..50, 1..8), k in 0.0f64..20.0) {
        let means: Vec<f64> = visits.iter().map(|&v| if v == 0 { 0.0 } else { 0.5 }).collect();
        let j = select_child(&visits, &means, k).unwrap();
        if let Some(first) = visits.iter().position(|&v| v == 0) {
            prop_assert_eq!(j, first);
        }
    }

    #[test]
    fn uct_conserves_visits(seed in any::<u64>(), iterations in 1u64..300) {
        let g = toy_grammar();
        let mut search = UctSearch::new(&g, UctConfig::default());
        let mut r = rng::stream(seed);
        let mut noise = rng::stream(seed ^ 7);
        let mut eval = |_: &sketchsynth::Program| Evaluation::plain(noise.random::<f64>());
        let clock = Budget::Iterations(u64::MAX).start();
        for _ in 0..iterations {
            search.iterate(&mut eval, &mut r, &clock);
        }
        prop_assert!(search.check_conservation().is_ok());
        prop_assert_eq!(search.root().visits(), iterations);
        prop_assert!(search.stats().evaluations <= 6);
    }

    #[test]
    fn mode_names_round_trip(i in 0usize..8) {
        let names = ["baseline", "sketch-a", "sketch-o", "bc-only-a", "bc-only-o", "lexi-a", "lexi-o", "bc-only"];
        let m: Mode = names[i].parse().unwrap();
        prop_assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn psi_is_independent_of_scheduling(seed in any::<u64>(), n in 1u64..60) {
        let ga = GaStrategy::default();
        let a = MatchPool::serial().psi(&RandomStrategy, &ga, n, seed).unwrap();
        let b = MatchPool::new(3).unwrap().psi(&RandomStrategy, &ga, n, seed).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.wins <= n && (0.0..=1.0).contains(&a.rate()));
    }

    #[test]
    fn datasets_round_trip_through_files(seed in any::<u64>(), n in 1u64..4) {
        let ds = MatchPool::serial().generate_dataset(&RandomStrategy, DatasetMode::SelfPlayWinnerOnly, n, seed);
        ds.validate().unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &ds);
    }

    #[test]
    fn cloning_scores_are_bounded(seed in any::<u64>()) {
        let pool = MatchPool::serial();
        let ds = pool.generate_dataset(&GaStrategy::default(), DatasetMode::SelfPlayWinnerOnly, 2, seed);
        let g = cantstop_grammar();
        let p = g.random_program(&mut rng::stream(seed), 15);
        let s = ProgramStrategy::new(StrategyPair::from_program(p).unwrap());
        for score in [action_score(&ds, &s).unwrap(), observation_score(&ds, &s).unwrap()] {
            prop_assert!((0.0..=1.0).contains(&score.value));
            prop_assert!(score.per_match.iter().all(|x| (0.0..=1.0).contains(x)));
        }
        prop_assert_eq!(action_score(&ds, &GaStrategy::default()).unwrap().value, 1.0);
    }
}
