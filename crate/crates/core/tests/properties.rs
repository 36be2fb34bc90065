use modunif::decision::{
    satisfiable_with, DecisionError, DecisionOptions, Engine, Logic, Satisfiability,
};
use modunif::eqtheory::{formula_to_term, term_to_formula};
use modunif::formula::{parse, Formula, Language, Substitution};
use modunif::gen::{random_formula, random_model_for, random_term, FormulaConfig};
use modunif::kripke::{
    frame_valid, random_frame_rng, FrameValidity, Model, RandomFrameConfig, Valuation,
};
use modunif::propsat::{solve, Cnf, SatResult};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn frame_config(kind: Language, max_points: usize, transitive: bool) -> RandomFrameConfig {
    RandomFrameConfig {
        max_points,
        kind,
        transitive,
        full_hybrid: false,
    }
}

fn random_substitution(r: &mut ChaCha8Rng, language: Language) -> Substitution {
    let config = FormulaConfig::new(language, 2, 2);
    (1..=2).map(|v| (v, random_formula(r, &config))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printing_then_parsing_is_identity(seed in any::<u64>(), hybrid in any::<bool>()) {
        let language = if hybrid { Language::H2 } else { Language::L };
        let f = random_formula(&mut rng(seed), &FormulaConfig::new(language, 3, 5));
        prop_assert_eq!(parse(&f.to_string(), language).unwrap(), f);
    }

    #[test]
    fn substitutions_compose(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (sigma, tau) = (random_substitution(&mut r, Language::L), random_substitution(&mut r, Language::L));
        let phi = random_formula(&mut r, &FormulaConfig::new(Language::L, 2, 4));
        prop_assert_eq!(sigma.compose(&tau).apply(&phi), sigma.apply(&tau.apply(&phi)));
    }

    /// Truth of σ(φ) in a model equals truth of φ under the valuation that
    /// interprets each variable as the extension of its image.
    #[test]
    fn substitution_lemma(seed in any::<u64>(), hybrid in any::<bool>()) {
        let language = if hybrid { Language::H2 } else { Language::L };
        let mut r = rng(seed);
        let sigma = random_substitution(&mut r, language);
        let phi = random_formula(&mut r, &FormulaConfig::new(language, 2, 3));
        let both = Formula::and_all([phi.clone(), sigma.get(1).unwrap().clone(), sigma.get(2).unwrap().clone()]);
        let model = random_model_for(&mut r, &both, frame_config(language, 5, false));
        let mut shifted = Valuation { vars: Default::default(), noms: model.valuation.noms.clone() };
        for (v, image) in sigma.iter() {
            let ext = model.extension(image).unwrap();
            shifted.vars.insert(v, (0..ext.len()).filter(|&x| ext[x]).collect());
        }
        let other = Model::new(model.frame.clone(), shifted).unwrap();
        prop_assert_eq!(model.extension(&sigma.apply(&phi)).unwrap(), other.extension(&phi).unwrap());
    }

    #[test]
    fn sat_solver_matches_truth_tables(seed in any::<u64>()) {
        let mut r = rng(seed);
        let atoms = r.gen_range(1..=10);
        let mut cnf = Cnf::new();
        for _ in 0..atoms {
            cnf.new_atom();
        }
        for _ in 0..r.gen_range(0..=4 * atoms) {
            let len = r.gen_range(1..=3);
            let clause: Vec<i32> = (0..len)
                .map(|_| {
                    let a = r.gen_range(1..=atoms);
                    if r.gen_bool(0.5) { a } else { -a }
                })
                .collect();
            cnf.add_clause(clause);
        }
        let brute = (0u32..1 << atoms).any(|bits| {
            let assignment: Vec<bool> = std::iter::once(false)
                .chain((0..atoms).map(|i| bits >> i & 1 == 1))
                .collect();
            cnf.is_satisfied_by(&assignment)
        });
        match solve(&cnf).unwrap() {
            SatResult::Sat(a) => prop_assert!(brute && cnf.is_satisfied_by(&a)),
            SatResult::Unsat => prop_assert!(!brute),
        }
    }

    #[test]
    fn frame_validity_matches_enumeration(seed in any::<u64>(), transitive in any::<bool>()) {
        let mut r = rng(seed);
        let frame = random_frame_rng(&mut r, frame_config(Language::L, 3, transitive));
        let phi = random_formula(&mut r, &FormulaConfig::new(Language::L, 2, 3));
        let n = frame.len();
        let vars: Vec<u32> = phi.variables().into_iter().collect();
        let bits = n * vars.len();
        let brute = (0u32..1 << bits).all(|mask| {
            let mut val = Valuation::new();
            for (k, &v) in vars.iter().enumerate() {
                val = val.with_var(v, (0..n).filter(|x| mask >> (k * n + x) & 1 == 1));
            }
            Model::new(frame.clone(), val).unwrap().holds_everywhere(&phi).unwrap()
        });
        match frame_valid(&frame, &phi).unwrap() {
            FrameValidity::Valid => prop_assert!(brute),
            FrameValidity::CounterModel { valuation, point } => {
                prop_assert!(!brute);
                let m = Model::new(frame, valuation).unwrap();
                prop_assert!(!m.extension(&phi).unwrap()[point]);
            }
        }
    }

    #[test]
    fn terms_round_trip(seed in any::<u64>()) {
        let t = random_term(&mut rng(seed), 3, 6);
        prop_assert_eq!(formula_to_term(&term_to_formula(&t)).unwrap(), t);
    }
}

fn decide(phi: &Formula, logic: Logic, engine: Engine) -> Result<Satisfiability, DecisionError> {
    let options = DecisionOptions {
        label_budget: 20_000,
        engine,
    };
    satisfiable_with(phi, logic, &options).map(|r| r.0)
}

/// No random model of at most 6 points satisfies a formula called unsat.
fn no_random_model(phi: &Formula, language: Language, seed: u64) -> bool {
    let mut r = rng(seed);
    (0..100).all(|i| {
        let m = random_model_for(&mut r, phi, frame_config(language, 6, i % 2 == 0));
        m.extension(phi).unwrap().iter().all(|b| !b)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn ku_engines_agree(seed in any::<u64>()) {
        let phi = random_formula(&mut rng(seed), &FormulaConfig::new(Language::L, 2, 3));
        let global = decide(&phi, Logic::Ku, Engine::Global);
        let graph = decide(&phi, Logic::Ku, Engine::Graph);
        if let (Ok(a), Ok(b)) = (&global, &graph) {
            prop_assert_eq!(a.is_sat(), b.is_sat(), "{}", phi);
            if !a.is_sat() {
                prop_assert!(no_random_model(&phi, Language::L, seed));
            }
        } else {
            prop_assert!(matches!(global, Ok(_) | Err(DecisionError::ResourceLimit(_))));
            prop_assert!(matches!(graph, Ok(_) | Err(DecisionError::ResourceLimit(_))));
        }
    }

    #[test]
    fn kh2_unsat_answers_survive_random_models(seed in any::<u64>()) {
        let phi = random_formula(&mut rng(seed), &FormulaConfig::new(Language::H2, 2, 3));
        match decide(&phi, Logic::KH2, Engine::Auto) {
            Ok(Satisfiability::Unsat) => prop_assert!(no_random_model(&phi, Language::H2, seed)),
            Ok(Satisfiability::Sat { .. }) | Err(DecisionError::ResourceLimit(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
