//! End-to-end checks of the reduction on concrete machines: the witness side
//! by tableau or random models, the other side by a certificate frame.

use std::collections::{BTreeSet, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::{self, DecisionError, DecisionOptions, Logic, Validity};
use crate::encoding::{
    ax_program, canonical_frame, config_exists, psi, CanonicalFrame, EncodingError, Mode,
};
use crate::formula::{
    ground_substitutions, Formula, FormulaError, Language, Modality, Substitution,
};
use crate::gen::random_model_for;
use crate::kripke::{
    frame_valid, model_check, parse_frame, write_frame, write_valuation, Frame, FrameValidity,
    KripkeError, Model, RandomFrameConfig, TextError,
};
use crate::minsky::{reaches, Config, MinskyError, Program, Reachability};
use crate::witness::witness_for_trace;

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error(transparent)]
    Minsky(#[from] MinskyError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Kripke(#[from] KripkeError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    /// σ(ψ) is false somewhere although the target is reachable.
    #[error("the witness substitution is refuted at point {point} of the model\n{model}")]
    WitnessRefuted { model: String, point: String },
    #[error("certificate check failed: {0}")]
    CertificateFailed(String),
}

impl WorkbenchError {
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            WorkbenchError::Decision(DecisionError::ResourceLimit(_))
        )
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub trials: usize,
    pub max_points: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            trials: 1_000,
            max_points: 8,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PipelineOptions {
    /// Step bound for running the machine.
    pub bound: usize,
    pub label_budget: usize,
    /// Longest trace for which the tableau is tried (universal mode only).
    pub tableau_max_steps: usize,
    pub suite: SuiteConfig,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            bound: 1_000,
            label_budget: 50_000,
            tableau_max_steps: 2,
            suite: SuiteConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method")]
pub enum ValidityEvidence {
    TableauProof {
        labels: usize,
        guesses: usize,
    },
    RandomModelSuite {
        trials: usize,
        max_points: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

/// A ground instance of ψ and the point of the certificate frame where it
/// fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundInstance {
    pub substitution: String,
    pub refuted_at: Option<String>,
}

/// Everything needed to re-check non-unifiability from disk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub program: String,
    pub start: Config,
    pub target: Config,
    pub mode: Mode,
    /// Frame text with `label:` lines.
    pub frame: String,
    pub checks: Vec<Check>,
    pub ground_instances: Vec<GroundInstance>,
}

impl Certificate {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
            && self.ground_instances.iter().all(|g| g.refuted_at.is_some())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PipelineVerdict {
    Unifiable {
        #[serde(with = "substitution_text")]
        substitution: Substitution,
        evidence: ValidityEvidence,
    },
    NotUnifiable {
        certificate: Box<Certificate>,
    },
    Unknown {
        reason: String,
    },
}

impl PipelineVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineVerdict::Unifiable { .. } => "unifiable",
            PipelineVerdict::NotUnifiable { .. } => "not-unifiable",
            PipelineVerdict::Unknown { .. } => "unknown",
        }
    }
}

mod substitution_text {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: &Substitution, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&s.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Substitution, D::Error> {
        let text = String::deserialize(de)?;
        Substitution::parse(&text, Language::H2)
            .or_else(|_| Substitution::parse(&text, Language::L))
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub verdict: PipelineVerdict,
    pub mode: Mode,
    pub trace_length: Option<usize>,
    /// DAG sizes of ψ and, when built, σ(ψ).
    pub psi_size: usize,
    pub instance_size: Option<usize>,
    pub seed: u64,
}

pub fn language_of(mode: Mode) -> Language {
    if mode.is_hybrid() {
        Language::H2
    } else {
        Language::L
    }
}

/// Runs the reduction on one instance and checks whichever direction
/// applies.
pub fn check_unifiable_via_reduction(
    program: &Program,
    start: Config,
    target: Config,
    mode: Mode,
    options: &PipelineOptions,
) -> Result<Report, WorkbenchError> {
    let psi_formula = psi(program, start, target, mode);
    let mut report = Report {
        verdict: PipelineVerdict::Unknown {
            reason: String::new(),
        },
        mode,
        trace_length: None,
        psi_size: psi_formula.dag_size(),
        instance_size: None,
        seed: options.suite.seed,
    };
    report.verdict = match reaches(program, start, target, options.bound) {
        Reachability::Yes(trace) => {
            report.trace_length = Some(trace.len());
            let sigma = witness_for_trace(&trace, mode);
            let instance = sigma.apply(&psi_formula);
            report.instance_size = Some(instance.dag_size());
            let evidence = if !mode.is_hybrid() && trace.len() <= options.tableau_max_steps {
                match tableau_evidence(&instance, options.label_budget)? {
                    Some(e) => e,
                    None => suite_evidence(&instance, mode, options.suite)?,
                }
            } else {
                suite_evidence(&instance, mode, options.suite)?
            };
            PipelineVerdict::Unifiable {
                substitution: sigma,
                evidence,
            }
        }
        Reachability::No => {
            let cf = canonical_frame(program, start, options.bound, mode)?;
            let certificate = build_certificate(program, start, target, mode, &cf)?;
            if !certificate.all_passed() {
                return Err(WorkbenchError::CertificateFailed(format!(
                    "{:?}",
                    certificate.checks
                )));
            }
            PipelineVerdict::NotUnifiable {
                certificate: Box::new(certificate),
            }
        }
        Reachability::Unknown => PipelineVerdict::Unknown {
            reason: format!(
                "the run from {start} neither reaches {target}, halts nor loops within {} steps",
                options.bound
            ),
        },
    };
    Ok(report)
}

/// `Ok(None)` when the tableau ran out of budget.
fn tableau_evidence(
    instance: &Formula,
    label_budget: usize,
) -> Result<Option<ValidityEvidence>, WorkbenchError> {
    let options = DecisionOptions {
        label_budget,
        ..Default::default()
    };
    match decision::valid_with(instance, Logic::Ku, &options) {
        Ok((Validity::Valid, stats)) => Ok(Some(ValidityEvidence::TableauProof {
            labels: stats.labels,
            guesses: stats.guesses,
        })),
        Ok((Validity::CounterModel { model, point }, _)) => Err(refuted(&model, point)),
        Err(DecisionError::ResourceLimit(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn suite_evidence(
    instance: &Formula,
    mode: Mode,
    suite: SuiteConfig,
) -> Result<ValidityEvidence, WorkbenchError> {
    if let Some((model, point)) = random_model_suite(instance, language_of(mode), suite)? {
        return Err(refuted(&model, point));
    }
    Ok(ValidityEvidence::RandomModelSuite {
        trials: suite.trials,
        max_points: suite.max_points,
        seed: suite.seed,
    })
}

fn refuted(model: &Model, point: usize) -> WorkbenchError {
    WorkbenchError::WitnessRefuted {
        model: format!(
            "{}{}",
            write_frame(&model.frame, &[]),
            write_valuation(&model.frame, &model.valuation)
        ),
        point: model.frame.name(point).to_string(),
    }
}

/// Re-checks the evidence of a unifiable verdict for `instance = σ(ψ)`. A
/// random suite is replayed with a different seed.
pub fn recheck_evidence(
    instance: &Formula,
    mode: Mode,
    evidence: &ValidityEvidence,
    label_budget: usize,
) -> Result<bool, WorkbenchError> {
    match *evidence {
        ValidityEvidence::TableauProof { .. } => {
            let options = DecisionOptions {
                label_budget,
                ..Default::default()
            };
            Ok(decision::valid_with(instance, Logic::Ku, &options)?
                .0
                .is_valid())
        }
        ValidityEvidence::RandomModelSuite {
            trials,
            max_points,
            seed,
        } => {
            let suite = SuiteConfig {
                trials,
                max_points,
                seed: seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
            };
            Ok(random_model_suite(instance, language_of(mode), suite)?.is_none())
        }
    }
}

/// Checks, on the canonical frame: the program axiom is frame-valid, the
/// start configuration exists everywhere, the target exists nowhere; and
/// every ground instance of ψ fails somewhere.
fn build_certificate(
    program: &Program,
    start: Config,
    target: Config,
    mode: Mode,
    cf: &CanonicalFrame,
) -> Result<Certificate, WorkbenchError> {
    let (checks, ground_instances) = run_checks(&cf.frame, program, start, target, mode)?;
    Ok(Certificate {
        program: program.to_string(),
        start,
        target,
        mode,
        frame: cf.to_text(),
        checks,
        ground_instances,
    })
}

fn run_checks(
    frame: &Frame,
    program: &Program,
    start: Config,
    target: Config,
    mode: Mode,
) -> Result<(Vec<Check>, Vec<GroundInstance>), WorkbenchError> {
    let valid =
        |phi: &Formula| -> Result<bool, WorkbenchError> { Ok(frame_valid(frame, phi)?.is_valid()) };
    let checks = vec![
        Check {
            name: "program axiom is frame-valid".into(),
            passed: valid(&ax_program(program, mode))?,
        },
        Check {
            name: "start configuration holds everywhere".into(),
            passed: valid(&config_exists(start, mode))?,
        },
        Check {
            name: "target configuration holds nowhere".into(),
            passed: valid(&Formula::not(config_exists(target, mode)))?,
        },
    ];
    let psi_formula = psi(program, start, target, mode);
    let mut ground_instances = Vec::new();
    for sigma in ground_substitutions(&[1, 2].into()) {
        let instance = sigma.apply(&psi_formula);
        let refuted_at = match frame_valid(frame, &instance)? {
            FrameValidity::Valid => None,
            FrameValidity::CounterModel { valuation, point } => {
                let model = Model::new(frame.clone(), valuation)?;
                if model_check(&model, point, &instance)? {
                    return Err(WorkbenchError::CertificateFailed(
                        "frame validity returned a point where the instance holds".into(),
                    ));
                }
                Some(frame.name(point).to_string())
            }
        };
        ground_instances.push(GroundInstance {
            substitution: sigma.to_string().trim_end().replace('\n', "; "),
            refuted_at,
        });
    }
    Ok((checks, ground_instances))
}

/// Rebuilds every formula from the stored program and configurations and
/// reruns the checks on the stored frame.
pub fn recheck_certificate(certificate: &Certificate) -> Result<Certificate, WorkbenchError> {
    let program = Program::parse(&certificate.program)?;
    let frame = parse_frame(&certificate.frame)?.frame;
    let (checks, ground_instances) = run_checks(
        &frame,
        &program,
        certificate.start,
        certificate.target,
        certificate.mode,
    )?;
    Ok(Certificate {
        checks,
        ground_instances,
        ..certificate.clone()
    })
}

/// Looks for a model and point where `phi` fails among `suite.trials`
/// random models. Trial `i` draws from stream `i` of the master seed, so the
/// outcome does not depend on scheduling.
pub fn random_model_suite(
    phi: &Formula,
    kind: Language,
    suite: SuiteConfig,
) -> Result<Option<(Model, usize)>, KripkeError> {
    (0..suite.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(suite.seed);
            rng.set_stream(trial as u64);
            let config = RandomFrameConfig {
                max_points: suite.max_points,
                kind,
                transitive: trial % 2 == 1,
                full_hybrid: false,
            };
            let model = random_model_for(&mut rng, phi, config);
            let ext = model.extension(phi)?;
            Ok(ext.iter().position(|b| !b).map(|x| (model, x)))
        })
        .find_first(|r: &Result<Option<(Model, usize)>, KripkeError>| !matches!(r, Ok(None)))
        .unwrap_or(Ok(None))
}

/// First ground substitution making `phi` valid. Sound for Ku and KH2 but
/// not complete: a unifiable formula may have no ground unifier there.
pub fn ground_unifiable(
    phi: &Formula,
    logic: Logic,
    options: &DecisionOptions,
) -> Result<Option<Substitution>, DecisionError> {
    for sigma in ground_substitutions(&phi.variables()) {
        if decision::valid_with(&sigma.apply(phi), logic, options)?
            .0
            .is_valid()
        {
            return Ok(Some(sigma));
        }
    }
    Ok(None)
}

/// Points at distance at most `max_dist` from `root` along `R ∪ S`.
pub fn neighbourhood(frame: &Frame, root: usize, max_dist: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([root]);
    let mut queue = VecDeque::from([(root, 0)]);
    while let Some((x, d)) = queue.pop_front() {
        if d == max_dist {
            continue;
        }
        for m in [Modality::Rel, Modality::Hyb] {
            for &y in frame.successors(m, x) {
                if seen.insert(y) {
                    queue.push_back((y, d + 1));
                }
            }
        }
    }
    seen
}

/// Whether every point near `root` agrees with it on `<h>n`.
pub fn nom_locality_holds(
    model: &Model,
    root: usize,
    nominal: u32,
    max_dist: usize,
) -> Result<bool, KripkeError> {
    let sees = model.extension(&Formula::diamond(Modality::Hyb, Formula::nominal(nominal)))?;
    Ok(neighbourhood(&model.frame, root, max_dist)
        .into_iter()
        .all(|x| sees[x] == sees[root]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prog(s: &str) -> Program {
        Program::parse(s).unwrap()
    }

    fn quick() -> PipelineOptions {
        PipelineOptions {
            suite: SuiteConfig {
                trials: 50,
                max_points: 5,
                seed: 1,
            },
            ..Default::default()
        }
    }

    #[test]
    fn zero_step_instance_is_proved_by_tableau() {
        let a = Config::new(1, 0, 0);
        let r = check_unifiable_via_reduction(&Program::empty(), a, a, Mode::Universal, &quick())
            .unwrap();
        match r.verdict {
            PipelineVerdict::Unifiable {
                substitution,
                evidence,
            } => {
                assert_eq!(substitution.get(1), Some(&Formula::bot()));
                assert!(matches!(evidence, ValidityEvidence::TableauProof { .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn halting_machine_gives_certificate() {
        let r = check_unifiable_via_reduction(
            &Program::empty(),
            Config::new(1, 0, 0),
            Config::new(2, 0, 0),
            Mode::Universal,
            &quick(),
        )
        .unwrap();
        let PipelineVerdict::NotUnifiable { certificate } = r.verdict else {
            panic!()
        };
        assert_eq!(parse_frame(&certificate.frame).unwrap().frame.len(), 18);
        assert_eq!(certificate.ground_instances.len(), 4);
        let json = serde_json::to_string(&certificate).unwrap();
        let back: Certificate = serde_json::from_str(&json).unwrap();
        assert!(recheck_certificate(&back).unwrap().all_passed());
    }

    #[test]
    fn reachable_instance_with_positive_counters_is_proved() {
        let r = check_unifiable_via_reduction(
            &prog("1 -> 2,+1,0"),
            Config::new(1, 1, 1),
            Config::new(2, 2, 1),
            Mode::Universal,
            &quick(),
        )
        .unwrap();
        assert!(matches!(
            r.verdict,
            PipelineVerdict::Unifiable {
                evidence: ValidityEvidence::TableauProof { .. },
                ..
            }
        ));
        assert_eq!(r.trace_length, Some(1));
    }

    #[test]
    fn zero_counter_witness_is_refuted_by_tableau() {
        let e = check_unifiable_via_reduction(
            &prog("1 -> 2,+1,0"),
            Config::new(1, 0, 0),
            Config::new(2, 1, 0),
            Mode::Universal,
            &quick(),
        )
        .unwrap_err();
        assert!(matches!(e, WorkbenchError::WitnessRefuted { .. }));
    }

    #[test]
    fn ground_unifiers() {
        let phi = crate::formula::parse("[u]p1", Language::L).unwrap();
        let opts = DecisionOptions::default();
        let sigma = ground_unifiable(&phi, Logic::Ku, &opts).unwrap().unwrap();
        assert_eq!(sigma.get(1), Some(&Formula::top()));
        let phi = crate::formula::parse("p1 & ~p1", Language::L).unwrap();
        assert_eq!(ground_unifiable(&phi, Logic::Ku, &opts).unwrap(), None);
    }

    #[test]
    fn suite_finds_easy_counterexamples() {
        let phi = crate::formula::parse("[]p1 -> p1", Language::L).unwrap();
        let suite = SuiteConfig {
            trials: 200,
            max_points: 4,
            seed: 5,
        };
        let (model, x) = random_model_suite(&phi, Language::L, suite)
            .unwrap()
            .unwrap();
        assert!(!model_check(&model, x, &phi).unwrap());
        let again = random_model_suite(&phi, Language::L, suite)
            .unwrap()
            .unwrap();
        assert_eq!((again.0, again.1), (model, x));
    }

    #[test]
    fn neighbourhood_counts_both_relations() {
        let f = Frame::anonymous(4, [(0, 1)], Some(vec![(1, 2), (2, 3)]));
        assert_eq!(neighbourhood(&f, 0, 2), [0, 1, 2].into());
        assert_eq!(neighbourhood(&f, 0, 6).len(), 4);
    }
}
