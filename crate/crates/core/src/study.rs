//! Studies: the ask/tell loop over a declared search space.

use std::io::{self, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Mutex, MutexGuard};

use thiserror::Error;

use crate::journal::{
    self, JournalError, JournalRecord, RecordPayload, StudyCreated, StudySnapshot, TrialAsked,
    TrialTold,
};
use crate::pareto::dominates;
use crate::problem::{Problem, ProblemError};
use crate::sampler::{AskContext, Sampler, SamplerError};
use crate::space::{Direction, Params, SearchSpace, SpaceError};
use crate::trial::{Outcome, Trial, TrialState};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("a study needs at least one direction")]
    NoDirections,
    #[error("sampler `{sampler}` failed: {source}")]
    Sampler {
        sampler: String,
        /// Set when the failure was recorded as a failed trial.
        trial_id: Option<u64>,
        #[source]
        source: SamplerError,
    },
    #[error("trial {0} not found")]
    TrialNotFound(u64),
    #[error("trial {0} is already finished")]
    TrialFinished(u64),
    #[error("expected {expected} values, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("objective value {0} is not finite")]
    NonFinite(f64),
    #[error("multi-objective study: use pareto_front instead")]
    MultiObjective,
    #[error("problem failed: {0}")]
    Problem(ProblemError),
    #[error("study has no complete trials")]
    Empty,
    #[error("configuration mismatch: {0}")]
    Configuration(String),
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error("journal write failed: {0}")]
    Io(#[from] io::Error),
}

pub struct StudyConfig {
    pub directions: Vec<Direction>,
    pub search_space: SearchSpace,
    pub seed: u64,
    pub sampler: Box<dyn Sampler>,
}

impl StudyConfig {
    pub fn new(
        directions: Vec<Direction>,
        search_space: SearchSpace,
        seed: u64,
        sampler: Box<dyn Sampler>,
    ) -> Self {
        Self {
            directions,
            search_space,
            seed,
            sampler,
        }
    }
}

struct Journal {
    records: Vec<JournalRecord>,
    sink: Option<Box<dyn Write + Send>>,
}

impl Journal {
    fn append(&mut self, payload: &RecordPayload) -> io::Result<()> {
        let record = JournalRecord::new(self.records.len() as u64, payload);
        if let Some(sink) = self.sink.as_mut() {
            let mut line = record.to_line();
            line.push('\n');
            sink.write_all(line.as_bytes())?;
            sink.flush()?;
        }
        self.records.push(record);
        Ok(())
    }
}

struct Inner {
    state: StudySnapshot,
    sampler: Box<dyn Sampler>,
    journal: Journal,
}

/// One optimization run. All mutations go through a single mutex, so a
/// `Study` can be shared between worker threads.
pub struct Study {
    inner: Mutex<Inner>,
}

impl std::fmt::Debug for Study {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Study").field("state", &self.lock().state).finish()
    }
}

impl Study {
    /// Creates an empty study with an in-memory journal.
    pub fn create(config: StudyConfig) -> Result<Self, StudyError> {
        Self::create_inner(config, None)
    }

    /// Creates an empty study that also streams its journal to `sink`.
    pub fn create_with_journal(
        config: StudyConfig,
        sink: Box<dyn Write + Send>,
    ) -> Result<Self, StudyError> {
        Self::create_inner(config, Some(sink))
    }

    fn create_inner(
        config: StudyConfig,
        sink: Option<Box<dyn Write + Send>>,
    ) -> Result<Self, StudyError> {
        if config.directions.is_empty() {
            return Err(StudyError::NoDirections);
        }
        config.search_space.validate()?;
        config
            .sampler
            .validate(&config.search_space, &config.directions)
            .map_err(|source| StudyError::Sampler {
                sampler: config.sampler.name().to_owned(),
                trial_id: None,
                source,
            })?;
        let state = StudySnapshot {
            directions: config.directions,
            search_space: config.search_space,
            seed: config.seed,
            sampler: config.sampler.name().to_owned(),
            trials: Vec::new(),
        };
        let mut journal = Journal {
            records: Vec::new(),
            sink,
        };
        journal.append(&RecordPayload::StudyCreated(StudyCreated {
            directions: state.directions.clone(),
            search_space: state.search_space.clone(),
            seed: state.seed,
            sampler: state.sampler.clone(),
        }))?;
        Ok(Self {
            inner: Mutex::new(Inner {
                state,
                sampler: config.sampler,
                journal,
            }),
        })
    }

    /// Rebuilds a study from journal records and resumes it with `sampler`.
    /// New records continue the sequence and go to `sink` if given.
    pub fn resume(
        records: Vec<JournalRecord>,
        sampler: Box<dyn Sampler>,
        sink: Option<Box<dyn Write + Send>>,
    ) -> Result<Self, StudyError> {
        let state = journal::replay(&records)?;
        Ok(Self {
            inner: Mutex::new(Inner {
                state,
                sampler,
                journal: Journal { records, sink },
            }),
        })
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.lock().state.directions.clone()
    }

    pub fn search_space(&self) -> SearchSpace {
        self.lock().state.search_space.clone()
    }

    pub fn sampler_name(&self) -> String {
        self.lock().state.sampler.clone()
    }

    pub fn trials(&self) -> Vec<Trial> {
        self.lock().state.trials.clone()
    }

    pub fn n_trials(&self) -> usize {
        self.lock().state.trials.len()
    }

    pub fn snapshot(&self) -> StudySnapshot {
        self.lock().state.clone()
    }

    pub fn journal(&self) -> Vec<JournalRecord> {
        self.lock().journal.records.clone()
    }

    /// Asks the sampler for the next trial and records it as running.
    pub fn ask(&self) -> Result<Trial, StudyError> {
        let mut guard = self.lock();
        let inner = &mut *guard;
        let trial_id = inner.state.trials.len() as u64;
        let ctx = AskContext {
            trial_id,
            seed: inner.state.seed,
            search_space: &inner.state.search_space,
            directions: &inner.state.directions,
            trials: &inner.state.trials,
        };
        let proposal = inner
            .sampler
            .ask(&ctx)
            .and_then(|params| {
                inner
                    .state
                    .search_space
                    .check(&params)
                    .map(|_| params)
                    .map_err(|e| SamplerError::ContractViolation(e.to_string()))
            });
        let sampler = inner.state.sampler.clone();
        match proposal {
            Ok(params) => {
                inner
                    .journal
                    .append(&RecordPayload::TrialAsked(TrialAsked {
                        trial_id,
                        params: params.clone(),
                    }))?;
                let trial = Trial::running(trial_id, params);
                inner.state.trials.push(trial.clone());
                Ok(trial)
            }
            Err(source @ SamplerError::ContractViolation(_)) => {
                inner.journal.append(&RecordPayload::TrialAsked(TrialAsked {
                    trial_id,
                    params: Params::new(),
                }))?;
                inner.journal.append(&RecordPayload::TrialTold(TrialTold {
                    trial_id,
                    state: TrialState::Failed,
                    values: None,
                }))?;
                inner.state.trials.push(Trial {
                    id: trial_id,
                    params: Params::new(),
                    state: TrialState::Failed,
                    values: None,
                });
                Err(StudyError::Sampler {
                    sampler,
                    trial_id: Some(trial_id),
                    source,
                })
            }
            Err(source) => Err(StudyError::Sampler {
                sampler,
                trial_id: None,
                source,
            }),
        }
    }

    /// Finishes a running trial.
    pub fn tell(&self, trial_id: u64, outcome: impl Into<Outcome>) -> Result<Trial, StudyError> {
        let outcome = outcome.into();
        let mut guard = self.lock();
        let inner = &mut *guard;
        let n_obj = inner.state.directions.len();
        let trial = inner
            .state
            .trials
            .get(trial_id as usize)
            .ok_or(StudyError::TrialNotFound(trial_id))?;
        if trial.state != TrialState::Running {
            return Err(StudyError::TrialFinished(trial_id));
        }
        let (state, values) = match outcome {
            Outcome::Values(values) => {
                if values.len() != n_obj {
                    return Err(StudyError::Arity {
                        expected: n_obj,
                        found: values.len(),
                    });
                }
                if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
                    return Err(StudyError::NonFinite(bad));
                }
                (TrialState::Complete, Some(values))
            }
            Outcome::Failure => (TrialState::Failed, None),
        };
        inner.journal.append(&RecordPayload::TrialTold(TrialTold {
            trial_id,
            state,
            values: values.clone(),
        }))?;
        let trial = &mut inner.state.trials[trial_id as usize];
        trial.state = state;
        trial.values = values;
        let trial = trial.clone();
        let sampler = inner.state.sampler.clone();
        inner
            .sampler
            .tell(&trial)
            .map_err(|source| StudyError::Sampler {
                sampler,
                trial_id: Some(trial_id),
                source,
            })?;
        Ok(trial)
    }

    /// Best complete trial of a single-objective study; ties go to the
    /// lowest id.
    pub fn best_trial(&self) -> Result<Trial, StudyError> {
        let guard = self.lock();
        let state = &guard.state;
        if state.directions.len() != 1 {
            return Err(StudyError::MultiObjective);
        }
        let direction = state.directions[0];
        let mut best: Option<&Trial> = None;
        for t in state.trials.iter().filter(|t| t.is_complete()) {
            let v = t.value().expect("complete trials carry values");
            if best.is_none_or(|b| direction.is_better(v, b.value().expect("complete"))) {
                best = Some(t);
            }
        }
        best.cloned().ok_or(StudyError::Empty)
    }

    /// Complete trials not dominated by any other complete trial, by id.
    pub fn pareto_front(&self) -> Result<Vec<Trial>, StudyError> {
        let guard = self.lock();
        let state = &guard.state;
        let complete: Vec<&Trial> = state.trials.iter().filter(|t| t.is_complete()).collect();
        if complete.is_empty() {
            return Err(StudyError::Empty);
        }
        let values: Vec<&[f64]> = complete
            .iter()
            .map(|t| t.values.as_deref().expect("complete"))
            .collect();
        Ok(complete
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                !values
                    .iter()
                    .any(|other| dominates(other, values[*i], &state.directions))
            })
            .map(|(_, t)| (*t).clone())
            .collect())
    }

    /// Runs `n_trials` ask/evaluate/tell rounds on one thread.
    pub fn optimize(&self, problem: &dyn Problem, n_trials: usize) -> Result<(), StudyError> {
        self.optimize_parallel(problem, n_trials, 1)
    }

    /// Runs `n_trials` rounds spread over `workers` threads.
    ///
    /// Evaluation errors, panics and non-finite values become failed trials,
    /// except `ProblemError::Unavailable`, which stops the loop.
    /// Sampler contract violations become failed trials as well; any other
    /// sampler error stops the loop and is returned.
    pub fn optimize_parallel(
        &self,
        problem: &dyn Problem,
        n_trials: usize,
        workers: usize,
    ) -> Result<(), StudyError> {
        {
            let guard = self.lock();
            if problem.directions() != guard.state.directions.as_slice() {
                return Err(StudyError::Configuration(format!(
                    "problem directions {:?} differ from study directions {:?}",
                    problem.directions(),
                    guard.state.directions
                )));
            }
            if problem.search_space() != &guard.state.search_space {
                return Err(StudyError::Configuration(
                    "problem search space differs from study search space".into(),
                ));
            }
        }
        let claimed = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let first_error: Mutex<Option<StudyError>> = Mutex::new(None);
        let worker = || {
            while !abort.load(Ordering::SeqCst) && claimed.fetch_add(1, Ordering::SeqCst) < n_trials {
                if let Err(e) = self.run_one(problem) {
                    abort.store(true, Ordering::SeqCst);
                    first_error
                        .lock()
                        .unwrap_or_else(|e| e.into_inner())
                        .get_or_insert(e);
                }
            }
        };
        let workers = workers.max(1).min(n_trials.max(1));
        if workers == 1 {
            worker();
        } else {
            std::thread::scope(|s| {
                for _ in 0..workers {
                    s.spawn(worker);
                }
            });
        }
        match first_error.into_inner().unwrap_or_else(|e| e.into_inner()) {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn run_one(&self, problem: &dyn Problem) -> Result<(), StudyError> {
        let trial = match self.ask() {
            Ok(t) => t,
            Err(StudyError::Sampler {
                trial_id: Some(_),
                source: SamplerError::ContractViolation(_),
                ..
            }) => return Ok(()),
            Err(e) => return Err(e),
        };
        let evaluated = catch_unwind(AssertUnwindSafe(|| problem.evaluate(&trial.params)));
        let outcome = match evaluated {
            Ok(Err(e @ ProblemError::Unavailable(_))) => return Err(StudyError::Problem(e)),
            Ok(Ok(values)) if values.iter().all(|v| v.is_finite()) => Outcome::Values(values),
            _ => Outcome::Failure,
        };
        match self.tell(trial.id, outcome) {
            Ok(_) => Ok(()),
            Err(StudyError::Arity { .. }) => self.tell(trial.id, Outcome::Failure).map(|_| ()),
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::RandomSampler;
    use crate::space::{Distribution, ParamValue};

    fn space_x() -> SearchSpace {
        SearchSpace::new()
            .with("x", Distribution::float(-5.0, 5.0))
            .unwrap()
    }

    fn study(directions: Vec<Direction>) -> Study {
        Study::create(StudyConfig::new(directions, space_x(), 0, Box::new(RandomSampler))).unwrap()
    }

    #[test]
    fn fresh_study_is_empty_with_one_record() {
        let s = study(vec![Direction::Minimize]);
        assert_eq!(s.n_trials(), 0);
        let j = s.journal();
        assert_eq!(j.len(), 1);
        assert_eq!(j[0].kind, journal::RecordKind::StudyCreated);
    }

    #[test]
    fn empty_directions_rejected() {
        assert!(matches!(
            Study::create(StudyConfig::new(vec![], space_x(), 0, Box::new(RandomSampler))),
            Err(StudyError::NoDirections)
        ));
    }

    #[test]
    fn ids_are_dense() {
        let s = study(vec![Direction::Minimize]);
        assert_eq!(s.ask().unwrap().id, 0);
        assert_eq!(s.ask().unwrap().id, 1);
    }

    #[test]
    fn singleton_categorical_ask() {
        let space = SearchSpace::new()
            .with("c", Distribution::categorical(["a"]))
            .unwrap();
        let s = Study::create(StudyConfig::new(
            vec![Direction::Minimize],
            space,
            0,
            Box::new(RandomSampler),
        ))
        .unwrap();
        assert_eq!(s.ask().unwrap().params["c"], ParamValue::Categorical("a".into()));
    }

    #[test]
    fn tell_paths() {
        let s = study(vec![Direction::Minimize]);
        let t = s.ask().unwrap();
        assert!(matches!(
            s.tell(t.id, vec![1.0, 2.0]),
            Err(StudyError::Arity { expected: 1, found: 2 })
        ));
        assert!(matches!(s.tell(t.id, vec![f64::NAN]), Err(StudyError::NonFinite(_))));
        assert!(matches!(s.tell(9, vec![1.0]), Err(StudyError::TrialNotFound(9))));
        let done = s.tell(t.id, vec![3.5]).unwrap();
        assert_eq!(done.state, TrialState::Complete);
        assert_eq!(done.values, Some(vec![3.5]));
        assert!(matches!(s.tell(t.id, vec![1.0]), Err(StudyError::TrialFinished(0))));
        let f = s.ask().unwrap();
        let failed = s.tell(f.id, Outcome::Failure).unwrap();
        assert_eq!(failed.state, TrialState::Failed);
        assert_eq!(failed.values, None);
    }

    fn fill(s: &Study, values: &[&[f64]]) {
        for v in values {
            let t = s.ask().unwrap();
            s.tell(t.id, v.to_vec()).unwrap();
        }
    }

    #[test]
    fn best_trial_rules() {
        let s = study(vec![Direction::Minimize]);
        fill(&s, &[&[3.0], &[1.0], &[2.0]]);
        assert_eq!(s.best_trial().unwrap().id, 1);
        let m = study(vec![Direction::Maximize]);
        fill(&m, &[&[3.0], &[3.0]]);
        assert_eq!(m.best_trial().unwrap().id, 0);
        let e = study(vec![Direction::Minimize]);
        let t = e.ask().unwrap();
        e.tell(t.id, Outcome::Failure).unwrap();
        assert!(matches!(e.best_trial(), Err(StudyError::Empty)));
        let mo = study(vec![Direction::Minimize, Direction::Minimize]);
        assert!(matches!(mo.best_trial(), Err(StudyError::MultiObjective)));
    }

    #[test]
    fn pareto_front_examples() {
        let s = study(vec![Direction::Minimize, Direction::Minimize]);
        fill(&s, &[&[1.0, 2.0], &[2.0, 1.0], &[2.0, 2.0]]);
        let ids: Vec<u64> = s.pareto_front().unwrap().iter().map(|t| t.id).collect();
        assert_eq!(ids, vec![0, 1]);
        let d = study(vec![Direction::Minimize, Direction::Minimize]);
        fill(&d, &[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(d.pareto_front().unwrap().len(), 2);
        let one = study(vec![Direction::Minimize]);
        fill(&one, &[&[4.0]]);
        assert_eq!(one.pareto_front().unwrap().len(), 1);
    }

    struct Flaky(SearchSpace, Vec<Direction>);

    impl Problem for Flaky {
        fn search_space(&self) -> &SearchSpace {
            &self.0
        }
        fn directions(&self) -> &[Direction] {
            &self.1
        }
        fn evaluate(&self, _: &Params) -> Result<Vec<f64>, crate::problem::ProblemError> {
            Err(crate::problem::ProblemError::Evaluation("boom".into()))
        }
    }

    #[test]
    fn failing_problem_does_not_abort() {
        let s = study(vec![Direction::Minimize]);
        let p = Flaky(space_x(), vec![Direction::Minimize]);
        s.optimize(&p, 7).unwrap();
        let trials = s.trials();
        assert_eq!(trials.len(), 7);
        assert!(trials.iter().all(|t| t.state == TrialState::Failed));
        s.optimize(&p, 0).unwrap();
        assert_eq!(s.n_trials(), 7);
    }

    struct Gone(SearchSpace, Vec<Direction>);

    impl Problem for Gone {
        fn search_space(&self) -> &SearchSpace {
            &self.0
        }
        fn directions(&self) -> &[Direction] {
            &self.1
        }
        fn evaluate(&self, _: &Params) -> Result<Vec<f64>, ProblemError> {
            Err(ProblemError::Unavailable("process exited".into()))
        }
    }

    #[test]
    fn unavailable_problem_stops_the_loop() {
        let s = study(vec![Direction::Minimize]);
        let p = Gone(space_x(), vec![Direction::Minimize]);
        assert!(matches!(s.optimize(&p, 5), Err(StudyError::Problem(_))));
        let trials = s.trials();
        assert_eq!(trials.len(), 1);
        assert_eq!(trials[0].state, TrialState::Running);
    }

    #[test]
    fn mismatched_problem_is_rejected_up_front() {
        let s = study(vec![Direction::Minimize]);
        let p = Flaky(space_x(), vec![Direction::Maximize]);
        assert!(matches!(s.optimize(&p, 3), Err(StudyError::Configuration(_))));
        assert_eq!(s.n_trials(), 0);
    }

    #[test]
    fn sampler_rejects_study_at_creation() {
        let config = StudyConfig::new(
            vec![Direction::Minimize, Direction::Minimize],
            space_x(),
            0,
            Box::new(crate::samplers::TpeSampler::default()),
        );
        assert!(matches!(
            Study::create(config),
            Err(StudyError::Sampler {
                trial_id: None,
                source: SamplerError::Configuration(_),
                ..
            })
        ));
    }

    struct OutOfBounds;

    impl Sampler for OutOfBounds {
        fn name(&self) -> &str {
            "samplers/out_of_bounds"
        }
        fn ask(&mut self, _: &AskContext<'_>) -> Result<Params, SamplerError> {
            Ok([("x".to_string(), ParamValue::Float(99.0))].into())
        }
    }

    #[test]
    fn contract_violation_marks_trial_failed() {
        let s = Study::create(StudyConfig::new(
            vec![Direction::Minimize],
            space_x(),
            0,
            Box::new(OutOfBounds),
        ))
        .unwrap();
        match s.ask() {
            Err(StudyError::Sampler { sampler, trial_id, .. }) => {
                assert_eq!(sampler, "samplers/out_of_bounds");
                assert_eq!(trial_id, Some(0));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(s.trials()[0].state, TrialState::Failed);
        let replayed = journal::replay(&s.journal()).unwrap();
        assert_eq!(replayed, s.snapshot());
    }
}
