use std::path::PathBuf;
use std::time::{Duration, Instant};

use bbohub_core::benchmarks::BenchmarkSpec;
use bbohub_core::{
    Bbob, Distribution, ParamValue, Params, Problem, SearchSpace, Study, StudyConfig,
    TrialState,
};
use bbohub_plugin::{
    decode, spawn_plugin, Capability, HandleState, Message, PluginConfig, PluginError,
    PluginProblem, PluginSampler, PARAMS_ENV,
};

fn repo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn random_plugin() -> Vec<String> {
    let script = repo().join("registry/package/samplers/random_plugin/random_sampler.py");
    vec!["python3".into(), script.display().to_string()]
}

fn sphere_plugin() -> Vec<String> {
    let script = repo().join("registry/package/benchmarks/sphere_plugin/sphere_problem.py");
    vec!["python3".into(), script.display().to_string()]
}

fn misbehaving(mode: &str) -> Vec<String> {
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/misbehaving.py");
    vec!["python3".into(), script.display().to_string(), mode.into()]
}

fn quick() -> PluginConfig {
    PluginConfig {
        handshake_timeout: Duration::from_secs(5),
        request_timeout: Duration::from_millis(500),
        shutdown_grace: Duration::from_millis(300),
        ..Default::default()
    }
}

fn unit_space() -> SearchSpace {
    SearchSpace::new().with("x", Distribution::float(0.0, 1.0)).unwrap()
}

#[test]
fn reference_sampler_handshake() {
    let h = spawn_plugin(&random_plugin(), Capability::Sampler, &quick()).unwrap();
    assert_eq!(h.state(), HandleState::Ready);
    assert_eq!(h.capabilities(), &[Capability::Sampler]);
    assert_eq!(h.protocol(), 1);
}

#[test]
fn handshake_failures() {
    let cfg = quick();
    assert!(matches!(
        spawn_plugin(&misbehaving("version"), Capability::Sampler, &cfg),
        Err(PluginError::Version { found: 99 })
    ));
    assert!(matches!(
        spawn_plugin(&misbehaving("noise"), Capability::Sampler, &cfg),
        Err(PluginError::Protocol(_))
    ));
    assert!(matches!(
        spawn_plugin(&misbehaving("no_capability"), Capability::Sampler, &cfg),
        Err(PluginError::Capability(Capability::Sampler))
    ));
    assert!(matches!(
        spawn_plugin(&random_plugin(), Capability::Problem, &cfg),
        Err(PluginError::Capability(Capability::Problem))
    ));
    assert!(matches!(
        spawn_plugin(&["/nonexistent/plugin".to_string()], Capability::Sampler, &cfg),
        Err(PluginError::Spawn { .. })
    ));
}

#[test]
fn handshake_timeout_is_enforced() {
    let cfg = PluginConfig {
        handshake_timeout: Duration::from_millis(300),
        ..quick()
    };
    let start = Instant::now();
    let err = spawn_plugin(&misbehaving("slow_hello"), Capability::Sampler, &cfg).unwrap_err();
    assert!(matches!(err, PluginError::Startup(_)), "{err}");
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn ask_returns_params_in_bounds() {
    let mut h = spawn_plugin(&random_plugin(), Capability::Sampler, &quick()).unwrap();
    for id in 0..20 {
        let p = h.ask(id, &unit_space(), &[]).unwrap();
        let x = p["x"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&x));
    }
}

#[test]
fn out_of_bounds_is_a_contract_violation() {
    let mut h = spawn_plugin(&misbehaving("oob"), Capability::Sampler, &quick()).unwrap();
    assert!(matches!(h.ask(0, &unit_space(), &[]), Err(PluginError::ContractViolation(_))));
    assert_eq!(h.state(), HandleState::Ready);
}

#[test]
fn mismatched_echo_is_a_protocol_error() {
    let mut h = spawn_plugin(&misbehaving("mismatch"), Capability::Sampler, &quick()).unwrap();
    assert!(matches!(h.ask(4, &unit_space(), &[]), Err(PluginError::Protocol(_))));
    assert_eq!(h.state(), HandleState::Closed);
}

#[test]
fn sphere_plugin_agrees_with_builtin() {
    let mut h = spawn_plugin(&sphere_plugin(), Capability::Problem, &quick()).unwrap();
    let at: Params = [
        ("x0".to_string(), ParamValue::Float(3.0)),
        ("x1".to_string(), ParamValue::Float(4.0)),
    ]
    .into();
    let got = h.evaluate(&at).unwrap();
    assert_eq!(got, vec![25.0]);
    let builtin = Bbob::new(BenchmarkSpec::new(1, 2, 0)).unwrap();
    assert_eq!(got, builtin.evaluate(&at).unwrap());
    let (space, _) = h.problem_declaration().unwrap();
    assert_eq!(space, builtin.search_space());
}

#[test]
fn problem_parameters_travel_through_the_environment() {
    let cfg = PluginConfig {
        env: vec![(PARAMS_ENV.into(), r#"{"dimension":5}"#.into())],
        ..quick()
    };
    let p = PluginProblem::spawn(&sphere_plugin(), &cfg).unwrap();
    assert_eq!(p.search_space().len(), 5);
}

#[test]
fn non_finite_and_remote_errors() {
    let mut h = spawn_plugin(&misbehaving("nonfinite"), Capability::Problem, &quick()).unwrap();
    let at: Params = [("x".to_string(), ParamValue::Float(0.5))].into();
    assert!(matches!(h.evaluate(&at), Err(PluginError::ContractViolation(_))));
    let mut h = spawn_plugin(&misbehaving("remote_error"), Capability::Problem, &quick()).unwrap();
    assert!(matches!(h.evaluate(&at), Err(PluginError::Remote { .. })));
    assert_eq!(h.state(), HandleState::Ready);
}

#[test]
fn evaluate_after_shutdown_is_a_state_error() {
    let mut h = spawn_plugin(&sphere_plugin(), Capability::Problem, &quick()).unwrap();
    h.shutdown();
    h.shutdown();
    assert_eq!(h.state(), HandleState::Closed);
    assert!(matches!(
        h.evaluate(&Params::new()),
        Err(PluginError::State(HandleState::Closed))
    ));
}

#[test]
fn hung_plugin_times_out_and_is_killed() {
    let mut h = spawn_plugin(&misbehaving("hang"), Capability::Sampler, &quick()).unwrap();
    let start = Instant::now();
    assert!(matches!(h.ask(0, &unit_space(), &[]), Err(PluginError::Timeout { request: "ask", .. })));
    assert_eq!(h.state(), HandleState::Closed);
    assert!(start.elapsed() < Duration::from_secs(3));
}

#[test]
fn hung_shutdown_falls_back_to_kill() {
    let mut h = spawn_plugin(&misbehaving("hang"), Capability::Sampler, &quick()).unwrap();
    let start = Instant::now();
    h.shutdown();
    assert_eq!(h.state(), HandleState::Closed);
    assert!(start.elapsed() < Duration::from_secs(3));
}

#[test]
fn dead_plugin_errors_promptly() {
    let mut h = spawn_plugin(&misbehaving("die"), Capability::Sampler, &quick()).unwrap();
    let start = Instant::now();
    assert!(matches!(h.ask(0, &unit_space(), &[]), Err(PluginError::Exited(_))));
    assert!(h.ask(1, &unit_space(), &[]).is_err());
    assert!(start.elapsed() < Duration::from_secs(3));
}

#[test]
fn fixture_lines_round_trip() {
    let text = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/messages.ndjson"),
    )
    .unwrap();
    for line in text.lines() {
        let m: Message = decode(line).unwrap();
        assert_eq!(m.to_line(), line);
    }
}

#[test]
fn study_survives_contract_violations() {
    let sampler = PluginSampler::spawn("samplers/oob", &misbehaving("oob"), &quick()).unwrap();
    let problem = Bbob::new(BenchmarkSpec::new(1, 1, 0)).unwrap();
    let space = SearchSpace::new().with("x0", Distribution::float(0.0, 1.0)).unwrap();
    let study = Study::create(StudyConfig::new(
        problem.directions().to_vec(),
        space,
        0,
        Box::new(sampler),
    ))
    .unwrap();
    for _ in 0..3 {
        assert!(study.ask().is_err());
    }
    assert!(study.trials().iter().all(|t| t.state == TrialState::Failed));
    assert_eq!(study.n_trials(), 3);
}

#[test]
fn crash_stops_optimize_with_intact_journal() {
    let mut cmd = random_plugin();
    cmd.extend(["--crash-after".into(), "5".into()]);
    let sampler = PluginSampler::spawn("samplers/random_plugin", &cmd, &quick()).unwrap();
    let problem = Bbob::new(BenchmarkSpec::new(1, 2, 0)).unwrap();
    let study = Study::create(StudyConfig::new(
        problem.directions().to_vec(),
        problem.search_space().clone(),
        0,
        Box::new(sampler),
    ))
    .unwrap();
    assert!(study.optimize(&problem, 20).is_err());
    let snap = bbohub_core::journal::replay(&study.journal()).unwrap();
    assert_eq!(snap.trials.len(), 5);
    assert!(snap.trials.iter().all(|t| t.state == TrialState::Complete));
}
