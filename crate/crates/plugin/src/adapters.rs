//! Plugins behind the core `Sampler` and `Problem` traits.

use std::sync::Mutex;

use bbohub_core::{
    AskContext, Direction, Params, Problem, ProblemError, Sampler, SamplerError, SearchSpace,
    Trial,
};

use crate::handle::{spawn_plugin, PluginConfig, PluginError, PluginHandle};
use crate::message::Capability;

pub struct PluginSampler {
    name: String,
    handle: PluginHandle,
}

impl PluginSampler {
    pub fn spawn(
        name: impl Into<String>,
        command: &[String],
        config: &PluginConfig,
    ) -> Result<Self, PluginError> {
        Ok(Self {
            name: name.into(),
            handle: spawn_plugin(command, Capability::Sampler, config)?,
        })
    }

    pub fn handle(&self) -> &PluginHandle {
        &self.handle
    }

    pub fn shutdown(&mut self) {
        self.handle.shutdown();
    }
}

fn sampler_error(e: PluginError) -> SamplerError {
    match e {
        PluginError::ContractViolation(m) => SamplerError::ContractViolation(m),
        other => SamplerError::Failed(other.to_string()),
    }
}

impl Sampler for PluginSampler {
    fn name(&self) -> &str {
        &self.name
    }

    fn ask(&mut self, ctx: &AskContext<'_>) -> Result<Params, SamplerError> {
        let history: Vec<Trial> = ctx.completed().cloned().collect();
        self.handle
            .ask(ctx.trial_id, ctx.search_space, &history)
            .map_err(sampler_error)
    }

    fn tell(&mut self, trial: &Trial) -> Result<(), SamplerError> {
        self.handle.tell(trial).map_err(sampler_error)
    }
}

/// A problem plugin. Calls are serialized because each handle carries one
/// request at a time.
pub struct PluginProblem {
    space: SearchSpace,
    directions: Vec<Direction>,
    handle: Mutex<PluginHandle>,
}

impl PluginProblem {
    pub fn spawn(command: &[String], config: &PluginConfig) -> Result<Self, PluginError> {
        let handle = spawn_plugin(command, Capability::Problem, config)?;
        let (space, directions) = handle
            .problem_declaration()
            .cloned()
            .expect("problem handshake stores the declaration");
        Ok(Self {
            space,
            directions,
            handle: Mutex::new(handle),
        })
    }

    pub fn shutdown(&self) {
        self.handle.lock().unwrap_or_else(|e| e.into_inner()).shutdown();
    }
}

impl Problem for PluginProblem {
    fn search_space(&self) -> &SearchSpace {
        &self.space
    }

    fn directions(&self) -> &[Direction] {
        &self.directions
    }

    fn evaluate(&self, params: &Params) -> Result<Vec<f64>, ProblemError> {
        let mut handle = self.handle.lock().unwrap_or_else(|e| e.into_inner());
        handle.evaluate(params).map_err(|e| match e {
            PluginError::ContractViolation(_) | PluginError::Remote { .. } => {
                ProblemError::Evaluation(e.to_string())
            }
            other => ProblemError::Unavailable(other.to_string()),
        })
    }
}
