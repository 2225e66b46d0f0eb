//! A running plugin process and its request/response channel.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use bbohub_core::{Direction, Params, SearchSpace, Trial};
use thiserror::Error;

use crate::message::{decode, Capability, DecodeError, Message, PROTOCOL_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandleState {
    Starting,
    Ready,
    Closed,
}

#[derive(Debug, Error)]
pub enum PluginError {
    #[error("cannot start plugin `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("plugin did not complete the handshake within {0:?}")]
    Startup(Duration),
    #[error("plugin speaks protocol {found}, host supports {PROTOCOL_VERSION}")]
    Version { found: u32 },
    #[error("plugin lacks the `{0}` capability")]
    Capability(Capability),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("no response to `{request}` within {after:?}")]
    Timeout { request: &'static str, after: Duration },
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("plugin reported {code}: {message}")]
    Remote { code: String, message: String },
    #[error("handle is {0:?}, requests need a ready handle")]
    State(HandleState),
    #[error("plugin exited: {0}")]
    Exited(String),
}

/// Host-side limits and process setup.
#[derive(Debug, Clone)]
pub struct PluginConfig {
    pub handshake_timeout: Duration,
    pub request_timeout: Duration,
    pub shutdown_grace: Duration,
    pub working_dir: Option<PathBuf>,
    pub env: Vec<(String, String)>,
}

impl Default for PluginConfig {
    fn default() -> Self {
        Self {
            handshake_timeout: Duration::from_secs(10),
            request_timeout: Duration::from_secs(30),
            shutdown_grace: Duration::from_secs(5),
            working_dir: None,
            env: Vec::new(),
        }
    }
}

pub struct PluginHandle {
    command: Vec<String>,
    config: PluginConfig,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    state: HandleState,
    protocol: u32,
    capabilities: Vec<Capability>,
    problem: Option<(SearchSpace, Vec<Direction>)>,
}

impl std::fmt::Debug for PluginHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PluginHandle")
            .field("command", &self.command)
            .field("state", &self.state)
            .field("capabilities", &self.capabilities)
            .finish()
    }
}

/// Starts `command` and performs the hello handshake.
pub fn spawn_plugin(
    command: &[String],
    expected: Capability,
    config: &PluginConfig,
) -> Result<PluginHandle, PluginError> {
    let program = command
        .first()
        .ok_or_else(|| PluginError::Protocol("empty plugin command".into()))?;
    let mut cmd = Command::new(program);
    cmd.args(&command[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit());
    if let Some(dir) = &config.working_dir {
        cmd.current_dir(dir);
    }
    cmd.envs(config.env.iter().map(|(k, v)| (k, v)));
    let mut child = cmd.spawn().map_err(|source| PluginError::Spawn {
        command: command.join(" "),
        source,
    })?;
    let stdin = child.stdin.take();
    let stdout = child.stdout.take().expect("stdout is piped");
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    let mut handle = PluginHandle {
        command: command.to_vec(),
        config: config.clone(),
        child,
        stdin,
        lines: rx,
        state: HandleState::Starting,
        protocol: 0,
        capabilities: Vec::new(),
        problem: None,
    };
    match handle.handshake(expected) {
        Ok(()) => Ok(handle),
        Err(e) => {
            handle.kill();
            Err(e)
        }
    }
}

impl PluginHandle {
    pub fn command(&self) -> &[String] {
        &self.command
    }

    pub fn state(&self) -> HandleState {
        self.state
    }

    pub fn protocol(&self) -> u32 {
        self.protocol
    }

    pub fn capabilities(&self) -> &[Capability] {
        &self.capabilities
    }

    /// Space and directions declared by a problem plugin.
    pub fn problem_declaration(&self) -> Option<&(SearchSpace, Vec<Direction>)> {
        self.problem.as_ref()
    }

    fn handshake(&mut self, expected: Capability) -> Result<(), PluginError> {
        self.send(&Message::Hello {
            protocol: PROTOCOL_VERSION,
            capabilities: vec![expected],
        })?;
        let timeout = self.config.handshake_timeout;
        let reply = match self.receive(timeout) {
            Err(PluginError::Timeout { .. }) => return Err(PluginError::Startup(timeout)),
            other => other?,
        };
        match reply {
            Message::HelloAck {
                protocol,
                capabilities,
                search_space,
                directions,
            } => {
                if protocol != PROTOCOL_VERSION {
                    return Err(PluginError::Version { found: protocol });
                }
                if !capabilities.contains(&expected) {
                    return Err(PluginError::Capability(expected));
                }
                if expected == Capability::Problem {
                    match (search_space, directions) {
                        (Some(s), Some(d)) if !d.is_empty() => self.problem = Some((s, d)),
                        _ => {
                            return Err(PluginError::Protocol(
                                "problem plugins must declare search_space and directions".into(),
                            ))
                        }
                    }
                }
                self.protocol = protocol;
                self.capabilities = capabilities;
                self.state = HandleState::Ready;
                Ok(())
            }
            Message::Error { code, message } => Err(PluginError::Remote { code, message }),
            other => Err(PluginError::Protocol(format!(
                "expected hello_ack, got {}",
                other.kind()
            ))),
        }
    }

    fn send(&mut self, message: &Message) -> Result<(), PluginError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or(PluginError::State(HandleState::Closed))?;
        let mut line = message.to_line();
        line.push('\n');
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| PluginError::Exited(e.to_string()))
    }

    fn receive(&mut self, timeout: Duration) -> Result<Message, PluginError> {
        match self.lines.recv_timeout(timeout) {
            Ok(line) => decode(&line).map_err(|e| match e {
                DecodeError::NonFinite => {
                    PluginError::ContractViolation("non-finite objective value".into())
                }
                DecodeError::Malformed(reason) => {
                    PluginError::Protocol(format!("bad line {line:?}: {reason}"))
                }
            }),
            Err(RecvTimeoutError::Timeout) => Err(PluginError::Timeout {
                request: "request",
                after: timeout,
            }),
            Err(RecvTimeoutError::Disconnected) => {
                let status = match self.child.try_wait() {
                    Ok(Some(s)) => s.to_string(),
                    Ok(None) => "closed its output stream".to_owned(),
                    Err(e) => e.to_string(),
                };
                Err(PluginError::Exited(status))
            }
        }
    }

    /// Sends one request and waits for its response. Transport failures
    /// close the handle; error replies and contract violations leave it
    /// ready.
    fn request(&mut self, message: Message) -> Result<Message, PluginError> {
        if self.state != HandleState::Ready {
            return Err(PluginError::State(self.state));
        }
        let kind = message.kind();
        let result = self.send(&message).and_then(|_| {
            let timeout = self.config.request_timeout;
            self.receive(timeout).map_err(|e| match e {
                PluginError::Timeout { after, .. } => PluginError::Timeout {
                    request: kind,
                    after,
                },
                other => other,
            })
        });
        match result {
            Ok(Message::Error { code, message }) => Err(PluginError::Remote { code, message }),
            Ok(m) => Ok(m),
            Err(e @ PluginError::ContractViolation(_)) => Err(e),
            Err(e) => {
                self.kill();
                Err(e)
            }
        }
    }

    fn unexpected(&mut self, expected: &str, got: &Message) -> PluginError {
        self.kill();
        PluginError::Protocol(format!("expected {expected}, got {}", got.kind()))
    }

    /// Requests params for `trial_id` and checks them against `space`.
    pub fn ask(
        &mut self,
        trial_id: u64,
        space: &SearchSpace,
        history: &[Trial],
    ) -> Result<Params, PluginError> {
        let reply = self.request(Message::Ask {
            trial_id,
            search_space: space.clone(),
            history: history.to_vec(),
        })?;
        match reply {
            Message::Params {
                trial_id: echoed,
                params,
            } => {
                if echoed != trial_id {
                    self.kill();
                    return Err(PluginError::Protocol(format!(
                        "asked for trial {trial_id}, plugin answered for {echoed}"
                    )));
                }
                if let Some(extra) = params.keys().find(|k| space.get(k).is_none()) {
                    return Err(PluginError::ContractViolation(format!(
                        "unknown parameter `{extra}`"
                    )));
                }
                space
                    .coerce(&params)
                    .map_err(|e| PluginError::ContractViolation(e.to_string()))
            }
            other => Err(self.unexpected("params", &other)),
        }
    }

    pub fn tell(&mut self, trial: &Trial) -> Result<(), PluginError> {
        let reply = self.request(Message::Tell {
            trial_id: trial.id,
            values: trial.values.clone(),
            failure: !trial.is_complete(),
        })?;
        match reply {
            Message::TellAck { trial_id } if trial_id == trial.id => Ok(()),
            Message::TellAck { trial_id } => {
                self.kill();
                Err(PluginError::Protocol(format!(
                    "told trial {}, plugin acknowledged {trial_id}",
                    trial.id
                )))
            }
            other => Err(self.unexpected("tell_ack", &other)),
        }
    }

    /// Evaluates `params`, checking arity against the declared directions.
    pub fn evaluate(&mut self, params: &Params) -> Result<Vec<f64>, PluginError> {
        let reply = self.request(Message::Evaluate {
            params: params.clone(),
        })?;
        match reply {
            Message::Values { values } => {
                if let Some((_, directions)) = &self.problem {
                    if values.len() != directions.len() {
                        return Err(PluginError::ContractViolation(format!(
                            "expected {} values, got {}",
                            directions.len(),
                            values.len()
                        )));
                    }
                }
                Ok(values)
            }
            other => Err(self.unexpected("values", &other)),
        }
    }

    /// Asks the plugin to exit, waits the grace period, then kills it.
    /// Calling it again is a no-op.
    pub fn shutdown(&mut self) {
        if self.state == HandleState::Closed {
            return;
        }
        let _ = self.send(&Message::Shutdown);
        self.stdin = None;
        let deadline = Instant::now() + self.config.shutdown_grace;
        loop {
            match self.child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                _ => {
                    let _ = self.child.kill();
                    let _ = self.child.wait();
                    break;
                }
            }
        }
        self.state = HandleState::Closed;
    }

    fn kill(&mut self) {
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
        self.state = HandleState::Closed;
    }
}

impl Drop for PluginHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}
