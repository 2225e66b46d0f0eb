//! Out-of-process samplers and problems.
//!
//! A plugin is any executable that reads requests from its standard input
//! and writes responses to its standard output, one JSON object per line.
//! Logs belong on standard error. The host opens with `hello`, the plugin
//! answers `hello_ack` listing its capabilities, and from then on every
//! request gets exactly one response.

pub mod adapters;
pub mod handle;
pub mod message;

pub use adapters::{PluginProblem, PluginSampler};
pub use handle::{spawn_plugin, HandleState, PluginConfig, PluginError, PluginHandle};
pub use message::{decode, Capability, DecodeError, Message, PROTOCOL_VERSION};

/// Environment variable carrying instantiation parameters to a plugin as a
/// JSON object.
pub const PARAMS_ENV: &str = "BBOHUB_PLUGIN_PARAMS";
