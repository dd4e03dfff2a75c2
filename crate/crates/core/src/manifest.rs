//! Project manifests: TOML files tying component automata, scenario
//! sources, the requirement profile, and engine options into one loadable
//! synthesis or verification instance.
//!
//! Components are listed in `[[component]]` tables with a `role` of
//! `process`, `environment`, or `monitor`. A component either names an
//! automaton `file` (relative to the manifest) or, for processes, is
//! compiled from the `scenarios` files by lane name. Optional `inputs`
//! and `outputs` arrays widen a component's interface, which scenario
//! compilation alone cannot fully determine.

use crate::automata::{Automaton, AutomatonError};
use crate::bdd::Bdd;
use crate::scenarios::{ScenarioError, ScenarioSet};
use crate::search::Instance;
use crate::verify::{NbMode, Profile};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("{path}: {source}")]
    Automaton {
        path: PathBuf,
        source: AutomatonError,
    },
    #[error("{path}: {source}")]
    Scenario {
        path: PathBuf,
        source: ScenarioError,
    },
    #[error("component {0:?}: unknown role {1:?} (expected process, environment, or monitor)")]
    UnknownRole(String, String),
    #[error("unknown nonblocking mode {0:?} (expected strong, weak, or none)")]
    UnknownNbMode(String),
    #[error("component {0:?} has no file and no scenario lane compiles to it")]
    MissingSource(String),
    #[error("manifest declares no process component")]
    NoProcess,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Process,
    Environment,
    Monitor,
}

#[derive(Clone, Debug)]
pub struct ManifestComponent {
    pub name: String,
    pub role: Role,
    pub automaton: Automaton,
}

#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    pub budget: u64,
    pub node_cap: usize,
}

#[derive(Clone, Debug)]
pub struct Manifest {
    pub dir: PathBuf,
    pub components: Vec<ManifestComponent>,
    pub profile: Profile,
    pub engine: EngineOptions,
}

#[derive(Deserialize)]
struct RawManifest {
    #[serde(default)]
    scenarios: Vec<String>,
    /// Restricts compilation to the named scenarios; all when absent.
    only: Option<Vec<String>>,
    component: Vec<RawComponent>,
    #[serde(default)]
    profile: RawProfile,
    #[serde(default)]
    engine: RawEngine,
}

#[derive(Deserialize)]
struct RawComponent {
    name: String,
    role: String,
    file: Option<String>,
    #[serde(default)]
    inputs: Vec<String>,
    #[serde(default)]
    outputs: Vec<String>,
}

#[derive(Deserialize)]
struct RawProfile {
    deadlock: bool,
    safety: bool,
    liveness: bool,
    nonblocking: String,
}

impl Default for RawProfile {
    fn default() -> Self {
        RawProfile {
            deadlock: true,
            safety: true,
            liveness: true,
            nonblocking: "weak".to_string(),
        }
    }
}

#[derive(Deserialize, Default)]
struct RawEngine {
    budget: Option<u64>,
    node_cap: Option<usize>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let raw: RawManifest = toml::from_str(&text).map_err(|source| ManifestError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();

        let mut compiled: BTreeMap<String, Automaton> = BTreeMap::new();
        for scn in &raw.scenarios {
            let p = dir.join(scn);
            let text = std::fs::read_to_string(&p).map_err(|source| ManifestError::Io {
                path: p.clone(),
                source,
            })?;
            let mut set = ScenarioSet::parse(&text).map_err(|source| ManifestError::Scenario {
                path: p.clone(),
                source,
            })?;
            if let Some(names) = &raw.only {
                set.scenarios.retain(|s| names.contains(&s.name));
            }
            let procs = set.compile().map_err(|source| ManifestError::Scenario {
                path: p.clone(),
                source,
            })?;
            compiled.extend(procs);
        }

        let mut components = Vec::new();
        for rc in &raw.component {
            let role = match rc.role.as_str() {
                "process" => Role::Process,
                "environment" => Role::Environment,
                "monitor" => Role::Monitor,
                other => {
                    return Err(ManifestError::UnknownRole(
                        rc.name.clone(),
                        other.to_string(),
                    ))
                }
            };
            let automaton = if let Some(file) = &rc.file {
                let p = dir.join(file);
                let text = std::fs::read_to_string(&p).map_err(|source| ManifestError::Io {
                    path: p.clone(),
                    source,
                })?;
                Automaton::parse(&text).map_err(|source| ManifestError::Automaton {
                    path: p,
                    source,
                })?
            } else {
                compiled
                    .get(&rc.name)
                    .cloned()
                    .ok_or_else(|| ManifestError::MissingSource(rc.name.clone()))?
            };
            let ins: Vec<&str> = rc.inputs.iter().map(String::as_str).collect();
            let outs: Vec<&str> = rc.outputs.iter().map(String::as_str).collect();
            let automaton = automaton.with_interface(&ins, &outs);
            components.push(ManifestComponent {
                name: rc.name.clone(),
                role,
                automaton,
            });
        }

        let nonblocking = match raw.profile.nonblocking.as_str() {
            "strong" => Some(NbMode::Strong),
            "weak" => Some(NbMode::Weak),
            "none" => None,
            other => return Err(ManifestError::UnknownNbMode(other.to_string())),
        };
        let profile = Profile {
            deadlock: raw.profile.deadlock,
            safety: raw.profile.safety,
            liveness: raw.profile.liveness,
            nonblocking,
        };
        let engine = EngineOptions {
            budget: raw.engine.budget.unwrap_or(1_000_000),
            node_cap: raw.engine.node_cap.unwrap_or(Bdd::DEFAULT_NODE_CAP),
        };
        Ok(Manifest {
            dir,
            components,
            profile,
            engine,
        })
    }

    pub fn automata(&self) -> Vec<Automaton> {
        self.components.iter().map(|c| c.automaton.clone()).collect()
    }

    /// Synthesis instance: processes are the completion targets.
    pub fn instance(&self) -> Result<Instance, ManifestError> {
        let targets: Vec<usize> = self
            .components
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == Role::Process)
            .map(|(i, _)| i)
            .collect();
        if targets.is_empty() {
            return Err(ManifestError::NoProcess);
        }
        Ok(Instance {
            components: self.automata(),
            targets,
            profile: self.profile,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn temp_dir(tag: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("manifest-test-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn loads_components_profile_and_scenarios() {
        let d = temp_dir("load");
        write(&d, "timer.aut", &fixtures::timer().emit());
        // One-scenario set compiling a single process lane.
        write(
            &d,
            "ping.scn",
            "scenario ping\n  lane pinger\n    @s0 !ping ?pong\n",
        );
        let m = write(
            &d,
            "m.toml",
            r#"
scenarios = ["ping.scn"]

[[component]]
name = "pinger"
role = "process"
inputs = ["pong"]
outputs = ["ping"]

[[component]]
name = "timer"
role = "environment"
file = "timer.aut"

[profile]
deadlock = true
safety = false
liveness = false
nonblocking = "none"

[engine]
budget = 77
"#,
        );
        let man = Manifest::load(&m).unwrap();
        assert_eq!(man.components.len(), 2);
        assert_eq!(man.components[0].role, Role::Process);
        assert_eq!(man.components[0].automaton.n_states(), 3);
        assert_eq!(man.engine.budget, 77);
        assert!(!man.profile.safety);
        let inst = man.instance().unwrap();
        assert_eq!(inst.targets, vec![0]);
    }

    #[test]
    fn missing_file_is_reported_with_path() {
        let d = temp_dir("missing");
        let m = write(
            &d,
            "m.toml",
            "[[component]]\nname = \"x\"\nrole = \"process\"\nfile = \"nope.aut\"\n",
        );
        match Manifest::load(&m) {
            Err(ManifestError::Io { path, .. }) => {
                assert!(path.to_string_lossy().contains("nope.aut"))
            }
            other => panic!("expected io error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_role_rejected() {
        let d = temp_dir("role");
        write(&d, "t.aut", &fixtures::timer().emit());
        let m = write(
            &d,
            "m.toml",
            "[[component]]\nname = \"t\"\nrole = \"widget\"\nfile = \"t.aut\"\n",
        );
        assert!(matches!(
            Manifest::load(&m),
            Err(ManifestError::UnknownRole(..))
        ));
    }
}
