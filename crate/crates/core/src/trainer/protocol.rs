//! Line-delimited JSON protocol spoken with external trainers.
//!
//! The orchestrator writes one `trial` request line to the trainer's stdin.
//! The trainer answers on stdout with zero or more `progress` lines followed
//! by exactly one `result` or `error` line. Messages with an unknown `type`
//! are skipped before the terminal message; anything after it is ignored
//! unless it is a second terminal message.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{HyperParams, TrialResult, TrialSpec, TrialStatus};
use crate::error::{Error, Result};
use crate::proxynet::UNetSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestData {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub manifest: Option<String>,
}

/// The request line, field order fixed by the wire format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRequest {
    #[serde(rename = "type")]
    pub kind: String,
    pub trial_id: String,
    pub seed: u64,
    pub hyperparams: HyperParams,
    pub network: UNetSpec,
    pub data: RequestData,
    pub max_steps: u64,
}

impl TrialRequest {
    pub fn from_spec(spec: &TrialSpec) -> Self {
        Self {
            kind: "trial".to_string(),
            trial_id: spec.trial_id.clone(),
            seed: spec.seed,
            hyperparams: spec.hyperparams,
            network: spec.network,
            data: RequestData {
                train: spec.train_items.clone(),
                val: spec.val_items.clone(),
                manifest: spec.manifest.clone(),
            },
            max_steps: spec.max_steps,
        }
    }

    /// Serializes to a single line without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("trial request serializes")
    }

    pub fn parse(line: &str) -> Result<Self> {
        let req: TrialRequest = serde_json::from_str(line)
            .map_err(|e| Error::Protocol(format!("malformed trial request: {e}")))?;
        if req.kind != "trial" {
            return Err(Error::Protocol(format!(
                "expected a \"trial\" request, got {:?}",
                req.kind
            )));
        }
        Ok(req)
    }
}

/// One response line from a trainer.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Progress {
        trial_id: String,
        step: u64,
        val_dice: f64,
    },
    Result {
        trial_id: String,
        val_dice: f64,
        test_dice: Option<f64>,
        wall_seconds: f64,
    },
    Error {
        trial_id: String,
        message: String,
    },
    /// A well-formed message of a type this version does not know.
    Unknown(String),
}

#[derive(Deserialize)]
struct ProgressMsg {
    trial_id: String,
    step: u64,
    val_dice: f64,
}

#[derive(Deserialize)]
struct ResultMsg {
    trial_id: String,
    val_dice: f64,
    #[serde(default)]
    test_dice: Option<f64>,
    wall_seconds: f64,
}

#[derive(Deserialize)]
struct ErrorMsg {
    trial_id: String,
    message: String,
}

fn typed<T: for<'de> Deserialize<'de>>(value: Value, kind: &str) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::Protocol(format!("bad {kind} message: {e}")))
}

fn check_dice(value: f64, field: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::Protocol(format!("{field} {value} is outside [0, 1]")));
    }
    Ok(())
}

/// Parses one response line.
pub fn parse_response_line(line: &str) -> Result<Response> {
    let value: Value = serde_json::from_str(line)
        .map_err(|e| Error::Protocol(format!("line is not JSON ({e}): {line:?}")))?;
    let kind = value
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Protocol(format!("missing string \"type\": {line:?}")))?
        .to_string();
    match kind.as_str() {
        "progress" => {
            let m: ProgressMsg = typed(value, "progress")?;
            check_dice(m.val_dice, "progress val_dice")?;
            Ok(Response::Progress {
                trial_id: m.trial_id,
                step: m.step,
                val_dice: m.val_dice,
            })
        }
        "result" => {
            let m: ResultMsg = typed(value, "result")?;
            check_dice(m.val_dice, "val_dice")?;
            if let Some(t) = m.test_dice {
                check_dice(t, "test_dice")?;
            }
            if !(m.wall_seconds.is_finite() && m.wall_seconds >= 0.0) {
                return Err(Error::Protocol(format!(
                    "wall_seconds {} must be non-negative",
                    m.wall_seconds
                )));
            }
            Ok(Response::Result {
                trial_id: m.trial_id,
                val_dice: m.val_dice,
                test_dice: m.test_dice,
                wall_seconds: m.wall_seconds,
            })
        }
        "error" => {
            let m: ErrorMsg = typed(value, "error")?;
            Ok(Response::Error {
                trial_id: m.trial_id,
                message: m.message,
            })
        }
        _ => Ok(Response::Unknown(kind)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub step: u64,
    pub val_dice: f64,
}

/// Incremental parser for the response stream of one trial.
#[derive(Debug, Clone)]
pub struct Transcript {
    trial_id: String,
    declared_gpu_hours: f64,
    progress: Vec<Progress>,
    terminal: Option<TrialResult>,
}

impl Transcript {
    pub fn new(spec: &TrialSpec) -> Self {
        Self {
            trial_id: spec.trial_id.clone(),
            declared_gpu_hours: spec.gpu_hours,
            progress: Vec::new(),
            terminal: None,
        }
    }

    fn check_id(&self, id: &str) -> Result<()> {
        if id != self.trial_id {
            return Err(Error::Protocol(format!(
                "message for trial {id:?} while running {:?}",
                self.trial_id
            )));
        }
        Ok(())
    }

    /// Consumes one line. Returns `true` once the terminal message is seen.
    pub fn feed(&mut self, line: &str) -> Result<bool> {
        let response = parse_response_line(line)?;
        if self.terminal.is_some() {
            return match response {
                Response::Result { .. } | Response::Error { .. } => Err(Error::Protocol(
                    "more than one terminal message".to_string(),
                )),
                _ => Ok(true),
            };
        }
        match response {
            Response::Progress {
                trial_id,
                step,
                val_dice,
            } => {
                self.check_id(&trial_id)?;
                self.progress.push(Progress { step, val_dice });
            }
            Response::Result {
                trial_id,
                val_dice,
                test_dice,
                wall_seconds,
            } => {
                self.check_id(&trial_id)?;
                self.terminal = Some(TrialResult {
                    trial_id,
                    val_dice,
                    test_dice,
                    wall_seconds,
                    gpu_hours: self.declared_gpu_hours,
                    status: TrialStatus::Ok,
                    message: None,
                });
            }
            Response::Error { trial_id, message } => {
                self.check_id(&trial_id)?;
                self.terminal = Some(TrialResult {
                    trial_id,
                    val_dice: 0.0,
                    test_dice: None,
                    wall_seconds: 0.0,
                    gpu_hours: self.declared_gpu_hours,
                    status: TrialStatus::Failed,
                    message: Some(message),
                });
            }
            Response::Unknown(_) => {}
        }
        Ok(self.terminal.is_some())
    }

    pub fn progress(&self) -> &[Progress] {
        &self.progress
    }

    pub fn is_complete(&self) -> bool {
        self.terminal.is_some()
    }

    pub fn result(&self) -> Option<&TrialResult> {
        self.terminal.as_ref()
    }

    pub fn into_result(self) -> Result<TrialResult> {
        self.terminal
            .ok_or_else(|| Error::Protocol("stream ended without a result or error".into()))
    }
}

/// Parses a complete response stream.
pub fn parse_transcript<'a>(
    spec: &TrialSpec,
    lines: impl IntoIterator<Item = &'a str>,
) -> Result<Transcript> {
    let mut t = Transcript::new(spec);
    for line in lines {
        t.feed(line)?;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proxynet::full_spec;
    use crate::trainer::Optimizer;

    fn spec() -> TrialSpec {
        TrialSpec {
            trial_id: "t0001".into(),
            seed: 5,
            hyperparams: HyperParams {
                optimizer: Optimizer::Adam,
                learning_rate: 4e-4,
                intensity_shift_prob: 0.3,
            },
            network: full_spec(),
            train_items: vec!["a".into()],
            val_items: vec!["b".into()],
            manifest: Some("m.json".into()),
            max_steps: 5,
            gpu_hours: 1.5,
        }
    }

    #[test]
    fn request_round_trip() {
        let req = TrialRequest::from_spec(&spec());
        let line = req.to_line();
        assert!(line.starts_with(r#"{"type":"trial","trial_id":"t0001","seed":5,"hyperparams":{"optimizer":"adam","learning_rate":0.0004,"intensity_shift_prob":0.3}"#));
        assert!(!line.contains('\n'));
        assert_eq!(TrialRequest::parse(&line).unwrap(), req);
    }

    #[test]
    fn error_message_fails_trial() {
        let t = parse_transcript(
            &spec(),
            [r#"{"type":"error","trial_id":"t0001","message":"out of memory"}"#],
        )
        .unwrap();
        let r = t.into_result().unwrap();
        assert_eq!(r.status, TrialStatus::Failed);
        assert_eq!(r.message.as_deref(), Some("out of memory"));
    }

    #[test]
    fn unknown_types_skipped() {
        let t = parse_transcript(
            &spec(),
            [
                r#"{"type":"heartbeat","trial_id":"t0001"}"#,
                r#"{"type":"result","trial_id":"t0001","val_dice":0.5,"test_dice":null,"wall_seconds":2}"#,
                r#"{"type":"log","text":"bye"}"#,
            ],
        )
        .unwrap();
        assert_eq!(t.into_result().unwrap().val_dice, 0.5);
    }

    #[test]
    fn protocol_violations() {
        let s = spec();
        let bad = [
            "not json",
            r#"{"trial_id":"t0001"}"#,
            r#"{"type":"result","trial_id":"t0001","val_dice":1.5,"wall_seconds":1}"#,
            r#"{"type":"result","trial_id":"t0001","wall_seconds":1}"#,
            r#"{"type":"result","trial_id":"t0002","val_dice":0.5,"wall_seconds":1}"#,
            r#"{"type":"progress","trial_id":"t0001","step":-1,"val_dice":0.2}"#,
            "",
        ];
        for line in bad {
            assert!(
                matches!(parse_transcript(&s, [line]), Err(Error::Protocol(_))),
                "{line:?}"
            );
        }
        let twice = r#"{"type":"result","trial_id":"t0001","val_dice":0.5,"wall_seconds":1}"#;
        assert!(parse_transcript(&s, [twice, twice]).is_err());
        assert!(parse_transcript(&s, [] as [&str; 0]).unwrap().into_result().is_err());
    }
}
