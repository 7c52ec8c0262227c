use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{TrialRequest, Transcript};
use super::{Evaluator, TrialResult, TrialSpec};
use crate::error::{Error, Result};

/// Runs one trial in a child process speaking the line protocol.
///
/// The request is written to the child's stdin, which is then closed.
/// Progress and the terminal message are read from its stdout; stderr is
/// passed through. The child is killed on timeout or protocol violation.
pub fn run_external_trial(
    command: &[String],
    spec: &TrialSpec,
    timeout: Duration,
) -> Result<TrialResult> {
    let (program, args) = command
        .split_first()
        .ok_or_else(|| Error::InvalidInput("empty trainer command".into()))?;
    spec.validate()?;
    let start = Instant::now();
    let deadline = start + timeout;

    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| Error::CrashedTrainer(format!("cannot start {program:?}: {e}")))?;

    let mut line = TrialRequest::from_spec(spec).to_line();
    line.push('\n');
    if let Some(mut stdin) = child.stdin.take() {
        if let Err(e) = stdin.write_all(line.as_bytes()) {
            if e.kind() != ErrorKind::BrokenPipe {
                kill(&mut child);
                return Err(Error::CrashedTrainer(format!("writing request: {e}")));
            }
        }
    }

    let stdout = child.stdout.take().expect("stdout is piped");
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });

    let mut transcript = Transcript::new(spec);
    loop {
        let remaining = deadline.saturating_duration_since(Instant::now());
        match rx.recv_timeout(remaining) {
            Ok(Ok(line)) => match transcript.feed(&line) {
                Ok(true) => break,
                Ok(false) => {}
                Err(e) => {
                    kill(&mut child);
                    return Err(e);
                }
            },
            Ok(Err(e)) => {
                kill(&mut child);
                return Err(Error::Protocol(format!("reading trainer output: {e}")));
            }
            Err(RecvTimeoutError::Timeout) => {
                kill(&mut child);
                return Err(Error::Timeout(timeout.as_secs_f64()));
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = wait_until(&mut child, deadline);
                return match status {
                    Some(s) if s.success() => Err(Error::Protocol(
                        "trainer exited without a result or error message".into(),
                    )),
                    Some(s) => Err(Error::CrashedTrainer(format!(
                        "trainer exited with {s} before reporting a result"
                    ))),
                    None => {
                        kill(&mut child);
                        Err(Error::Timeout(timeout.as_secs_f64()))
                    }
                };
            }
        }
    }

    drop(rx);
    if wait_until(&mut child, deadline).is_none() {
        kill(&mut child);
    }
    transcript.into_result()
}

fn wait_until(child: &mut Child, deadline: Instant) -> Option<std::process::ExitStatus> {
    loop {
        match child.try_wait() {
            Ok(Some(status)) => return Some(status),
            Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
            _ => return None,
        }
    }
}

fn kill(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

/// Evaluator backed by an external trainer command.
#[derive(Debug, Clone)]
pub struct ExternalTrainer {
    pub command: Vec<String>,
    pub timeout: Duration,
}

impl Evaluator for ExternalTrainer {
    fn evaluate(&self, spec: &TrialSpec) -> Result<TrialResult> {
        run_external_trial(&self.command, spec, self.timeout)
    }

    fn describe(&self) -> String {
        format!("exec:{}", self.command.join(" "))
    }
}
