//! Objective served by a child process over JSON lines.
//!
//! Each request is one line `{"x": [...]}` on the child's stdin carrying the
//! natural values; the child answers with one line `{"y": <number>}`. A
//! `null`, a non-finite number or the string `"nan"` marks a failed
//! evaluation. A request that is not answered within the timeout also counts
//! as failed; the child is then killed and restarted on the next request.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use serde_json::{json, Value};
use spotkit::{NaturalValue, Objective, ObjectiveError};

pub struct ExternalObjective {
    command: String,
    args: Vec<String>,
    workdir: PathBuf,
    timeout: Duration,
    session: Mutex<Option<Session>>,
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<std::io::Result<String>>,
}

impl Session {
    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl ExternalObjective {
    pub fn new(command: String, args: Vec<String>, workdir: PathBuf, timeout_s: f64) -> Self {
        Self {
            command,
            args,
            workdir,
            timeout: Duration::from_secs_f64(timeout_s),
            session: Mutex::new(None),
        }
    }

    fn spawn(&self) -> Result<Session, ObjectiveError> {
        let mut child = Command::new(&self.command)
            .args(&self.args)
            .current_dir(&self.workdir)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ObjectiveError::Protocol(format!("cannot start `{}`: {e}", self.command)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, replies) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        log::debug!("started objective process {}", child.id());
        Ok(Session { child, stdin, replies })
    }
}

impl Drop for ExternalObjective {
    fn drop(&mut self) {
        if let Some(s) = self.session.get_mut().ok().and_then(Option::take) {
            s.kill();
        }
    }
}

fn parse_reply(line: &str) -> Result<f64, ObjectiveError> {
    let v: Value = serde_json::from_str(line)
        .map_err(|e| ObjectiveError::Protocol(format!("reply is not JSON ({e}): {line:?}")))?;
    match v.get("y") {
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| ObjectiveError::Protocol(format!("unrepresentable y in {line:?}"))),
        Some(Value::Null) => Ok(f64::NAN),
        Some(Value::String(s)) if s.eq_ignore_ascii_case("nan") => Ok(f64::NAN),
        _ => Err(ObjectiveError::Protocol(format!("reply lacks a numeric `y`: {line:?}"))),
    }
}

impl Objective for ExternalObjective {
    fn name(&self) -> &str {
        &self.command
    }

    fn evaluate(&self, x: &[NaturalValue], index: u64) -> Result<f64, ObjectiveError> {
        let mut guard = self.session.lock().unwrap_or_else(|p| p.into_inner());
        if guard.is_none() {
            *guard = Some(self.spawn()?);
        }
        let session = guard.as_mut().unwrap();

        let request = json!({ "x": x }).to_string();
        let sent = writeln!(session.stdin, "{request}").and_then(|_| session.stdin.flush());
        if let Err(e) = sent {
            guard.take().unwrap().kill();
            return Err(ObjectiveError::Protocol(format!("cannot write to the objective process: {e}")));
        }

        match session.replies.recv_timeout(self.timeout) {
            Ok(Ok(line)) => {
                let result = parse_reply(line.trim());
                if result.is_err() {
                    guard.take().unwrap().kill();
                }
                result
            }
            Ok(Err(e)) => {
                guard.take().unwrap().kill();
                Err(ObjectiveError::Protocol(format!("cannot read from the objective process: {e}")))
            }
            Err(RecvTimeoutError::Timeout) => {
                log::warn!("evaluation {index} timed out after {:?}; restarting the objective", self.timeout);
                guard.take().unwrap().kill();
                Ok(f64::NAN)
            }
            Err(RecvTimeoutError::Disconnected) => {
                guard.take().unwrap().kill();
                Err(ObjectiveError::Protocol("objective process closed its output".into()))
            }
        }
    }
}
