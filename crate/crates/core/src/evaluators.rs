//! Accuracy sources.
//!
//! Three kinds sit behind [`Evaluator`]: a deterministic [`Surrogate`]
//! standing in for training, a [`TableEvaluator`] replaying a CSV of
//! precomputed accuracies, and an [`ExternalEvaluator`] that talks to a
//! trainer process over the `mfnas-eval/1` line protocol.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::search_space::{Genotype, SpaceSpec};

pub const PROTOCOL: &str = "mfnas-eval/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSource {
    Surrogate,
    Table,
    External,
}

impl fmt::Display for EvalSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalSource::Surrogate => "surrogate",
            EvalSource::Table => "table",
            EvalSource::External => "external",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub genotype: Genotype,
    pub accuracy: f64,
    pub source: EvalSource,
    pub wall_time: f64,
}

pub trait Evaluator {
    /// Accuracy in `[0, 1]` for a genotype already validated against the
    /// run's space.
    fn evaluate(&mut self, g: &Genotype) -> Result<f64>;

    fn source(&self) -> EvalSource;

    /// Whether enumerating the whole space through this evaluator is cheap.
    fn is_cheap(&self) -> bool {
        true
    }

    fn evaluate_timed(&mut self, g: &Genotype) -> Result<Evaluation> {
        let start = Instant::now();
        let accuracy = self.evaluate(g)?;
        Ok(Evaluation {
            genotype: g.clone(),
            accuracy,
            source: self.source(),
            wall_time: start.elapsed().as_secs_f64(),
        })
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn evaluate(&mut self, g: &Genotype) -> Result<f64> {
        (**self).evaluate(g)
    }
    fn source(&self) -> EvalSource {
        (**self).source()
    }
    fn is_cheap(&self) -> bool {
        (**self).is_cheap()
    }
}

// ---------------------------------------------------------------------------
// Surrogate

/// Parameters of the pattern-match surrogate.
///
/// Accuracy is `base + step * matches + noise_amplitude * u`, clamped to
/// `[0, 1]`, where `matches` counts slots equal to `target` and `u` is
/// [`hash_unit`] of the genotype. The default target uses large kernels in
/// the expensive late stages so accuracy and size pull in opposite
/// directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateSpec {
    pub target: Genotype,
    pub base: f64,
    pub step: f64,
    pub noise_amplitude: f64,
    pub noise_seed: u64,
}

impl Default for SurrogateSpec {
    fn default() -> Self {
        SurrogateSpec {
            target: Genotype::new(vec![0, 1, 2, 0, 1, 2, 0, 1, 2]),
            base: 0.50,
            step: 0.03,
            noise_amplitude: 0.0,
            noise_seed: 0,
        }
    }
}

impl SurrogateSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.base, self.step, self.noise_amplitude]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.base < 0.0 || self.step < 0.0 || self.noise_amplitude < 0.0 {
            return Err(Error::Config(
                "surrogate base, step and noise_amplitude must be finite and non-negative".into(),
            ));
        }
        let peak = self.base + self.target.len() as f64 * self.step + self.noise_amplitude;
        if peak > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "surrogate can exceed accuracy 1 (base + slots*step + noise = {peak})"
            )));
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic value in `[-1, 1]` for a genotype and seed.
///
/// The slots are packed four bits each (slot 0 most significant) into a key;
/// then `h = splitmix64(seed ^ splitmix64(key))` and the top 53 bits of `h`
/// are mapped onto `[-1, 1]` as `2 * (h >> 11) / (2^53 - 1) - 1`.
pub fn hash_unit(g: &Genotype, seed: u64) -> f64 {
    let key = g
        .slots()
        .iter()
        .fold(0u64, |acc, &v| (acc << 4) | (v as u64 & 0xF));
    let h = splitmix64(seed ^ splitmix64(key));
    2.0 * ((h >> 11) as f64 / ((1u64 << 53) - 1) as f64) - 1.0
}

pub fn surrogate_accuracy(g: &Genotype, spec: &SurrogateSpec) -> f64 {
    let matches = g
        .slots()
        .iter()
        .zip(spec.target.slots())
        .filter(|(a, b)| a == b)
        .count();
    let mut acc = spec.base + spec.step * matches as f64;
    if spec.noise_amplitude > 0.0 {
        acc += spec.noise_amplitude * hash_unit(g, spec.noise_seed);
    }
    acc.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Default)]
pub struct Surrogate {
    spec: SurrogateSpec,
}

impl Surrogate {
    pub fn new(spec: SurrogateSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Surrogate { spec })
    }

    pub fn spec(&self) -> &SurrogateSpec {
        &self.spec
    }
}

impl Evaluator for Surrogate {
    fn evaluate(&mut self, g: &Genotype) -> Result<f64> {
        if g.len() != self.spec.target.len() {
            return Err(Error::InvalidGenotype(format!(
                "surrogate target has {} slots, genotype has {}",
                self.spec.target.len(),
                g.len()
            )));
        }
        Ok(surrogate_accuracy(g, &self.spec))
    }

    fn source(&self) -> EvalSource {
        EvalSource::Surrogate
    }
}

// ---------------------------------------------------------------------------
// Lookup table

#[derive(Debug, Serialize, Deserialize)]
struct TableRow {
    arch_id: u64,
    accuracy: f64,
}

/// Exact lookup of accuracies by arch id, loaded from an `arch_id,accuracy` CSV.
#[derive(Debug, Clone)]
pub struct TableEvaluator {
    space: SpaceSpec,
    entries: HashMap<u64, f64>,
}

impl TableEvaluator {
    pub fn new(space: SpaceSpec, entries: HashMap<u64, f64>) -> Result<Self> {
        for (&id, &acc) in &entries {
            if id >= space.size() {
                return Err(Error::InvalidArchId {
                    id,
                    size: space.size(),
                });
            }
            if !(0.0..=1.0).contains(&acc) {
                return Err(Error::Config(format!(
                    "table accuracy {acc} for arch {id} is outside [0, 1]"
                )));
            }
        }
        Ok(TableEvaluator { space, entries })
    }

    pub fn load(path: impl AsRef<Path>, space: SpaceSpec) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["arch_id", "accuracy"] {
            return Err(Error::Config(format!(
                "table header must be \"arch_id,accuracy\", got \"{}\"",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut entries = HashMap::new();
        for row in reader.deserialize() {
            let row: TableRow = row?;
            entries.insert(row.arch_id, row.accuracy);
        }
        Self::new(space, entries)
    }

    /// Writes `evaluator`'s accuracy for every genotype of `space`.
    pub fn write_from(
        path: impl AsRef<Path>,
        space: &SpaceSpec,
        evaluator: &mut dyn Evaluator,
    ) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for (id, g) in space.enumerate().enumerate() {
            w.serialize(TableRow {
                arch_id: id as u64,
                accuracy: evaluator.evaluate(&g)?,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Evaluator for TableEvaluator {
    fn evaluate(&mut self, g: &Genotype) -> Result<f64> {
        let id = self.space.encode(g)?;
        self.entries.get(&id).copied().ok_or(Error::MissingEntry(id))
    }

    fn source(&self) -> EvalSource {
        EvalSource::Table
    }
}

// ---------------------------------------------------------------------------
// External process

/// A serial request/response session with a child evaluator process.
///
/// The child writes `{"protocol":"mfnas-eval/1"}` as its first stdout line,
/// then answers each request line
/// `{"id":N,"genotype":[..],"kernels":[..]}` with either
/// `{"id":N,"accuracy":x}` or `{"id":N,"error":"..."}`. The child's stderr
/// is inherited.
pub struct ExternalEvaluator {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    space: SpaceSpec,
    timeout: Duration,
    next_id: i64,
}

impl fmt::Debug for ExternalEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalEvaluator")
            .field("pid", &self.child.id())
            .field("timeout", &self.timeout)
            .field("next_id", &self.next_id)
            .finish()
    }
}

impl ExternalEvaluator {
    /// Spawns `argv` and completes the handshake within `timeout`.
    pub fn spawn(argv: &[String], space: SpaceSpec, timeout: Duration) -> Result<Self> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| Error::Config("empty evaluator command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::EvaluatorDied(format!("failed to start {program}: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut session = ExternalEvaluator {
            child,
            stdin,
            lines: rx,
            space,
            timeout,
            next_id: 0,
        };
        session.handshake()?;
        Ok(session)
    }

    fn handshake(&mut self) -> Result<()> {
        let line = self.read_line()?;
        let v: Value = serde_json::from_str(&line)
            .map_err(|e| Error::ProtocolError(format!("bad handshake {line:?}: {e}")))?;
        match v.get("protocol").and_then(Value::as_str) {
            Some(PROTOCOL) => Ok(()),
            Some(other) => Err(Error::ProtocolError(format!(
                "evaluator speaks {other:?}, expected {PROTOCOL:?}"
            ))),
            None => Err(Error::ProtocolError(format!(
                "handshake lacks a protocol field: {line:?}"
            ))),
        }
    }

    fn died(&mut self) -> Error {
        // Give the process a moment to be reaped so the status is reported.
        let deadline = Instant::now() + Duration::from_millis(200);
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) => return Error::EvaluatorDied(status.to_string()),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                _ => return Error::EvaluatorDied("stdout closed".into()),
            }
        }
    }

    fn read_line(&mut self) -> Result<String> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(Error::EvaluatorDied(format!("reading stdout: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(Error::EvaluatorTimeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(self.died()),
        }
    }

    fn send(&mut self, line: &str) -> Result<()> {
        let stdin = match self.stdin.as_mut() {
            Some(s) => s,
            None => return Err(self.died()),
        };
        let res = stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.write_all(b"\n"))
            .and_then(|_| stdin.flush());
        if res.is_err() {
            self.stdin = None;
            return Err(self.died());
        }
        Ok(())
    }

    fn parse_response(id: i64, line: &str) -> Result<f64> {
        let v: Value = serde_json::from_str(line)
            .map_err(|e| Error::ProtocolError(format!("unparsable response {line:?}: {e}")))?;
        let got = v
            .get("id")
            .and_then(Value::as_i64)
            .ok_or_else(|| Error::ProtocolError(format!("response without integer id: {line:?}")))?;
        if got != id {
            return Err(Error::ProtocolError(format!(
                "response id {got} does not match request id {id}"
            )));
        }
        if let Some(msg) = v.get("error") {
            return Err(Error::EvaluatorReported {
                id,
                message: msg.as_str().map(str::to_owned).unwrap_or_else(|| msg.to_string()),
            });
        }
        let acc = v
            .get("accuracy")
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::ProtocolError(format!("response without accuracy: {line:?}")))?;
        if !(0.0..=1.0).contains(&acc) {
            return Err(Error::ProtocolError(format!(
                "accuracy {acc} outside [0, 1]"
            )));
        }
        Ok(acc)
    }
}

impl Evaluator for ExternalEvaluator {
    fn evaluate(&mut self, g: &Genotype) -> Result<f64> {
        self.space.validate_genotype(g)?;
        let id = self.next_id;
        self.next_id += 1;
        let request = json!({
            "id": id,
            "genotype": g.slots(),
            "kernels": self.space.kernels(g),
        });
        self.send(&request.to_string())?;
        let line = self.read_line()?;
        Self::parse_response(id, &line)
    }

    fn source(&self) -> EvalSource {
        EvalSource::External
    }

    fn is_cheap(&self) -> bool {
        false
    }
}

impl Drop for ExternalEvaluator {
    fn drop(&mut self) {
        // Closing stdin lets a well-behaved evaluator exit on its own.
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
