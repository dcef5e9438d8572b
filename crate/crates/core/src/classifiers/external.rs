//! Client side of the line protocol for out-of-process classifiers.
//!
//! ```text
//! adapter -> harness   CSMOOTH/1 d=<dim> classes=<m>
//! harness -> adapter   B <k>
//!                      <d reals>        (k lines, 17 significant digits)
//! adapter -> harness   <k labels in [0, m)>
//! harness -> adapter   Q
//! ```
//!
//! Lines end in `\n`, fields are separated by single spaces, and nothing
//! else is accepted. A client is unusable after any error because the
//! stream position is then unknown.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use thiserror::Error;

use super::{BaseClassifier, ClassifierError};

pub const HANDSHAKE_TAG: &str = "CSMOOTH/1";

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("protocol violation ({reason}) on line {line:?}")]
    Violation { line: String, reason: String },

    #[error("broken stream while handling {line:?}")]
    BrokenStream {
        line: String,
        #[source]
        source: io::Error,
    },

    #[error("adapter declared dimension {declared}, expected {expected} (handshake {line:?})")]
    DimensionMismatch { declared: usize, expected: usize, line: String },

    #[error("client unusable after an earlier protocol error")]
    Poisoned,
}

/// One connection to an adapter.
pub struct ProtocolClient {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
    dim: usize,
    classes: usize,
    poisoned: bool,
    closed: bool,
}

impl std::fmt::Debug for ProtocolClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProtocolClient")
            .field("dim", &self.dim)
            .field("classes", &self.classes)
            .field("poisoned", &self.poisoned)
            .finish_non_exhaustive()
    }
}

fn read_line(reader: &mut dyn BufRead, context: &str) -> Result<String, ProtocolError> {
    let mut buf = String::new();
    let n = reader
        .read_line(&mut buf)
        .map_err(|source| ProtocolError::BrokenStream { line: context.to_string(), source })?;
    if n == 0 {
        return Err(ProtocolError::BrokenStream {
            line: context.to_string(),
            source: io::Error::new(io::ErrorKind::UnexpectedEof, "adapter closed its output"),
        });
    }
    match buf.strip_suffix('\n') {
        Some(body) => Ok(body.to_string()),
        None => Err(ProtocolError::Violation { line: buf, reason: "missing line terminator".into() }),
    }
}

fn parse_decimal(field: &str) -> Option<usize> {
    if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    field.parse().ok()
}

/// Parses `CSMOOTH/1 d=<dim> classes=<m>` into `(dim, classes)`.
pub fn parse_handshake(line: &str) -> Result<(usize, usize), ProtocolError> {
    let violation = |reason: &str| ProtocolError::Violation { line: line.to_string(), reason: reason.to_string() };
    let mut fields = line.split(' ');
    if fields.next() != Some(HANDSHAKE_TAG) {
        return Err(violation("expected CSMOOTH/1 handshake"));
    }
    let dim = fields.next().and_then(|f| f.strip_prefix("d=")).and_then(parse_decimal);
    let classes = fields.next().and_then(|f| f.strip_prefix("classes=")).and_then(parse_decimal);
    match (dim, classes, fields.next()) {
        (Some(d), Some(m), None) if d > 0 && m > 0 => Ok((d, m)),
        _ => Err(violation("malformed handshake")),
    }
}

/// Parses one response line of exactly `k` labels in `[0, classes)`.
pub fn parse_labels(line: &str, k: usize, classes: usize) -> Result<Vec<usize>, ProtocolError> {
    let violation = |reason: String| ProtocolError::Violation { line: line.to_string(), reason };
    let labels = line
        .split(' ')
        .map(|f| parse_decimal(f).ok_or_else(|| violation(format!("bad label field {f:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if labels.len() != k {
        return Err(violation(format!("expected {k} labels, got {}", labels.len())));
    }
    if let Some(bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(violation(format!("label {bad} outside [0, {classes})")));
    }
    Ok(labels)
}

/// Formats one point as a request line (17 significant digits per value).
pub fn format_point(z: &[f64]) -> String {
    let mut line = String::with_capacity(z.len() * 24);
    for (i, v) in z.iter().enumerate() {
        if i > 0 {
            line.push(' ');
        }
        line.push_str(&format!("{v:.16e}"));
    }
    line
}

impl ProtocolClient {
    /// Reads the handshake from an already connected stream pair.
    pub fn connect<R, W>(reader: R, writer: W, expected_dim: Option<usize>) -> Result<Self, ProtocolError>
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        let mut reader: Box<dyn BufRead + Send> = Box::new(reader);
        let line = read_line(reader.as_mut(), "<handshake>")?;
        let (dim, classes) = parse_handshake(&line)?;
        if let Some(expected) = expected_dim {
            if expected != dim {
                return Err(ProtocolError::DimensionMismatch { declared: dim, expected, line });
            }
        }
        Ok(ProtocolClient { reader, writer: Box::new(writer), child: None, dim, classes, poisoned: false, closed: false })
    }

    /// Launches `program` with `args` and connects over its standard streams.
    pub fn spawn(program: &str, args: &[String], expected_dim: Option<usize>) -> Result<Self, ProtocolError> {
        let context = format!("<spawn {program}>");
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|source| ProtocolError::BrokenStream { line: context.clone(), source })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        match Self::connect(BufReader::new(stdout), stdin, expected_dim) {
            Ok(mut client) => {
                client.child = Some(child);
                Ok(client)
            }
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                Err(e)
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Sends one batch and reads its labels. `coords` is row-major with
    /// `dim` values per point.
    pub fn classify_batch(&mut self, coords: &[f64]) -> Result<Vec<usize>, ProtocolError> {
        if self.poisoned || self.closed {
            return Err(ProtocolError::Poisoned);
        }
        let result = self.exchange(coords);
        if result.is_err() {
            self.poisoned = true;
        }
        result
    }

    fn exchange(&mut self, coords: &[f64]) -> Result<Vec<usize>, ProtocolError> {
        let k = coords.len() / self.dim;
        let header = format!("B {k}");
        let mut request = String::with_capacity(8 + coords.len() * 24);
        request.push_str(&header);
        request.push('\n');
        for z in coords.chunks_exact(self.dim) {
            request.push_str(&format_point(z));
            request.push('\n');
        }
        self.writer
            .write_all(request.as_bytes())
            .and_then(|_| self.writer.flush())
            .map_err(|source| ProtocolError::BrokenStream { line: header.clone(), source })?;
        let line = read_line(self.reader.as_mut(), &header)?;
        parse_labels(&line, k, self.classes)
    }

    /// Sends `Q` and waits for the adapter to exit.
    pub fn shutdown(&mut self) -> Result<(), ProtocolError> {
        if self.closed {
            return Ok(());
        }
        self.closed = true;
        let sent = self
            .writer
            .write_all(b"Q\n")
            .and_then(|_| self.writer.flush())
            .map_err(|source| ProtocolError::BrokenStream { line: "Q".into(), source });
        if let Some(mut child) = self.child.take() {
            // Closing stdin lets adapters that ignore Q still terminate.
            self.writer = Box::new(io::sink());
            let status = child.wait().map_err(|source| ProtocolError::BrokenStream { line: "Q".into(), source })?;
            if !status.success() {
                return Err(ProtocolError::Violation { line: "Q".into(), reason: format!("adapter exited with {status}") });
            }
        }
        sent
    }
}

impl Drop for ProtocolClient {
    fn drop(&mut self) {
        if !self.closed {
            let _ = self.shutdown();
        }
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// A pool of adapter connections, one per sampling worker.
///
/// Each worker thread uses the connection at its pool index, so a stream is
/// never shared between concurrent batches.
#[derive(Debug)]
pub struct ExternalClassifier {
    clients: Vec<Mutex<ProtocolClient>>,
    dim: usize,
    classes: usize,
}

impl ExternalClassifier {
    pub fn from_clients(clients: Vec<ProtocolClient>) -> Result<Self, ProtocolError> {
        let first = clients.first().ok_or_else(|| ProtocolError::Violation {
            line: String::new(),
            reason: "no adapter connections".into(),
        })?;
        let (dim, classes) = (first.dim, first.classes);
        if let Some(other) = clients.iter().find(|c| c.dim != dim || c.classes != classes) {
            return Err(ProtocolError::DimensionMismatch {
                declared: other.dim,
                expected: dim,
                line: format!("{HANDSHAKE_TAG} d={} classes={}", other.dim, other.classes),
            });
        }
        Ok(ExternalClassifier { clients: clients.into_iter().map(Mutex::new).collect(), dim, classes })
    }

    /// Spawns `workers` copies of the adapter command.
    pub fn spawn(program: &str, args: &[String], workers: usize, expected_dim: Option<usize>) -> Result<Self, ProtocolError> {
        let clients = (0..workers.max(1))
            .map(|_| ProtocolClient::spawn(program, args, expected_dim))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_clients(clients)
    }

    pub fn shutdown(self) -> Result<(), ProtocolError> {
        for client in self.clients {
            let mut c = client.into_inner().unwrap_or_else(|e| e.into_inner());
            c.shutdown()?;
        }
        Ok(())
    }
}

impl BaseClassifier for ExternalClassifier {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_classes(&self) -> usize {
        self.classes
    }

    fn classify(&self, z: &[f64]) -> Result<usize, ClassifierError> {
        Ok(self.classify_batch(z)?[0])
    }

    fn classify_batch(&self, coords: &[f64]) -> Result<Vec<usize>, ClassifierError> {
        if coords.is_empty() || coords.len() % self.dim != 0 {
            return Err(ClassifierError::Dimension { expected: self.dim, actual: coords.len() });
        }
        let slot = rayon::current_thread_index().unwrap_or(0) % self.clients.len();
        let mut client = self.clients[slot].lock().map_err(|_| ProtocolError::Poisoned)?;
        Ok(client.classify_batch(coords)?)
    }
}
