//! Out-of-process backends.
//!
//! The program is invoked as `<cmd> [args...] --in <volume-dir> --out <volume-dir>`.
//! The input is an `f32` normalized volume in the native format; the program
//! must write an `f32` probability volume of identical geometry to the output
//! directory and exit 0. Each call gets its own temporary workspace, so
//! concurrent calls never share files.

use std::io::Read;
use std::process::{Child, Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::native::{read_native, write_native};
use crate::volume::{NormalizedVolume, ProbVolume};

use super::{SegmentContext, Segmenter};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(300);
const POLL_INTERVAL: Duration = Duration::from_millis(5);

#[derive(Clone, Debug, PartialEq)]
pub struct ExternalCommand {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl ExternalCommand {
    /// Splits a command line on whitespace: program first, then fixed arguments.
    pub fn parse(command_line: &str) -> Result<Self> {
        let mut words = command_line.split_whitespace().map(str::to_string);
        let program = words
            .next()
            .ok_or_else(|| Error::invalid("external backend command is empty"))?;
        Ok(ExternalCommand {
            program,
            args: words.collect(),
            timeout: DEFAULT_TIMEOUT,
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut text = String::new();
        if let Some(mut p) = pipe {
            let mut buf = Vec::new();
            let _ = p.read_to_end(&mut buf);
            text = String::from_utf8_lossy(&buf).into_owned();
        }
        text
    })
}

fn wait_with_timeout(child: &mut Child, timeout: Duration) -> std::io::Result<Option<std::process::ExitStatus>> {
    let deadline = Instant::now() + timeout;
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(Some(status));
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Ok(None);
        }
        thread::sleep(POLL_INTERVAL);
    }
}

/// Runs one external backend call on `slab`.
pub fn segment_external(slab: &NormalizedVolume, command: &ExternalCommand) -> Result<ProbVolume> {
    let workspace = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let in_dir = workspace.path().join("in");
    let out_dir = workspace.path().join("out");
    write_native(&in_dir, slab)?;

    let mut child = Command::new(&command.program)
        .args(&command.args)
        .arg("--in")
        .arg(&in_dir)
        .arg("--out")
        .arg(&out_dir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::backend(format!("cannot start `{}`", command.program), e.to_string()))?;
    let stdout = drain(child.stdout.take());
    let stderr = drain(child.stderr.take());
    let status = wait_with_timeout(&mut child, command.timeout)
        .map_err(|e| Error::backend(format!("waiting on `{}` failed", command.program), e.to_string()))?;
    let diagnostics = [stderr.join().unwrap_or_default(), stdout.join().unwrap_or_default()]
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("\n");

    let status = match status {
        Some(s) => s,
        None => {
            return Err(Error::backend(
                format!("`{}` timed out after {:?}", command.program, command.timeout),
                diagnostics,
            ))
        }
    };
    if !status.success() {
        return Err(Error::backend(format!("`{}` exited with {status}", command.program), diagnostics));
    }

    let prob = read_native::<f32>(&out_dir)
        .map_err(|e| Error::backend(format!("`{}` produced an unreadable volume: {e}", command.program), diagnostics.clone()))?;
    if prob.geometry() != slab.geometry() {
        let (a, b) = (prob.geometry(), slab.geometry());
        return Err(Error::backend(
            format!(
                "`{}` returned {}x{}x{}, expected {}x{}x{}",
                command.program, a.width, a.height, a.depth, b.width, b.height, b.depth
            ),
            diagnostics,
        ));
    }
    Ok(slab.with_voxels(slab.geometry(), prob.into_voxels()))
}

#[derive(Clone, Debug)]
pub struct External {
    pub command: ExternalCommand,
}

impl Segmenter for External {
    fn name(&self) -> &str {
        "external"
    }

    fn segment(&self, input: &NormalizedVolume, _ctx: &SegmentContext) -> Result<ProbVolume> {
        segment_external(input, &self.command)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_splits_program_and_args() {
        let c = ExternalCommand::parse("python3  stub.py --flag").unwrap();
        assert_eq!(c.program, "python3");
        assert_eq!(c.args, vec!["stub.py", "--flag"]);
        assert_eq!(c.timeout, DEFAULT_TIMEOUT);
        assert!(ExternalCommand::parse("   ").is_err());
    }
}
