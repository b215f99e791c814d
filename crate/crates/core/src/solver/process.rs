//! Child-process runner with line streaming, a wall-clock watchdog and
//! cooperative cancellation.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crate::error::SolverError;

/// Shared flag that asks a running solve to stop.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub success: bool,
    pub exit_code: Option<i32>,
    pub log: String,
    pub cancelled: bool,
    pub timed_out: bool,
    pub wall_time: f64,
}

fn forward<R: Read + Send + 'static>(reader: R, tx: mpsc::Sender<String>) -> thread::JoinHandle<()> {
    thread::spawn(move || {
        for line in BufReader::new(reader).lines() {
            match line {
                Ok(l) => {
                    if tx.send(l).is_err() {
                        break;
                    }
                }
                Err(_) => break,
            }
        }
    })
}

/// Runs `program args` in `dir`, streaming stdout and stderr lines to
/// `on_line`. The child is killed on cancellation or once `deadline` has
/// passed.
pub fn run(
    program: &Path,
    args: &[String],
    dir: &Path,
    deadline: Option<Duration>,
    cancel: Option<&CancelToken>,
    on_line: &mut dyn FnMut(&str),
) -> Result<RunOutcome, SolverError> {
    let start = Instant::now();
    let mut child = Command::new(program)
        .args(args)
        .current_dir(dir)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SolverError::NotFound(format!("{}: {e}", program.display())))?;
    let (tx, rx) = mpsc::channel();
    let out = forward(child.stdout.take().expect("piped stdout"), tx.clone());
    let err = forward(child.stderr.take().expect("piped stderr"), tx);
    let mut log = String::new();
    let mut cancelled = false;
    let mut timed_out = false;
    let status = loop {
        match rx.recv_timeout(Duration::from_millis(50)) {
            Ok(line) => {
                on_line(&line);
                log.push_str(&line);
                log.push('\n');
                continue;
            }
            Err(mpsc::RecvTimeoutError::Timeout) => {}
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                break child.wait().map_err(|e| SolverError::Crashed(e.to_string()))?;
            }
        }
        if let Some(status) = child.try_wait().map_err(|e| SolverError::Crashed(e.to_string()))? {
            // drain whatever is still buffered
            while let Ok(line) = rx.recv_timeout(Duration::from_millis(200)) {
                on_line(&line);
                log.push_str(&line);
                log.push('\n');
            }
            break status;
        }
        let cancel_now = cancel.is_some_and(|c| c.is_cancelled());
        let late = deadline.is_some_and(|d| start.elapsed() > d);
        if cancel_now || late {
            cancelled |= cancel_now;
            timed_out |= late && !cancel_now;
            let _ = child.kill();
            let status = child.wait().map_err(|e| SolverError::Crashed(e.to_string()))?;
            while let Ok(line) = rx.try_recv() {
                log.push_str(&line);
                log.push('\n');
            }
            break status;
        }
    };
    let _ = out.join();
    let _ = err.join();
    Ok(RunOutcome {
        success: status.success(),
        exit_code: status.code(),
        log,
        cancelled,
        timed_out,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
