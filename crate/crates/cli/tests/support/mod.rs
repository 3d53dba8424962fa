#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

pub const ROOM: &str = "Room {\n  String roomName;\n}\n";
pub const ANOTHER_ROOM: &str = "AnotherRoom {\n  String roomID;\n  Number surface;\n}\n";
pub const STANDARD_ROOM: &str =
    "StandardRoom {\n  String identifier;\n}\n\nStandardRoom.identifier := Room.roomName |\n  AnotherRoom.roomID;\n";

pub fn nim_bin() -> &'static str {
    env!("CARGO_BIN_EXE_nim")
}

/// A `nim serve` child process on an ephemeral port. Killed on drop.
pub struct NimServer {
    child: Child,
    pub base: String,
}

impl NimServer {
    pub fn start(data: &Path, extra: &[&str]) -> Self {
        let mut child = Command::new(nim_bin())
            .args(["serve", "--port", "0", "--data"])
            .arg(data)
            .args(extra)
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .expect("spawn nim serve");
        let stderr = child.stderr.take().unwrap();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stderr).lines().map_while(Result::ok) {
                if let Some(addr) = line.strip_prefix("listening on http://") {
                    let _ = tx.send(addr.to_string());
                }
            }
        });
        let addr = rx
            .recv_timeout(Duration::from_secs(60))
            .expect("server did not report its address");
        let port = addr.rsplit(':').next().unwrap();
        Self {
            child,
            base: format!("http://127.0.0.1:{port}"),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    /// Runs the CLI against this server.
    pub fn nim(&self, args: &[&str]) -> Output {
        nim(&[&["--server", &self.base], args].concat(), None)
    }

    pub fn nim_stdin(&self, args: &[&str], stdin: &[u8]) -> Output {
        nim(&[&["--server", &self.base], args].concat(), Some(stdin))
    }

    /// SIGKILL, no shutdown hook runs.
    pub fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    pub fn pid(&self) -> u32 {
        self.child.id()
    }

    pub fn is_running(&mut self) -> bool {
        matches!(self.child.try_wait(), Ok(None))
    }
}

impl Drop for NimServer {
    fn drop(&mut self) {
        self.kill();
    }
}

pub fn nim(args: &[&str], stdin: Option<&[u8]>) -> Output {
    let mut child = Command::new(nim_bin())
        .args(args)
        .stdin(if stdin.is_some() { Stdio::piped() } else { Stdio::null() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn nim");
    if let Some(bytes) = stdin {
        use std::io::Write;
        child.stdin.take().unwrap().write_all(bytes).unwrap();
    }
    child.wait_with_output().unwrap()
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}
