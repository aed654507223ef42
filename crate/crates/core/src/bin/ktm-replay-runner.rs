//! Replay runner binary; see [`ktmforge::sandbox::replay`].

use std::process::ExitCode;

fn main() -> ExitCode {
    ktmforge::sandbox::replay::replay_main(std::env::args().nth(1))
}
