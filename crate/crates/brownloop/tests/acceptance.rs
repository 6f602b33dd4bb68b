//! Full-size acceptance run: one PASS/FAIL line per criterion, with the
//! wall-clock budget of each criterion checked here rather than in the
//! (timing-free) report.

use std::process::Command;
use std::time::{Duration, Instant};

use brownloop::exec::{default_workers, RayonExec};
use brownloop::verify::{run_criterion, Size, CRITERIA};

const SEED: u64 = 20261015;

fn budget(id: usize) -> Option<Duration> {
    let secs = match id {
        1 => 10,
        2 => 30,
        3 => 20,
        4 => 300,
        5 => 1800,
        7 => 600,
        _ => return None,
    };
    Some(Duration::from_secs(secs))
}

/// Criterion 10 at process level: `verify --quick` on 1, 2 and 8 workers.
fn determinism() -> (bool, String) {
    let outputs: Vec<Vec<u8>> = [1, 2, 8]
        .iter()
        .map(|w| {
            Command::new(env!("CARGO_BIN_EXE_brownloop"))
                .args(["verify", "--quick", "--seed", &SEED.to_string(), "--workers", &w.to_string()])
                .output()
                .expect("binary runs")
                .stdout
        })
        .collect();
    let same = outputs.windows(2).all(|w| w[0] == w[1]) && !outputs[0].is_empty();
    let lines = String::from_utf8_lossy(&outputs[0]).lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count();
    (same, format!("`verify --quick` stdout byte-identical across 1, 2, 8 workers: {same} ({lines} checks, {} bytes)", outputs[0].len()))
}

fn main() {
    let exec = RayonExec::new(default_workers()).expect("pool");
    let mut failed = 0;
    for &(id, name) in CRITERIA.iter() {
        let start = Instant::now();
        let (pass, detail, notes) = if id == 10 {
            let (p, d) = determinism();
            (p, d, Vec::new())
        } else {
            let c = run_criterion(id, Size::Full, SEED, &exec);
            (c.pass, c.detail, c.notes)
        };
        let took = start.elapsed();
        let in_time = budget(id).is_none_or(|b| took <= b);
        let ok = pass && in_time;
        failed += usize::from(!ok);
        let limit = budget(id).map(|b| format!(" of {} s", b.as_secs())).unwrap_or_default();
        println!("{} {id} {name} [{:.1} s{limit}]: {detail}", if ok { "PASS" } else { "FAIL" }, took.as_secs_f64());
        for n in notes.iter().filter(|n| n.starts_with("DIAG") || !ok) {
            println!("    {n}");
        }
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
