//! Portable sampler used when the platform profiler is unavailable.
//!
//! Reaps the child via `wait4` and reads its rusage, which yields the
//! portable subset of the nine metrics: task-clock (user+system CPU time),
//! context-switches (voluntary+involuntary) and page-faults (minor+major).
//! The six hardware counters stay null.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use chrono::Utc;

use super::{
    HarnessError, MetricName, ProfileRecord, RunContext, RunOptions, Sampler, TIMEOUT_EXIT_CODE,
};

pub fn fallback_sample(
    binary: &Path,
    input: &Path,
    ctx: &RunContext,
    opts: &RunOptions,
) -> Result<ProfileRecord, HarnessError> {
    let stdin = std::fs::File::open(input)?;
    let start = Instant::now();
    let mut child = Command::new(binary)
        .stdin(Stdio::from(stdin))
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .map_err(HarnessError::Spawn)?;

    let (exit_code, usage) = wait4_deadline(&mut child, opts.timeout)?;
    let wall_seconds = start.elapsed().as_secs_f64();

    let task_clock_ms = timeval_ms(&usage.ru_utime) + timeval_ms(&usage.ru_stime);
    let ctx_switches = (usage.ru_nvcsw + usage.ru_nivcsw) as f64;
    let page_faults = (usage.ru_minflt + usage.ru_majflt) as f64;

    let mut metrics: BTreeMap<MetricName, Option<f64>> =
        MetricName::ALL.iter().map(|m| (*m, None)).collect();
    metrics.insert(MetricName::TaskClock, Some(task_clock_ms));
    metrics.insert(MetricName::ContextSwitches, Some(ctx_switches));
    metrics.insert(MetricName::PageFaults, Some(page_faults));

    Ok(ProfileRecord {
        program_id: ctx.program_id.clone(),
        problem_id: ctx.problem_id.clone(),
        input_id: ctx.input_id.clone(),
        size_n: ctx.size_n,
        metrics,
        exit_code,
        wall_seconds,
        arch_tag: opts.arch_tag.clone(),
        timestamp: Utc::now(),
        sampler: Sampler::Fallback,
    })
}

fn timeval_ms(tv: &libc::timeval) -> f64 {
    tv.tv_sec as f64 * 1e3 + tv.tv_usec as f64 / 1e3
}

/// Waits for the child with a deadline, reaping it through `wait4` so the
/// rusage is attributed to this child alone (RUSAGE_CHILDREN would mix in
/// every other reaped descendant). Kills the child on timeout.
fn wait4_deadline(child: &mut Child, timeout: Duration) -> Result<(i32, libc::rusage), HarnessError> {
    let pid = child.id() as libc::pid_t;
    let deadline = Instant::now() + timeout;
    let mut status: libc::c_int = 0;
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let mut timed_out = false;
    loop {
        let ret = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut usage) };
        if ret == pid {
            break;
        }
        if ret < 0 {
            return Err(HarnessError::Io(std::io::Error::last_os_error()));
        }
        if !timed_out && Instant::now() >= deadline {
            let _ = child.kill();
            timed_out = true;
        }
        std::thread::sleep(Duration::from_millis(1));
    }
    let exit_code = if timed_out {
        TIMEOUT_EXIT_CODE
    } else if libc::WIFEXITED(status) {
        libc::WEXITSTATUS(status)
    } else if libc::WIFSIGNALED(status) {
        -libc::WTERMSIG(status)
    } else {
        -1
    };
    Ok((exit_code, usage))
}

/// Shared helper for the perf path: waits until exit or deadline without
/// reaping; returns whether the deadline fired (the child is killed then).
pub(crate) fn wait_deadline(child: &mut Child, timeout: Duration) -> Result<bool, HarnessError> {
    let deadline = Instant::now() + timeout;
    loop {
        if child.try_wait()?.is_some() {
            return Ok(false);
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            return Ok(true);
        }
        std::thread::sleep(Duration::from_millis(1));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn compile(dir: &Path, name: &str, src: &str) -> std::path::PathBuf {
        let src_path = dir.join(format!("{name}.c"));
        std::fs::write(&src_path, src).unwrap();
        let bin = dir.join(name);
        let out = Command::new("cc")
            .arg("-O2")
            .arg("-o")
            .arg(&bin)
            .arg(&src_path)
            .output()
            .expect("cc available");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        bin
    }

    fn ctx() -> RunContext {
        RunContext {
            program_id: "p".into(),
            problem_id: "q".into(),
            input_id: "i".into(),
            size_n: 1,
        }
    }

    fn empty_input(dir: &Path) -> std::path::PathBuf {
        let p = dir.join("input.txt");
        let mut f = std::fs::File::create(&p).unwrap();
        writeln!(f, "1").unwrap();
        p
    }

    #[test]
    fn busy_loop_task_clock_in_range() {
        let dir = tempfile::tempdir().unwrap();
        // ~0.2 s of spinning at the calibrated ~2 ns/iteration
        let bin = compile(
            dir.path(),
            "busy",
            r#"
#include <stdint.h>
int main(void) {
    volatile uint64_t sink = 0; uint64_t s = 1, acc = 0;
    for (uint64_t i = 0; i < 90000000ULL; i++) {
        s ^= s << 13; s ^= s >> 7; s ^= s << 17;
        if (s & 1) acc += s; else acc ^= s >> 3;
    }
    sink = acc;
    return 0;
}
"#,
        );
        let input = empty_input(dir.path());
        let rec = fallback_sample(&bin, &input, &ctx(), &RunOptions::default()).unwrap();
        let tc = rec.metrics[&MetricName::TaskClock].unwrap();
        assert!((100.0..400.0).contains(&tc), "task-clock {tc} ms");
        assert_eq!(rec.exit_code, 0);
        assert_eq!(rec.sampler, Sampler::Fallback);
        assert_eq!(rec.metrics[&MetricName::Cycles], None);
        assert_eq!(rec.metrics.len(), 9);
    }

    #[test]
    fn instant_exit_is_fast_and_exit_code_passes_through() {
        let dir = tempfile::tempdir().unwrap();
        let bin = compile(dir.path(), "quick", "int main(void){return 3;}");
        let input = empty_input(dir.path());
        let rec = fallback_sample(&bin, &input, &ctx(), &RunOptions::default()).unwrap();
        assert!(rec.metrics[&MetricName::TaskClock].unwrap() < 50.0);
        assert_eq!(rec.exit_code, 3);
    }

    #[test]
    fn timeout_records_marker() {
        let dir = tempfile::tempdir().unwrap();
        let bin = compile(
            dir.path(),
            "hang",
            "#include <unistd.h>\nint main(void){ for(;;) sleep(1); }",
        );
        let input = empty_input(dir.path());
        let opts = RunOptions { timeout: Duration::from_millis(200), ..Default::default() };
        let rec = fallback_sample(&bin, &input, &ctx(), &opts).unwrap();
        assert_eq!(rec.exit_code, TIMEOUT_EXIT_CODE);
    }

    #[test]
    fn missing_binary_is_spawn_error() {
        let dir = tempfile::tempdir().unwrap();
        let input = empty_input(dir.path());
        let err = fallback_sample(Path::new("/nonexistent/bin"), &input, &ctx(), &RunOptions::default());
        assert!(matches!(err, Err(HarnessError::Spawn(_))));
    }
}
