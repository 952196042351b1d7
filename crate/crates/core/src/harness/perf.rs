//! Invocation of the platform profiler's stat mode and bit-exact parsing of
//! its machine-readable (field-separated) counter output.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Instant;

use chrono::Utc;

use super::{
    HarnessError, MetricName, ProfileRecord, RunContext, RunOptions, Sampler, TIMEOUT_EXIT_CODE,
};

/// One parsed counter line: event name plus its value, where
/// `<not counted>` / `<not supported>` map to `None`.
pub type CounterLine = (String, Option<f64>);

/// Parses one line of field-separated stat output
/// (`value<SEP>unit<SEP>event-name[<SEP>...]`). Returns `Ok(None)` for
/// comment and blank lines. Unrecognized lines are an error carrying the
/// offending line verbatim; nothing is silently dropped.
pub fn parse_stat_line(line: &str, sep: char) -> Result<Option<CounterLine>, HarnessError> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let fields: Vec<&str> = line.split(sep).collect();
    if fields.len() < 3 {
        return Err(HarnessError::Parse { line: line.to_string() });
    }
    let raw_value = fields[0].trim();
    let event = fields[2].trim();
    if event.is_empty() {
        return Err(HarnessError::Parse { line: line.to_string() });
    }
    let value = match raw_value {
        "<not counted>" | "<not supported>" => None,
        _ => match raw_value.parse::<f64>() {
            Ok(v) => Some(v),
            Err(_) => return Err(HarnessError::Parse { line: line.to_string() }),
        },
    };
    Ok(Some((event.to_string(), value)))
}

/// Parses a whole stat output block into counter lines.
pub fn parse_stat_output(text: &str, sep: char) -> Result<Vec<CounterLine>, HarnessError> {
    let mut out = Vec::new();
    for line in text.lines() {
        if let Some(counter) = parse_stat_line(line, sep)? {
            out.push(counter);
        }
    }
    Ok(out)
}

/// Runs `binary` once with `input` on standard input under `perf stat` and
/// parses the counter block into a [`ProfileRecord`]. A non-zero child exit
/// is recorded, not raised; a missing or permission-blocked profiler is
/// [`HarnessError::ProfilerUnavailable`].
pub fn profile_run(
    binary: &Path,
    input: &Path,
    ctx: &RunContext,
    events: &[MetricName],
    opts: &RunOptions,
) -> Result<ProfileRecord, HarnessError> {
    let event_list = events
        .iter()
        .map(|m| m.as_str())
        .collect::<Vec<_>>()
        .join(",");
    let stdin = std::fs::File::open(input)?;
    let start = Instant::now();
    let mut child = Command::new("perf")
        .arg("stat")
        .arg(format!("-x{}", opts.sep))
        .arg("-e")
        .arg(&event_list)
        .arg("--")
        .arg(binary)
        .stdin(Stdio::from(stdin))
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                HarnessError::ProfilerUnavailable("perf not found on PATH".into())
            } else {
                HarnessError::Spawn(e)
            }
        })?;

    let timed_out = super::fallback::wait_deadline(&mut child, opts.timeout)?;
    let output = child.wait_with_output()?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let stderr = String::from_utf8_lossy(&output.stderr).into_owned();

    let exit_code = if timed_out {
        TIMEOUT_EXIT_CODE
    } else {
        decode_status(&output.status)
    };

    // counter block: lines whose third field is a requested event
    let mut metrics: BTreeMap<MetricName, Option<f64>> =
        events.iter().map(|m| (*m, None)).collect();
    let mut parsed_any = false;
    for line in stderr.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_stat_line(line, opts.sep) {
            Ok(Some((event, value))) => {
                let name = event.split(':').next().unwrap_or(&event);
                if let Ok(metric) = name.parse::<MetricName>() {
                    metrics.insert(metric, value);
                    parsed_any = true;
                } else {
                    return Err(HarnessError::Parse { line: line.to_string() });
                }
            }
            Ok(None) => {}
            Err(e) => {
                if !parsed_any && looks_unavailable(&stderr) {
                    return Err(HarnessError::ProfilerUnavailable(stderr.trim().to_string()));
                }
                return Err(e);
            }
        }
    }
    if !parsed_any && !timed_out {
        return Err(HarnessError::ProfilerUnavailable(stderr.trim().to_string()));
    }

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
        sampler: Sampler::Perf,
    })
}

fn looks_unavailable(stderr: &str) -> bool {
    let s = stderr.to_lowercase();
    s.contains("permission") || s.contains("not permitted") || s.contains("no permission")
}

pub(crate) fn decode_status(status: &std::process::ExitStatus) -> i32 {
    if let Some(code) = status.code() {
        code
    } else {
        #[cfg(unix)]
        {
            use std::os::unix::process::ExitStatusExt;
            -status.signal().unwrap_or(0)
        }
        #[cfg(not(unix))]
        {
            -1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_counter_line() {
        let got = parse_stat_line("123456,,instructions,800000,100.00,,", ',').unwrap();
        assert_eq!(got, Some(("instructions".into(), Some(123456.0))));
    }

    #[test]
    fn parses_task_clock_msec() {
        let got = parse_stat_line("1.90,msec,task-clock,1901935,100.00,0.946,CPUs utilized", ',')
            .unwrap();
        assert_eq!(got, Some(("task-clock".into(), Some(1.90))));
    }

    #[test]
    fn not_counted_maps_to_null() {
        let got = parse_stat_line("<not counted>,,cycles,0,100.00,,", ',').unwrap();
        assert_eq!(got, Some(("cycles".into(), None)));
        let got = parse_stat_line("<not supported>,,stalled-cycles-frontend,0,100.00,,", ',')
            .unwrap();
        assert_eq!(got, Some(("stalled-cycles-frontend".into(), None)));
    }

    #[test]
    fn skips_comments_and_blanks() {
        assert_eq!(parse_stat_line("# started on Mon", ',').unwrap(), None);
        assert_eq!(parse_stat_line("   ", ',').unwrap(), None);
    }

    #[test]
    fn garbage_is_an_error_with_the_line_preserved() {
        let err = parse_stat_line("not a counter", ',').unwrap_err();
        match err {
            HarnessError::Parse { line } => assert_eq!(line, "not a counter"),
            other => panic!("unexpected: {other}"),
        }
        let err = parse_stat_line("abc,,cycles,0", ',').unwrap_err();
        assert!(matches!(err, HarnessError::Parse { .. }));
    }

    #[test]
    fn alternate_separator() {
        let got = parse_stat_line("42;;branches;1;100.00", ';').unwrap();
        assert_eq!(got, Some(("branches".into(), Some(42.0))));
    }
}
