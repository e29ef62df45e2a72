//! Best-effort host sampling: CPU temperature, memory, load, firmware
//! throttling flags and free disk space.
//!
//! Every source is optional. A missing, unreadable or unparsable source
//! yields an absent field, and a source that blocks is abandoned once the
//! sampling deadline passes. Telemetry is observational only; nothing in the
//! search reads it.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SAMPLE_DEADLINE: Duration = Duration::from_millis(50);

/// Headroom inside a deadline for spawning the reader and returning.
const SAMPLE_SLACK: Duration = Duration::from_millis(5);

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySnapshot {
    /// Unix milliseconds, strictly increasing within a process.
    pub taken_at: u64,
    pub cpu_temp_milli_c: Option<i64>,
    pub mem_available_bytes: Option<u64>,
    pub mem_total_bytes: Option<u64>,
    pub load_avg_1m: Option<f64>,
    pub throttle: Option<ThrottleFlags>,
    pub disk_free_bytes: Option<u64>,
}

/// Decoded firmware throttle register (Raspberry Pi layout).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThrottleFlags {
    pub undervoltage_now: bool,
    pub freq_capped_now: bool,
    pub throttled_now: bool,
    pub undervoltage_occurred: bool,
    pub freq_capped_occurred: bool,
    pub throttled_occurred: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("not a hexadecimal register value: {0:?}")]
pub struct ThrottleParseError(pub String);

/// Parses `0x...` (or bare hex) register text.
///
/// Bits 0-2 are the current undervoltage / frequency-cap / throttle state,
/// bits 16-18 the sticky "has occurred" versions.
pub fn parse_throttle_register(text: &str) -> Result<ThrottleFlags, ThrottleParseError> {
    let trimmed = text.trim();
    let digits = trimmed
        .strip_prefix("0x")
        .or_else(|| trimmed.strip_prefix("0X"))
        .unwrap_or(trimmed);
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(ThrottleParseError(text.to_string()));
    }
    let bits = u64::from_str_radix(digits, 16).map_err(|_| ThrottleParseError(text.to_string()))?;
    let bit = |n: u32| bits & (1 << n) != 0;
    Ok(ThrottleFlags {
        undervoltage_now: bit(0),
        freq_capped_now: bit(1),
        throttled_now: bit(2),
        undervoltage_occurred: bit(16),
        freq_capped_occurred: bit(17),
        throttled_occurred: bit(18),
    })
}

/// Where to look for each signal. `None` disables a source.
#[derive(Clone, Debug, PartialEq)]
pub struct HostSources {
    pub thermal_zone: Option<PathBuf>,
    pub meminfo: Option<PathBuf>,
    pub loadavg: Option<PathBuf>,
    pub throttle_register: Option<PathBuf>,
    pub disk_path: Option<PathBuf>,
}

impl HostSources {
    pub fn none() -> Self {
        HostSources {
            thermal_zone: None,
            meminfo: None,
            loadavg: None,
            throttle_register: None,
            disk_path: None,
        }
    }
}

impl Default for HostSources {
    #[cfg(target_os = "linux")]
    fn default() -> Self {
        HostSources {
            thermal_zone: Some("/sys/class/thermal/thermal_zone0/temp".into()),
            meminfo: Some("/proc/meminfo".into()),
            loadavg: Some("/proc/loadavg".into()),
            throttle_register: Some("/sys/devices/platform/soc/soc:firmware/get_throttled".into()),
            disk_path: Some(".".into()),
        }
    }

    #[cfg(not(target_os = "linux"))]
    fn default() -> Self {
        HostSources {
            disk_path: Some(".".into()),
            ..HostSources::none()
        }
    }
}

/// Samples the default platform sources within [`SAMPLE_DEADLINE`].
pub fn sample_host() -> TelemetrySnapshot {
    sample_with(&HostSources::default(), SAMPLE_DEADLINE)
}

enum Reading {
    Temp(i64),
    Memory { available: u64, total: u64 },
    Load(f64),
    Throttle(ThrottleFlags),
    DiskFree(u64),
}

/// Samples `sources`, returning before `deadline` has elapsed with whatever
/// readings arrived by then.
///
/// Reads happen on a detached thread; a source that hangs leaves that
/// thread blocked but never delays the caller past the deadline.
pub fn sample_with(sources: &HostSources, deadline: Duration) -> TelemetrySnapshot {
    let started = Instant::now();
    let deadline = deadline.saturating_sub(SAMPLE_SLACK);
    let mut snapshot = TelemetrySnapshot {
        taken_at: next_timestamp(),
        ..TelemetrySnapshot::default()
    };

    let (tx, rx) = mpsc::channel();
    let sources = sources.clone();
    let spawned = thread::Builder::new()
        .name("telemetry-sample".into())
        .spawn(move || read_all(&sources, &tx));
    if spawned.is_err() {
        return snapshot;
    }

    while let Some(remaining) = deadline.checked_sub(started.elapsed()) {
        match rx.recv_timeout(remaining) {
            Ok(Reading::Temp(t)) => snapshot.cpu_temp_milli_c = Some(t),
            Ok(Reading::Memory { available, total }) => {
                snapshot.mem_total_bytes = Some(total);
                if available <= total {
                    snapshot.mem_available_bytes = Some(available);
                }
            }
            Ok(Reading::Load(l)) => snapshot.load_avg_1m = Some(l),
            Ok(Reading::Throttle(f)) => snapshot.throttle = Some(f),
            Ok(Reading::DiskFree(b)) => snapshot.disk_free_bytes = Some(b),
            Err(_) => break,
        }
    }
    snapshot
}

fn read_all(sources: &HostSources, tx: &mpsc::Sender<Reading>) {
    if let Some(t) = sources.thermal_zone.as_deref().and_then(read_temp) {
        let _ = tx.send(Reading::Temp(t));
    }
    if let Some((available, total)) = sources.meminfo.as_deref().and_then(read_meminfo) {
        let _ = tx.send(Reading::Memory { available, total });
    }
    if let Some(l) = sources.loadavg.as_deref().and_then(read_loadavg) {
        let _ = tx.send(Reading::Load(l));
    }
    if let Some(f) = sources.throttle_register.as_deref().and_then(read_throttle) {
        let _ = tx.send(Reading::Throttle(f));
    }
    if let Some(b) = sources.disk_path.as_deref().and_then(disk_free_bytes) {
        let _ = tx.send(Reading::DiskFree(b));
    }
}

fn read_temp(path: &Path) -> Option<i64> {
    fs::read_to_string(path).ok()?.trim().parse().ok()
}

fn read_meminfo(path: &Path) -> Option<(u64, u64)> {
    let text = fs::read_to_string(path).ok()?;
    let field = |name: &str| -> Option<u64> {
        let line = text.lines().find(|l| l.starts_with(name))?;
        let kib: u64 = line[name.len()..]
            .trim()
            .trim_end_matches("kB")
            .trim()
            .parse()
            .ok()?;
        Some(kib * 1024)
    };
    Some((field("MemAvailable:")?, field("MemTotal:")?))
}

fn read_loadavg(path: &Path) -> Option<f64> {
    fs::read_to_string(path)
        .ok()?
        .split_whitespace()
        .next()?
        .parse()
        .ok()
}

fn read_throttle(path: &Path) -> Option<ThrottleFlags> {
    let text = fs::read_to_string(path).ok()?;
    let text = text.trim();
    // Accept the `vcgencmd get_throttled` form as well as the bare register.
    let value = text.strip_prefix("throttled=").unwrap_or(text);
    parse_throttle_register(value).ok()
}

#[cfg(unix)]
fn disk_free_bytes(path: &Path) -> Option<u64> {
    use std::ffi::CString;
    use std::os::unix::ffi::OsStrExt;

    let c_path = CString::new(path.as_os_str().as_bytes()).ok()?;
    let mut stat: libc::statvfs = unsafe { std::mem::zeroed() };
    // SAFETY: c_path is NUL-terminated and stat is a valid out-pointer.
    let rc = unsafe { libc::statvfs(c_path.as_ptr(), &mut stat) };
    if rc != 0 {
        return None;
    }
    Some(stat.f_bavail as u64 * stat.f_frsize as u64)
}

#[cfg(not(unix))]
fn disk_free_bytes(_path: &Path) -> Option<u64> {
    None
}

static LAST_TIMESTAMP: AtomicU64 = AtomicU64::new(0);

fn next_timestamp() -> u64 {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let prev = LAST_TIMESTAMP
        .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |last| {
            Some(now.max(last + 1))
        })
        .expect("closure always returns Some");
    now.max(prev + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn throttle_examples() {
        assert_eq!(
            parse_throttle_register("0x0").unwrap(),
            ThrottleFlags::default()
        );
        assert_eq!(
            parse_throttle_register("0x50005").unwrap(),
            ThrottleFlags {
                undervoltage_now: true,
                throttled_now: true,
                undervoltage_occurred: true,
                throttled_occurred: true,
                ..ThrottleFlags::default()
            }
        );
        assert_eq!(
            parse_throttle_register("0x2").unwrap(),
            ThrottleFlags {
                freq_capped_now: true,
                ..ThrottleFlags::default()
            }
        );
        assert!(
            parse_throttle_register("50000\n")
                .unwrap()
                .undervoltage_occurred
        );
    }

    #[test]
    fn throttle_rejects_non_hex() {
        for bad in ["", "0x", "0xZZ", "throttled", "-1", "0x 5"] {
            assert!(parse_throttle_register(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn no_sources_only_timestamp() {
        let s = sample_with(&HostSources::none(), SAMPLE_DEADLINE);
        assert!(s.taken_at > 0);
        assert_eq!(
            s,
            TelemetrySnapshot {
                taken_at: s.taken_at,
                ..TelemetrySnapshot::default()
            }
        );
    }

    #[test]
    fn timestamps_strictly_increase() {
        let a = sample_with(&HostSources::none(), SAMPLE_DEADLINE);
        let b = sample_with(&HostSources::none(), SAMPLE_DEADLINE);
        assert!(b.taken_at > a.taken_at);
    }

    #[test]
    fn fake_sources_are_parsed() {
        let dir = tempfile::tempdir().unwrap();
        let temp = dir.path().join("temp");
        let mem = dir.path().join("meminfo");
        let load = dir.path().join("loadavg");
        let throttle = dir.path().join("throttled");
        fs::write(&temp, "48000\n").unwrap();
        fs::write(
            &mem,
            "MemTotal:        1000 kB\nMemFree:  10 kB\nMemAvailable:     600 kB\n",
        )
        .unwrap();
        fs::write(&load, "0.42 0.30 0.10 1/100 1234\n").unwrap();
        fs::write(&throttle, "throttled=0x50005\n").unwrap();
        let sources = HostSources {
            thermal_zone: Some(temp),
            meminfo: Some(mem),
            loadavg: Some(load),
            throttle_register: Some(throttle),
            disk_path: Some(dir.path().to_path_buf()),
        };
        let s = sample_with(&sources, Duration::from_secs(5));
        assert_eq!(s.cpu_temp_milli_c, Some(48000));
        assert_eq!(s.mem_total_bytes, Some(1000 * 1024));
        assert_eq!(s.mem_available_bytes, Some(600 * 1024));
        assert_eq!(s.load_avg_1m, Some(0.42));
        assert!(s.throttle.unwrap().throttled_now);
        assert!(s.disk_free_bytes.is_some());
    }

    #[test]
    fn garbage_sources_are_absent() {
        let dir = tempfile::tempdir().unwrap();
        let temp = dir.path().join("temp");
        fs::write(&temp, "hot").unwrap();
        let sources = HostSources {
            thermal_zone: Some(temp),
            meminfo: Some(dir.path().join("missing")),
            ..HostSources::none()
        };
        let s = sample_with(&sources, SAMPLE_DEADLINE);
        assert_eq!(s.cpu_temp_milli_c, None);
        assert_eq!(s.mem_total_bytes, None);
    }

    #[cfg(unix)]
    #[test]
    fn hanging_source_respects_deadline() {
        use std::ffi::CString;
        let dir = tempfile::tempdir().unwrap();
        let fifo = dir.path().join("fifo");
        let c = CString::new(fifo.to_str().unwrap()).unwrap();
        assert_eq!(unsafe { libc::mkfifo(c.as_ptr(), 0o600) }, 0);
        let sources = HostSources {
            thermal_zone: Some(fifo.clone()),
            ..HostSources::none()
        };
        let start = Instant::now();
        let s = sample_with(&sources, SAMPLE_DEADLINE);
        assert!(start.elapsed() <= SAMPLE_DEADLINE, "{:?}", start.elapsed());
        assert_eq!(s.cpu_temp_milli_c, None);
        // Unblock the reader thread.
        use std::os::unix::fs::OpenOptionsExt;
        let _ = fs::OpenOptions::new()
            .write(true)
            .custom_flags(libc::O_NONBLOCK)
            .open(&fifo);
    }
}
