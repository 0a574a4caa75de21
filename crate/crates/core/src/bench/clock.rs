use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::BenchError;

/// Which CPU-time clock the harness reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockKind {
    /// CPU time of the whole process.
    #[default]
    Process,
    /// CPU time of the measuring thread only. Use this when the harness is
    /// embedded in a program with other busy threads.
    Thread,
}

impl ClockKind {
    pub fn name(self) -> &'static str {
        match self {
            ClockKind::Thread => "thread",
            ClockKind::Process => "process",
        }
    }
}

impl fmt::Display for ClockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClockKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "thread" => Ok(ClockKind::Thread),
            "process" => Ok(ClockKind::Process),
            _ => Err(format!("unknown clock '{s}' (expected thread or process)")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CpuClock {
    kind: ClockKind,
    #[cfg(unix)]
    id: libc::clockid_t,
    resolution: Duration,
}

impl CpuClock {
    #[cfg(unix)]
    pub fn new(kind: ClockKind) -> Result<CpuClock, BenchError> {
        let id = match kind {
            ClockKind::Thread => libc::CLOCK_THREAD_CPUTIME_ID,
            ClockKind::Process => libc::CLOCK_PROCESS_CPUTIME_ID,
        };
        let mut ts = libc::timespec {
            tv_sec: 0,
            tv_nsec: 0,
        };
        // SAFETY: ts is a valid, writable timespec.
        if unsafe { libc::clock_getres(id, &mut ts) } != 0 {
            return Err(BenchError::ClockUnavailable(format!(
                "clock_getres failed for the {kind} CPU clock: {}",
                std::io::Error::last_os_error()
            )));
        }
        let clock = CpuClock {
            kind,
            id,
            resolution: timespec_to_duration(&ts),
        };
        clock.now()?;
        Ok(clock)
    }

    #[cfg(not(unix))]
    pub fn new(kind: ClockKind) -> Result<CpuClock, BenchError> {
        Err(BenchError::ClockUnavailable(format!(
            "no {kind} CPU clock on this platform"
        )))
    }

    #[cfg(unix)]
    #[inline]
    pub fn now(&self) -> Result<Duration, BenchError> {
        let mut ts = libc::timespec {
            tv_sec: 0,
            tv_nsec: 0,
        };
        // SAFETY: ts is a valid, writable timespec.
        if unsafe { libc::clock_gettime(self.id, &mut ts) } != 0 {
            return Err(BenchError::ClockUnavailable(format!(
                "clock_gettime failed: {}",
                std::io::Error::last_os_error()
            )));
        }
        Ok(timespec_to_duration(&ts))
    }

    #[cfg(not(unix))]
    pub fn now(&self) -> Result<Duration, BenchError> {
        Err(BenchError::ClockUnavailable("no CPU clock".into()))
    }

    pub fn kind(&self) -> ClockKind {
        self.kind
    }

    pub fn resolution(&self) -> Duration {
        self.resolution
    }

    pub fn describe(&self) -> String {
        let source = match self.kind {
            ClockKind::Thread => "clock_gettime(CLOCK_THREAD_CPUTIME_ID)",
            ClockKind::Process => "clock_gettime(CLOCK_PROCESS_CPUTIME_ID)",
        };
        format!(
            "{source}, user+system CPU time, resolution {} ns",
            self.resolution.as_nanos()
        )
    }
}

#[cfg(unix)]
fn timespec_to_duration(ts: &libc::timespec) -> Duration {
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}
